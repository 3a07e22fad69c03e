"""Evaluation harness: AUC, offline and online (concept-drift) testbeds.

Offline testbed: for each class, train a fresh detector on that class's
training split, then score its test split mixed with anomalies drawn from the
other classes' test data (at most 10% of the normal count). The trial result
is the mean per-class AUC.

Online testbed: each class becomes one "concept". A detector is initialized on
the initial split of the first concept's class, then every sample of every
concept (normal data plus <=10% anomalies from other classes, shuffled) is
scored and immediately learned, in that order. One AUC is computed over the
whole stream.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .data import Dataset, partition_by_class, sample_without_replacement, split, split_indices
from .detector import FpelmDetector, OnladDetector
from .errors import InitTooSmallError, SingularMatrixError
from .matrix import Activation
from .oselm import DEFAULT_EPSILON, WIDE_INIT_RANGE, OselmModel, UpdateStatus

log = logging.getLogger(__name__)


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """ROC AUC via the Mann-Whitney statistic; tied scores share their average rank.

    ``labels`` are 1 for anomalies (positives) and 0 for normal samples.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D and of equal length")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative samples")
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class DetectorSpec:
    """Hyperparameters sufficient to build a fresh detector."""
    kind: str = "onlad"                 # "onlad" or "fpelm"
    activation: str = "sigmoid"
    n_hidden: int = 8
    ff: float = 1.0
    epsilon: float = DEFAULT_EPSILON
    lam: float = 0.02                   # FP-ELM only
    init_range: tuple[float, float] = WIDE_INIT_RANGE

    def __post_init__(self):
        if self.kind not in ("onlad", "fpelm"):
            raise ValueError(f"unknown detector kind {self.kind!r}")
        Activation.parse(self.activation)
        if self.n_hidden < 1:
            raise ValueError("n_hidden must be >= 1")
        if not 0.0 < self.ff <= 1.0:
            raise ValueError("ff must lie in (0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @property
    def label(self) -> str:
        if self.kind == "fpelm":
            return "FPELM-AE"
        return "ONLAD" if self.ff < 1.0 else "ONLAD-NF"

    def build(self, n: int, rng: np.random.Generator):
        model = OselmModel.new_random(n, self.n_hidden, n, self.activation, rng, tuple(self.init_range))
        if self.kind == "fpelm":
            return FpelmDetector(model, lam=self.lam, default_ff=self.ff)
        return OnladDetector(model, epsilon=self.epsilon, default_ff=self.ff)


DetectorFactory = Callable[[int, np.random.Generator], object]


@dataclass(frozen=True)
class OfflineConfig:
    detector: DetectorSpec = field(default_factory=DetectorSpec)
    train_fraction: float = 0.8
    anomaly_ratio: float = 0.1
    trials: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.detector.ff != 1.0:
            raise ValueError("the offline testbed runs with ff fixed to 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class OnlineConfig:
    detector: DetectorSpec = field(default_factory=lambda: DetectorSpec(ff=0.99, n_hidden=64))
    fractions: tuple[float, float, float] = (0.10, 0.45, 0.45)   # init / test / valid
    normal_fraction: float = 0.9
    anomaly_ratio: float = 0.1
    evaluate_on: str = "test"
    trials: int = 5
    seed: int = 0

    def __post_init__(self):
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError("init/test/valid fractions must sum to 1")
        if self.evaluate_on not in ("test", "valid"):
            raise ValueError("evaluate_on must be 'test' or 'valid'")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.normal_fraction < 1:
            raise ValueError("normal_fraction must lie in (0, 1)")


@dataclass
class TrialResult:
    testbed: str
    dataset: str
    detector: dict
    seed: int
    trial: int
    auc: float
    breakdown: dict[str, float] = field(default_factory=dict)
    latency: dict[str, float] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)

    def to_record(self) -> dict:
        return asdict(self)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def _latency_stats(prefix: str, samples: list[float]) -> dict[str, float]:
    if not samples:
        return {}
    a = np.asarray(samples)
    return {f"{prefix}_mean_s": float(a.mean()), f"{prefix}_p99_s": float(np.percentile(a, 99))}


# -- testbeds ----------------------------------------------------------------

def offline_testbed(ds: Dataset, cfg: OfflineConfig, trial: int = 0,
                    factory: DetectorFactory | None = None) -> TrialResult:
    if ds.class_count < 2:
        raise ValueError("the offline testbed needs at least two classes")
    rng = trial_rng(cfg.seed, trial)
    factory = factory or cfg.detector.build
    train, test = split(ds, (cfg.train_fraction, 1.0 - cfg.train_fraction), rng, stratified=True)
    train_parts = partition_by_class(train)
    test_parts = partition_by_class(test)

    per_class: dict[str, float] = {}
    skipped: list[str] = []
    fit_times: list[float] = []
    score_times: list[float] = []
    for c in range(ds.class_count):
        name = ds.class_names[c]
        normal_train = train.features[train_parts[c]]
        normal_test = test.features[test_parts[c]]
        others = np.flatnonzero(test.labels != c)
        n_anom = int(math.floor(len(normal_test) * cfg.anomaly_ratio))
        if n_anom == 0 or len(normal_test) == 0:
            log.warning("class %s: too few test samples, skipped", name)
            skipped.append(name)
            continue
        anomalies = test.features[sample_without_replacement(others, n_anom, rng)]

        det = factory(ds.n_features, rng)
        t0 = time.perf_counter()
        try:
            det.init(normal_train)
        except (InitTooSmallError, SingularMatrixError) as exc:
            log.warning("class %s skipped: %s", name, exc)
            skipped.append(name)
            continue
        t1 = time.perf_counter()
        x = np.vstack([normal_test, anomalies])
        y = np.r_[np.zeros(len(normal_test), dtype=int), np.ones(n_anom, dtype=int)]
        s = det.scores(x)
        t2 = time.perf_counter()
        fit_times.append(t1 - t0)
        score_times.append((t2 - t1) / len(x))
        per_class[name] = auc(s, y)

    if not per_class:
        raise ValueError("every class was skipped")
    latency = {**_latency_stats("init", fit_times), **_latency_stats("predict", score_times)}
    return TrialResult("offline", ds.name, asdict(cfg.detector), cfg.seed, trial,
                       float(np.mean(list(per_class.values()))), per_class, latency, skipped)


def build_concepts(ds: Dataset, cfg: OnlineConfig, rng: np.random.Generator):
    """Return (init indices of the first concept, class order, [(indices, labels), ...])."""
    init, normal, anomaly = {}, {}, {}
    part = 1 if cfg.evaluate_on == "test" else 2
    for c, members in enumerate(partition_by_class(ds)):
        pieces = split_indices(members, cfg.fractions, rng)
        init[c] = pieces[0]
        nrm, anm = split_indices(pieces[part], (cfg.normal_fraction, 1.0 - cfg.normal_fraction), rng)
        normal[c], anomaly[c] = nrm, anm

    order = rng.permutation(ds.class_count)
    concepts = []
    for c in order:
        pool = np.concatenate([anomaly[j] for j in range(ds.class_count) if j != c])
        n_anom = min(int(math.floor(len(normal[c]) * cfg.anomaly_ratio)), len(pool))
        picked = sample_without_replacement(pool, n_anom, rng)
        idx = np.r_[normal[c], picked]
        lab = np.r_[np.zeros(len(normal[c]), dtype=int), np.ones(n_anom, dtype=int)]
        perm = rng.permutation(len(idx))
        concepts.append((idx[perm], lab[perm]))
    return init[order[0]], order, concepts


def online_testbed(ds: Dataset, cfg: OnlineConfig, trial: int = 0,
                   factory: DetectorFactory | None = None) -> TrialResult:
    if ds.class_count < 2:
        raise ValueError("the online testbed needs at least two classes")
    rng = trial_rng(cfg.seed, trial)
    factory = factory or cfg.detector.build
    init_idx, order, concepts = build_concepts(ds, cfg, rng)

    det = factory(ds.n_features, rng)
    det.init(ds.features[init_idx])

    scores: list[float] = []
    labels: list[int] = []
    breakdown: dict[str, float] = {}
    predict_t: list[float] = []
    train_t: list[float] = []
    skipped_steps = 0
    clock = time.perf_counter
    for c, (idx, lab) in zip(order, concepts):
        start = len(scores)
        for i, y in zip(idx, lab):
            x = ds.features[i:i + 1]
            t0 = clock()
            s = det.score(x)
            t1 = clock()
            report = det.train_step(x)
            t2 = clock()
            scores.append(s)
            labels.append(int(y))
            predict_t.append(t1 - t0)
            train_t.append(t2 - t1)
            if report.trained is not UpdateStatus.TRAINED:
                skipped_steps += 1
        seg_l = labels[start:]
        if 0 < sum(seg_l) < len(seg_l):
            breakdown[ds.class_names[c]] = auc(scores[start:], seg_l)

    latency = {**_latency_stats("predict", predict_t), **_latency_stats("train", train_t),
               "guard_skips": float(skipped_steps)}
    return TrialResult("online", ds.name, asdict(cfg.detector), cfg.seed, trial,
                       auc(scores, labels), breakdown, latency)


# -- trial pool --------------------------------------------------------------

_WORKER_DS: Dataset | None = None


def _worker_init(ds: Dataset) -> None:
    global _WORKER_DS
    _WORKER_DS = ds


def _worker_run(testbed: str, cfg, trial: int) -> TrialResult:
    fn = offline_testbed if testbed == "offline" else online_testbed
    return fn(_WORKER_DS, cfg, trial)


def run_trials(ds: Dataset, cfg: OfflineConfig | OnlineConfig, jobs: int = 1) -> list[TrialResult]:
    """Run ``cfg.trials`` independent trials; results are ordered by trial index."""
    testbed = "offline" if isinstance(cfg, OfflineConfig) else "online"
    fn = offline_testbed if testbed == "offline" else online_testbed
    if jobs <= 1:
        return [fn(ds, cfg, t) for t in range(cfg.trials)]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_worker_init, initargs=(ds,)) as pool:
        futures = [pool.submit(_worker_run, testbed, cfg, t) for t in range(cfg.trials)]
        return [f.result() for f in futures]


def write_results(path, results: Sequence[TrialResult]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r.to_record(), sort_keys=True) + "\n")


def read_results(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def summarize(results: Sequence[TrialResult]) -> str:
    """Plain-text table: one row per trial plus mean and standard deviation."""
    if not results:
        return "(no results)"
    lines = [f"{'testbed':<8} {'dataset':<12} {'detector':<9} {'trial':>5} {'auc':>7}"]
    for r in results:
        label = DetectorSpec(**{**r.detector, "init_range": tuple(r.detector["init_range"])}).label
        if r.testbed == "offline" and label == "ONLAD-NF":
            label = "ONLAD"     # the offline testbed never forgets; the NF tag is meaningless there
        lines.append(f"{r.testbed:<8} {r.dataset:<12} {label:<9} {r.trial:>5} {r.auc:>7.4f}")
    aucs = np.array([r.auc for r in results])
    lines.append(f"mean AUC {aucs.mean():.4f}  std {aucs.std():.4f}  over {len(aucs)} trial(s)")
    return "\n".join(lines)
