from pathlib import Path

import numpy as np
import pytest

from onlad.data import Dataset

ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = ROOT / "data"


def dataset_path(name: str) -> Path:
    """Path of a prepared dataset; fails (not skips) with instructions when absent."""
    path = DATA_DIR / f"{name}.csv.gz"
    if not path.exists():
        pytest.fail(f"{path} is missing; run `python docs/prepare_datasets.py` first")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gaussian_classes(rng, n_per_class=200, n_features=4, centers=((0.2,) * 4, (0.8,) * 4), sigma=0.05):
    feats, labels = [], []
    for c, mu in enumerate(centers):
        feats.append(rng.normal(mu, sigma, size=(n_per_class, n_features)))
        labels.append(np.full(n_per_class, c))
    return Dataset(np.vstack(feats), np.concatenate(labels), tuple(str(c) for c in range(len(centers))), "synthetic")


def brute_force_auc(scores, labels):
    """Trapezoid area under the ROC curve built from every distinct threshold."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos, neg = (labels == 1).sum(), (labels == 0).sum()
    points = [(0.0, 0.0)]
    for t in sorted(set(scores.tolist()), reverse=True):
        flagged = scores >= t
        points.append(((flagged & (labels == 0)).sum() / neg, (flagged & (labels == 1)).sum() / pos))
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2
    return area


def drift_dataset(seed, n=8, rank=2, per_class=600):
    """Two classes, each on its own random low-rank affine subspace."""
    g = np.random.default_rng(seed)
    feats, labels = [], []
    for c in range(2):
        basis = g.normal(size=(rank, n))
        offset = g.uniform(0.3, 0.7, size=n)
        feats.append(offset + 0.1 * g.normal(size=(per_class, rank)) @ basis)
        labels.append(np.full(per_class, c))
    return Dataset(np.vstack(feats), np.concatenate(labels), ("a", "b"), "drift")


class ConstantDetector:
    def __init__(self, *args):
        pass

    def init(self, x0):
        pass

    def scores(self, x):
        return np.zeros(len(np.atleast_2d(x)))

    def score(self, x):
        return 0.0

    def train_step(self, x, ff=None):
        from onlad.detector import StepReport
        from onlad.oselm import UpdateStatus
        return StepReport(0.0, False, UpdateStatus.TRAINED)


# -- acceptance report ----------------------------------------------------------

_ACCEPTANCE: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    name = props.get("criterion")
    if name is None:
        return
    status = "PASS" if report.outcome == "passed" else "FAIL"
    _ACCEPTANCE.append((status, name, props.get("measured", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, measured in _ACCEPTANCE:
        line = f"{status}  {name}"
        terminalreporter.write_line(f"{line}  [{measured}]" if measured else line)


@pytest.fixture(autouse=True)
def _criterion_name(request, record_property):
    marker = request.node.get_closest_marker("acceptance")
    if marker is not None:
        record_property("criterion", marker.args[0])
