"""Sequential-learning anomaly detector built on an OS-ELM autoencoder."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import matrix as mx
from .errors import DimensionError
from .matrix import Activation
from .oselm import DEFAULT_EPSILON, DEFAULT_INIT_RANGE, OselmModel, UpdateStatus

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepReport:
    """Outcome of one score-then-train step.

    ``score`` is None when the stability guard skipped the sample.
    """
    score: float | None
    is_anomaly: bool
    trained: UpdateStatus


def mse(x, y) -> np.ndarray:
    """Row-wise mean squared error between two k x n matrices."""
    d = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return np.mean(d * d, axis=-1)


class OnladDetector:
    """OS-ELM autoencoder (targets equal inputs) trained one sample at a time.

    Each ``train_step`` first checks the stability guard
    ``1 + h (P/ff**2) h^T < epsilon``; if it fires the sample is dropped.
    Otherwise the sample is scored against the current model and only then
    learned, with forgetting factor ``ff``.
    """

    def __init__(self, model: OselmModel, epsilon: float = DEFAULT_EPSILON,
                 theta: float = math.inf, default_ff: float = 1.0):
        if model.m != model.n:
            raise DimensionError(f"autoencoder needs m == n, got n={model.n}, m={model.m}")
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < default_ff <= 1.0:
            raise ValueError(f"forgetting factor must lie in (0, 1], got {default_ff}")
        self.model = model
        self.epsilon = float(epsilon)
        self.theta = float(theta)
        self.default_ff = float(default_ff)

    @classmethod
    def create(cls, n: int, n_hidden: int, activation: Activation | str = Activation.SIGMOID,
               seed: int | np.random.Generator | None = None,
               init_range: tuple[float, float] = DEFAULT_INIT_RANGE, **kwargs) -> "OnladDetector":
        model = OselmModel.new_random(n, n_hidden, n, activation, seed, init_range)
        return cls(model, **kwargs)

    @property
    def n(self) -> int:
        return self.model.n

    def init(self, x0) -> None:
        x0 = mx.as_matrix(x0, cols=self.n)
        self.model.init_batch(x0, x0)

    def scores(self, x) -> np.ndarray:
        """Reconstruction MSE of every row of a k x n chunk."""
        x = mx.as_matrix(x, cols=self.n)
        return mse(x, self.model.predict(x))

    def score(self, x) -> float:
        x = mx.as_matrix(x, cols=self.n)
        if x.shape[0] != 1:
            raise DimensionError(f"score expects a single row, got {x.shape[0]}")
        return float(self.scores(x)[0])

    def train_step(self, x, ff: float | None = None) -> StepReport:
        ff = self.default_ff if ff is None else float(ff)
        model = self.model
        model._require_initialized()
        x = mx.as_matrix(x, cols=self.n)
        if x.shape[0] != 1:
            raise DimensionError(f"train_step expects a single row, got {x.shape[0]}")
        h = model.hidden(x)
        if model.forget_denominator(h, ff) < self.epsilon:
            log.info("singular matrix encountered; sample skipped")
            return StepReport(None, False, UpdateStatus.SKIPPED_SINGULAR)
        score = float(mse(x, h @ model.beta)[0])
        status = model.apply_forget(h, x, ff, self.epsilon)
        return StepReport(score, score > self.theta, status)

    def calibrate_theta(self, x0, percentile: float = 99.0) -> float:
        """Set ``theta`` to a percentile of the scores over ``x0``.

        A convenience for deployment; AUC-based evaluation does not use it.
        """
        self.theta = float(np.percentile(self.scores(x0), percentile))
        return self.theta


class FpelmDetector:
    """Autoencoder variant driven by the FP-ELM update (regularized, N~ x N~ inverse per step)."""

    def __init__(self, model: OselmModel, lam: float = 0.02, default_ff: float = 1.0,
                 theta: float = math.inf):
        if model.m != model.n:
            raise DimensionError(f"autoencoder needs m == n, got n={model.n}, m={model.m}")
        self.model = model
        self.lam = float(lam)
        self.default_ff = float(default_ff)
        self.theta = float(theta)

    @property
    def n(self) -> int:
        return self.model.n

    def init(self, x0) -> None:
        x0 = mx.as_matrix(x0, cols=self.n)
        self.model.fpelm_init(x0, x0, self.lam)

    def scores(self, x) -> np.ndarray:
        x = mx.as_matrix(x, cols=self.n)
        return mse(x, self.model.predict(x))

    def score(self, x) -> float:
        return float(self.scores(x)[0])

    def train_step(self, x, ff: float | None = None) -> StepReport:
        ff = self.default_ff if ff is None else float(ff)
        x = mx.as_matrix(x, cols=self.n)
        score = self.score(x)
        status = self.model.fpelm_update(x, x, ff)
        return StepReport(score, score > self.theta, status)
