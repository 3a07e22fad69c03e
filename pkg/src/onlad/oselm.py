"""OS-ELM learner: batch initialization, sequential updates and FP-ELM.

The model keeps the random input weight ``alpha`` and bias ``b`` frozen and
only ever updates the output weight ``beta`` and the covariance-like state
``p`` (the inverse of the weighted hidden-layer Gram matrix).

Update rules provided:

* ``update_chunk`` -- general k-row recursive least squares step, inverting
  the k x k matrix ``I + H P H^T``.
* ``update_rank1`` -- the k = 1 special case; the inversion collapses to a
  scalar division.
* ``update_forget`` -- rank-1 step with forgetting factor ``ff``: ``P`` is
  first rescaled by ``1/ff**2`` and then the rank-1 step is applied.
* ``fpelm_init`` / ``fpelm_update`` -- the regularized forgetting baseline,
  which keeps the Gram matrix ``K`` and inverts ``lam*I + K`` every step.

After every covariance update ``p`` is re-symmetrized. In exact arithmetic
this is a no-op; in floating point it stops the antisymmetric rounding error,
which is amplified by ``1/ff**2`` on every forgetting step, from eventually
destroying positive definiteness.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import matrix as mx
from .errors import DimensionError, InitTooSmallError, NotInitializedError, SingularMatrixError
from .matrix import Activation, Matrix

DEFAULT_EPSILON = 1e-4
DEFAULT_INIT_RANGE = (0.0, 1.0)
# Symmetric range used by the testbeds: with inputs in [0, 1] and hundreds of
# features, the [0, 1] range drives every sigmoid unit into saturation.
WIDE_INIT_RANGE = (-1.0, 1.0)

# Field order of the on-disk model format; see README.
SERIAL_FIELDS = ("n", "n_hidden", "m", "activation", "alpha", "b", "beta", "p")


class UpdateStatus(str, enum.Enum):
    TRAINED = "trained"
    SKIPPED_SINGULAR = "skipped_singular"


def _symmetrize(p: Matrix) -> Matrix:
    return 0.5 * (p + p.T)


@dataclass
class OselmModel:
    n: int
    n_hidden: int
    m: int
    alpha: Matrix
    b: Matrix
    beta: Matrix
    p: Matrix
    activation: Activation = Activation.SIGMOID
    initialized: bool = False
    # FP-ELM state; only populated by fpelm_init.
    k: Matrix | None = field(default=None, repr=False)
    lam: float | None = None

    @classmethod
    def new_random(cls, n: int, n_hidden: int, m: int,
                   activation: Activation | str = Activation.SIGMOID,
                   seed: int | np.random.Generator | None = None,
                   init_range: tuple[float, float] = DEFAULT_INIT_RANGE) -> "OselmModel":
        """Draw ``alpha`` and ``b`` i.i.d. uniform on ``init_range``.

        ``seed`` may be an integer or an existing generator; the same integer
        always yields the same weights.
        """
        if min(n, n_hidden, m) < 1:
            raise ValueError("n, n_hidden and m must all be >= 1")
        low, high = init_range
        if not low < high:
            raise ValueError(f"invalid init range {init_range}")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        alpha = mx.random_uniform(n, n_hidden, rng, low, high)
        b = mx.random_uniform(1, n_hidden, rng, low, high)
        return cls(n=n, n_hidden=n_hidden, m=m, alpha=alpha, b=b,
                   beta=mx.zeros(n_hidden, m), p=mx.zeros(n_hidden, n_hidden),
                   activation=Activation.parse(activation))

    def copy(self) -> "OselmModel":
        return OselmModel(
            n=self.n, n_hidden=self.n_hidden, m=self.m,
            alpha=self.alpha.copy(), b=self.b.copy(), beta=self.beta.copy(), p=self.p.copy(),
            activation=self.activation, initialized=self.initialized,
            k=None if self.k is None else self.k.copy(), lam=self.lam,
        )

    # -- forward pass ---------------------------------------------------

    def hidden(self, x) -> Matrix:
        """Hidden-layer output ``G(x @ alpha + b)`` for a k x n chunk."""
        x = mx.as_matrix(x, cols=self.n)
        return mx.map_activation(x @ self.alpha + self.b, self.activation)

    def predict(self, x) -> Matrix:
        self._require_initialized()
        return self.hidden(x) @ self.beta

    def _require_initialized(self) -> None:
        if not self.initialized:
            raise NotInitializedError("model has no output weight yet; call init_batch first")

    def _targets(self, t, rows: int) -> Matrix:
        t = mx.as_matrix(t, cols=self.m)
        if t.shape[0] != rows:
            raise DimensionError(f"{rows} input rows but {t.shape[0]} target rows")
        return t

    # -- OS-ELM ---------------------------------------------------------

    def init_batch(self, x0, t0) -> None:
        """Least-squares solve on the initial chunk: ``P0 = (H0^T H0)^-1``."""
        h0 = self.hidden(x0)
        k0 = h0.shape[0]
        t0 = self._targets(t0, k0)
        if k0 < self.n_hidden:
            raise InitTooSmallError(f"k0={k0} initial samples < {self.n_hidden} hidden nodes")
        if k0 < 2 * self.n_hidden:
            warnings.warn(f"k0={k0} is less than twice the hidden size {self.n_hidden}; "
                          "H0^T H0 may be badly conditioned", RuntimeWarning, stacklevel=2)
        try:
            p = _symmetrize(mx.inverse(h0.T @ h0))
        except SingularMatrixError as exc:
            hint = ""
            if self.activation is Activation.IDENTITY and self.n_hidden > self.n + 1:
                hint = f"; identity activation limits rank(H0) to n + 1 = {self.n + 1} < {self.n_hidden}"
            raise SingularMatrixError(f"H0^T H0 is singular ({exc}){hint}") from None
        self.p = p
        self.beta = p @ h0.T @ t0
        self.k = None
        self.lam = None
        self.initialized = True

    def update_chunk(self, x, t) -> UpdateStatus:
        self._require_initialized()
        h = self.hidden(x)
        t = self._targets(t, h.shape[0])
        ph_t = self.p @ h.T
        try:
            inner = mx.inverse(np.eye(h.shape[0]) + h @ ph_t)
        except SingularMatrixError:
            return UpdateStatus.SKIPPED_SINGULAR
        p = _symmetrize(self.p - ph_t @ inner @ h @ self.p)
        self.beta = self.beta + p @ h.T @ (t - h @ self.beta)
        self.p = p
        return UpdateStatus.TRAINED

    def forget_denominator(self, h: Matrix, ff: float = 1.0) -> float:
        """``1 + h (P / ff**2) h^T`` for a single hidden row ``h``."""
        return 1.0 + (h @ (self.p / (ff * ff)) @ h.T).item()

    def apply_forget(self, h: Matrix, t: Matrix, ff: float = 1.0,
                     epsilon: float = DEFAULT_EPSILON) -> UpdateStatus:
        """Rank-1 forgetting step from a precomputed hidden row ``h`` (1 x N~)."""
        if not 0.0 < ff <= 1.0:
            raise ValueError(f"forgetting factor must lie in (0, 1], got {ff}")
        p_prev = self.p / (ff * ff)
        ph_t = p_prev @ h.T
        denom = 1.0 + (h @ ph_t).item()
        if denom < epsilon:
            return UpdateStatus.SKIPPED_SINGULAR
        p = _symmetrize(p_prev - (ph_t @ (h @ p_prev)) / denom)
        self.beta = self.beta + p @ h.T @ (t - h @ self.beta)
        self.p = p
        return UpdateStatus.TRAINED

    def update_forget(self, x, t, ff: float = 1.0,
                      epsilon: float = DEFAULT_EPSILON) -> UpdateStatus:
        self._require_initialized()
        h = self.hidden(x)
        if h.shape[0] != 1:
            raise DimensionError(f"rank-1 update expects a single row, got {h.shape[0]}")
        return self.apply_forget(h, self._targets(t, 1), ff, epsilon)

    def update_rank1(self, x, t, epsilon: float = DEFAULT_EPSILON) -> UpdateStatus:
        return self.update_forget(x, t, 1.0, epsilon)

    # -- FP-ELM baseline ------------------------------------------------

    def fpelm_init(self, x0, t0, lam: float = 0.02) -> None:
        if lam < 0:
            raise ValueError("lambda must be >= 0")
        h0 = self.hidden(x0)
        t0 = self._targets(t0, h0.shape[0])
        k = h0.T @ h0
        p = _symmetrize(mx.inverse(lam * np.eye(self.n_hidden) + k))
        self.k = k
        self.lam = float(lam)
        self.p = p
        self.beta = p @ h0.T @ t0
        self.initialized = True

    def fpelm_update(self, x, t, ff: float = 1.0, lam: float | None = None) -> UpdateStatus:
        """One FP-ELM step; performs an N~ x N~ inversion of ``lam*I + K``."""
        if self.k is None:
            raise NotInitializedError("FP-ELM state missing; call fpelm_init first")
        if not 0.0 < ff <= 1.0:
            raise ValueError(f"forgetting factor must lie in (0, 1], got {ff}")
        lam = self.lam if lam is None else float(lam)
        h = self.hidden(x)
        t = self._targets(t, h.shape[0])
        k = ff * ff * self.k + h.T @ h
        try:
            inv = mx.inverse(lam * np.eye(self.n_hidden) + k)
        except SingularMatrixError:
            return UpdateStatus.SKIPPED_SINGULAR
        step = h.T @ (t - h @ self.beta) - lam * (1.0 - ff * ff) * self.beta
        self.beta = self.beta + inv @ step
        self.k = k
        self.lam = lam
        self.p = _symmetrize(inv)
        return UpdateStatus.TRAINED

    # -- persistence ----------------------------------------------------

    def save(self, path) -> None:
        self._require_initialized()
        payload = {
            "n": np.int64(self.n), "n_hidden": np.int64(self.n_hidden), "m": np.int64(self.m),
            "activation": np.str_(self.activation.value),
            "alpha": self.alpha, "b": self.b, "beta": self.beta, "p": self.p,
        }
        if self.k is not None:
            payload["k"] = self.k
            payload["lam"] = np.float64(self.lam)
        with open(path, "wb") as fh:
            np.savez(fh, **payload)

    @classmethod
    def load(cls, path) -> "OselmModel":
        with np.load(path, allow_pickle=False) as z:
            missing = [f for f in SERIAL_FIELDS if f not in z.files]
            if missing:
                raise ValueError(f"{path}: missing fields {missing}")
            model = cls(n=int(z["n"]), n_hidden=int(z["n_hidden"]), m=int(z["m"]),
                        alpha=z["alpha"].copy(), b=z["b"].copy(),
                        beta=z["beta"].copy(), p=z["p"].copy(),
                        activation=Activation.parse(str(z["activation"])), initialized=True)
            if "k" in z.files:
                model.k = z["k"].copy()
                model.lam = float(z["lam"])
        return model


def oracle_weighted_gram(history: Sequence[tuple[Matrix, float]] | Iterable[tuple[Matrix, float]]) -> Matrix:
    """Weighted Gram matrix ``sum_k w_k**2 H_k^T H_k`` evaluated in closed form.

    ``history`` is a sequence of ``(H_k, ff_k)`` pairs in arrival order. The
    weight of chunk k after the last step i is the product of the forgetting
    factors that arrived after it, ``w_k = ff_{k+1} * ... * ff_i``; the ff of
    the first chunk is therefore never used. Intended as a test oracle for the
    recursive covariance in ``update_forget``.
    """
    history = list(history)
    if not history:
        raise ValueError("history must not be empty")
    hs = [mx.as_matrix(h) for h, _ in history]
    ffs = np.array([float(ff) for _, ff in history])
    gram = np.zeros((hs[0].shape[1], hs[0].shape[1]))
    for k, h in enumerate(hs):
        w = float(np.prod(ffs[k + 1:]))
        gram += (w * w) * (h.T @ h)
    return gram
