"""Small dense linear-algebra kernel.

Matrices are plain ``numpy.ndarray`` objects of dtype float64, 2-D and
C-ordered (row-major), so element ``(r, c)`` lives at flat offset
``r * cols + c``. Products and transposes delegate to numpy; inversion is a
Gauss-Jordan elimination with partial pivoting so that singularity is
reported consistently at a fixed pivot threshold.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import DimensionError, SingularMatrixError

Matrix = np.ndarray

PIVOT_EPS = 1e-12


class Activation(str, enum.Enum):
    IDENTITY = "identity"
    SIGMOID = "sigmoid"

    @classmethod
    def parse(cls, value: "Activation | str") -> "Activation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown activation {value!r}; expected identity or sigmoid") from None


def as_matrix(a, cols: int | None = None) -> Matrix:
    """Coerce ``a`` to a 2-D row-major float64 array.

    1-D input is treated as a single row. If ``cols`` is given the result
    must have exactly that many columns.
    """
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionError(f"expected {cols} columns, got {m.shape[1]}")
    return np.ascontiguousarray(m)


def zeros(rows: int, cols: int) -> Matrix:
    return np.zeros((rows, cols), dtype=np.float64)


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=np.float64)


def random_uniform(rows: int, cols: int, rng: np.random.Generator,
                   low: float = 0.0, high: float = 1.0) -> Matrix:
    return rng.uniform(low, high, size=(rows, cols))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def transpose(a: Matrix) -> Matrix:
    return np.ascontiguousarray(as_matrix(a).T)


def inverse(a: Matrix, pivot_eps: float = PIVOT_EPS) -> Matrix:
    """Invert a square matrix by Gauss-Jordan elimination with partial pivoting.

    Raises SingularMatrixError when the largest available pivot in some
    column has magnitude below ``pivot_eps``.
    """
    a = as_matrix(a)
    n, cols = a.shape
    if n != cols:
        raise DimensionError(f"cannot invert non-square matrix {a.shape}")
    aug = np.hstack([a, np.eye(n)])
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(aug[col:, col])))
        pivot = aug[pivot_row, col]
        if abs(pivot) < pivot_eps:
            raise SingularMatrixError(f"pivot {pivot:.3e} in column {col} below {pivot_eps:g}")
        if pivot_row != col:
            aug[[col, pivot_row]] = aug[[pivot_row, col]]
        aug[col] /= pivot
        factors = aug[:, col].copy()
        factors[col] = 0.0
        aug -= np.outer(factors, aug[col])
    return np.ascontiguousarray(aug[:, n:])


def sigmoid(z):
    # Split by sign so exp never overflows.
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def map_activation(a: Matrix, g: Activation | str) -> Matrix:
    g = Activation.parse(g)
    a = as_matrix(a)
    if g is Activation.IDENTITY:
        return a.copy()
    return sigmoid(a)
