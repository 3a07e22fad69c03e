"""Signed Q16.16 fixed-point arithmetic with saturation.

Scalars are carried as :class:`Fixed32`; buffers are numpy ``int64`` arrays of
raw values. Products and dot products accumulate exactly (arbitrary-precision
Python integers stand in for a widened accumulator) and are re-quantized once,
rounding to nearest with ties toward +inf. Conversion from float truncates
toward -inf, so ``Fixed32.from_float(0.95).raw == 62259``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FRAC_BITS = 16
SCALE = 1 << FRAC_BITS
RAW_MIN = -(1 << 31)
RAW_MAX = (1 << 31) - 1
_HALF = 1 << (FRAC_BITS - 1)


def saturate(raw: int) -> int:
    return RAW_MAX if raw > RAW_MAX else RAW_MIN if raw < RAW_MIN else int(raw)


def quantize(x: float) -> int:
    if math.isnan(x):
        raise ValueError("cannot quantize NaN")
    if math.isinf(x):
        return RAW_MAX if x > 0 else RAW_MIN
    return saturate(math.floor(x * SCALE))


def round_shift(wide: int) -> int:
    """Drop FRAC_BITS from a double-width product, rounding to nearest."""
    return saturate((wide + _HALF) >> FRAC_BITS)


def div_raw(num: int, den: int) -> int:
    """Quotient of two raw values, re-quantized to Q16.16."""
    if den == 0:
        return 0 if num == 0 else (RAW_MAX if num > 0 else RAW_MIN)
    if den < 0:
        num, den = -num, -den
    wide = num << FRAC_BITS
    return saturate((2 * wide + den) // (2 * den))


@dataclass(frozen=True, order=True)
class Fixed32:
    raw: int

    def __post_init__(self):
        if not RAW_MIN <= self.raw <= RAW_MAX:
            raise OverflowError(f"raw value {self.raw} outside int32")

    @classmethod
    def from_float(cls, x: float) -> "Fixed32":
        return cls(quantize(float(x)))

    @classmethod
    def from_bits(cls, bits: int) -> "Fixed32":
        bits &= 0xFFFFFFFF
        return cls(bits - (1 << 32) if bits & 0x80000000 else bits)

    def to_bits(self) -> int:
        return self.raw & 0xFFFFFFFF

    def to_float(self) -> float:
        return self.raw / SCALE

    __float__ = to_float

    def __add__(self, other: "Fixed32") -> "Fixed32":
        return Fixed32(saturate(self.raw + other.raw))

    def __sub__(self, other: "Fixed32") -> "Fixed32":
        return Fixed32(saturate(self.raw - other.raw))

    def __neg__(self) -> "Fixed32":
        return Fixed32(saturate(-self.raw))

    def __mul__(self, other: "Fixed32") -> "Fixed32":
        return Fixed32(round_shift(self.raw * other.raw))

    def __truediv__(self, other: "Fixed32") -> "Fixed32":
        return Fixed32(div_raw(self.raw, other.raw))

    def __repr__(self) -> str:
        return f"Fixed32({self.to_float():.6f}, raw={self.raw})"


ONE = Fixed32(SCALE)


# -- buffer helpers (int64 arrays of raw values) --------------------------

def quantize_array(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if np.isnan(a).any():
        raise ValueError("cannot quantize NaN")
    return np.clip(np.floor(a * SCALE), RAW_MIN, RAW_MAX).astype(np.int64)


def to_float_array(a) -> np.ndarray:
    return np.asarray(a, dtype=np.int64) / SCALE


def _requantize(wide: np.ndarray) -> np.ndarray:
    out = np.empty(wide.shape, dtype=np.int64)
    flat = wide.ravel()
    out.ravel()[:] = [round_shift(int(v)) for v in flat]
    return out


def _saturate_array(a: np.ndarray) -> np.ndarray:
    return np.clip(a, RAW_MIN, RAW_MAX).astype(np.int64)


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _saturate_array(np.asarray(a, dtype=np.int64) + np.asarray(b, dtype=np.int64))


def sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _saturate_array(np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64))


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product (broadcasting)."""
    wide = np.asarray(a, dtype=np.int64).astype(object) * np.asarray(b, dtype=np.int64).astype(object)
    return _requantize(np.asarray(wide, dtype=object))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with exact accumulation and a single re-quantization."""
    wide = np.asarray(a, dtype=np.int64).astype(object) @ np.asarray(b, dtype=np.int64).astype(object)
    return _requantize(np.asarray(wide, dtype=object))


def div(a: np.ndarray, den: int) -> np.ndarray:
    """Divide every element of ``a`` by the raw scalar ``den``."""
    a = np.asarray(a, dtype=np.int64)
    out = np.empty(a.shape, dtype=np.int64)
    out.ravel()[:] = [div_raw(int(v), int(den)) for v in a.ravel()]
    return out
