"""Packet-driven emulation of the fixed-point detector core.

The core owns four parameter buffers (alpha, beta, P, b), an input buffer x
and the forgetting factor, all Q16.16 and stored as row-major flat arrays.
Only the Identity activation is supported, so ``h = x @ alpha + b``.

Train flow (scratch buffers named as in the hardware design)::

    h  = x alpha + b              O1 = P / ff^2
    O2 = h O1                     O3 = 1 + O2 h^T      -> stop if O3 < eps
    O4 = O2 / O3                  O5 = O2^T O4
    P  <- O1 - O5
    O6 = P h^T                    O7 = h beta          O8 = x - O7
    beta <- beta + O6 O8

Predict flow: ``h = x alpha + b``, ``y = h beta``, ``score = mean((x - y)^2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..matrix import Activation
from ..oselm import DEFAULT_EPSILON, OselmModel
from . import fixed as fx
from .fixed import Fixed32
from .packet import Mode, Packet, decode_packet, encode_packet, score_word, success_word

log = logging.getLogger(__name__)

_PARAM_MODES = {
    Mode.UPDATE_ALPHA: "alpha",
    Mode.UPDATE_BETA: "beta",
    Mode.UPDATE_P: "p",
    Mode.UPDATE_B: "b",
    Mode.UPDATE_INPUT: "x",
}


@dataclass
class CoreState:
    n: int
    n_hidden: int
    epsilon: Fixed32 = field(default_factory=lambda: Fixed32.from_float(DEFAULT_EPSILON))
    ff: Fixed32 = fx.ONE
    rejected: int = 0

    def __post_init__(self):
        if self.n < 1 or self.n_hidden < 1:
            raise ValueError("n and n_hidden must be >= 1")
        n, nh = self.n, self.n_hidden
        self.alpha = np.zeros(n * nh, dtype=np.int64)
        self.beta = np.zeros(nh * n, dtype=np.int64)
        self.p = np.zeros(nh * nh, dtype=np.int64)
        self.b = np.zeros(nh, dtype=np.int64)
        self.x = np.zeros(n, dtype=np.int64)
        self.scratch: dict[str, np.ndarray] = {}
        self._written: set[str] = set()

    @property
    def parameter_elements(self) -> int:
        return self.alpha.size + self.beta.size + self.p.size + self.b.size

    @property
    def loaded(self) -> bool:
        return self._written >= set(_PARAM_MODES.values())

    def buffer(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def as_float(self, name: str) -> np.ndarray:
        """Dequantized copy of a buffer, reshaped to its matrix form."""
        shapes = {"alpha": (self.n, self.n_hidden), "beta": (self.n_hidden, self.n),
                  "p": (self.n_hidden, self.n_hidden), "b": (1, self.n_hidden), "x": (1, self.n)}
        return fx.to_float_array(self.buffer(name)).reshape(shapes[name])

    # -- instruction dispatch -------------------------------------------

    def step(self, pkt: Packet | int) -> int | None:
        """Execute one input packet; returns an output word for do_* instructions."""
        mode, index, value = decode_packet(pkt) if isinstance(pkt, int) else pkt
        if mode in _PARAM_MODES:
            name = _PARAM_MODES[mode]
            buf = self.buffer(name)
            if index >= buf.size:
                self.rejected += 1
                log.warning("rejected %s: index %d out of range (size %d)", mode.name, index, buf.size)
                return None
            buf[index] = value.raw
            self._written.add(name)
            return None
        if mode is Mode.UPDATE_FF:
            self.ff = value
            return None
        if mode is Mode.DO_TRAINING:
            return success_word(self._train())
        return score_word(self._predict())

    # -- dataflows --------------------------------------------------------

    def _hidden(self) -> np.ndarray:
        alpha = self.alpha.reshape(self.n, self.n_hidden)
        return fx.add(fx.matmul(self.x.reshape(1, -1), alpha), self.b.reshape(1, -1))

    def _train(self) -> bool:
        if not self.loaded:
            return False
        nh, n = self.n_hidden, self.n
        p = self.p.reshape(nh, nh)
        beta = self.beta.reshape(nh, n)
        x = self.x.reshape(1, n)

        h = self._hidden()
        ff2 = (self.ff * self.ff).raw
        o1 = fx.div(p, ff2)
        o2 = fx.matmul(h, o1)
        o3 = fx.add(fx.matmul(o2, h.T), np.array([[fx.SCALE]]))
        self.scratch.update(h=h, O1=o1, O2=o2, O3=o3)
        if o3[0, 0] < self.epsilon.raw:
            return False
        o4 = fx.div(o2, int(o3[0, 0]))
        o5 = fx.matmul(o2.T, o4)
        p_new = fx.sub(o1, o5)
        o6 = fx.matmul(p_new, h.T)
        o7 = fx.matmul(h, beta)
        o8 = fx.sub(x, o7)
        beta_new = fx.add(beta, fx.matmul(o6, o8))
        self.scratch.update(O4=o4, O5=o5, O6=o6, O7=o7, O8=o8)
        self.p[:] = p_new.ravel()
        self.beta[:] = beta_new.ravel()
        return True

    def _predict(self) -> Fixed32:
        beta = self.beta.reshape(self.n_hidden, self.n)
        h = self._hidden()
        y = fx.matmul(h, beta)
        err = fx.sub(self.x.reshape(1, -1), y)
        # Sum of squares stays in the wide accumulator; one division by n.
        wide = sum(int(e) * int(e) for e in err.ravel())
        total = wide >> fx.FRAC_BITS
        return Fixed32(fx.div_raw(fx.saturate(total), self.n << fx.FRAC_BITS))


def core_step(state: CoreState, pkt: Packet | int) -> int | None:
    return state.step(pkt)


# -- packet generators ------------------------------------------------------

def _buffer_packets(mode: Mode, values) -> list[int]:
    raw = fx.quantize_array(np.asarray(values, dtype=np.float64).ravel())
    return [encode_packet(mode, i, Fixed32(int(v))) for i, v in enumerate(raw)]


def model_packets(model: OselmModel) -> list[int]:
    """update_* packets that load a float model's parameters into the core."""
    if model.activation is not Activation.IDENTITY:
        raise ValueError("the core emulation supports the Identity activation only")
    if model.m != model.n:
        raise ValueError("the core runs autoencoders only (m == n)")
    words = []
    words += _buffer_packets(Mode.UPDATE_ALPHA, model.alpha)
    words += _buffer_packets(Mode.UPDATE_BETA, model.beta)
    words += _buffer_packets(Mode.UPDATE_P, model.p)
    words += _buffer_packets(Mode.UPDATE_B, model.b)
    return words


def input_packets(x) -> list[int]:
    return _buffer_packets(Mode.UPDATE_INPUT, x)


def ff_packet(ff: float) -> int:
    return encode_packet(Mode.UPDATE_FF, 0, Fixed32.from_float(ff))


TRAIN_PACKET = encode_packet(Mode.DO_TRAINING)
PREDICT_PACKET = encode_packet(Mode.DO_PREDICTION)


def run(state: CoreState, words) -> list[int]:
    """Feed packets in order and collect the output words."""
    out = []
    for w in words:
        r = state.step(w)
        if r is not None:
            out.append(r)
    return out
