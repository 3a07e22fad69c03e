"""Input/output packet formats of the core and packet trace files.

Input packet, 64 bits::

    [63:61] mode   [60:32] index (29 bits)   [31:0] value (Q16.16, two's complement)

Output packet, 32 bits: bit 0 carries Success for ``do_training``; the whole
word carries the Q16.16 score for ``do_prediction``.

Trace files hold one hex word per line (16 digits for input, 8 for output).
Blank lines and ``#`` comments are ignored on read.
"""

from __future__ import annotations

import enum
from pathlib import Path
from typing import Iterable, NamedTuple

from ..errors import PacketError
from .fixed import Fixed32

MODE_SHIFT = 61
INDEX_SHIFT = 32
INDEX_BITS = 29
INDEX_LIMIT = 1 << INDEX_BITS
WORD_MASK = (1 << 64) - 1


class Mode(enum.IntEnum):
    UPDATE_ALPHA = 0
    UPDATE_BETA = 1
    UPDATE_P = 2
    UPDATE_B = 3
    UPDATE_INPUT = 4
    UPDATE_FF = 5
    DO_TRAINING = 6
    DO_PREDICTION = 7


class Packet(NamedTuple):
    mode: Mode
    index: int
    value: Fixed32

    @property
    def word(self) -> int:
        return encode_packet(self.mode, self.index, self.value)

    @classmethod
    def from_word(cls, word: int) -> "Packet":
        return cls(*decode_packet(word))


def encode_packet(mode: Mode | int, index: int = 0, value: Fixed32 | None = None) -> int:
    mode = Mode(mode)
    if not 0 <= index < INDEX_LIMIT:
        raise PacketError(f"index {index} does not fit in {INDEX_BITS} bits")
    bits = 0 if value is None else value.to_bits()
    return (int(mode) << MODE_SHIFT) | (index << INDEX_SHIFT) | bits


def decode_packet(word: int) -> tuple[Mode, int, Fixed32]:
    if not 0 <= word <= WORD_MASK:
        raise PacketError(f"packet word {word:#x} is not a 64-bit unsigned value")
    mode = Mode(word >> MODE_SHIFT)
    index = (word >> INDEX_SHIFT) & (INDEX_LIMIT - 1)
    return mode, index, Fixed32.from_bits(word & 0xFFFFFFFF)


def success_word(ok: bool) -> int:
    return 1 if ok else 0


def score_word(score: Fixed32) -> int:
    return score.to_bits()


def read_trace(path, width: int = 16) -> list[int]:
    """Parse a trace file of ``width``-digit hex words."""
    words = []
    limit = 1 << (4 * width)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if len(text) != width:
                raise PacketError(f"{path}:{lineno}: expected {width} hex digits, got {text!r}")
            try:
                word = int(text, 16)
            except ValueError:
                raise PacketError(f"{path}:{lineno}: not a hex word: {text!r}") from None
            if word >= limit:
                raise PacketError(f"{path}:{lineno}: word out of range")
            words.append(word)
    return words


def format_words(words: Iterable[int], width: int = 16) -> str:
    return "".join(f"{w:0{width}X}\n" for w in words)


def write_trace(path, words: Iterable[int], width: int = 16) -> None:
    Path(path).write_text(format_words(words, width), encoding="utf-8")
