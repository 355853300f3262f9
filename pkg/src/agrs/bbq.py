"""Bits-back quantization.

Communicates ``Y ~ U(kappa + (0, a/b])`` at a net cost of ``log2(b/a)`` bits:
the sender first pops an index ``I ~ U{0..a-1}`` off the message it is
building, dithered-quantizes the shifted offset ``I + kappa`` at resolution
``a/b`` and pushes the resulting ``N`` (base ``b``).  The receiver pops ``N``,
reconstructs ``Y_I``, reads ``I = ceil(Y_I) - 1`` back off it and pushes ``I``
again, so the ``log2 a`` borrowed bits are returned.

The quantizer rounds half towards +inf, which makes the support of ``Y_I``
the half-open interval ``(kappa_I, kappa_I + a/b]``.  Index arithmetic is done
in exact rationals so that decoding never depends on float rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import IndexRecoveryError

_HALF = Fraction(1, 2)


class MessageRegister:
    """Arbitrary precision integer used as a stack of mixed-radix digits.

    ``growth`` is the exact product of pushed bases over popped bases, so
    ``nominal_bits = log2(growth)`` is the running bit account.
    """

    def __init__(self, value: int = 0, pad_seed: int = 0):
        if value < 0:
            raise ValueError("register value must be nonnegative")
        self.value = int(value)
        self.growth = Fraction(1)
        self.padded_bits = 0
        self._pad_seed = pad_seed
        self._pad_rng = None

    @classmethod
    def random(cls, bits: int = 256, seed: int = 0) -> "MessageRegister":
        rng = np.random.default_rng(seed)
        value = int.from_bytes(rng.bytes((bits + 7) // 8), "big") >> (-bits % 8)
        return cls(value, pad_seed=seed + 1)

    @property
    def nominal_bits(self) -> float:
        return math.log2(self.growth.numerator) - math.log2(self.growth.denominator)

    def push(self, base: int, symbol: int) -> None:
        if not 0 <= symbol < base:
            raise ValueError(f"symbol {symbol} out of range for base {base}")
        self.value = self.value * base + symbol
        self.growth *= base

    def pop(self, base: int) -> int:
        self.value, symbol = divmod(self.value, base)
        self.growth /= base
        return symbol

    def peek(self, base: int) -> int:
        return self.value % base

    def pad(self, bits: int = 64) -> None:
        """Append random low-order bits; recorded in ``padded_bits``."""
        if self._pad_rng is None:
            self._pad_rng = np.random.default_rng(self._pad_seed)
        extra = int.from_bytes(self._pad_rng.bytes((bits + 7) // 8), "big") >> (-bits % 8)
        self.value = (self.value << bits) | extra
        self.padded_bits += bits

    def copy(self) -> "MessageRegister":
        other = MessageRegister.__new__(MessageRegister)
        other.value = self.value
        other.growth = self.growth
        other.padded_bits = self.padded_bits
        other._pad_seed = self._pad_seed
        other._pad_rng = self._pad_rng
        return other

    def to_bytes(self) -> bytes:
        """32-bit big-endian byte count followed by the big-endian value."""
        n = (self.value.bit_length() + 7) // 8
        return n.to_bytes(4, "big") + self.value.to_bytes(n, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> "MessageRegister":
        if len(data) < 4:
            raise ValueError("truncated register header")
        n = int.from_bytes(data[:4], "big")
        if len(data) < 4 + n:
            raise ValueError("truncated register body")
        return cls(int.from_bytes(data[4:4 + n], "big"))

    def __eq__(self, other):
        return isinstance(other, MessageRegister) and self.value == other.value

    def __repr__(self):
        return f"MessageRegister({self.value.bit_length()} bits, nominal={self.nominal_bits:.3f})"


@dataclass(frozen=True)
class RationalWindow:
    kappa: float
    a: int
    b: int

    def __post_init__(self):
        if not (1 <= self.a <= self.b):
            raise ValueError("need 1 <= a <= b")
        kn, kd = float(self.kappa).as_integer_ratio()
        if not (kn >= 0 and kn * self.b <= (self.b - self.a) * kd):
            raise ValueError(f"kappa={self.kappa} outside [0, 1 - a/b]")

    @property
    def width(self) -> Fraction:
        return Fraction(self.a, self.b)


def round_half_up(x: Fraction) -> int:
    return math.floor(x + _HALF)


def quantize_index(index: int, win: RationalWindow, dither: float) -> tuple[int, Fraction]:
    """(N_I, Y_I) for the copy ``kappa_I = index + kappa``."""
    a, b = win.a, win.b
    kn, kd = float(win.kappa).as_integer_ratio()
    vn, vd = float(dither).as_integer_ratio()
    # floor((b/a)(index + kappa) + v + 1/2) over the common denominator 2 a kd vd
    n = (2 * b * (index * kd + kn) * vd + a * kd * (2 * vn + vd)) // (2 * a * kd * vd)
    if not 0 <= n < b:
        raise AssertionError(f"internal: N={n} outside [0, {b - 1}]")
    return n, Fraction(a * (2 * n * vd - 2 * vn + vd), 2 * b * vd)


def reconstruct(n: int, a: int, b: int, dither: float) -> tuple[int, Fraction]:
    """Receiver side: (I, Y_I) from N_I alone."""
    y_index = Fraction(a, b) * (n - Fraction(dither) + _HALF)
    return math.ceil(y_index) - 1, y_index


def bbq_candidate(msg: MessageRegister, win: RationalWindow, dither: float) -> tuple[int, int, float]:
    """What :func:`bbq_encode` would produce, without touching the register.

    Returns (I, N_I, Y).
    """
    index = msg.peek(win.a)
    n, y_index = quantize_index(index, win, dither)
    return index, n, float(y_index - index)


def bbq_encode(msg: MessageRegister, win: RationalWindow, dither: float) -> tuple[MessageRegister, float]:
    if msg.value < win.a:
        msg.pad()
    index = msg.pop(win.a)
    n, y_index = quantize_index(index, win, dither)
    msg.push(win.b, n)
    return msg, float(y_index - index)


def bbq_decode(msg: MessageRegister, a: int, b: int, dither: float) -> tuple[MessageRegister, float]:
    n = msg.pop(b)
    index, y_index = reconstruct(n, a, b, dither)
    if not 0 <= index < a:
        raise IndexRecoveryError(f"index recovery failure: I={index} for a={a}")
    msg.push(a, index)
    return msg, float(y_index - index)


def rational_width(width: float, denominator: int = 1 << 32) -> tuple[int, int]:
    """Smallest a/denominator >= width (never narrower, so containment survives)."""
    a = math.ceil(Fraction(width) * denominator)
    return max(1, min(a, denominator)), denominator
