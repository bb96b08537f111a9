"""Exact angular-momentum algebra: 3j symbols, Clebsch-Gordan coefficients, harmonics.

Half-integers are carried as doubled integers so that parity checks are exact;
3j symbols are evaluated with the Racah single sum over exact rationals and only
converted to floating point at the very end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.special import lpmv

__all__ = [
    "HalfInt",
    "wigner_3j",
    "clebsch_gordan",
    "spherical_harmonic",
]

Number = Union[int, float, Fraction, str, "HalfInt"]


@dataclass(frozen=True, slots=True)
class HalfInt:
    """An integer or half-integer stored as ``twice_value``."""

    twice_value: int

    @classmethod
    def of(cls, value: Number) -> "HalfInt":
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, bool):
            raise TypeError("booleans are not angular momenta")
        if isinstance(value, int):
            return cls(2 * value)
        if isinstance(value, str):
            value = Fraction(value)
        if isinstance(value, Fraction):
            doubled = 2 * value
            if doubled.denominator != 1:
                raise ValueError(f"{value} is not a multiple of 1/2")
            return cls(int(doubled))
        doubled_float = 2.0 * float(value)
        rounded = round(doubled_float)
        if abs(doubled_float - rounded) > 1e-9:
            raise ValueError(f"{value} is not a multiple of 1/2")
        return cls(int(rounded))

    @property
    def value(self) -> Fraction:
        return Fraction(self.twice_value, 2)

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def __float__(self) -> float:
        return self.twice_value / 2

    def __neg__(self) -> "HalfInt":
        return HalfInt(-self.twice_value)

    def __add__(self, other: Number) -> "HalfInt":
        return HalfInt(self.twice_value + HalfInt.of(other).twice_value)

    def __sub__(self, other: Number) -> "HalfInt":
        return HalfInt(self.twice_value - HalfInt.of(other).twice_value)

    def __str__(self) -> str:
        if self.is_integer:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"


def _check_pair(j: HalfInt, m: HalfInt) -> None:
    if j.twice_value < 0:
        raise ValueError(f"angular momentum must be non-negative, got j={j}")
    if (j.twice_value + m.twice_value) % 2:
        raise ValueError(f"j + m must be an integer, got j={j}, m={m}")


@lru_cache(maxsize=None)
def _three_j_doubled(tj1: int, tj2: int, tj3: int, tm1: int, tm2: int, tm3: int) -> float:
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if tj3 < abs(tj1 - tj2) or tj3 > tj1 + tj2 or (tj1 + tj2 + tj3) % 2:
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return 0.0

    f = math.factorial
    triangle = Fraction(
        f((tj1 + tj2 - tj3) // 2) * f((tj1 - tj2 + tj3) // 2) * f((-tj1 + tj2 + tj3) // 2),
        f((tj1 + tj2 + tj3) // 2 + 1),
    )
    projections = 1
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        projections *= f((tj + tm) // 2) * f((tj - tm) // 2)

    t1 = (tj3 - tj2 + tm1) // 2
    t2 = (tj3 - tj1 - tm2) // 2
    t3 = (tj1 + tj2 - tj3) // 2
    t4 = (tj1 - tm1) // 2
    t5 = (tj2 + tm2) // 2
    total = Fraction(0)
    for k in range(max(0, -t1, -t2), min(t3, t4, t5) + 1):
        denominator = f(k) * f(t1 + k) * f(t2 + k) * f(t3 - k) * f(t4 - k) * f(t5 - k)
        total += Fraction(-1 if k % 2 else 1, denominator)
    if total == 0:
        return 0.0

    squared = total * total * triangle * projections
    phase = -1 if ((tj1 - tj2 - tm3) // 2) % 2 else 1
    sign = phase if total > 0 else -phase
    return sign * math.sqrt(squared)


def wigner_3j(j1: Number, j2: Number, j3: Number, m1: Number, m2: Number, m3: Number) -> float:
    """Wigner 3j symbol (j1 j2 j3; m1 m2 m3)."""

    js = [HalfInt.of(x) for x in (j1, j2, j3)]
    ms = [HalfInt.of(x) for x in (m1, m2, m3)]
    for j, m in zip(js, ms):
        _check_pair(j, m)
    return _three_j_doubled(*(j.twice_value for j in js), *(m.twice_value for m in ms))


def clebsch_gordan(j1: Number, m1: Number, j2: Number, m2: Number, j: Number, m: Number) -> float:
    """Clebsch-Gordan coefficient <j1 m1 j2 m2 | j m> through its 3j relation."""

    hj1, hm1, hj2, hm2, hj, hm = (HalfInt.of(x) for x in (j1, m1, j2, m2, j, m))
    for jj, mm in ((hj1, hm1), (hj2, hm2), (hj, hm)):
        _check_pair(jj, mm)
    if hm1.twice_value + hm2.twice_value != hm.twice_value:
        return 0.0
    three_j = _three_j_doubled(
        hj1.twice_value, hj2.twice_value, hj.twice_value,
        hm1.twice_value, hm2.twice_value, -hm.twice_value,
    )
    phase = -1 if ((hj1.twice_value - hj2.twice_value + hm.twice_value) // 2) % 2 else 1
    return phase * math.sqrt(hj.twice_value + 1) * three_j


@lru_cache(maxsize=None)
def _harmonic_norm(l: int, am: int) -> float:
    ratio = Fraction(math.factorial(l - am), math.factorial(l + am))
    return math.sqrt((2 * l + 1) / (4.0 * math.pi) * ratio)


def spherical_harmonic(l: int, m: int, theta, phi):
    """Orthonormal Y_lm(theta, phi) with the Condon-Shortley phase.

    ``theta`` and ``phi`` may be scalars or broadcastable arrays; scalars give a
    Python complex.
    """

    if int(l) != l or int(m) != m:
        raise ValueError(f"l and m must be integers, got l={l}, m={m}")
    l, m = int(l), int(m)
    if l < 0:
        raise ValueError(f"l must be non-negative, got {l}")
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l, got l={l}, m={m}")

    theta_arr = np.asarray(theta, dtype=float)
    phi_arr = np.asarray(phi, dtype=float)
    am = abs(m)
    # lpmv already carries the (-1)^m Condon-Shortley factor
    legendre = lpmv(am, l, np.cos(theta_arr))
    value = _harmonic_norm(l, am) * legendre * np.exp(1j * am * phi_arr)
    if m < 0:
        value = (-1) ** am * np.conj(value)
    if np.ndim(value) == 0:
        return complex(value)
    return value
