"""Wigner 3-j symbols, Gaunt coefficients and spherical harmonics."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import sph_harm_y


def _twice(j) -> int:
    t = 2 * Fraction(j)
    if t.denominator != 1:
        raise ValueError(f"{j} is not an integer or half-integer")
    return int(t)


@lru_cache(maxsize=None)
def _3j(a: int, b: int, c: int, x: int, y: int, z: int) -> float:
    """3-j symbol from doubled arguments (Racah's formula, integer arithmetic)."""
    if x + y + z != 0:
        return 0.0
    if min(a, b, c) < 0 or abs(x) > a or abs(y) > b or abs(z) > c:
        return 0.0
    if (a + x) % 2 or (b + y) % 2 or (c + z) % 2:
        return 0.0
    if c > a + b or c < abs(a - b) or (a + b + c) % 2:
        return 0.0
    fa = math.factorial
    t1 = (a + b - c) // 2
    t2 = (a - b + c) // 2
    t3 = (-a + b + c) // 2
    big = (a + b + c) // 2 + 1
    ap, am = (a + x) // 2, (a - x) // 2
    bp, bm = (b + y) // 2, (b - y) // 2
    cp, cm = (c + z) // 2, (c - z) // 2
    kmin = max(0, (b - c - x) // 2, (a - c + y) // 2)
    kmax = min(t1, am, bp)
    s = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (fa(k) * fa((c - b + x) // 2 + k) * fa((c - a - y) // 2 + k)
               * fa(t1 - k) * fa(am - k) * fa(bp - k))
        s += Fraction(-1 if k % 2 else 1, den)
    if s == 0:
        return 0.0
    pref = Fraction(fa(t1) * fa(t2) * fa(t3), fa(big)) * (
        fa(ap) * fa(am) * fa(bp) * fa(bm) * fa(cp) * fa(cm))
    val = math.sqrt(s * s * pref)
    sign = -1 if ((a - b - z) // 2) % 2 else 1
    return sign * (val if s > 0 else -val)


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3-j symbol; 0 whenever the triangle or projection rules fail.

    Evaluated exactly in rational arithmetic and rounded once at the end.
    """
    try:
        args = tuple(_twice(v) for v in (j1, j2, j3, m1, m2, m3))
    except ValueError:
        return 0.0
    return _3j(*args)


@lru_cache(maxsize=None)
def gaunt(l1: int, m1: int, l2: int, m2: int, l3: int, m3: int) -> float:
    """Integral of Y_{l1 m1} Y_{l2 m2} Y_{l3 m3} over the unit sphere."""
    if m1 + m2 + m3 != 0 or (l1 + l2 + l3) % 2:
        return 0.0
    w0 = wigner3j(l1, l2, l3, 0, 0, 0)
    if w0 == 0.0:
        return 0.0
    pref = math.sqrt((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1) / (4.0 * math.pi))
    return pref * w0 * wigner3j(l1, l2, l3, m1, m2, m3)


def ylm(l: int, m: int, theta, phi=0.0):
    """Y_lm(theta, phi) with the Condon-Shortley phase; theta is the polar angle."""
    return sph_harm_y(l, m, np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
