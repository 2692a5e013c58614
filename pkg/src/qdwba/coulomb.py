"""Regular and irregular Coulomb wave functions by Steed's method.

CF1 gives F'/F at the top angular momentum, recurrences carry F down to
L = 0, CF2 gives (G' + iF')/(G + iF) there, and the Wronskian
F'G - FG' = 1 fixes the scale. G is then recurred upward, where it is
dominant and the recurrence is stable.

Supported domain: eta <= 0 for any rho > 0, eta > 0 for rho >= 2*eta
(below that CF2 sits inside the turning point and converges badly).
"""
from __future__ import annotations

import math
from typing import Tuple

import numpy as np
from scipy.special import loggamma

ACCUR = 1e-16
FPMIN = 1e-300
MAX_TERMS = 2_000_000


class CoulombRangeError(ValueError):
    """Arguments outside the validated domain."""


def coulomb_phase(l: int, eta: float) -> float:
    """sigma_l = arg Gamma(l + 1 + i eta)."""
    return float(loggamma(complex(l + 1, eta)).imag)


def _cf1(lmax: int, eta: float, rho: float) -> Tuple[float, float]:
    """F'/F at lmax and the sign of F_lmax, by modified Lentz."""
    xi = 1.0 / rho
    pk = lmax + 1.0
    f = eta / pk + pk * xi
    if abs(f) < FPMIN:
        f = FPMIN
    d = 0.0
    c = f
    sign = 1.0
    for _ in range(MAX_TERMS):
        pk1 = pk + 1.0
        ek = eta / pk
        rk2 = 1.0 + ek * ek
        tk = (pk + pk1) * (xi + ek / pk1)
        d = tk - rk2 * d
        c = tk - rk2 / c
        if abs(c) < FPMIN:
            c = FPMIN
        if abs(d) < FPMIN:
            d = FPMIN
        d = 1.0 / d
        df = d * c
        f *= df
        if d < 0:
            sign = -sign
        pk = pk1
        if abs(df - 1.0) < ACCUR:
            return f, sign
    raise CoulombRangeError(f"CF1 did not converge (eta={eta}, rho={rho})")


def _cf2(eta: float, rho: float) -> Tuple[float, float]:
    """p + iq = (G0' + iF0')/(G0 + iF0) by modified Lentz."""
    a0 = complex(1.0, eta)          # a = L + 1 + i eta at L = 0
    b0 = complex(0.0, eta)          # b = -L + i eta
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    for n in range(1, MAX_TERMS):
        an = (a0 + n - 1) * (b0 + n - 1)
        bn = complex(2.0 * (rho - eta), 2.0 * n)
        d = bn + an * d
        if d == 0:
            d = tiny
        c = bn + an / c
        if c == 0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < ACCUR:
            pq = 1j * (1.0 - eta / rho) + 1j / rho * f
            return pq.real, pq.imag
    raise CoulombRangeError(f"CF2 did not converge (eta={eta}, rho={rho})")


def _check(lmax: int, eta: float, rho: float):
    if lmax < 0:
        raise ValueError("l must be non-negative")
    if not rho > 0:
        raise ValueError("rho must be positive")
    if eta > 0 and rho < 2.0 * eta:
        raise CoulombRangeError(f"rho={rho} below 2*eta={2 * eta}: outside the validated domain")


def coulomb_fg_array(lmax: int, eta: float, rho: float):
    """F_l, F_l', G_l, G_l' for l = 0..lmax (derivatives with respect to rho)."""
    _check(lmax, eta, rho)
    fp_over_f, sign = _cf1(lmax, eta, rho)
    F = np.empty(lmax + 1)
    Fp = np.empty(lmax + 1)
    G = np.empty(lmax + 1)
    Gp = np.empty(lmax + 1)
    # unnormalised downward recurrence
    F[lmax] = sign * 1e-30
    Fp[lmax] = fp_over_f * F[lmax]
    for L in range(lmax, 0, -1):
        S = L / rho + eta / L
        R = math.sqrt(L * L + eta * eta) / L
        F[L - 1] = (S * F[L] + Fp[L]) / R
        Fp[L - 1] = S * F[L - 1] - R * F[L]
        big = abs(F[L - 1])
        if big > 1e250:
            F[L - 1:] /= big
            Fp[L - 1:] /= big
    f0 = Fp[0] / F[0]
    p, q = _cf2(eta, rho)
    gamma = (f0 - p) / q
    f_true = math.copysign(1.0 / math.sqrt(q * (1.0 + gamma * gamma)), F[0])
    omega = f_true / F[0]
    F *= omega
    Fp *= omega
    G[0] = gamma * F[0]
    Gp[0] = (p * gamma - q) * F[0]
    for L in range(lmax):
        S = (L + 1) / rho + eta / (L + 1)
        R = math.sqrt((L + 1) ** 2 + eta * eta) / (L + 1)
        G[L + 1] = (S * G[L] - Gp[L]) / R
        Gp[L + 1] = R * G[L] - S * G[L + 1]
    return F, Fp, G, Gp


def coulomb_fg(l: int, eta: float, rho: float) -> Tuple[float, float, float, float]:
    """(F, F', G, G') for one angular momentum; eta = -z/k for an attractive charge z."""
    F, Fp, G, Gp = coulomb_fg_array(l, eta, rho)
    return float(F[l]), float(Fp[l]), float(G[l]), float(Gp[l])


def riccati_jy(l: int, rho: float) -> Tuple[float, float, float, float]:
    """rho*j_l, its derivative, -rho*y_l and its derivative: the eta = 0 limit of F, G."""
    return coulomb_fg(l, 0.0, rho)
