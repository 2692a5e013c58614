"""Radial grids and sampled radial functions shared by the bound and continuum solvers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson


def radial_grid(r_min: float, r_max: float, dx: float = 0.05, beta: float = 2.0) -> np.ndarray:
    """Log-linear grid, uniform in x = r + beta*ln(r).

    Spacing is ~ dx*r/beta close to the origin and ~dx far away.
    """
    x0 = r_min + beta * np.log(r_min)
    x1 = r_max + beta * np.log(r_max)
    n = int(np.ceil((x1 - x0) / dx))
    x = np.linspace(x0, x1, n + 1)
    # Newton in s = ln r: exp(s) + beta*s = x is convex and increasing in s
    s = np.where(x > beta, np.log(np.maximum(x - beta * np.log(np.maximum(x, 1.0)), 1e-300)),
                 x / beta)
    for _ in range(100):
        es = np.exp(s)
        step = (es + beta * s - x) / (es + beta)
        s -= step
        if np.max(np.abs(step)) < 1e-15:
            break
    r = np.exp(s)
    r[0], r[-1] = r_min, r_max
    return r


def integrate(grid: np.ndarray, values: np.ndarray) -> float:
    return float(simpson(values, x=grid))


@dataclass
class RadialWave:
    """Reduced radial function u(r) sampled on ``grid``.

    ``norm`` is ``"bound_unit"`` (integral of u**2 is 1) or
    ``"continuum_unit_amplitude"`` (u ~ sin(kr - l pi/2 - eta ln 2kr + sigma + delta)).
    """

    l: int
    energy: float
    grid: np.ndarray
    u: np.ndarray
    norm: str
    delta: Optional[float] = None
    du: Optional[np.ndarray] = None
    nodes: Optional[int] = None
    eta: float = 0.0
    sigma: float = 0.0

    @property
    def k(self) -> float:
        return float(np.sqrt(self.energy)) if self.energy > 0 else 0.0

    def norm2(self) -> float:
        return integrate(self.grid, self.u ** 2)


def count_nodes(u: np.ndarray, rel_floor: float = 1e-6) -> int:
    """Sign changes of u ignoring samples below rel_floor * max|u|.

    The floor hides roundoff-level sign flips close to the origin, where
    the regular solution of an l >= 1 state is swamped by integration noise.
    """
    big = np.abs(u) > rel_floor * np.max(np.abs(u))
    s = np.sign(u[big])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def simpson_weights(x: np.ndarray) -> np.ndarray:
    """Quadrature weights of composite Simpson on a non-uniform grid.

    ``weights @ f`` matches ``scipy.integrate.simpson(f, x=x)``; with an even
    number of points the last interval uses the three-point end correction.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("Simpson weights need at least 3 points")
    w = np.zeros(n)
    m = n if n % 2 else n - 1
    h = np.diff(x)
    h0 = h[0:m - 1:2]
    h1 = h[1:m - 1:2]
    hs = h0 + h1
    w[0:m - 2:2] += hs / 6.0 * (2.0 - h1 / h0)
    w[1:m - 1:2] += hs ** 3 / (6.0 * h0 * h1)
    w[2:m:2] += hs / 6.0 * (2.0 - h0 / h1)
    if m != n:
        a, b = h[-2], h[-1]
        w[-1] += (2 * b * b + 3 * a * b) / (6 * (a + b))
        w[-2] += (b * b + 3 * a * b) / (6 * a)
        w[-3] -= b ** 3 / (6 * a * (a + b))
    return w
