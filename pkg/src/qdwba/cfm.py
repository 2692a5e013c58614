"""Canonical Function Method for the radial equation u'' + [E - V - l(l+1)/r**2] u = 0.

Two canonical solutions alpha, beta start at r0 with the unit initial-condition
matrix and are swept outward and inward. The saturated ratios -alpha/beta at
both ends give l+(E) and l-(E); bound states are the zeros of
F(E) = l+(E) - l-(E).

At the sweep ends the ratio is read against the local boundary behaviour
(decaying WKB branch outside, regular Frobenius branch at the origin), i.e.
-(alpha' - L alpha)/(beta' - L beta) with L the boundary log-derivative. For
L -> infinity this is the plain -alpha/beta; it saturates much earlier.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .potentials import PotentialSpec
from .waves import RadialWave, count_nodes, integrate, radial_grid

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Integration settings for the canonical sweeps.

    ``integrator`` is ``"adaptive"`` (Dormand-Prince 5(4), local relative error
    ``eps_local``) or ``"rk4"`` (classical RK4 on a mesh uniform in r + ln r
    with step ``h``, i.e. ~h Bohr far out and ~h*r near the origin).
    """

    r0: float = 1.0
    integrator: str = "adaptive"
    h: float = 0.02
    eps_local: float = 1e-10
    r_min_factor: float = 1e-4
    r_max: float = 2000.0
    saturation_tol: float = 1e-11
    ratio_monitor_stride: float = 1.0

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")
        if self.integrator not in ("adaptive", "rk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.h <= 0 or self.eps_local <= 0:
            raise ValueError("step size and tolerance must be positive")
        if not 0 < self.r_min < self.r0 < self.r_max:
            raise ValueError("need 0 < r_min < r0 < r_max")
        if self.saturation_tol <= 0:
            raise ValueError("saturation_tol must be positive")

    @property
    def r_min(self) -> float:
        return max(1e-4, self.r_min_factor * self.r0)

    @property
    def method(self) -> int:
        return K.ADAPTIVE if self.integrator == "adaptive" else K.RK4


@dataclass
class CanonicalTrajectory:
    """Samples of the canonical pair along one sweep.

    ``samples`` rows are (r, alpha, alpha', beta, beta') in true scale;
    ``ratio_history`` rows are (r, boundary-matched -alpha/beta).
    """

    direction: str
    energy: float
    l: int
    samples: np.ndarray
    ratio_history: np.ndarray
    log_scale: np.ndarray
    final_ratio: float
    converged: bool
    n_steps: int

    def wronskian(self) -> np.ndarray:
        """alpha*beta' - alpha'*beta at every sample (should stay 1)."""
        s = self.samples
        return s[:, 1] * s[:, 4] - s[:, 2] * s[:, 3]

    def wronskian_deviation(self) -> np.ndarray:
        """|W - 1| relative to the size of the products that form W."""
        s = self.samples
        size = np.abs(s[:, 1] * s[:, 4]) + np.abs(s[:, 2] * s[:, 3])
        return np.abs(self.wronskian() - 1.0) / np.maximum(size, 1.0)


@dataclass
class RatioResult:
    value: float
    converged: bool
    pole: bool = False


@dataclass
class FValue:
    F: float
    pole: bool
    l_plus: float
    l_minus: float


@dataclass
class EigenSolution:
    l: int
    energies: np.ndarray
    f_values_at_roots: np.ndarray
    node_counts: List[int] = field(default_factory=list)

    def __len__(self):
        return len(self.energies)


def _sweep(V: PotentialSpec, l: int, E: float, cfg: SolverConfig, outward: bool,
           max_record: int = 1):
    args = V.compiled(E)
    r_end = cfg.r_max if outward else cfg.r_min
    stride = cfg.ratio_monitor_stride if outward else cfg.r0
    return K.sweep(l, E, *args, cfg.r0, r_end, cfg.method, cfg.h, cfg.eps_local,
                   cfg.saturation_tol, stride, outward, max_record)


def propagate_canonical_pair(V: PotentialSpec, l: int, E: float, cfg: SolverConfig,
                             direction: str = "outward", max_samples: int = 200000) -> CanonicalTrajectory:
    """Sweep the canonical pair from r0 outward (toward infinity) or inward."""
    if direction not in ("outward", "inward"):
        raise ValueError("direction must be 'outward' or 'inward'")
    outward = direction == "outward"
    if outward:
        stride = cfg.ratio_monitor_stride
    else:
        stride = cfg.r0
    args = V.compiled(E)
    r_end = cfg.r_max if outward else cfg.r_min
    y, r, lsc, ratio, conv, nsteps, rec, _ = K.sweep(
        l, E, *args, cfg.r0, r_end, cfg.method, cfg.h, cfg.eps_local, cfg.saturation_tol,
        stride, outward, max_samples)
    if not np.all(np.isfinite(rec[:, 1:5])):
        raise SolverError(f"canonical functions overflowed at E={E}; restart with renormalization")
    scale = np.exp(rec[:, 5])
    samples = rec[:, :5].copy()
    samples[:, 1:5] *= scale[:, None]
    hist = rec[1:, [0, 6]]
    return CanonicalTrajectory(direction, E, l, samples, hist, rec[:, 5].copy(),
                               float(ratio), bool(conv), int(nsteps))


def saturated_ratio(traj: CanonicalTrajectory, tol: float) -> RatioResult:
    """Last monitored -alpha/beta once successive values agree to ``tol``."""
    hist = traj.ratio_history
    if len(hist) < 2:
        val = float(hist[-1, 1]) if len(hist) else math.nan
        return RatioResult(val, False, not math.isfinite(val) if len(hist) else False)
    a, b = float(hist[-2, 1]), float(hist[-1, 1])
    if not (math.isfinite(a) and math.isfinite(b)):
        return RatioResult(b, False, True)
    conv = abs(b - a) <= tol * (1.0 + abs(b))
    return RatioResult(b, conv, False)


def eigenvalue_function(V: PotentialSpec, l: int, E: float, cfg: SolverConfig) -> FValue:
    """F(E) = l+(E) - l-(E) with a pole flag."""
    out = _sweep(V, l, E, cfg, True)
    inn = _sweep(V, l, E, cfg, False)
    lp, lm = float(out[3]), float(inn[3])
    pole = not (math.isfinite(lp) and math.isfinite(lm)) or not bool(out[4])
    if not (math.isfinite(lp) and math.isfinite(lm)):
        return FValue(math.inf, True, lp, lm)
    return FValue(lp - lm, pole, lp, lm)


def matching_sine(V: PotentialSpec, l: int, E: float, cfg: SolverConfig) -> float:
    """Pole-free form of F(E) = 0.

    Each sweep leaves a boundary vector (alpha' - L alpha, beta' - L beta); a
    solution with data (psi, psi') at r0 satisfies both boundaries exactly
    when the two vectors are parallel. Returns the sine of the angle between
    them: bounded, continuous in E, and zero exactly where l+ = l-, including
    the case of an eigenfunction with a node at r0 where F itself has poles.
    """
    vp = _sweep(V, l, E, cfg, True)[7]
    vm = _sweep(V, l, E, cfg, False)[7]
    return float(vp[0] * vm[1] - vp[1] * vm[0])


def _scan_grid(V: PotentialSpec, lo: float, hi: float, n: int) -> np.ndarray:
    z = V.tail_charge
    if z is not None and z > 0 and hi < 0:
        # levels are evenly spaced in the effective quantum number
        nu = np.linspace(z / math.sqrt(-lo), z / math.sqrt(-hi), n)
        return -(z / nu) ** 2
    return np.linspace(lo, hi, n)


def find_eigenvalues(V: PotentialSpec, l: int, window: Tuple[float, float], n_scan: int = 400,
                     cfg: Optional[SolverConfig] = None, with_nodes: bool = False) -> EigenSolution:
    """All zeros of F(E) inside ``window`` (Ry), in increasing order.

    The scan runs on ``matching_sine`` (F = 0 without F's poles), uniform in
    the effective quantum number when the tail is Coulombic. Sign changes are
    refined by Brent's method and accepted when the refined residual is
    below 1e-6. ``f_values_at_roots`` holds that residual.
    """
    cfg = cfg or SolverConfig()
    lo, hi = map(float, window)
    if n_scan < 2 or not lo < hi:
        raise ValueError("need n_scan >= 2 and E_lo < E_hi")
    if hi >= V.continuum_threshold:
        raise ValueError("bound-state window must lie below the continuum threshold")

    def f(E):
        return matching_sine(V, l, E, cfg)

    grid = _scan_grid(V, lo, hi, n_scan)
    vals = np.array([f(E) for E in grid])
    energies, residuals = [], []
    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if np.sign(fa) == np.sign(fb) or b - a < 1e-9:
            continue
        root = a if fa == 0.0 else brentq(f, a, b, xtol=1e-13, rtol=1e-11, maxiter=200)
        res = abs(f(root))
        if res <= 1e-6:
            energies.append(root)
            residuals.append(res)
    sol = EigenSolution(l, np.array(energies), np.array(residuals))
    if with_nodes:
        sol.node_counts = [eigenfunction(V, l, E, cfg).nodes for E in energies]
    return sol


def eigenfunction(V: PotentialSpec, l: int, E_k: float, cfg: Optional[SolverConfig] = None,
                  grid: Optional[np.ndarray] = None, f_tol: float = 1e-6) -> RadialWave:
    """Bound state at the root E_k built as alpha + l+(E_k) beta, normalized to 1.

    The starting data at r0 come from the outer boundary vector (a, b) as
    (psi, psi') = (b, -a), which equals (1, l+) up to scale and stays finite
    when the eigenfunction has a node at r0.
    """
    cfg = cfg or SolverConfig()
    out = _sweep(V, l, E_k, cfg, True)
    vm = _sweep(V, l, E_k, cfg, False)[7]
    vp = out[7]
    res = abs(vp[0] * vm[1] - vp[1] * vm[0])
    if not res <= f_tol:
        raise SolverError(f"E={E_k} is not an eigenvalue (matching residual {res:.3e})")
    if grid is None:
        grid = radial_grid(cfg.r_min, max(float(out[1]), 2 * cfg.r0), dx=0.02, beta=1.0)
    grid = np.asarray(grid, dtype=float)
    args = V.compiled(E_k)
    y0 = np.array([1.0, 0.0, 0.0, 1.0])
    u = np.empty_like(grid)
    du = np.empty_like(grid)
    c0, c1 = vp[1], -vp[0]
    for mask, rev in ((grid >= cfg.r0, False), (grid < cfg.r0, True)):
        if not np.any(mask):
            continue
        g = grid[mask][::-1] if rev else grid[mask]
        vals, sc = K.propagate_to_grid(l, E_k, *args, y0, cfg.r0, g, cfg.method,
                                       cfg.h, cfg.eps_local)
        fac = np.exp(sc)
        uu = (c0 * vals[:, 0] + c1 * vals[:, 2]) * fac
        dd = (c0 * vals[:, 1] + c1 * vals[:, 3]) * fac
        u[mask] = uu[::-1] if rev else uu
        du[mask] = dd[::-1] if rev else dd

    # beyond the last turning point the outward sweep picks up the growing
    # branch; the decaying one is integrated inward from the far end instead
    q = V(grid, E_k) + l * (l + 1) / grid ** 2 - E_k
    allowed = np.nonzero(q < 0)[0]
    i_t = allowed[-1] + 1 if allowed.size else 0
    if grid[i_t] >= cfg.r0 and i_t < grid.size - 2 and u[i_t] != 0.0:
        lg = K.boundary_logderiv_outer(grid[-1], l, E_k, *args)
        if math.isfinite(lg):
            g = grid[i_t:][::-1]
            vals, sc = K.propagate_to_grid(l, E_k, *args, np.array([1.0, lg, 0.0, 1.0]),
                                           grid[-1], g, cfg.method, cfg.h, cfg.eps_local)
            fac = np.exp(sc - sc[-1])
            t = (vals[:, 0] * fac)[::-1]
            dt = (vals[:, 1] * fac)[::-1]
            c = u[i_t] / t[0]
            u[i_t:] = c * t
            du[i_t:] = c * dt
    nrm = math.sqrt(integrate(grid, u * u))
    big = np.nonzero(np.abs(u) > 1e-6 * np.max(np.abs(u)))[0][0]
    sign = 1.0 if u[big] > 0 else -1.0
    u *= sign / nrm
    du *= sign / nrm
    return RadialWave(l, float(E_k), grid, u, "bound_unit", du=du, nodes=count_nodes(u))


def find_state(V: PotentialSpec, l: int, nodes: int, window: Tuple[float, float],
               n_scan: int = 400, cfg: Optional[SolverConfig] = None) -> RadialWave:
    """Eigenstate with a given radial node count inside ``window``."""
    cfg = cfg or SolverConfig()
    sol = find_eigenvalues(V, l, window, n_scan, cfg)
    for E in sol.energies:
        wave = eigenfunction(V, l, E, cfg)
        if wave.nodes == nodes:
            return wave
    raise SolverError(f"no l={l} state with {nodes} nodes in window {window}")
