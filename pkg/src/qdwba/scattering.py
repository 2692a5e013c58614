"""Continuum waves, phase shifts and entrance-channel potential fitting.

Phase shifts are read off by matching the outward-integrated regular
solution to A F_l + B G_l (Coulomb functions of the tail charge, or the
Riccati-Bessel pair for short-range potentials): delta = atan2(B, A).
For Coulomb tails delta is the extra phase on top of the Coulomb phase.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels as K
from .cfm import SolverConfig
from .coulomb import coulomb_fg, coulomb_phase
from .potentials import PotentialSpec
from .units import RYDBERG_EV, ev_to_ry
from .waves import RadialWave

log = logging.getLogger(__name__)

FIT_LIMIT_EV = 30.0
AGREE_TOL = 1e-6
R_MATCH_CAP = 1.0e5


class PhaseShiftError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhaseShiftPoint:
    """One phase shift; ``tail_charge`` None means a short-range potential."""

    l: int
    E: float
    delta: float
    tail_charge: Optional[float] = None
    r_match: float = math.nan

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("phase shifts need E > 0")
        if self.l < 0:
            raise ValueError("l must be non-negative")

    @property
    def k(self) -> float:
        return math.sqrt(self.E)

    @property
    def E_eV(self) -> float:
        return self.E * RYDBERG_EV

    @property
    def tail(self) -> str:
        return "short_range" if self.tail_charge is None else f"coulomb({self.tail_charge:g})"


def wrap_phase(delta):
    """Reduce to (-pi/2, pi/2]."""
    d = np.mod(np.asarray(delta, dtype=float) + 0.5 * np.pi, np.pi) - 0.5 * np.pi
    d = np.where(d == -0.5 * np.pi, 0.5 * np.pi, d)
    return d if d.ndim else float(d)


def unwrap_phase(deltas: Sequence[float]) -> np.ndarray:
    """Remove the mod-pi jumps of a phase-shift curve sampled on an E grid."""
    return np.unwrap(2.0 * np.asarray(deltas, dtype=float)) / 2.0


def _eta(V: PotentialSpec, E: float) -> float:
    z = V.tail_charge
    return 0.0 if z is None else -z / math.sqrt(E)


def _tail_deviation(V: PotentialSpec, E: float, r: np.ndarray) -> np.ndarray:
    z = V.tail_charge or 0.0
    return np.abs(V(r, E) + 2.0 * z / r)


def default_r_match(V: PotentialSpec, E: float, tol: float = 1e-9) -> float:
    """Smallest radius beyond which the non-tail part of V stops mattering.

    Uses the first-order phase estimate |dV| r / k < tol, which works for
    exponential screening and for r**-4 polarization tails alike.
    """
    k = math.sqrt(E)
    r = np.geomspace(2.0, R_MATCH_CAP, 400)
    bad = _tail_deviation(V, E, r) * r / k > tol
    idx = np.nonzero(bad)[0]
    if idx.size == 0:
        return float(r[0])
    if idx[-1] + 1 >= r.size:
        return float(R_MATCH_CAP)
    return float(r[idx[-1] + 1])


def _start(V: PotentialSpec, l: int, E: float, r_start: float, args):
    c0, c1, c2 = K.origin_coefficients(r_start, *args)
    u, du = K.regular_series(r_start, l, E, c0, c1, c2)
    return np.array([1.0, du / u, 0.0, 0.0])


def _regular(V: PotentialSpec, l: int, E: float, cfg: SolverConfig, points: np.ndarray,
             r_start: float):
    """Regular solution (unnormalised) and derivative at ``points`` (increasing)."""
    args = V.compiled(E)
    y0 = _start(V, l, E, r_start, args)
    extra = [b * f for b in V.breakpoints if r_start < b < points[-1] for f in (1 - 1e-13, 1 + 1e-13)]
    full = np.union1d(points, extra) if extra else points
    vals, sc = K.propagate_to_grid(l, E, *args, y0, r_start, full, cfg.method, cfg.h,
                                   cfg.eps_local)
    fac = np.exp(sc - sc[-1])
    if extra:
        keep = np.searchsorted(full, points)
        vals, fac = vals[keep], fac[keep]
    return vals[:, 0] * fac, vals[:, 1] * fac


def _match(u: float, du: float, l: int, eta: float, k: float, r: float) -> Tuple[float, float]:
    F, Fp, G, Gp = coulomb_fg(l, eta, k * r)
    A = (G * du - k * Gp * u) / k
    B = (k * Fp * u - F * du) / k
    return A, B


@dataclass
class _Matched:
    A: float
    B: float
    delta: float
    r_match: float
    points: np.ndarray
    u: np.ndarray
    du: np.ndarray


def _solve_matched(V, l, E, cfg, r_match, grid=None, tol=AGREE_TOL, auto=True) -> _Matched:
    k = math.sqrt(E)
    eta = _eta(V, E)
    R = float(r_match)
    r_start = cfg.r_min if grid is None else min(cfg.r_min, float(grid[0]))
    while True:
        R2 = 1.5 * R
        pts = np.array([R, R2]) if grid is None else np.union1d(np.asarray(grid, float), [R, R2])
        pts = pts[pts >= r_start]
        u, du = _regular(V, l, E, cfg, pts, r_start)
        i1 = int(np.searchsorted(pts, R))
        i2 = int(np.searchsorted(pts, R2))
        A1, B1 = _match(u[i1], du[i1], l, eta, k, R)
        A2, B2 = _match(u[i2], du[i2], l, eta, k, R2)
        d1 = math.atan2(B1, A1)
        d2 = math.atan2(B2, A2)
        gap = abs(wrap_phase(d1 - d2))
        if gap <= tol:
            return _Matched(A1, B1, float(wrap_phase(d1)), R, pts, u, du)
        if not auto or 2 * R > R_MATCH_CAP:
            raise PhaseShiftError(
                f"l={l}, E={E:.6g} Ry: matching at r={R:g} and {R2:g} disagrees by {gap:.2e} rad; "
                "the potential is not yet at its tail there, use a larger r_match")
        R *= 2.0


def phase_shift(V: PotentialSpec, l: int, E: float, cfg: Optional[SolverConfig] = None,
                r_match: Optional[float] = None) -> PhaseShiftPoint:
    """Phase shift of partial wave ``l`` at energy ``E`` (Ry).

    Without ``r_match`` the matching radius starts at ``default_r_match``
    and doubles until two radii agree to 1e-6 rad. With an explicit
    ``r_match`` a disagreement raises ``PhaseShiftError``.
    """
    if not E > 0:
        raise ValueError("phase shifts need E > 0")
    cfg = cfg or SolverConfig()
    auto = r_match is None
    R = default_r_match(V, E) if auto else float(r_match)
    m = _solve_matched(V, l, E, cfg, R, auto=auto)
    return PhaseShiftPoint(l, float(E), m.delta, V.tail_charge, m.r_match)


def continuum_wave(V: PotentialSpec, l: int, E: float, cfg: Optional[SolverConfig] = None,
                   grid: Optional[np.ndarray] = None, r_match: Optional[float] = None) -> RadialWave:
    """Regular solution on ``grid`` scaled to unit asymptotic amplitude.

    Asymptotically u = cos(delta) F_l + sin(delta) G_l, i.e.
    u ~ sin(kr - l pi/2 - eta ln 2kr + sigma_l + delta).
    """
    if not E > 0:
        raise ValueError("continuum waves need E > 0")
    if grid is None:
        raise ValueError("continuum_wave needs a radial grid")
    cfg = cfg or SolverConfig()
    grid = np.asarray(grid, dtype=float)
    auto = r_match is None
    R = default_r_match(V, E) if auto else float(r_match)
    m = _solve_matched(V, l, E, cfg, R, grid=grid, auto=auto)
    amp = math.hypot(m.A, m.B)
    # sign chosen so that the reported delta is in (-pi/2, pi/2]
    sgn = 1.0 if m.A > 0 or (m.A == 0 and m.B > 0) else -1.0
    idx = np.searchsorted(m.points, grid)
    u = sgn * m.u[idx] / amp
    du = sgn * m.du[idx] / amp
    eta = _eta(V, E)
    return RadialWave(l, float(E), grid, u, "continuum_unit_amplitude", delta=m.delta, du=du,
                      eta=eta, sigma=coulomb_phase(l, eta))


def phase_shift_curve(V: PotentialSpec, l: int, energies: Sequence[float],
                      cfg: Optional[SolverConfig] = None) -> np.ndarray:
    """delta_l on an energy grid with the mod-pi jumps removed."""
    return unwrap_phase([phase_shift(V, l, E, cfg).delta for E in energies])


def load_phase_shift_targets(path) -> List[PhaseShiftPoint]:
    """Rows ``l  E_eV  delta_rad`` with ``#`` comments."""
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'l E_eV delta_rad', got {raw!r}")
        try:
            l, e_ev, d = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {raw!r}") from None
        if e_ev <= 0:
            raise ValueError(f"{path}:{lineno}: energy must be positive")
        out.append(PhaseShiftPoint(l, ev_to_ry(e_ev), d))
    if not out:
        raise ValueError(f"{path}: no phase-shift rows")
    return out


@dataclass(frozen=True)
class PotentialFamily:
    """A potential template with named free parameters.

    ``build`` maps a parameter vector to a PotentialSpec. ``bounds`` clip the
    fit.
    """

    names: Tuple[str, ...]
    build: Callable[[np.ndarray], PotentialSpec]
    bounds: Optional[Tuple[Tuple[float, float], ...]] = None

    def __call__(self, p) -> PotentialSpec:
        return self.build(np.asarray(p, dtype=float))


def gsz_polarization_family(z_nuclear: float = 18.0, alpha_d: float = 11.08,
                            r_cut: Optional[float] = None) -> PotentialFamily:
    """Neutral GSZ screening plus polarization; free (eps1, eps2) and r_cut if not fixed."""
    if r_cut is None:
        return PotentialFamily(
            ("epsilon1", "epsilon2", "r_cut"),
            lambda p: PotentialSpec.gsz_polarization(z_nuclear, p[0], p[1], alpha_d, p[2]),
            ((0.1, 50.0), (0.05, 10.0), (0.1, 10.0)))
    return PotentialFamily(
        ("epsilon1", "epsilon2"),
        lambda p: PotentialSpec.gsz_polarization(z_nuclear, p[0], p[1], alpha_d, r_cut),
        ((0.1, 50.0), (0.05, 10.0)))


def fixed_family(V: PotentialSpec) -> PotentialFamily:
    return PotentialFamily((), lambda p: V)


@dataclass
class PhaseFitResult:
    params: np.ndarray
    rms: float
    converged: bool
    residuals: np.ndarray
    optimization: Optional[object] = None
    names: Tuple[str, ...] = field(default_factory=tuple)


def _phase_residuals(family, p, targets, cfg):
    V = family(p)
    model = np.array([phase_shift(V, t.l, t.E, cfg).delta for t in targets])
    return wrap_phase(model - np.array([t.delta for t in targets]))


def fit_potential_to_phaseshifts(targets: Sequence[PhaseShiftPoint], family: PotentialFamily, p0,
                                 cfg: Optional[SolverConfig] = None, tol: float = 1e-10,
                                 max_iter: int = 60, fd_step: float = 1e-5) -> PhaseFitResult:
    """Least-squares fit of the family's free parameters to target phase shifts.

    Each phase mismatch d enters as s = sin(2d)/2, which equals d to third
    order, has the same period pi as the phases themselves and no jumps.
    The stacked s(p) is reduced to the square system J(p)^T s(p) = 0, with
    J by forward differences, and that system goes to the Broyden solver
    with the Gauss-Newton matrix J^T J as its Jacobian (refreshed at each
    accepted point, where J is already known) and a line search on the
    least-squares cost itself.
    """
    from .optimizer import broyden_solve

    targets = list(targets)
    if not targets:
        raise ValueError("no targets")
    too_high = [t for t in targets if t.E_eV > FIT_LIMIT_EV + 1e-9]
    if too_high:
        raise ValueError(f"{len(too_high)} targets above {FIT_LIMIT_EV} eV; the model potential "
                         "is not meaningful there")
    cfg = cfg or SolverConfig()
    p0 = np.asarray(p0, dtype=float)
    if len(family.names) == 0:
        res = _phase_residuals(family, p0, targets, cfg)
        return PhaseFitResult(p0, float(np.sqrt(np.mean(res ** 2))), True, res)
    if len(targets) < len(family.names):
        raise ValueError("need at least as many targets as free parameters")

    def smooth(p):
        return 0.5 * np.sin(2.0 * _phase_residuals(family, p, targets, cfg))

    cache = {}

    def jac(p):
        key = tuple(p)
        if key not in cache:
            r = smooth(p)
            J = np.empty((r.size, p.size))
            for i in range(p.size):
                h = fd_step * max(abs(p[i]), 1.0)
                q = p.copy()
                q[i] += h
                J[:, i] = (smooth(q) - r) / h
            cache.clear()
            cache[key] = (r, J)
        return cache[key]

    def gradient(p):
        r, J = jac(p)
        return J.T @ r

    def gauss_newton(p):
        _, J = jac(p)
        return J.T @ J

    def cost(p):
        r, _ = jac(p)
        return 0.5 * float(r @ r)

    opt = broyden_solve(gradient, p0, tol, max_iter, bounds=family.bounds,
                        jacobian=gauss_newton, merit=cost, update="refresh")
    res = _phase_residuals(family, opt.x, targets, cfg)
    rms = float(np.sqrt(np.mean(res ** 2)))
    if not opt.converged:
        log.warning("phase-shift fit did not converge: %s (rms %.3e)", opt.message, rms)
    return PhaseFitResult(opt.x, rms, opt.converged, res, opt, family.names)
