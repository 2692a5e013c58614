"""Distorted-wave Born amplitudes and the (e,2e) TDCS in back-to-back equal-sharing geometry.

Conventions
-----------
Amplitudes are assembled in Hartree atomic units with V = 1/r12 (the
Rydberg factor 2/r12 and the Ry energy scale cancel once momenta are in
inverse Bohr). Distorted waves are normalised to (2 pi)^-3/2 times a
plane wave,

    chi(k, r) = (2 pi)^-3/2 (4 pi / k r) sum_lm i^l e^{+-i D_l} u_l(r) Y_lm(r^) Y*_lm(k^),

with D_l = sigma_l + delta_l and u_l of unit asymptotic amplitude. The
quantisation axis is the incident direction, the scattering plane is
phi = 0/pi, and k_b = -k_a.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_simpson

from .angular import gaunt, ylm
from .cfm import SolverConfig, eigenfunction, find_eigenvalues, find_state
from .potentials import (GszParams, PotentialSpec, TabulatedRadialFunction,
                         static_potential_from_density)
from .scattering import continuum_wave
from .units import RYDBERG_EV, ev_to_ry
from .waves import RadialWave, count_nodes, radial_grid, simpson_weights

# fitted (eps1, eps2) per orbital angular momentum for Ar+ + e
ARGON_GSZ_ROWS = ((3.625, 1.036), (3.62, 1.06), (3.6344, 1.036))
ARGON_IP_EV = 15.8
ARGON_ALPHA_D = 11.08
Z_EFF = 0.75
MODELS = ("dwba_fm", "dwba_pseudo")
ENTRANCE_SWITCH_EV = 30.0
BOUND_WINDOW = (-3.0, -0.5)
# ground-state shells (l, radial nodes, occupancy) of argon
ARGON_SHELLS = ((0, 0, 2), (0, 1, 2), (1, 0, 6), (0, 2, 2), (1, 1, 6))


class DwbaError(RuntimeError):
    pass


class ConvergenceWarning(UserWarning):
    """A partial-wave sum or an oscillatory tail is not converged to the requested tolerance."""


class PostCollisionSingularity(ValueError):
    """Effective charges diverge when the two outgoing momenta coincide."""


# -- effective charges ----------------------------------------------------------

def effective_charges(ka, kb) -> Tuple[float, float]:
    """Equal effective charges Za = Zb satisfying the three-body asymptotic condition.

    Za/ka + Zb/kb = 1/ka + 1/kb - 1/|ka - kb| with Za = Zb gives
    Z = 1 - ka kb / (|ka - kb| (ka + kb)); back-to-back equal moduli give 3/4.
    """
    ka = np.asarray(ka, dtype=float)
    kb = np.asarray(kb, dtype=float)
    na = float(np.linalg.norm(ka))
    nb = float(np.linalg.norm(kb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("momenta must be nonzero")
    nab = float(np.linalg.norm(ka - kb))
    if nab <= 1e-12 * max(na, nb):
        raise PostCollisionSingularity("k_a = k_b: 1/|k_a - k_b| diverges")
    z = 1.0 - (na * nb) / (nab * (na + nb))
    return z, z


# -- kinematics -----------------------------------------------------------------

def _default_theta():
    return tuple(float(t) for t in np.arange(0.0, 360.0, 5.0))


@dataclass(frozen=True)
class Kinematics:
    """Equal energy sharing, coplanar, k_b = -k_a.

    Energies in eV; ``theta`` is the detection angle of electron a in the
    scattering plane, measured from the beam, in degrees on [0, 360).
    """

    E_exc: float
    ionization_potential: float = ARGON_IP_EV
    theta: tuple = field(default_factory=_default_theta)

    def __post_init__(self):
        if not self.E_exc > 0:
            raise ValueError("excess energy must be positive")
        if not self.ionization_potential > 0:
            raise ValueError("ionization potential must be positive")
        object.__setattr__(self, "theta", tuple(float(t) for t in np.atleast_1d(self.theta)))

    @classmethod
    def from_incident(cls, E0: float, ionization_potential: float = ARGON_IP_EV, theta=None):
        kw = {} if theta is None else {"theta": theta}
        return cls(E0 - ionization_potential, ionization_potential, **kw)

    @property
    def E0(self) -> float:
        return self.E_exc + self.ionization_potential

    @property
    def Ea(self) -> float:
        return 0.5 * self.E_exc

    Eb = Ea

    @property
    def k0(self) -> float:
        return math.sqrt(ev_to_ry(self.E0))

    @property
    def ka(self) -> float:
        return math.sqrt(ev_to_ry(self.Ea))

    kb = ka

    def momenta(self, theta_deg: float):
        """(k0, ka, kb) vectors in the x-z plane, z along the beam."""
        t = math.radians(theta_deg)
        ka = self.ka * np.array([math.sin(t), 0.0, math.cos(t)])
        return np.array([0.0, 0.0, self.k0]), ka, -ka


# -- channel configuration ------------------------------------------------------

@dataclass(frozen=True)
class LDependentPotential:
    """One potential per partial wave; l beyond the last row reuses the last row."""

    rows: tuple

    def __post_init__(self):
        if not self.rows:
            raise ValueError("need at least one row")
        object.__setattr__(self, "rows", tuple(self.rows))

    def for_l(self, l: int) -> PotentialSpec:
        return self.rows[min(l, len(self.rows) - 1)]


ChannelPotential = Union[PotentialSpec, LDependentPotential]


def _for_l(V: ChannelPotential, l: int) -> PotentialSpec:
    return V.for_l(l) if isinstance(V, LDependentPotential) else V


@dataclass(frozen=True)
class BoundSource:
    """Where the active orbital comes from.

    Either an eigenstate of ``potential`` with angular momentum ``l`` and
    ``nodes`` radial nodes, or a tabulated ``r u(r)`` file, or a ready wave.
    """

    l: int = 1
    nodes: int = 1
    potential: Optional[PotentialSpec] = None
    window: Tuple[float, float] = BOUND_WINDOW
    path: Optional[str] = None
    wave: Optional[RadialWave] = field(default=None, compare=False)

    def __post_init__(self):
        if self.potential is None and self.path is None and self.wave is None:
            raise ValueError("bound source needs a potential, a file or a wave")

    @classmethod
    def gsz_eigenstate(cls, params: GszParams, l: int = 1, nodes: int = 1,
                       window=BOUND_WINDOW):
        return cls(l, nodes, PotentialSpec.gsz_ion(params.with_residual(1.0)), window)

    @classmethod
    def tabulated(cls, path, l: int = 1):
        return cls(l, -1, path=str(path))


@dataclass(frozen=True)
class ChannelConfig:
    """Everything needed to evaluate one DWBA model.

    Parameters
    ----------
    entrance, exit : PotentialSpec or LDependentPotential
        Distorting potentials of the incident and of both outgoing electrons.
    bound : BoundSource
        Active orbital.
    ionization_potential : float
        eV.
    l_max, lambda_max : int
        Partial-wave cap per continuum electron and multipole cap.
    occupancy : int
        Electrons in the active subshell; the cross section carries
        occupancy / (2L + 1) per magnetic substate.
    one_body_term : bool
        Add <chi_b|phi><chi_a|U_exit - U_entrance|chi_0> to the direct amplitude.
    """

    entrance: ChannelPotential
    exit: ChannelPotential
    bound: BoundSource
    ionization_potential: float = ARGON_IP_EV
    l_max: int = 25
    lambda_max: int = 6
    occupancy: int = 6
    model_tag: str = "dwba_pseudo"
    one_body_term: bool = False
    dx: float = 0.05
    r_max: Optional[float] = None
    conv_tol: float = 1e-3
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.l_max < 2:
            raise ValueError("l_max must be >= 2")
        if self.lambda_max < 1:
            raise ValueError("lambda_max must be >= 1")
        if not self.ionization_potential > 0:
            raise ValueError("ionization potential must be positive")
        if self.occupancy < 1:
            raise ValueError("occupancy must be >= 1")

    def kinematics(self, E_exc: float, theta=None) -> Kinematics:
        kw = {} if theta is None else {"theta": theta}
        return Kinematics(E_exc, self.ionization_potential, **kw)


def default_l_max(E_exc: float) -> int:
    return 25 if E_exc <= 4.0 else 40


def default_r_max(k: float, l_max: int) -> float:
    """120 Bohr at E_exc = 2 eV scaled as 1/k, and always past the l_max turning point."""
    k_ref = math.sqrt(ev_to_ry(1.0))
    return max(120.0 * k_ref / k, 1.5 * (l_max + 5) / k + 20.0)


# -- densities and channel potentials ---------------------------------------------

_CORE_CFG = SolverConfig(r0=0.1, r_min_factor=1e-3)


@lru_cache(maxsize=8)
def _core_orbitals(rows: tuple, shells: tuple, r_end: float = 40.0, dx: float = 0.01):
    grid = radial_grid(1e-4, r_end, dx=dx, beta=1.0)
    out = []
    for l, nodes, occ in shells:
        e1, e2 = rows[min(l, len(rows) - 1)]
        V = PotentialSpec.gsz_ion(GszParams(e1, e2))
        sol = find_eigenvalues(V, l, (-800.0, -0.05), 800, _CORE_CFG)
        for E in sol.energies:
            w = eigenfunction(V, l, E, _CORE_CFG, grid=grid)
            if w.nodes == nodes:
                out.append((w, occ))
                break
        else:
            raise DwbaError(f"core orbital l={l} with {nodes} nodes not found")
    return grid, out


def core_density(rows=ARGON_GSZ_ROWS, shells=ARGON_SHELLS) -> TabulatedRadialFunction:
    """Spherical electron density (Bohr^-3) built from GSZ eigen-orbitals of the core."""
    grid, orbs = _core_orbitals(tuple(tuple(r) for r in rows), tuple(tuple(s) for s in shells))
    rho = sum(occ * w.u ** 2 for w, occ in orbs) / (4.0 * math.pi * grid ** 2)
    return TabulatedRadialFunction(grid, rho, 3, quantity="density")


def ion_shells(shells=ARGON_SHELLS) -> tuple:
    """Remove one electron from the outermost shell."""
    *inner, (l, n, occ) = shells
    return tuple(inner) + ((l, n, occ - 1),)


def static_exchange_potential(z_nuclear: int, density: TabulatedRadialFunction,
                              tail_charge: float, alpha_d: float = 0.0,
                              r_cut: float = 1.0, label: str = "") -> PotentialSpec:
    """Static potential of nucleus plus cloud with Furness-McCarthy exchange on top."""
    static = static_potential_from_density(density, z_nuclear, density.r_grid,
                                           tail_charge=tail_charge)
    return PotentialSpec.with_exchange(PotentialSpec.tabulated(static), density,
                                       alpha_d=alpha_d, r_cut=r_cut, label=label)


def argon_channels(model: str, E_exc: float, *, l_max: Optional[int] = None,
                   lambda_max: int = 6, rows=ARGON_GSZ_ROWS, z_eff: float = Z_EFF,
                   entrance_fit: Optional[Tuple[float, float, float, float]] = None,
                   entrance_switch_ev: float = ENTRANCE_SWITCH_EV,
                   entrance_polarization: float = 0.0, exit_exchange: bool = False,
                   bound: Optional[BoundSource] = None,
                   ionization_potential: float = ARGON_IP_EV, **kw) -> ChannelConfig:
    """Channel set-up for e + Ar(3p) ionisation.

    ``dwba_fm`` uses static plus Furness-McCarthy exchange potentials in all
    three channels (neutral atom in, Ar+ out). ``dwba_pseudo`` uses GSZ exit
    potentials with the residual charge replaced by ``z_eff``; its entrance
    is the GSZ+polarization pseudo-potential ``entrance_fit`` =
    (eps1, eps2, alpha_d, r_cut) at or below ``entrance_switch_ev`` incident
    energy, and the Furness-McCarthy potential otherwise.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    rows = tuple(tuple(r) for r in rows)
    neutral = core_density(rows)
    ion = core_density(rows, ion_shells())
    fm_in = static_exchange_potential(18, neutral, 0.0, alpha_d=entrance_polarization,
                                      r_cut=1.0,
                                      label="fm_entrance")
    E0 = E_exc + ionization_potential
    if model == "dwba_fm":
        entrance = fm_in
        exit_ = static_exchange_potential(18, ion, 1.0, label="fm_exit")
    else:
        if entrance_fit is not None and E0 <= entrance_switch_ev:
            e1, e2, a, rc = entrance_fit
            entrance = PotentialSpec.gsz_polarization(18, e1, e2, a, rc, label="fitted_entrance")
        else:
            entrance = fm_in
        gsz = [PotentialSpec.gsz_ion(GszParams(e1, e2, 18, z_eff), label=f"gsz_l{l}")
               for l, (e1, e2) in enumerate(rows)]
        if exit_exchange:
            gsz = [PotentialSpec.with_exchange(v, ion, label=v.label + "+fm") for v in gsz]
        exit_ = LDependentPotential(tuple(gsz))
    if bound is None:
        bound = BoundSource.gsz_eigenstate(GszParams(*rows[1]), l=1, nodes=1)
    return ChannelConfig(entrance, exit_, bound, ionization_potential,
                         l_max if l_max is not None else default_l_max(E_exc),
                         lambda_max, occupancy=6, model_tag=model, **kw)


def hydrogen_born_channels(l_max: int = 40, lambda_max: int = 20, **kw) -> ChannelConfig:
    """Plane waves in and out and an H(1s) target: the first Born limit."""
    zero = PotentialSpec.zero()
    bound = BoundSource(0, 0, PotentialSpec.coulomb(1.0), (-1.5, -0.5))
    return ChannelConfig(zero, zero, bound, RYDBERG_EV, l_max, lambda_max, occupancy=1,
                         model_tag="born_h1s", **kw)


def born_hydrogen_tdcs(kin: Kinematics) -> np.ndarray:
    """Closed-form first Born TDCS for H(1s) with the same spin assembly."""
    k0, ka = kin.k0, kin.ka
    t = np.radians(np.asarray(kin.theta))
    pref = (2 * math.pi) ** -4.5 * 4 * math.pi * 8 * math.sqrt(math.pi) / (1 + k0 * k0) ** 2
    qf = k0 * k0 + ka * ka - 2 * k0 * ka * np.cos(t)
    qg = k0 * k0 + ka * ka + 2 * k0 * ka * np.cos(t)
    f = pref / qf
    g = pref / qg
    return (2 * math.pi) ** 4 * ka * ka / k0 * (f * f + g * g - f * g)


# -- radial integrals -------------------------------------------------------------

def _multipole_field(lam: int, rho: np.ndarray, r: np.ndarray):
    """y(r) = int rho(r') r<^lam / r>^(lam+1) dr' and the moment int rho r^lam."""
    inner = cumulative_simpson(rho * r ** lam, x=r, initial=0.0)
    g = rho / r ** (lam + 1)
    outer_c = cumulative_simpson(g, x=r, initial=0.0)
    outer = outer_c[-1] - outer_c
    return inner / r ** (lam + 1) + r ** lam * outer, float(inner[-1])


def _asymptotic_phase(w: RadialWave, V: PotentialSpec, i: int):
    """WKB amplitude, phase, local wave number and its slope of u at grid index i."""
    r = w.grid[i]
    c = w.l * (w.l + 1)
    q = w.energy - V(r, w.energy) - c / r ** 2
    if q <= 0:
        return 0.0, 0.0, 0.0, 0.0
    kl = math.sqrt(q)
    h = 1e-4 * r
    dV = (V(r + h, w.energy) - V(r - h, w.energy)) / (2 * h)
    dk = (2 * c / r ** 3 - dV) / (2 * kl)
    u, du = w.u[i], w.du[i]
    return math.hypot(u, du / kl), math.atan2(kl * u, du), kl, dk


def _tail_matrix(moment: float, lam: int, R: float, pa, p0) -> np.ndarray:
    """int_R^inf u_a u_0 moment / r^(lam+1) dr from two integrations by parts.

    With u = A sin(phase) the product splits into cos(phase_0 -+ phase_a);
    each piece contributes -h [sin(p) + cos(p) (h/p')'/h] / p' at R.
    """
    Aa, ta, ka, dka = (np.asarray(v, dtype=float)[:, None] for v in pa)
    A0, t0, k0, dk0 = (np.asarray(v, dtype=float)[None, :] for v in p0)
    n = lam + 1
    ok = (ka > 0) & (k0 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # log-derivative of the slowly varying factor A_a A_0 r^-n
        lh = -n / R - 0.5 * dka / ka - 0.5 * dk0 / k0
        out = np.zeros(np.broadcast(ka, k0).shape)
        for sign, coef in ((-1.0, 1.0), (1.0, -1.0)):
            dp = k0 + sign * ka
            d2p = dk0 + sign * dka
            ph = t0 + sign * ta
            good = ok & (np.abs(dp) > 1e-8)
            corr = lh / dp - d2p / dp ** 2
            term = -(np.sin(ph) + np.cos(ph) * corr) / dp
            out += np.where(good, coef * term, 0.0)
    return moment / R ** n * 0.5 * Aa * A0 * out


def _same_grid(*waves: RadialWave) -> np.ndarray:
    g = waves[0].grid
    for w in waves[1:]:
        if w.grid.shape != g.shape or not np.array_equal(w.grid, g):
            if w.grid[0] >= g[-1] or g[0] >= w.grid[-1]:
                raise ValueError("waves live on non-overlapping grids")
            raise ValueError("waves must share one radial grid")
    return g


def _is_continuum(w: RadialWave) -> bool:
    return w.norm == "continuum_unit_amplitude"


def slater_integral(lam: int, w1: RadialWave, w2: RadialWave, w3: RadialWave, w4: RadialWave,
                    potentials: Optional[Tuple[PotentialSpec, PotentialSpec]] = None,
                    tail_tol: float = 1e-2) -> float:
    """R_lam = int int w1(r1) w3(r1) r<^lam / r>^(lam+1) w2(r2) w4(r2) dr1 dr2.

    The bare radial integral (Hartree units): hydrogen 1s gives 5/8 at
    lam = 0. One of the pairs (w1, w3), (w2, w4) must decay. If the other is
    a product of two continuum waves, the oscillatory tail beyond the grid is
    added from one integration by parts, using ``potentials`` (of w1 and w3)
    for the local wave numbers; a tail above ``tail_tol`` of the total
    raises a ConvergenceWarning.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    r = _same_grid(w1, w2, w3, w4)
    a, b = (w1, w3), (w2, w4)
    if any(map(_is_continuum, b)) and not any(map(_is_continuum, a)):
        a, b = b, a
    if sum(map(_is_continuum, b)) == 2:
        raise ValueError("both pairs are continuum-continuum; the integral diverges")
    y, moment = _multipole_field(lam, b[0].u * b[1].u, r)
    w = simpson_weights(r)
    value = float(np.sum(w * a[0].u * a[1].u * y))
    tail = 0.0
    if all(map(_is_continuum, a)) and moment != 0.0:
        if potentials is None:
            potentials = (PotentialSpec.zero(), PotentialSpec.zero())
        pa = [[v] for v in _asymptotic_phase(a[0], potentials[0], r.size - 1)]
        p0 = [[v] for v in _asymptotic_phase(a[1], potentials[1], r.size - 1)]
        tail = float(_tail_matrix(moment, lam, r[-1], pa, p0)[0, 0])
        total = value + tail
        if abs(tail) > tail_tol * abs(total):
            warnings.warn(f"oscillatory tail is {abs(tail / total):.2%} of R_{lam}",
                          ConvergenceWarning, stacklevel=2)
    return value + tail


# -- bound orbital ----------------------------------------------------------------

def _load_orbital(path: str, l: int, grid: np.ndarray) -> RadialWave:
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2 or data.shape[0] < 4:
        raise DwbaError(f"{path}: expected 'r u' rows")
    tab = TabulatedRadialFunction(data[:, 0], data[:, 1], 3, quantity="density")
    u = np.where(grid <= data[-1, 0], tab(grid), 0.0)
    u[grid < data[0, 0]] = 0.0
    nrm = math.sqrt(float(simpson_weights(grid) @ (u * u)))
    return RadialWave(l, float("nan"), grid, u / nrm, "bound_unit", nodes=count_nodes(u))


def bound_orbital(cfg: ChannelConfig, grid: Optional[np.ndarray] = None) -> RadialWave:
    """Active orbital, normalised on ``grid``.

    Eigenstates are searched in ``cfg.bound.window``; an energy outside the
    window raises, so a mislabelled state is never used silently.
    """
    src = cfg.bound
    if src.wave is not None:
        if grid is not None and not np.array_equal(src.wave.grid, grid):
            raise ValueError("supplied bound wave is on a different grid")
        return src.wave
    if src.path is not None:
        if grid is None:
            grid = radial_grid(1e-4, 60.0, 0.02, 1.0)
        return _load_orbital(src.path, src.l, np.asarray(grid, dtype=float))
    V = src.potential
    state = find_state(V, src.l, src.nodes, src.window, 400, _CORE_CFG)
    return eigenfunction(V, src.l, state.energy, _CORE_CFG, grid=grid)


# -- amplitudes ---------------------------------------------------------------------

@dataclass
class AmplitudeDiagnostics:
    r_max: float = 0.0
    n_grid: int = 0
    bound_energy: float = 0.0
    partial_wave_change: float = 0.0
    max_tail_fraction: float = 0.0
    warnings: list = field(default_factory=list)


def _ylm_plane(l: int, m: int, theta_deg: np.ndarray) -> np.ndarray:
    """Y_lm at detection angles in the scattering plane (real there)."""
    t = np.mod(theta_deg, 360.0)
    back = t > 180.0
    pol = np.radians(np.where(back, 360.0 - t, t))
    y = np.real(ylm(l, m, pol, 0.0))
    return np.where(back, (-1.0) ** m * y, y)


class DwbaEngine:
    """Waves, radial tables and partial-wave amplitudes for one kinematics."""

    def __init__(self, cfg: ChannelConfig, kin: Kinematics, threads: int = 1):
        if abs(kin.ionization_potential - cfg.ionization_potential) > 1e-12:
            raise ValueError("kinematics and channel use different ionization potentials")
        self.cfg = cfg
        self.kin = kin
        self.diag = AmplitudeDiagnostics()
        L = cfg.l_max
        R = cfg.r_max or default_r_max(kin.ka, L)
        self.grid = radial_grid(1e-4, R, cfg.dx, 2.0)
        self.weights = simpson_weights(self.grid)
        self.diag.r_max = R
        self.diag.n_grid = self.grid.size
        self.bound = bound_orbital(cfg, self.grid)
        self.diag.bound_energy = self.bound.energy
        if cfg.bound.potential is not None and not (
                BOUND_WINDOW[0] <= self.bound.energy <= BOUND_WINDOW[1]) and cfg.model_tag in MODELS:
            self._warn(f"bound energy {self.bound.energy:.4f} Ry outside plausibility window")
        E0 = ev_to_ry(kin.E0)
        Ea = ev_to_ry(kin.Ea)
        s = cfg.solver
        self.chi0 = [continuum_wave(_for_l(cfg.entrance, l), l, E0, s, self.grid) for l in range(L + 1)]
        # both outgoing electrons share energy and potential
        self.chia = [continuum_wave(_for_l(cfg.exit, l), l, Ea, s, self.grid) for l in range(L + 1)]
        self.Ua = np.array([w.u for w in self.chia])
        self.U0 = np.array([w.u for w in self.chi0])
        iN = self.grid.size - 1
        self.pa = np.array([_asymptotic_phase(w, _for_l(cfg.exit, w.l), iN) for w in self.chia]).T
        self.p0 = np.array([_asymptotic_phase(w, _for_l(cfg.entrance, w.l), iN)
                            for w in self.chi0]).T
        self.phase_a = np.array([(-1j) ** w.l * np.exp(1j * (w.sigma + w.delta)) for w in self.chia])
        self.phase_0 = np.array([1j ** w.l * np.exp(1j * (w.sigma + w.delta))
                                 * math.sqrt((2 * w.l + 1) / (4 * math.pi)) for w in self.chi0])
        self.radial = self._radial_tables(threads)

    def _warn(self, msg: str):
        self.diag.warnings.append(msg)
        warnings.warn(msg, ConvergenceWarning, stacklevel=3)

    def _tasks(self):
        Lb = self.bound.l
        for lam in range(self.cfg.lambda_max + 1):
            for lb in range(abs(lam - Lb), min(lam + Lb, self.cfg.l_max) + 1):
                if (lam + lb + Lb) % 2 == 0:
                    yield lam, lb

    def _radial(self, key):
        lam, lb = key
        y, moment = _multipole_field(lam, self.chia[lb].u * self.bound.u, self.grid)
        core = (self.Ua * (self.weights * y)) @ self.U0.T
        tail = _tail_matrix(moment, lam, self.grid[-1], self.pa, self.p0)
        return key, core + tail, tail

    def _radial_tables(self, threads: int) -> Dict[tuple, np.ndarray]:
        keys = list(self._tasks())
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                done = list(pool.map(self._radial, keys))
        else:
            done = [self._radial(k) for k in keys]
        out = {}
        worst = 0.0
        for key, mat, tail in done:
            out[key] = mat
            scale = np.max(np.abs(mat))
            if scale > 0:
                worst = max(worst, float(np.max(np.abs(tail)) / scale))
        self.diag.max_tail_fraction = worst
        return out

    def _direct(self, theta: np.ndarray, m: int, lmax: int) -> np.ndarray:
        """Direct amplitude f(theta; m) truncated at partial waves <= lmax."""
        kin = self.kin
        Lb = self.bound.l
        f = np.zeros(theta.size, dtype=complex)
        la_idx = np.arange(lmax + 1)
        for (lam, lb), Rmat in self.radial.items():
            if lb > lmax:
                continue
            R = Rmat[:lmax + 1, :lmax + 1]
            for ma in range(-min(lam, lmax), min(lam, lmax) + 1):
                mb = m - ma
                if abs(mb) > lb:
                    continue
                s2 = (-1) ** mb * gaunt(lb, -mb, lam, -ma, Lb, m)
                if s2 == 0.0:
                    continue
                G1 = np.array([[gaunt(la, -ma, lam, ma, l0, 0) if abs(ma) <= la else 0.0
                                for l0 in la_idx] for la in la_idx])
                t = (G1 * R) @ self.phase_0[:lmax + 1]
                ya = np.array([_ylm_plane(la, ma, theta) if abs(ma) <= la else np.zeros(theta.size)
                               for la in la_idx])
                inner = (self.phase_a[:lmax + 1] * t) @ ya
                yb = (-1) ** lb * _ylm_plane(lb, mb, theta)
                f += (4 * math.pi / (2 * lam + 1)) * s2 * self.phase_a[lb] * yb * inner
        pref = (2 * math.pi) ** -4.5 * (4 * math.pi) ** 3 / (kin.k0 * kin.ka * kin.kb)
        f *= pref
        if self.cfg.one_body_term:
            f += self._one_body(theta, m, lmax)
        return f

    def _one_body(self, theta: np.ndarray, m: int, lmax: int) -> np.ndarray:
        """<chi_b|phi> <chi_a|U_exit - U_entrance|chi_0>, potentials taken in Hartree."""
        kin = self.kin
        Lb = self.bound.l
        if Lb > lmax:
            return np.zeros(theta.size, dtype=complex)
        ov = float(self.weights @ (self.chia[Lb].u * self.bound.u))
        yb = (-1) ** Lb * _ylm_plane(Lb, m, theta)
        overlap = (2 * math.pi) ** -1.5 * 4 * math.pi / kin.kb * self.phase_a[Lb] * yb * ov
        E0, Ea = ev_to_ry(kin.E0), ev_to_ry(kin.Ea)
        elastic = np.zeros(theta.size, dtype=complex)
        for l in range(lmax + 1):
            dU = 0.5 * (_for_l(self.cfg.exit, l)(self.grid, Ea) - _for_l(self.cfg.entrance, l)(self.grid, E0))
            rad = float(self.weights @ (self.chia[l].u * dU * self.chi0[l].u))
            elastic += (self.phase_a[l] * self.phase_0[l] * rad * _ylm_plane(l, 0, theta))
        elastic *= (2 * math.pi) ** -3 * (4 * math.pi) ** 2 / (kin.ka * kin.k0)
        return overlap * elastic

    def amplitudes(self, theta, m: int, lmax: Optional[int] = None):
        """(f, g) at detection angles ``theta`` (degrees); g(theta) = f(theta + 180)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if abs(m) > self.bound.l:
            raise ValueError(f"|m| must be <= {self.bound.l}")
        lmax = self.cfg.l_max if lmax is None else lmax
        both = self._direct(np.concatenate([theta, theta + 180.0]), m, lmax)
        return both[:theta.size], both[theta.size:]

    def sigma(self, theta, lmax: Optional[int] = None) -> np.ndarray:
        kin = self.kin
        Lb = self.bound.l
        acc = np.zeros(np.size(theta))
        for m in range(-Lb, Lb + 1):
            f, g = self.amplitudes(theta, m, lmax)
            acc += 0.25 * np.abs(f + g) ** 2 + 0.75 * np.abs(f - g) ** 2
        scale = (2 * math.pi) ** 4 * kin.ka * kin.kb / kin.k0
        return scale * self.cfg.occupancy / (2 * Lb + 1) * acc


def ionization_amplitude(cfg: ChannelConfig, kin: Kinematics, theta_a, m: int,
                         engine: Optional[DwbaEngine] = None):
    """Direct and exchange amplitudes (f, g) at detection angle(s) ``theta_a`` (degrees)."""
    engine = engine or DwbaEngine(cfg, kin)
    f, g = engine.amplitudes(theta_a, m)
    if np.ndim(theta_a) == 0:
        return complex(f[0]), complex(g[0])
    return f, g


# -- cross sections ---------------------------------------------------------------

@dataclass
class TdcsCurve:
    """TDCS (a.u.) against detection angle; the absolute scale is model-relative."""

    kinematics: Kinematics
    theta: np.ndarray
    sigma: np.ndarray
    model_tag: str
    diagnostics: AmplitudeDiagnostics = field(default_factory=AmplitudeDiagnostics)
    relative_scale: bool = True

    def integrated(self) -> float:
        """Integral of sigma over the in-plane detection angle (radians)."""
        t = np.radians(np.append(self.theta, self.theta[0] + 360.0))
        s = np.append(self.sigma, self.sigma[0])
        order = np.argsort(t)
        return float(np.trapezoid(s[order], t[order]))

    def at(self, theta_deg: float) -> float:
        return float(np.interp(theta_deg % 360.0, self.theta, self.sigma, period=360.0))


def tdcs(cfg: ChannelConfig, kin: Kinematics, threads: int = 1,
         engine: Optional[DwbaEngine] = None) -> TdcsCurve:
    """Spin-averaged TDCS 1/4|f+g|^2 + 3/4|f-g|^2 summed over the active subshell."""
    engine = engine or DwbaEngine(cfg, kin, threads)
    theta = np.asarray(kin.theta, dtype=float)
    sigma = engine.sigma(theta)
    # last partial wave as a convergence gauge
    lower = engine.sigma(theta, cfg.l_max - 1)
    change = float(np.max(np.abs(sigma - lower)) / np.max(np.abs(sigma)))
    engine.diag.partial_wave_change = change
    if change > cfg.conv_tol:
        engine._warn(f"partial-wave sum: last l changes sigma by {change:.2e} "
                     f"(conv_tol {cfg.conv_tol:.0e})")
    return TdcsCurve(kin, theta, sigma, cfg.model_tag, engine.diag)
