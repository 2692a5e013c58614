"""Radial interaction potentials in Rydberg units (energies in Ry, lengths in Bohr).

All closed forms accept scalars or numpy arrays. ``PotentialSpec`` is the
dispatch object consumed by the solvers; ``PotentialSpec.compiled`` packs it
into the flat arrays used by the compiled kernels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels as K

KINDS = ("gsz", "coulomb", "gsz_plus_polarization", "tabulated",
         "composite_with_exchange", "square_well", "harmonic")


class PotentialError(ValueError):
    """Invalid potential parameters or a malformed tabulated file."""


@dataclass(frozen=True)
class GszParams:
    """Green-Sellin-Zachor screening parameters.

    ``z_residual`` is the charge seen far from the core: 1 for the physical
    ion, 3/4 for the effective-charge final state.
    """

    epsilon1: float
    epsilon2: float
    z_nuclear: int = 18
    z_residual: float = 1.0

    def __post_init__(self):
        if not self.epsilon1 > 0 or not self.epsilon2 > 0:
            raise PotentialError(f"GSZ parameters must be positive, got "
                                 f"({self.epsilon1}, {self.epsilon2})")
        if self.z_nuclear < 1:
            raise PotentialError("z_nuclear must be >= 1")
        if not 0 < self.z_residual <= self.z_nuclear:
            raise PotentialError("z_residual must lie in (0, z_nuclear]")

    def with_residual(self, z_residual: float) -> "GszParams":
        return replace(self, z_residual=z_residual)


def gsz_screening(params: GszParams, r):
    """Screening function omega(r) = 1 / [eps1 (exp(r/eps2) - 1) + 1]."""
    r = np.asarray(r, dtype=float)
    with np.errstate(over="ignore"):
        return 1.0 / (params.epsilon1 * np.expm1(r / params.epsilon2) + 1.0)


def gsz_potential(params: GszParams, r):
    """GSZ model potential -(2/r)[(Z - 1) omega(r) + z_residual] in Ry."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise PotentialError("gsz_potential requires r > 0")
    w = gsz_screening(params, r)
    out = -2.0 / r * ((params.z_nuclear - 1) * w + params.z_residual)
    return out if out.ndim else float(out)


def polarization_potential(alpha_d, r_cut, r):
    """Cut-off dipole polarization tail -alpha_d / (r**2 + r_cut**2)**2."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or alpha_d < 0 or r_cut <= 0:
        raise PotentialError("polarization_potential requires r > 0, alpha_d >= 0, r_cut > 0")
    out = -alpha_d / (r * r + r_cut * r_cut) ** 2
    return out if out.ndim else float(out)


def furness_mccarthy_exchange(v_static, rho, energy):
    """Local exchange potential (Ry) for an electron of energy ``energy`` (Ry).

    The Hartree-unit form 1/2 (E - V) - 1/2 sqrt((E - V)**2 + 4 pi rho) written
    in Rydberg units, where the discriminant becomes 16 pi rho.
    """
    v_static = np.asarray(v_static, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise PotentialError("electron density must be non-negative")
    d = energy - v_static
    out = 0.5 * d - 0.5 * np.sqrt(d * d + 16.0 * np.pi * rho)
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class TabulatedRadialFunction:
    """Sampled radial function with piecewise-polynomial interpolation.

    Potentials are interpolated as r*V. ``quantity`` decides what happens
    off the grid: potentials continue as -2*tail_charge/r beyond the last
    node (0 when tail_charge is None) and as constant r*V below the first;
    densities vanish beyond and stay constant below.
    """

    r_grid: np.ndarray
    values: np.ndarray
    interpolation_order: int = 3
    tail_charge: Optional[float] = None
    quantity: str = "potential"
    _coef: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape:
            raise PotentialError("r_grid and values must be 1-d and the same length")
        if r.size < 4:
            raise PotentialError("tabulated function needs at least 4 points")
        if np.any(np.diff(r) <= 0):
            raise PotentialError("non-increasing grid")
        if self.interpolation_order not in (1, 3):
            raise PotentialError("interpolation_order must be 1 or 3")
        if self.quantity not in ("potential", "density"):
            raise PotentialError(f"unknown quantity {self.quantity!r}")
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "values", v)
        # potentials are interpolated as r*V, which is smooth at the origin
        # and exact for Coulomb-like pieces
        y = r * v if self.quantity == "potential" else v
        coef = np.zeros((r.size, 4))
        if self.interpolation_order == 3:
            coef[:-1] = CubicSpline(r, y).c.T
        else:
            coef[:-1, 2] = np.diff(y) / np.diff(r)
            coef[:-1, 3] = y[:-1]
        coef[-1, 3] = y[-1]
        object.__setattr__(self, "_coef", coef)

    @property
    def coefficients(self) -> np.ndarray:
        """Rows (c3, c2, c1, c0) per knot; the last row is padding."""
        return self._coef

    def _inside(self, r):
        idx = np.clip(np.searchsorted(self.r_grid, r, side="right") - 1, 0, self.r_grid.size - 2)
        d = r - self.r_grid[idx]
        c = self._coef[idx]
        return ((c[..., 0] * d + c[..., 1]) * d + c[..., 2]) * d + c[..., 3]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        rc = np.clip(r, self.r_grid[0], self.r_grid[-1])
        out = np.array(self._inside(rc), dtype=float)
        lo = r < self.r_grid[0]
        hi = r > self.r_grid[-1]
        if self.quantity == "potential":
            out = out / rc
            out = np.where(lo, self.values[0] * self.r_grid[0] / np.where(lo, r, 1.0), out)
            tail = 0.0 if self.tail_charge is None else -2.0 * self.tail_charge
            out = np.where(hi, tail / np.where(hi, r, 1.0), out)
        else:
            out = np.where(lo, self.values[0], out)
            out = np.where(hi, 0.0, out)
        # nodes are reproduced exactly
        exact = np.isin(r, self.r_grid)
        if np.any(exact):
            out = np.where(exact, np.interp(r, self.r_grid, self.values), out)
        return out if out.ndim else float(out)


def load_tabulated_radial(path, interpolation_order: int = 3, tail_charge=None,
                          quantity: str = "potential") -> TabulatedRadialFunction:
    """Read ``r value`` rows (``#`` comments) into a validated table."""
    rs, vs = [], []
    prev = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PotentialError(f"{path}:{lineno}: expected 'r value', got {raw!r}")
        try:
            r, v = float(parts[0]), float(parts[1])
        except ValueError:
            raise PotentialError(f"{path}:{lineno}: malformed number in {raw!r}") from None
        if prev is not None and r <= prev:
            raise PotentialError(f"{path}:{lineno}: non-increasing grid")
        prev = r
        rs.append(r)
        vs.append(v)
    if len(rs) < 4:
        raise PotentialError(f"{path}: tabulated function needs at least 4 points, got {len(rs)}")
    return TabulatedRadialFunction(np.array(rs), np.array(vs), interpolation_order,
                                   tail_charge, quantity)


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A radial potential with its asymptotic-tail descriptor.

    Use the classmethod constructors rather than building instances by hand.
    """

    kind: str
    gsz: Optional[GszParams] = None
    alpha_d: float = 0.0
    r_cut: float = 1.0
    table: Optional[TabulatedRadialFunction] = None
    charge: float = 0.0
    depth: float = 0.0
    radius: float = 0.0
    coefficient: float = 0.0
    base: Optional["PotentialSpec"] = None
    density: Optional[TabulatedRadialFunction] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PotentialError(f"unknown potential kind {self.kind!r}")
        if self.alpha_d < 0:
            raise PotentialError("alpha_d must be >= 0")
        if self.alpha_d > 0 and self.r_cut <= 0:
            raise PotentialError("r_cut must be > 0 when polarization is present")
        if self.kind in ("gsz", "gsz_plus_polarization") and self.gsz is None:
            raise PotentialError(f"{self.kind} needs GszParams")
        if self.kind == "tabulated" and self.table is None:
            raise PotentialError("tabulated potential needs a table")
        if self.kind == "composite_with_exchange":
            if self.base is None or self.density is None:
                raise PotentialError("composite_with_exchange needs a base potential and a density")
            if self.base.kind == "composite_with_exchange":
                raise PotentialError("exchange cannot be nested")

    # constructors
    @classmethod
    def gsz_ion(cls, params: GszParams, label=""):
        return cls("gsz", gsz=params, label=label)

    @classmethod
    def coulomb(cls, charge: float):
        return cls("coulomb", charge=charge)

    @classmethod
    def zero(cls):
        return cls("coulomb", charge=0.0)

    @classmethod
    def gsz_polarization(cls, z_nuclear, epsilon1, epsilon2, alpha_d, r_cut, label=""):
        """Neutral-atom GSZ screening (all Z electrons) plus a polarization tail."""
        return cls("gsz_plus_polarization",
                   gsz=GszParams(epsilon1, epsilon2, int(z_nuclear), float(z_nuclear)),
                   alpha_d=alpha_d, r_cut=r_cut, label=label)

    @classmethod
    def tabulated(cls, table: TabulatedRadialFunction, alpha_d=0.0, r_cut=1.0):
        return cls("tabulated", table=table, alpha_d=alpha_d, r_cut=r_cut)

    @classmethod
    def square_well(cls, depth, radius):
        return cls("square_well", depth=depth, radius=radius)

    @classmethod
    def harmonic(cls, coefficient=1.0):
        return cls("harmonic", coefficient=coefficient)

    @classmethod
    def with_exchange(cls, base: "PotentialSpec", density: TabulatedRadialFunction,
                      alpha_d=0.0, r_cut=1.0, label=""):
        return cls("composite_with_exchange", base=base, density=density,
                   alpha_d=alpha_d, r_cut=r_cut, label=label)

    # descriptors
    @property
    def tail_charge(self) -> Optional[float]:
        """Asymptotic Coulomb charge, or None for short-range/confining tails."""
        if self.kind == "gsz":
            return float(self.gsz.z_residual)
        if self.kind == "coulomb":
            return float(self.charge) if self.charge != 0 else None
        if self.kind == "tabulated":
            return self.table.tail_charge
        if self.kind == "composite_with_exchange":
            return self.base.tail_charge
        return None

    @property
    def tail(self) -> dict:
        z = self.tail_charge
        if self.kind == "harmonic":
            return {"confining": True}
        return {"coulomb_charge": z} if z is not None else {"short_range": True}

    @property
    def breakpoints(self) -> tuple:
        """Radii where V jumps; integrators stop on either side of them."""
        return (float(self.radius),) if self.kind == "square_well" else ()

    @property
    def has_exchange(self) -> bool:
        return self.kind == "composite_with_exchange"

    @property
    def continuum_threshold(self) -> float:
        return math.inf if self.kind == "harmonic" else 0.0

    def _terms(self, tables: list) -> list:
        rows = []
        if self.kind == "gsz":
            g = self.gsz
            rows.append([K.GSZ, g.z_nuclear, g.z_residual, g.epsilon1, g.epsilon2, 0.0])
        elif self.kind == "gsz_plus_polarization":
            g = self.gsz
            rows.append([K.GSZ_NEUTRAL, g.z_nuclear, 0.0, g.epsilon1, g.epsilon2, 0.0])
        elif self.kind == "coulomb":
            if self.charge != 0:
                rows.append([K.COULOMB, self.charge, 0, 0, 0, 0])
        elif self.kind == "tabulated":
            tables.append(self.table)
            tail = self.table.tail_charge or 0.0
            rows.append([K.TABLE, len(tables) - 1, tail, 0, 0, 0])
        elif self.kind == "square_well":
            rows.append([K.SQUARE_WELL, self.depth, self.radius, 0, 0, 0])
        elif self.kind == "harmonic":
            rows.append([K.HARMONIC, self.coefficient, 0, 0, 0, 0])
        elif self.kind == "composite_with_exchange":
            rows.extend(self.base._terms(tables))
        if self.alpha_d > 0:
            rows.append([K.POLARIZATION, self.alpha_d, self.r_cut, 0, 0, 0])
        return rows

    def compiled(self, energy: float = 0.0):
        """Flat arrays for the compiled kernels: (terms, tx, tc, ts, tn, exch)."""
        tables: list = []
        rows = self._terms(tables)
        exch = np.zeros(3)
        if self.has_exchange:
            tables.append(self.density)
            exch[:] = (1.0, len(tables) - 1, energy)
        terms = np.array(rows, dtype=float).reshape(-1, 6)
        if tables:
            tx = np.concatenate([t.r_grid for t in tables])
            tc = np.concatenate([t.coefficients for t in tables])
            tn = np.array([t.r_grid.size for t in tables], dtype=np.int64)
            ts = np.concatenate([[0], np.cumsum(tn)[:-1]]).astype(np.int64)
        else:
            tx = np.zeros(1)
            tc = np.zeros((1, 4))
            ts = np.zeros(1, dtype=np.int64)
            tn = np.ones(1, dtype=np.int64)
        return terms, tx, tc, ts, tn, exch

    def __call__(self, r, energy: float = 0.0):
        """Evaluate V(r) in Ry; ``energy`` only matters for exchange potentials."""
        args = self.compiled(energy)
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise PotentialError("potentials are evaluated at r > 0 only")
        flat = K.potential_array(np.ascontiguousarray(r.ravel()), *args)
        out = flat.reshape(r.shape)
        return out if out.ndim else float(out)


def static_potential_from_density(density: TabulatedRadialFunction, z_nuclear: float,
                                  r_grid: Sequence[float],
                                  tail_charge: Optional[float] = None) -> TabulatedRadialFunction:
    """Electrostatic potential (Ry) of a nucleus plus a spherical electron cloud.

    V(r) = -2Z/r + 2 * 4 pi [ (1/r) int_0^r rho r'^2 dr' + int_r^inf rho r' dr' ].
    ``tail_charge`` overrides the net charge Z - N used beyond the grid (the
    quadrature leaves N off an integer by a few 1e-6).
    """
    from scipy.integrate import cumulative_trapezoid

    r = np.asarray(r_grid, dtype=float)
    rho = density(r)
    inner = cumulative_trapezoid(4 * np.pi * rho * r * r, r, initial=0.0)
    # the cloud below the first node is treated as uniform
    inner = inner + 4 * np.pi * rho[0] * r[0] ** 3 / 3.0
    outer_integrand = 4 * np.pi * rho * r
    outer = cumulative_trapezoid(outer_integrand[::-1], -r[::-1], initial=0.0)[::-1]
    v = -2.0 * z_nuclear / r + 2.0 * (inner / r + outer)
    n_el = inner[-1]
    if tail_charge is None:
        tail_charge = float(z_nuclear - n_el)
    return TabulatedRadialFunction(r, v, 3, tail_charge=float(tail_charge),
                                   quantity="potential")
