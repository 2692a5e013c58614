"""Quantum defects of Rydberg series and level-table ingestion.

A level of a unit-residual-charge series obeys E_n = -1/(n - mu_n)**2 Ry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .units import RYDBERG_CM, RYDBERG_EV

UNITS = {"ry": 1.0, "ev": 1.0 / RYDBERG_EV, "cm-1": 1.0 / RYDBERG_CM}


class LevelTableError(ValueError):
    pass


def quantum_defect(E: float, n: int) -> float:
    """mu = n - 1/sqrt(-E) for a bound level E (Ry)."""
    if not E < 0:
        raise ValueError(f"quantum defect needs a bound level, got E={E}")
    return n - 1.0 / math.sqrt(-E)


def level_from_defect(n: int, mu: float) -> float:
    """Inverse of ``quantum_defect``: E = -1/(n - mu)**2 Ry."""
    nu = n - mu
    if not nu > 0:
        raise ValueError(f"effective quantum number n - mu must be positive, got {nu}")
    return -1.0 / (nu * nu)


@dataclass(frozen=True)
class RydbergSeries:
    """Bound levels (n, E) of one series, ordered by n, with their defects.

    Parameters
    ----------
    l : int
        Orbital angular momentum of the series.
    n : sequence of int
        Consecutive principal labels.
    energies : sequence of float
        Levels in Ry, negative and increasing toward 0.
    source : str
        Free-text provenance.
    """

    l: int
    n: tuple
    energies: tuple
    source: str = ""

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        e = tuple(float(v) for v in self.energies)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "energies", e)
        if self.l < 0:
            raise LevelTableError("l must be non-negative")
        if len(n) != len(e) or not n:
            raise LevelTableError("need one energy per label and at least one level")
        if any(b - a != 1 for a, b in zip(n, n[1:])):
            raise LevelTableError("non-consecutive principal labels")
        if any(v >= 0 for v in e):
            raise LevelTableError("bound levels must be negative")
        if any(b <= a for a, b in zip(e, e[1:])):
            raise LevelTableError("levels must increase strictly with n")
        for k, E in zip(n, e):
            mu = quantum_defect(E, k)
            if not -1.0 < mu < k:
                raise LevelTableError(f"defect {mu:.6g} of level n={k} outside (-1, n)")

    @classmethod
    def from_defects(cls, l: int, n: Sequence[int], defects: Sequence[float], source: str = ""):
        return cls(l, tuple(n), tuple(level_from_defect(k, m) for k, m in zip(n, defects)), source)

    @property
    def defects(self) -> np.ndarray:
        return np.array([quantum_defect(E, k) for k, E in zip(self.n, self.energies)])

    def __len__(self):
        return len(self.n)

    def index(self, n: int) -> int:
        try:
            return self.n.index(int(n))
        except ValueError:
            raise KeyError(f"label n={n} not in series {self.n[0]}..{self.n[-1]}") from None

    def energy(self, n: int) -> float:
        return self.energies[self.index(n)]

    def defect(self, n: int) -> float:
        return quantum_defect(self.energy(n), n)

    def relabel(self, n_start: int) -> "RydbergSeries":
        return RydbergSeries(self.l, tuple(range(n_start, n_start + len(self))), self.energies,
                             self.source)


def _header(line: str):
    key, _, value = line.partition("=")
    return key.strip().lower(), value.strip()


def parse_level_table(path, source: Optional[str] = None) -> RydbergSeries:
    """Read a level file into a validated series.

    Header lines ``unit=<Ry|eV|cm-1>`` (required), ``l=<int>`` (default 0)
    and ``n_start=<int>`` come before the ``n  E`` rows; ``#`` starts a
    comment. Rows may also carry the energy alone, in which case labels
    count up from ``n_start``. With explicit labels, ``n_start`` shifts
    them so the first row gets ``n_start``.
    """
    path = Path(path)
    unit = None
    l = 0
    n_start = None
    labels, energies = [], []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            if energies:
                raise LevelTableError(f"{path}:{lineno}: header line after data rows")
            key, value = _header(line)
            try:
                if key == "unit":
                    if value.lower() not in UNITS:
                        raise LevelTableError(f"{path}:{lineno}: unknown unit {value!r}")
                    unit = value.lower()
                elif key == "l":
                    l = int(value)
                elif key == "n_start":
                    n_start = int(value)
                else:
                    raise LevelTableError(f"{path}:{lineno}: unknown header key {key!r}")
            except ValueError as exc:
                if isinstance(exc, LevelTableError):
                    raise
                raise LevelTableError(f"{path}:{lineno}: malformed integer in {raw!r}") from None
            continue
        parts = line.split()
        try:
            if len(parts) == 2:
                labels.append(int(parts[0]))
                energies.append(float(parts[1]))
            elif len(parts) == 1:
                labels.append(None)
                energies.append(float(parts[0]))
            else:
                raise LevelTableError(f"{path}:{lineno}: expected 'n E', got {raw!r}")
        except ValueError as exc:
            if isinstance(exc, LevelTableError):
                raise
            raise LevelTableError(f"{path}:{lineno}: malformed row {raw!r}") from None
        if energies[-1] >= 0:
            raise LevelTableError(f"{path}:{lineno}: positive energy {parts[-1]} is not a bound level")
    if unit is None:
        raise LevelTableError(f"{path}: missing 'unit=' header")
    if not energies:
        raise LevelTableError(f"{path}: no level rows")
    if any(v is None for v in labels):
        if not all(v is None for v in labels):
            raise LevelTableError(f"{path}: mix of labelled and unlabelled rows")
        if n_start is None:
            raise LevelTableError(f"{path}: unlabelled rows need an 'n_start=' header")
        labels = list(range(n_start, n_start + len(energies)))
    elif n_start is not None:
        labels = [k - labels[0] + n_start for k in labels]
    scale = UNITS[unit]
    try:
        return RydbergSeries(l, tuple(labels), tuple(E * scale for E in energies),
                             source or str(path))
    except LevelTableError as exc:
        raise LevelTableError(f"{path}: {exc}") from None


def write_level_table(path, series: RydbergSeries, unit: str = "Ry") -> None:
    scale = UNITS[unit.lower()]
    lines = [f"unit={unit}", f"l={series.l}"]
    lines += [f"{k} {E / scale:.12g}" for k, E in zip(series.n, series.energies)]
    Path(path).write_text("\n".join(lines) + "\n")
