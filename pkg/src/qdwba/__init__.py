"""Quantum-defect fitted model potentials and DWBA (e,2e) cross sections.

Units are Rydberg atomic units throughout (energies in Ry, lengths in
Bohr); electron-volts only appear at the command-line boundary.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .cfm import SolverConfig, eigenfunction, eigenvalue_function, find_eigenvalues, find_state
from .dwba import (ChannelConfig, Kinematics, TdcsCurve, argon_channels, bound_orbital,
                   effective_charges, ionization_amplitude, slater_integral, tdcs)
from .optimizer import ObjectiveSpec, Strategy, broyden_solve, optimize_two_stage
from .potentials import GszParams, PotentialSpec
from .qdefect import RydbergSeries, parse_level_table, quantum_defect
from .scattering import continuum_wave, phase_shift

__all__ = [
    "ChannelConfig", "GszParams", "Kinematics", "ObjectiveSpec", "PotentialSpec",
    "RydbergSeries", "SolverConfig", "Strategy", "TdcsCurve", "argon_channels",
    "bound_orbital", "broyden_solve", "continuum_wave", "effective_charges",
    "eigenfunction", "eigenvalue_function", "find_eigenvalues", "find_state",
    "ionization_amplitude", "optimize_two_stage", "parse_level_table", "phase_shift",
    "quantum_defect", "slater_integral", "tdcs",
]
