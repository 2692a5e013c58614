"""Acceptance criteria 1-10; a PASS/FAIL line per criterion is printed in the summary."""
import math
import time
import warnings

import numpy as np
import pytest
import sympy as sp

from conftest import CALC_LEVELS, CALC_QD, GSZ_ROWS, LABELS
from qdwba.cfm import SolverConfig, find_eigenvalues
from qdwba.cli import main
from qdwba.coulomb import coulomb_fg
from qdwba.dwba import (DwbaEngine, Kinematics, argon_channels, born_hydrogen_tdcs,
                        default_l_max, effective_charges, hydrogen_born_channels)
from qdwba.optimizer import STRATEGIES, ObjectiveSpec, Strategy, optimize_two_stage
from qdwba.potentials import GszParams, PotentialSpec
from qdwba.qdefect import RydbergSeries, quantum_defect
from qdwba.scattering import phase_shift, wrap_phase
from qdwba.units import RYDBERG_EV

THETA = np.arange(0.0, 360.0, 5.0)


def check(record_property, ok, detail):
    record_property("detail", detail)
    assert ok, detail


# -- 1, 2: analytic spectra ---------------------------------------------------------

@pytest.mark.criterion(1)
def test_coulomb_spectrum(record_property):
    find_eigenvalues(PotentialSpec.coulomb(1.0), 0, (-1.1, -0.5), 10)  # compile kernels
    t0 = time.perf_counter()
    worst = 0.0
    for l, window in ((0, (-1.1, -0.025)), (1, (-0.3, -0.018))):
        E = find_eigenvalues(PotentialSpec.coulomb(1.0), l, window, 200).energies
        n = np.arange(l + 1, l + 7)
        assert len(E) == 6
        worst = max(worst, float(np.max(np.abs(E * n ** 2 + 1))))
    dt = time.perf_counter() - t0
    check(record_property, worst < 1e-8 and dt < 1.0, f"max rel err {worst:.1e}, {dt:.2f} s")


@pytest.mark.criterion(2)
def test_oscillator_spectrum(record_property):
    E = find_eigenvalues(PotentialSpec.harmonic(1.0), 0, (0.0, 12.0), 100,
                         SolverConfig(r_max=40)).energies
    worst = float(np.max(np.abs(E / np.array([3.0, 7.0, 11.0]) - 1)))
    check(record_property, len(E) == 3 and worst < 1e-8, f"max rel err {worst:.1e}")


# -- 3, 4: published spectrum and defects -------------------------------------------

@pytest.fixture(scope="module")
def table_spectra():
    out = {}
    for row in GSZ_ROWS:
        t0 = time.perf_counter()
        E = find_eigenvalues(PotentialSpec.gsz_ion(GszParams(*row)), 0, (-1.5, -0.006), 400).energies
        out[row] = (E[:11], time.perf_counter() - t0)
    return out


@pytest.mark.criterion(3)
def test_reference_levels(table_spectra, record_property):
    devs = {row: float(np.max(np.abs(E / CALC_LEVELS - 1))) if len(E) == 11 else math.inf
            for row, (E, _) in table_spectra.items()}
    best = min(devs, key=devs.get)
    dt = table_spectra[best][1]
    check(record_property, devs[best] < 1e-3 and dt < 10.0,
          f"row {best}: max rel dev {devs[best]:.1e}, {dt:.2f} s")


@pytest.mark.criterion(4)
def test_reference_defects(table_spectra, record_property):
    best = min(table_spectra, key=lambda r: np.max(np.abs(table_spectra[r][0] / CALC_LEVELS - 1)))
    E = table_spectra[best][0]
    mu = np.array([quantum_defect(e, n) for e, n in zip(E, LABELS)])
    worst = float(np.max(np.abs(mu - CALC_QD)))
    check(record_property, worst < 5e-4, f"row {best}: max |mu - mu_VSCA| {worst:.1e}")


# -- 5: optimizer roundtrip ---------------------------------------------------------

@pytest.mark.slow
@pytest.mark.criterion(5)
def test_optimizer_roundtrip(record_property):
    truth = np.array([3.6, 1.0])
    E = find_eigenvalues(PotentialSpec.gsz_ion(GszParams(*truth)), 0, (-1.5, -0.004), 400).energies
    series = RydbergSeries(0, tuple(LABELS), tuple(E[:11]), "synthetic")
    t0 = time.perf_counter()
    xs = []
    for kind in STRATEGIES:
        res = optimize_two_stage(ObjectiveSpec(series, Strategy.default(kind, series)), (3.0, 1.3))
        xs.append(res.x)
    dt = time.perf_counter() - t0
    xs = np.array(xs)
    err = float(np.max(np.abs(xs - truth)))
    spread = float(np.max(np.ptp(xs, axis=0) / np.mean(xs, axis=0)))
    check(record_property, err < 1e-4 and spread < 0.03 and dt < 60.0,
          f"max param err {err:.1e}, spread {spread:.1e}, {dt:.1f} s")


# -- 6: effective charge ------------------------------------------------------------

@pytest.mark.criterion(6)
def test_effective_charge_exact(record_property):
    k = sp.symbols("k", positive=True)
    ka = sp.Matrix([0, 0, k])
    kb = -ka
    z = 1 - ka.norm() * kb.norm() / ((ka - kb).norm() * (ka.norm() + kb.norm()))
    symbolic = sp.simplify(z)
    numeric = {effective_charges([0, 0, q], [0, 0, -q]) for q in (0.1, 0.3832, 1.0, 7.5)}
    check(record_property, symbolic == sp.Rational(3, 4) and numeric == {(0.75, 0.75)},
          f"symbolic {symbolic}, numeric {sorted(numeric)}")


# -- 7: phase-shift oracles -----------------------------------------------------------

def _square_well_delta0(E, depth=4.0, radius=1.0):
    k, K = math.sqrt(E), math.sqrt(E + depth)
    return math.atan((k * math.tan(K * radius) / K - math.tan(k * radius))
                     / (1 + k * math.tan(k * radius) * math.tan(K * radius) / K))


@pytest.mark.criterion(7)
def test_phase_shift_oracles(record_property):
    t0 = time.perf_counter()
    well = PotentialSpec.square_well(4.0, 1.0)
    sw = max(abs(wrap_phase(phase_shift(well, 0, E).delta - _square_well_delta0(E)))
             for E in np.linspace(0.1, 4.0, 40))
    coul = max(abs(phase_shift(PotentialSpec.coulomb(z), l, E).delta)
               for z in (1.0, 0.75) for l in range(4) for E in (0.05, 0.4, 3.0))
    wr = 0.0
    for l in range(6):
        for eta in (-20.0, -3.0, -0.75, -0.1, 0.0, 0.5, 2.0):
            for rho in (1e-3, 0.1, 1.0, 10.0, 100.0, 1e3):
                if eta > 0 and rho < 2 * eta:
                    continue
                F, Fp, G, Gp = coulomb_fg(l, eta, rho)
                wr = max(wr, abs(Fp * G - F * Gp - 1.0) / max(1.0, abs(Fp * G) + abs(F * Gp)))
    dt = time.perf_counter() - t0
    check(record_property, sw < 1e-6 and coul < 1e-8 and wr < 1e-10 and dt < 10.0,
          f"square well {sw:.1e}, Coulomb {coul:.1e}, Wronskian {wr:.1e}, {dt:.1f} s")


# -- 8: Born limit ---------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.criterion(8)
def test_born_hydrogen(record_property):
    t0 = time.perf_counter()
    cfg = hydrogen_born_channels(l_max=40)
    kin = Kinematics(20.0, RYDBERG_EV, theta=THETA)
    sigma = DwbaEngine(cfg, kin).sigma(THETA)
    dt = time.perf_counter() - t0
    ref = born_hydrogen_tdcs(kin)
    worst = float(np.max(np.abs(sigma / ref - 1)))
    check(record_property, worst < 0.02 and dt < 300.0, f"max pointwise dev {worst:.2%}, {dt:.0f} s")


# -- 9: argon TDCS properties -----------------------------------------------------------

@pytest.fixture(scope="module")
def argon_runs():
    runs = {}
    for E in (2.0, 20.0):
        t0 = time.perf_counter()
        for model in ("dwba_fm", "dwba_pseudo"):
            L = default_l_max(E)
            cfg = argon_channels(model, E, l_max=L + 5)
            kin = cfg.kinematics(E, theta=THETA)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                eng = DwbaEngine(cfg, kin)
            runs[E, model] = (eng, L)
        runs[E] = time.perf_counter() - t0
    return runs


def _integrated(theta, sigma):
    t = np.radians(np.append(theta, 360.0))
    return float(np.trapezoid(np.append(sigma, sigma[0]), t))


@pytest.mark.slow
@pytest.mark.criterion(9)
@pytest.mark.parametrize("E", [2.0, 20.0])
def test_argon_tdcs_properties(argon_runs, E, record_property):
    parts = []
    ok = argon_runs[E] < 900.0
    integ = {}
    for model in ("dwba_fm", "dwba_pseudo"):
        eng, L = argon_runs[E, model]
        s = eng.sigma(THETA, L)
        mirror = eng.sigma(np.mod(360.0 - THETA, 360.0), L)
        sym = float(np.max(np.abs(s - mirror)) / np.max(s))
        stab = float(np.max(np.abs(eng.sigma(THETA, L + 5) - s)) / np.max(s))
        integ[model] = _integrated(THETA, s)
        ok &= sym < 1e-10 and stab < 0.01 and bool(np.all(s >= 0))
        parts.append(f"{model}: symmetry {sym:.1e}, l_max {L}->{L + 5} change {stab:.1e}")
    if E == 2.0:
        ok &= integ["dwba_pseudo"] < integ["dwba_fm"]
        parts.append(f"integrated pseudo/fm {integ['dwba_pseudo'] / integ['dwba_fm']:.3f}")
    parts.append(f"{argon_runs[E]:.0f} s")
    check(record_property, ok, f"E_exc={E:g} eV: " + ", ".join(parts))


# -- 10: determinism -------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.criterion(10)
def test_manifest_determinism(tmp_path, record_property):
    first = tmp_path / "t1"
    assert main(["--out-dir", str(first), "tdcs", "--e-exc", "2,20", "--l-max", "10",
                 "--theta-step", "10"]) == 0
    assert main(["--out-dir", str(tmp_path / "p1"), "phase", "--model", "gsz"]) == 0
    names = sorted(p.name for p in first.glob("*.csv"))
    same = True
    for threads in (1, 2, 4):
        again = tmp_path / f"t{threads}x"
        assert main(["--config", str(first / "manifest.ini"), "--threads", str(threads),
                     "--out-dir", str(again), "tdcs"]) == 0
        same &= all((again / n).read_bytes() == (first / n).read_bytes() for n in names)
        p = tmp_path / f"p{threads}x"
        assert main(["--config", str(tmp_path / "p1" / "manifest.ini"), "--threads", str(threads),
                     "--out-dir", str(p), "phase"]) == 0
        same &= (p / "phase.csv").read_bytes() == (tmp_path / "p1" / "phase.csv").read_bytes()
    check(record_property, same and len(names) == 4,
          f"{len(names)} tdcs CSVs and phase.csv byte-identical at 1, 2 and 4 threads: {same}")
