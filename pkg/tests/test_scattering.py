import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdwba.cfm import find_eigenvalues, eigenfunction
from qdwba.coulomb import CoulombRangeError, coulomb_fg, coulomb_fg_array, coulomb_phase, riccati_jy
from qdwba.potentials import GszParams, PotentialSpec
from qdwba.scattering import (
    FIT_LIMIT_EV, PhaseShiftError, PhaseShiftPoint, continuum_wave, fit_potential_to_phaseshifts,
    fixed_family, gsz_polarization_family, load_phase_shift_targets, phase_shift, phase_shift_curve,
    unwrap_phase, wrap_phase,
)
from qdwba.units import ev_to_ry
from qdwba.waves import radial_grid

ARGON = GszParams(3.625, 1.036)


def square_well_delta0(E, depth=4.0, radius=1.0):
    k, K = math.sqrt(E), math.sqrt(E + depth)
    t = (k * math.tan(K * radius) / K - math.tan(k * radius)) / (
        1 + k * math.tan(k * radius) * math.tan(K * radius) / K)
    return math.atan(t)


# Coulomb functions

def test_eta_zero_reductions():
    F, Fp, G, Gp = coulomb_fg(0, 0.0, math.pi / 2)
    assert (F, Fp, G, Gp) == pytest.approx((1.0, 0.0, 0.0, -1.0), abs=1e-14)
    F = coulomb_fg(1, 0.0, math.pi)[0]
    assert F == pytest.approx(1.0, abs=1e-14)
    assert riccati_jy(2, 3.0)[0] == pytest.approx(3.0 * float(mp.sqrt(mp.pi / 6) * mp.besselj(2.5, 3)),
                                                  rel=1e-13)


@pytest.mark.parametrize("k", [0.2, 0.38, 1.0, 2.5])
def test_wronskian_effective_charge(k):
    eta = -0.75 / k
    for rho in (1e-3, 0.1, 1.0, 7.3, 55.0, 800.0, 1e4):
        F, Fp, G, Gp = coulomb_fg_array(5, eta, rho)
        assert np.max(np.abs(Fp * G - F * Gp - 1.0)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 12), st.floats(-20.0, 20.0), st.floats(-3.0, 4.0))
def test_wronskian_domain(l, eta, lg):
    rho = 10.0 ** lg
    if eta > 0 and rho < 2 * eta:
        with pytest.raises(CoulombRangeError):
            coulomb_fg(l, eta, rho)
        return
    F, Fp, G, Gp = coulomb_fg(l, eta, rho)
    # scale-free form of F'G - FG' = 1
    assert abs(Fp * G - F * Gp - 1.0) < 1e-10 * max(1.0, abs(Fp * G) + abs(F * Gp))


@pytest.mark.parametrize("l, eta, rho", [
    (0, -0.75, 0.5), (0, -5.0, 3.0), (3, -1.3, 12.0), (1, -20.0, 0.01), (0, 2.0, 6.0),
    (4, 0.5, 150.0), (2, -0.2, 9000.0), (8, -3.0, 40.0)])
def test_against_mpmath(l, eta, rho):
    mp.mp.dps = 30
    F, Fp, G, Gp = coulomb_fg(l, eta, rho)
    ref = [mp.coulombf(l, eta, rho), mp.diff(lambda x: mp.coulombf(l, eta, x), rho),
           mp.coulombg(l, eta, rho), mp.diff(lambda x: mp.coulombg(l, eta, x), rho)]
    for got, want in zip((F, Fp, G, Gp), ref):
        assert got == pytest.approx(float(want), rel=1e-10, abs=1e-10 * float(abs(ref[2]) + abs(ref[0])))


def test_coulomb_phase():
    assert coulomb_phase(0, 0.0) == 0.0
    eta = -1.7
    assert coulomb_phase(2, eta) == pytest.approx(float(mp.arg(mp.gamma(3 + 1j * eta))), abs=1e-13)


def test_range_errors():
    with pytest.raises(CoulombRangeError):
        coulomb_fg(0, 5.0, 1.0)
    with pytest.raises(ValueError):
        coulomb_fg(0, -1.0, 0.0)


# phase shifts

def test_phase_helpers():
    assert wrap_phase(math.pi) == pytest.approx(0.0, abs=1e-15)
    assert wrap_phase(-math.pi / 2) == pytest.approx(math.pi / 2)
    u = unwrap_phase([3.0, 0.1 - math.pi / 2 + 0.2, -1.4, 1.5])
    assert np.all(np.abs(np.diff(u)) < math.pi / 2)
    with pytest.raises(ValueError):
        PhaseShiftPoint(0, 0.0, 0.1)


@pytest.mark.parametrize("z", [1.0, 0.75])
def test_pure_coulomb_zero_shift(z):
    V = PotentialSpec.coulomb(z)
    for l in range(4):
        for E in (0.05, 0.4, 3.0):
            p = phase_shift(V, l, E)
            assert abs(p.delta) < 1e-8
            assert p.tail_charge == z


def test_square_well_analytic():
    W = PotentialSpec.square_well(4.0, 1.0)
    for E in np.linspace(0.1, 4.0, 14):
        d = phase_shift(W, 0, E)
        assert d.tail_charge is None
        assert abs(wrap_phase(d.delta - square_well_delta0(E))) < 1e-6


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 6.0), st.floats(0.1, 1.0), st.floats(0.05, 3.0))
def test_square_well_depth_monotone(depth, extra, E):
    # deepening an attractive well never decreases delta_0 (continuous branch)
    d = [phase_shift(PotentialSpec.square_well(D, 1.0), 0, E).delta for D in (depth, depth + extra)]
    a, b = d[0], d[0] + wrap_phase(d[1] - d[0])
    assert b >= a - 1e-9


def test_r_match_doubling():
    V = PotentialSpec.gsz_ion(GszParams(3.6, 1.0))
    for l in (0, 1, 2):
        p = phase_shift(V, l, 0.2)
        q = phase_shift(V, l, 0.2, r_match=2 * p.r_match)
        assert abs(wrap_phase(q.delta - p.delta)) < 1e-6


def test_polarization_tail_pushes_r_match():
    P = PotentialSpec.gsz_polarization(18, 3.6, 1.0, 11.08, 1.5)
    p = phase_shift(P, 1, 0.5)
    assert p.tail_charge is None and p.r_match > 50
    q = phase_shift(P, 1, 0.5, r_match=2 * p.r_match)
    assert abs(wrap_phase(q.delta - p.delta)) < 1e-6


def test_r_match_too_small():
    P = PotentialSpec.gsz_polarization(18, 3.6, 1.0, 11.08, 1.5)
    with pytest.raises(PhaseShiftError):
        phase_shift(P, 0, 0.5, r_match=3.0)


def test_phase_continuity():
    V = PotentialSpec.gsz_ion(ARGON)
    E = np.linspace(0.05, 3.0, 60)
    d = phase_shift_curve(V, 1, E)
    assert np.max(np.abs(np.diff(d))) < 0.2


def test_threshold_phase_matches_series_defect():
    # with a Coulomb tail the bound-state count is infinite; the threshold
    # form of Levinson's theorem ties delta_0(0+) to pi * mu of the series
    V = PotentialSpec.gsz_ion(ARGON)
    E = np.geomspace(1e-3, 2.0, 25)
    d = phase_shift_curve(V, 0, E[::-1])[::-1]
    assert np.all(np.isfinite(d)) and np.all(np.diff(d) < 0)
    E_top = find_eigenvalues(V, 0, (-0.02, -0.005), 30).energies[-1]
    nodes = eigenfunction(V, 0, E_top).nodes
    mu = nodes + 1 - 1 / math.sqrt(-E_top)
    assert mu == pytest.approx(2.147, abs=2e-3)
    assert abs(wrap_phase(d[0] - math.pi * mu)) < 0.1


# continuum waves

def test_free_wave():
    g = radial_grid(1e-3, 200.0, 0.05, 2.0)
    w = continuum_wave(PotentialSpec.zero(), 0, 0.5, grid=g)
    assert w.delta == pytest.approx(0.0, abs=1e-10)
    assert np.max(np.abs(w.u - np.sin(math.sqrt(0.5) * g))) < 1e-7


@pytest.mark.parametrize("V, l, E", [
    (PotentialSpec.gsz_ion(ARGON.with_residual(0.75)), 2, 0.0735),
    (PotentialSpec.gsz_polarization(18, 3.6, 1.0, 11.08, 1.5), 0, 1.3),
    (PotentialSpec.square_well(4.0, 1.0), 3, 2.0)])
def test_unit_amplitude_envelope(V, l, E):
    k = math.sqrt(E)
    r1 = 400.0
    g = np.linspace(r1 - 10 * 2 * math.pi / k, r1, 4000)
    w = continuum_wave(V, l, E, grid=g)
    # WKB envelope: u = sqrt(k / k_loc) sin(phase) for a unit-amplitude wave
    kl = np.sqrt(E - V(g) - l * (l + 1) / g ** 2)
    env = np.sqrt(kl / k) * np.sqrt(w.u ** 2 + (w.du / kl) ** 2)
    assert np.all((env > 0.999) & (env < 1.001))


def test_coulomb_wave_matches_oracle():
    mp.mp.dps = 20
    C = PotentialSpec.coulomb(0.75)
    E = 0.147
    k = math.sqrt(E)
    g = radial_grid(1e-3, 200.0, 0.05, 2.0)
    w = continuum_wave(C, 0, E, grid=g)
    ref = np.array([float(mp.coulombf(0, -0.75 / k, k * r)) for r in g[::40]])
    assert np.max(np.abs(w.u[::40] - ref)) < 1e-6
    assert w.eta == pytest.approx(-0.75 / k) and w.sigma == pytest.approx(coulomb_phase(0, w.eta))


def test_continuum_wave_errors():
    with pytest.raises(ValueError):
        continuum_wave(PotentialSpec.zero(), 0, -0.1, grid=np.linspace(0.1, 1, 5))
    with pytest.raises(ValueError):
        continuum_wave(PotentialSpec.zero(), 0, 0.1)


# fitting

@pytest.fixture(scope="module")
def synthetic_targets():
    truth = (3.4, 1.1)
    fam = gsz_polarization_family(r_cut=1.5)
    V = fam(truth)
    pts = [phase_shift(V, l, ev_to_ry(e)) for l in (0, 1, 2) for e in (2.0, 8.0, 20.0)]
    return truth, fam, [PhaseShiftPoint(p.l, p.E, p.delta) for p in pts]


@pytest.mark.slow
def test_fit_roundtrip(synthetic_targets):
    # start close enough that no phase mismatch exceeds pi/2 (mod-pi aliasing)
    truth, fam, targets = synthetic_targets
    res = fit_potential_to_phaseshifts(targets, fam, (3.3, 1.15))
    assert res.converged
    assert np.allclose(res.params, truth, atol=1e-3)
    assert res.rms < 1e-6


def test_fit_fixed_family(synthetic_targets):
    truth, fam, targets = synthetic_targets
    res = fit_potential_to_phaseshifts(targets, fixed_family(fam(truth)), ())
    assert res.rms < 1e-9 and res.optimization is None


def test_fit_rejects_high_energy(synthetic_targets):
    _, fam, targets = synthetic_targets
    high = PhaseShiftPoint(0, ev_to_ry(FIT_LIMIT_EV + 5), 0.3)
    with pytest.raises(ValueError, match="30"):
        fit_potential_to_phaseshifts(targets + [high], fam, (3.0, 1.3))


def test_target_file(tmp_path):
    p = tmp_path / "t.dat"
    p.write_text("# l E_eV delta\n0 13.6057 0.5\n1 27.2114 -0.25\n")
    pts = load_phase_shift_targets(p)
    assert [t.l for t in pts] == [0, 1]
    assert pts[0].E == pytest.approx(1.0) and pts[1].delta == -0.25
    p.write_text("0 1.0\n")
    with pytest.raises(ValueError, match=":1:"):
        load_phase_shift_targets(p)
