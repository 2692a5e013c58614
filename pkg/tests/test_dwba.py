import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdwba.cfm import SolverConfig
from qdwba.dwba import (MODELS, Z_EFF, BoundSource, ChannelConfig, DwbaEngine, Kinematics,
                        LDependentPotential, PostCollisionSingularity, TdcsCurve,
                        argon_channels, bound_orbital, default_l_max, effective_charges,
                        hydrogen_born_channels, ionization_amplitude, slater_integral, tdcs)
from qdwba.potentials import PotentialSpec
from qdwba.scattering import continuum_wave
from qdwba.units import ev_to_ry
from qdwba.waves import radial_grid, simpson_weights


# -- effective charges --------------------------------------------------------------

def test_back_to_back_charge_is_three_quarters():
    assert effective_charges([0, 0, 1.0], [0, 0, -1.0]) == (0.75, 0.75)
    assert Z_EFF == 0.75


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(0.0, 2 * math.pi), st.floats(0.0, math.pi))
def test_back_to_back_charge_exact_for_any_direction(k, phi, theta):
    ka = k * np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi),
                       math.cos(theta)])
    za, zb = effective_charges(ka, -ka)
    assert za == zb == 0.75


def test_perpendicular_charge():
    za, zb = effective_charges([1.0, 0, 0], [0, 1.0, 0])
    assert za == pytest.approx(1 - 1 / (2 * math.sqrt(2)), abs=1e-15)
    assert za == zb


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_charge_satisfies_asymptotic_condition(a, b):
    ka, kb = np.array(a), np.array(b)
    na, nb, nab = np.linalg.norm(ka), np.linalg.norm(kb), np.linalg.norm(ka - kb)
    if min(na, nb) < 1e-3 or nab < 1e-3 * max(na, nb):
        return
    za, zb = effective_charges(ka, kb)
    assert za / na + zb / nb == pytest.approx(1 / na + 1 / nb - 1 / nab, rel=1e-10, abs=1e-10)
    assert za <= 1.0


def test_parallel_momenta_raise():
    with pytest.raises(PostCollisionSingularity):
        effective_charges([0, 0, 1.0], [0, 0, 1.0])


def test_zero_momentum_raises():
    with pytest.raises(ValueError):
        effective_charges([0, 0, 0], [0, 0, 1.0])


# -- kinematics ---------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 200.0), st.floats(0.0, 360.0))
def test_kinematics_conservation(E_exc, theta):
    kin = Kinematics(E_exc)
    assert kin.E0 == pytest.approx(E_exc + 15.8)
    assert kin.Ea == kin.Eb == pytest.approx(E_exc / 2)
    k0, ka, kb = kin.momenta(theta)
    assert np.array_equal(kb, -ka)
    assert ka[1] == 0.0
    assert np.linalg.norm(ka) == pytest.approx(math.sqrt(ev_to_ry(E_exc / 2)), rel=1e-14)
    assert np.linalg.norm(k0) ** 2 == pytest.approx(
        np.linalg.norm(ka) ** 2 + np.linalg.norm(kb) ** 2 + ev_to_ry(15.8), rel=1e-12)


def test_kinematics_from_incident():
    kin = Kinematics.from_incident(17.8)
    assert kin.E_exc == pytest.approx(2.0)
    assert kin.theta[0] == 0.0 and kin.theta[-1] == 355.0


@pytest.mark.parametrize("args", [(0.0,), (-1.0,), (2.0, 0.0)])
def test_kinematics_validation(args):
    with pytest.raises(ValueError):
        Kinematics(*args)


# -- radial integrals ---------------------------------------------------------------

@pytest.fixture(scope="module")
def h1s():
    cfg = hydrogen_born_channels(l_max=4, lambda_max=2)
    g = radial_grid(1e-4, 40.0, 0.02, 2.0)
    return cfg, bound_orbital(cfg, g)


def test_hydrogen_monopole_slater(h1s):
    _, b = h1s
    assert b.energy == pytest.approx(-1.0, abs=1e-9)
    assert slater_integral(0, b, b, b, b) == pytest.approx(5 / 8, abs=1e-10)


@pytest.mark.parametrize("lam", [1, 2, 3])
def test_slater_positive_for_nodeless(h1s, lam):
    _, b = h1s
    assert slater_integral(lam, b, b, b, b) > 0


def test_slater_stable_under_rmax_doubling(h1s):
    cfg, b = h1s
    b2 = bound_orbital(cfg, radial_grid(1e-4, 80.0, 0.02, 2.0))
    for lam in range(3):
        assert abs(slater_integral(lam, b2, b2, b2, b2) - slater_integral(lam, b, b, b, b)) < 1e-10


def test_slater_rejects_bad_input(h1s):
    _, b = h1s
    c = continuum_wave(PotentialSpec.zero(), 0, 1.0, SolverConfig(), b.grid)
    with pytest.raises(ValueError):
        slater_integral(0, c, c, c, c)
    with pytest.raises(ValueError):
        slater_integral(-1, b, b, b, b)
    assert math.isfinite(slater_integral(0, c, b, c, b))


# -- configuration ------------------------------------------------------------------

def test_models_and_default_lmax():
    assert set(MODELS) == {"dwba_fm", "dwba_pseudo"}
    assert default_l_max(2.0) == 25
    assert default_l_max(20.0) == 40


@pytest.mark.parametrize("kw", [dict(l_max=1), dict(lambda_max=0), dict(occupancy=0),
                                dict(ionization_potential=0.0)])
def test_channel_config_validation(kw):
    zero = PotentialSpec.zero()
    bound = BoundSource(0, 0, PotentialSpec.coulomb(1.0))
    with pytest.raises(ValueError):
        ChannelConfig(zero, zero, bound, **kw)


def test_bound_source_needs_origin():
    with pytest.raises(ValueError):
        BoundSource()


def test_unknown_model_rejected():
    with pytest.raises(ValueError):
        argon_channels("dwba_plain", 2.0)


def test_l_dependent_potential_reuses_last_row():
    rows = (PotentialSpec.coulomb(1.0), PotentialSpec.coulomb(2.0))
    V = LDependentPotential(rows)
    assert V.for_l(0) is rows[0]
    assert V.for_l(7) is rows[1]
    with pytest.raises(ValueError):
        LDependentPotential(())


def test_effective_charge_enters_only_the_exit_channel():
    a = argon_channels("dwba_pseudo", 2.0, l_max=4, z_eff=0.75)
    b = argon_channels("dwba_pseudo", 2.0, l_max=4, z_eff=1.0)
    assert a.exit.for_l(1).gsz.z_residual == 0.75 and b.exit.for_l(1).gsz.z_residual == 1.0
    g = radial_grid(1e-4, 60.0, 0.05, 2.0)
    E0 = ev_to_ry(a.kinematics(2.0).E0)
    wa = continuum_wave(a.entrance, 0, E0, a.solver, g)
    wb = continuum_wave(b.entrance, 0, E0, b.solver, g)
    assert np.array_equal(wa.u, wb.u) and wa.delta == wb.delta


# -- amplitudes on a small argon model ------------------------------------------------

THETA = np.arange(0.0, 360.0, 15.0)


@pytest.fixture(scope="module")
def engine():
    cfg = argon_channels("dwba_pseudo", 2.0, l_max=6, lambda_max=3, conv_tol=1.0)
    return DwbaEngine(cfg, cfg.kinematics(2.0, theta=THETA))


def test_bound_orbital_argon_3p(engine):
    b = engine.bound
    norm = float(simpson_weights(b.grid) @ (b.u * b.u))
    assert norm == pytest.approx(1.0, abs=1e-8)
    assert b.nodes == 1 and b.l == 1
    assert -3.0 <= b.energy <= -0.5


def test_exchange_is_direct_at_opposite_angle(engine):
    for m in (-1, 0, 1):
        f, g = engine.amplitudes(THETA, m)
        f180, _ = engine.amplitudes(THETA + 180.0, m)
        assert np.allclose(g, f180, rtol=0, atol=1e-14 * np.max(np.abs(f)))


def test_magnetic_reflection(engine):
    fp, gp = engine.amplitudes(THETA, 1)
    fm, gm = engine.amplitudes(THETA, -1)
    sp = 0.25 * np.abs(fp + gp) ** 2 + 0.75 * np.abs(fp - gp) ** 2
    sm = 0.25 * np.abs(fm + gm) ** 2 + 0.75 * np.abs(fm - gm) ** 2
    assert np.allclose(sp, sm, rtol=1e-12, atol=0)


def test_sigma_nonnegative_and_symmetric(engine):
    s = engine.sigma(THETA)
    assert np.all(s >= 0)
    mirror = engine.sigma(np.mod(360.0 - THETA, 360.0))
    assert np.max(np.abs(s - mirror)) <= 1e-10 * np.max(s)


def test_m_out_of_range(engine):
    with pytest.raises(ValueError):
        engine.amplitudes(THETA, 2)


def test_ionization_amplitude_scalar(engine):
    f, g = ionization_amplitude(engine.cfg, engine.kin, 30.0, 0, engine)
    assert isinstance(f, complex) and isinstance(g, complex)
    fa, ga = engine.amplitudes([30.0], 0)
    assert f == fa[0] and g == ga[0]


def test_radial_tables_independent_of_threads(engine):
    threaded = engine._radial_tables(3)
    assert threaded.keys() == engine.radial.keys()
    for key in threaded:
        assert np.array_equal(threaded[key], engine.radial[key])


def test_tdcs_curve(engine):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        curve = tdcs(engine.cfg, engine.kin, engine=engine)
    assert isinstance(curve, TdcsCurve)
    assert curve.model_tag == "dwba_pseudo"
    assert curve.at(15.0) == pytest.approx(curve.sigma[1])
    assert curve.at(375.0) == pytest.approx(curve.sigma[1])
    assert curve.integrated() > 0
    assert curve.diagnostics.partial_wave_change >= 0


def test_kinematics_must_match_channel(engine):
    kin = Kinematics(2.0, 13.6, theta=THETA)
    with pytest.raises(ValueError):
        DwbaEngine(engine.cfg, kin)
