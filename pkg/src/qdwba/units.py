"""Unit conversions. Internal quantities are Rydberg atomic units."""

RYDBERG_EV = 13.6057
RYDBERG_CM = 109737.316
HARTREE_RY = 2.0


def ev_to_ry(e_ev):
    return e_ev / RYDBERG_EV


def ry_to_ev(e_ry):
    return e_ry * RYDBERG_EV


def k_from_ev(e_ev):
    """Wave number (1/Bohr) of an electron with kinetic energy in eV (k**2 = E in Ry)."""
    return (e_ev / RYDBERG_EV) ** 0.5
