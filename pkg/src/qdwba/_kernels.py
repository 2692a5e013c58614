"""Compiled inner loops: potential evaluation and linear radial ODE propagation.

The radial equation u'' = [V(r) + l(l+1)/r**2 - E] u is propagated for two
solutions at once (the canonical pair), state layout ``(a, a', b, b')``.

Potentials reach this module as a flat term table (see
``PotentialSpec.compiled``); tabulated pieces are piecewise cubics packed
into shared arrays.
"""
import math

import numpy as np
from numba import njit

GSZ = 1
GSZ_NEUTRAL = 2
COULOMB = 3
POLARIZATION = 4
TABLE = 5
SQUARE_WELL = 6
HARMONIC = 7

RK4 = 0
ADAPTIVE = 1

RESCALE_AT = 1e150
# decay exponent integral required before the outer ratio counts as saturated
MIN_DEPTH = 12.0

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9
_A21 = 1.0 / 5
_A31, _A32 = 3.0 / 40, 9.0 / 40
_A41, _A42, _A43 = 44.0 / 45, -56.0 / 15, 32.0 / 9
_A51, _A52, _A53, _A54 = 19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600, -71.0 / 16695, 71.0 / 1920,
                                -17253.0 / 339200, 22.0 / 525, -1.0 / 40)


@njit(cache=True)
def table_eval(tid, r, tx, tc, ts, tn):
    """Piecewise cubic ``tid`` at r. Caller handles points outside the grid."""
    s = ts[tid]
    n = tn[tid]
    lo = s
    hi = s + n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tx[mid] <= r:
            lo = mid
        else:
            hi = mid
    d = r - tx[lo]
    # coefficient rows share the knot offsets; each table's last row is padding
    return ((tc[lo, 0] * d + tc[lo, 1]) * d + tc[lo, 2]) * d + tc[lo, 3]


@njit(cache=True)
def _table_value(tid, tail, r, tx, tc, ts, tn, coulomb_tail):
    s = ts[tid]
    n = tn[tid]
    x0 = tx[s]
    x1 = tx[s + n - 1]
    if r > x1:
        if coulomb_tail:
            return -2.0 * tail / r
        return 0.0
    # potential tables hold r*V; densities hold the value itself
    if r < x0:
        v0 = table_eval(tid, x0, tx, tc, ts, tn)
        if coulomb_tail:
            return v0 / r
        return v0
    if coulomb_tail:
        return table_eval(tid, r, tx, tc, ts, tn) / r
    return table_eval(tid, r, tx, tc, ts, tn)


@njit(cache=True)
def static_potential(r, terms, tx, tc, ts, tn):
    v = 0.0
    for i in range(terms.shape[0]):
        code = int(terms[i, 0])
        if code == GSZ:
            z, zres, e1, e2 = terms[i, 1], terms[i, 2], terms[i, 3], terms[i, 4]
            w = 1.0 / (e1 * math.expm1(r / e2) + 1.0)
            v += -2.0 / r * ((z - 1.0) * w + zres)
        elif code == GSZ_NEUTRAL:
            z, e1, e2 = terms[i, 1], terms[i, 3], terms[i, 4]
            w = 1.0 / (e1 * math.expm1(r / e2) + 1.0)
            v += -2.0 * z * w / r
        elif code == COULOMB:
            v += -2.0 * terms[i, 1] / r
        elif code == POLARIZATION:
            q = r * r + terms[i, 2] * terms[i, 2]
            v += -terms[i, 1] / (q * q)
        elif code == TABLE:
            v += _table_value(int(terms[i, 1]), terms[i, 2], r, tx, tc, ts, tn, True)
        elif code == SQUARE_WELL:
            if r < terms[i, 2]:
                v += -terms[i, 1]
        elif code == HARMONIC:
            v += terms[i, 1] * r * r
    return v


@njit(cache=True)
def potential(r, terms, tx, tc, ts, tn, exch):
    """Full local potential in Ry; ``exch = (flag, density_tid, energy)``."""
    v = static_potential(r, terms, tx, tc, ts, tn)
    if exch[0] > 0.0:
        rho = _table_value(int(exch[1]), 0.0, r, tx, tc, ts, tn, False)
        if rho < 0.0:
            rho = 0.0
        d = exch[2] - v
        v += 0.5 * d - 0.5 * math.sqrt(d * d + 16.0 * math.pi * rho)
    return v


@njit(cache=True)
def _rhs(r, y, l, e, terms, tx, tc, ts, tn, exch, out):
    q = potential(r, terms, tx, tc, ts, tn, exch) + l * (l + 1.0) / (r * r) - e
    out[0] = y[1]
    out[1] = q * y[0]
    out[2] = y[3]
    out[3] = q * y[2]


@njit(cache=True)
def _rk4_step(r, y, h, l, e, terms, tx, tc, ts, tn, exch, k1, k2, k3, k4, tmp):
    _rhs(r, y, l, e, terms, tx, tc, ts, tn, exch, k1)
    for i in range(4):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    _rhs(r + 0.5 * h, tmp, l, e, terms, tx, tc, ts, tn, exch, k2)
    for i in range(4):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    _rhs(r + 0.5 * h, tmp, l, e, terms, tx, tc, ts, tn, exch, k3)
    for i in range(4):
        tmp[i] = y[i] + h * k3[i]
    _rhs(r + h, tmp, l, e, terms, tx, tc, ts, tn, exch, k4)
    for i in range(4):
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def _dp_step(r, y, h, l, e, terms, tx, tc, ts, tn, exch, k, tmp, ynew):
    """One Dormand-Prince trial step; returns the scaled error estimate."""
    _rhs(r, y, l, e, terms, tx, tc, ts, tn, exch, k[0])
    for i in range(4):
        tmp[i] = y[i] + h * _A21 * k[0, i]
    _rhs(r + _C2 * h, tmp, l, e, terms, tx, tc, ts, tn, exch, k[1])
    for i in range(4):
        tmp[i] = y[i] + h * (_A31 * k[0, i] + _A32 * k[1, i])
    _rhs(r + _C3 * h, tmp, l, e, terms, tx, tc, ts, tn, exch, k[2])
    for i in range(4):
        tmp[i] = y[i] + h * (_A41 * k[0, i] + _A42 * k[1, i] + _A43 * k[2, i])
    _rhs(r + _C4 * h, tmp, l, e, terms, tx, tc, ts, tn, exch, k[3])
    for i in range(4):
        tmp[i] = y[i] + h * (_A51 * k[0, i] + _A52 * k[1, i] + _A53 * k[2, i] + _A54 * k[3, i])
    _rhs(r + _C5 * h, tmp, l, e, terms, tx, tc, ts, tn, exch, k[4])
    for i in range(4):
        tmp[i] = y[i] + h * (_A61 * k[0, i] + _A62 * k[1, i] + _A63 * k[2, i]
                             + _A64 * k[3, i] + _A65 * k[4, i])
    _rhs(r + h, tmp, l, e, terms, tx, tc, ts, tn, exch, k[5])
    for i in range(4):
        ynew[i] = y[i] + h * (_B1 * k[0, i] + _B3 * k[2, i] + _B4 * k[3, i]
                              + _B5 * k[4, i] + _B6 * k[5, i])
    _rhs(r + h, ynew, l, e, terms, tx, tc, ts, tn, exch, k[6])
    su = max(abs(y[0]), abs(y[2]), abs(ynew[0]), abs(ynew[2]))
    sd = max(abs(y[1]), abs(y[3]), abs(ynew[1]), abs(ynew[3]))
    # value and slope errors measured against one common length scale
    scale = su + sd * abs(h)
    if scale == 0.0:
        scale = 1e-300
    err = 0.0
    for i in range(4):
        ei = h * (_E1 * k[0, i] + _E3 * k[2, i] + _E4 * k[3, i] + _E5 * k[4, i]
                  + _E6 * k[5, i] + _E7 * k[6, i])
        if i % 2 == 1:
            ei *= abs(h)
        ei = abs(ei) / scale
        if ei > err:
            err = ei
    return err


@njit(cache=True)
def boundary_logderiv_outer(r, l, e, terms, tx, tc, ts, tn, exch):
    """WKB log-derivative of the solution decaying toward r -> infinity.

    Returns nan inside a classically allowed region.
    """
    dr = 1e-4 * max(r, 1.0)
    q0 = potential(r, terms, tx, tc, ts, tn, exch) + l * (l + 1.0) / (r * r) - e
    if q0 <= 0.0:
        return np.nan
    qp = potential(r + dr, terms, tx, tc, ts, tn, exch) + l * (l + 1.0) / ((r + dr) ** 2) - e
    qm = potential(r - dr, terms, tx, tc, ts, tn, exch) + l * (l + 1.0) / ((r - dr) ** 2) - e
    dq = (qp - qm) / (2.0 * dr)
    return -math.sqrt(q0) - dq / (4.0 * q0)


@njit(cache=True)
def origin_coefficients(rmin, terms, tx, tc, ts, tn, exch):
    """Fit r*V(r) = w[-1] + w0*r + w1*r**2 close to the origin."""
    h = rmin
    f1 = h * potential(h, terms, tx, tc, ts, tn, exch)
    f2 = 2 * h * potential(2 * h, terms, tx, tc, ts, tn, exch)
    f3 = 3 * h * potential(3 * h, terms, tx, tc, ts, tn, exch)
    # quadratic through (h,f1),(2h,f2),(3h,f3) in powers of r
    c2 = (f3 - 2.0 * f2 + f1) / (2.0 * h * h)
    c1 = (f2 - f1) / h - 3.0 * h * c2
    c0 = f1 - c1 * h - c2 * h * h
    return c0, c1, c2


@njit(cache=True)
def regular_series(r, l, e, wm1, w0, w1):
    """Frobenius regular solution u = r^(l+1) sum a_j r^j, returns (u, u')."""
    a0 = 1.0
    a1 = wm1 * a0 / (2.0 * l + 2.0)
    a2 = (wm1 * a1 + (w0 - e) * a0) / (2.0 * (2.0 * l + 3.0))
    a3 = (wm1 * a2 + (w0 - e) * a1 + w1 * a0) / (3.0 * (2.0 * l + 4.0))
    p = r ** (l + 1)
    s = a0 + r * (a1 + r * (a2 + r * a3))
    ds = a1 + r * (2.0 * a2 + r * 3.0 * a3)
    u = p * s
    du = (l + 1.0) * r ** l * s + p * ds
    return u, du


@njit(cache=True)
def boundary_logderiv_inner(r, l, e, terms, tx, tc, ts, tn, exch):
    """Log-derivative of the regular solution at small r from the series."""
    c0, c1, c2 = origin_coefficients(r, terms, tx, tc, ts, tn, exch)
    u, du = regular_series(r, l, e, c0, c1, c2)
    return du / u


@njit(cache=True)
def _matched_ratio(y, lg):
    if math.isnan(lg):
        return -y[0] / y[2] if y[2] != 0.0 else np.inf
    num = y[1] - lg * y[0]
    den = y[3] - lg * y[2]
    if den == 0.0:
        return np.inf
    return -num / den


@njit(cache=True)
def _mesh_point(x, r):
    """Solve r + ln r = x by Newton starting from a nearby r."""
    for _ in range(60):
        f = r + math.log(r) - x
        r_new = r - f / (1.0 + 1.0 / r)
        if r_new <= 0.0:
            r_new = 0.5 * r
        if abs(r_new - r) <= 1e-15 * r:
            return r_new
        r = r_new
    return r


@njit(cache=True)
def sweep(l, e, terms, tx, tc, ts, tn, exch, r0, r_end, method, h, eps,
          sat_tol, stride, outward, max_record):
    """Propagate the canonical pair from r0 toward r_end.

    Returns (y_final, r_final, log_scale, ratio, converged, n_steps, record),
    record rows = (r, a, a', b, b', log_scale, matched_ratio).
    """
    y = np.array([1.0, 0.0, 0.0, 1.0])
    record = np.empty((max_record, 7))
    nrec = 0
    log_scale = 0.0
    sgn = 1.0 if outward else -1.0
    r = r0
    k = np.empty((7, 4))
    tmp = np.empty(4)
    ynew = np.empty(4)
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)

    x_end = r_end + math.log(r_end)
    x_cur = r0 + math.log(r0)
    n_nodes = 0
    if method == RK4:
        n_nodes = max(1, int(math.ceil(abs(x_end - x_cur) / h))) + 1
        hx = (x_end - x_cur) / (n_nodes - 1)
    hstep = sgn * min(0.01 * r0, 0.01)
    next_check = r0 + sgn * stride
    prev_ratio = np.nan
    ratio = np.nan
    converged = False
    nsteps = 0
    node = 0
    depth = 0.0
    r_prev = r0

    if nrec < max_record:
        record[nrec, 0] = r
        record[nrec, 1:5] = y
        record[nrec, 5] = 0.0
        record[nrec, 6] = np.nan
        nrec += 1

    while True:
        if method == RK4:
            if node >= n_nodes - 1:
                break
            node += 1
            if node == n_nodes - 1:
                r_next = r_end
            else:
                r_next = _mesh_point(x_cur + node * hx, r)
            _rk4_step(r, y, r_next - r, l, e, terms, tx, tc, ts, tn, exch, k1, k2, k3, k4, tmp)
            r = r_next
        else:
            remaining = r_end - r
            if sgn * remaining <= 1e-14 * abs(r_end):
                break
            if sgn * hstep > sgn * remaining:
                hstep = remaining
            err = _dp_step(r, y, hstep, l, e, terms, tx, tc, ts, tn, exch, k, tmp, ynew)
            if err <= eps:
                r = r + hstep
                for i in range(4):
                    y[i] = ynew[i]
                fac = 0.9 * (eps / max(err, 1e-300)) ** 0.2
                fac = min(5.0, fac)
            else:
                fac = max(0.1, 0.9 * (eps / err) ** 0.25)
                hstep *= fac
                # never step onto the origin
                if not outward and r + hstep <= 0.0:
                    hstep = -0.5 * r
                continue
            hstep *= fac
            if not outward and r + hstep <= 0.0:
                hstep = -0.5 * r
        nsteps += 1
        if outward:
            qr = potential(r, terms, tx, tc, ts, tn, exch) + l * (l + 1.0) / (r * r) - e
            if qr > 0.0:
                depth += math.sqrt(qr) * abs(r - r_prev)
            else:
                depth = 0.0
        r_prev = r
        big = max(abs(y[0]), abs(y[1]), abs(y[2]), abs(y[3]))
        if big > RESCALE_AT:
            for i in range(4):
                y[i] /= big
            log_scale += math.log(big)
        if sgn * (r - next_check) >= 0.0 or (method == RK4 and node >= n_nodes - 1) \
                or (method == ADAPTIVE and abs(r - r_end) <= 1e-14 * abs(r_end)):
            next_check = r + sgn * stride
            if outward:
                lg = boundary_logderiv_outer(r, l, e, terms, tx, tc, ts, tn, exch)
            else:
                lg = boundary_logderiv_inner(r, l, e, terms, tx, tc, ts, tn, exch)
            ratio = _matched_ratio(y, lg)
            if nrec < max_record:
                record[nrec, 0] = r
                record[nrec, 1:5] = y
                record[nrec, 5] = log_scale
                record[nrec, 6] = ratio
                nrec += 1
            if outward and depth >= MIN_DEPTH and not math.isnan(lg) \
                    and not math.isnan(prev_ratio):
                if abs(ratio - prev_ratio) <= sat_tol * (1.0 + abs(ratio)):
                    converged = True
                    break
            if outward and math.isnan(lg):
                prev_ratio = np.nan
            else:
                prev_ratio = ratio
    if outward:
        lg = boundary_logderiv_outer(r, l, e, terms, tx, tc, ts, tn, exch)
    else:
        # the inner boundary value is exact up to the series truncation
        lg = boundary_logderiv_inner(r, l, e, terms, tx, tc, ts, tn, exch)
        ratio = _matched_ratio(y, lg)
        converged = True
    bvec = np.empty(2)
    if math.isnan(lg):
        bvec[0] = y[0]
        bvec[1] = y[2]
    else:
        bvec[0] = y[1] - lg * y[0]
        bvec[1] = y[3] - lg * y[2]
    nb = math.hypot(bvec[0], bvec[1])
    if nb > 0.0:
        bvec /= nb
    return y, r, log_scale, ratio, converged, nsteps, record[:nrec], bvec


@njit(cache=True)
def propagate_to_grid(l, e, terms, tx, tc, ts, tn, exch, y0, r_start, grid,
                      method, h, eps):
    """Propagate a pair from r_start through every point of ``grid``.

    grid must be monotone, beginning on the far side of r_start from its
    direction of travel. Returns (values[n, 4], log_scale[n]).
    """
    n = grid.shape[0]
    out = np.empty((n, 4))
    scales = np.zeros(n)
    y = y0.copy()
    r = r_start
    log_scale = 0.0
    k = np.empty((7, 4))
    tmp = np.empty(4)
    ynew = np.empty(4)
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    hstep = 0.0
    for j in range(n):
        target = grid[j]
        if hstep == 0.0:
            hstep = (target - r) if target != r else 1e-6
            hstep = math.copysign(min(abs(hstep), 0.01 * max(abs(r), 1e-3)), target - r) \
                if target != r else hstep
        sgn = 1.0 if target >= r else -1.0
        if method == RK4:
            if target != r:
                sub = max(1, int(math.ceil(abs(target - r) / (h * r / (r + 1.0)))))
                hh = (target - r) / sub
                for _ in range(sub):
                    _rk4_step(r, y, hh, l, e, terms, tx, tc, ts, tn, exch, k1, k2, k3, k4, tmp)
                    r += hh
                r = target
        else:
            if sgn * hstep < 0.0:
                hstep = -hstep
            while sgn * (target - r) > 1e-14 * max(abs(target), 1e-300):
                remaining = target - r
                hcur = hstep
                clipped = False
                if sgn * hcur >= sgn * remaining:
                    hcur = remaining
                    clipped = True
                err = _dp_step(r, y, hcur, l, e, terms, tx, tc, ts, tn, exch, k, tmp, ynew)
                if err <= eps:
                    r = target if clipped else r + hcur
                    for i in range(4):
                        y[i] = ynew[i]
                    fac = min(5.0, 0.9 * (eps / max(err, 1e-300)) ** 0.2)
                    if not clipped:
                        hstep = hcur * fac
                    elif fac < 1.0:
                        hstep = hcur * fac
                else:
                    hstep = hcur * max(0.1, 0.9 * (eps / err) ** 0.25)
        big = max(abs(y[0]), abs(y[1]), abs(y[2]), abs(y[3]))
        if big > RESCALE_AT:
            for i in range(4):
                y[i] /= big
            log_scale += math.log(big)
        out[j, :] = y
        scales[j] = log_scale
    return out, scales


@njit(cache=True)
def potential_array(rs, terms, tx, tc, ts, tn, exch):
    out = np.empty(rs.shape[0])
    for i in range(rs.shape[0]):
        out[i] = potential(rs[i], terms, tx, tc, ts, tn, exch)
    return out
