# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernel (cython backend).

Mirror of `sldelay._pycore.integrate_delay`, operation for operation:
same tableau, same thresholds, same lookup rules, same status codes.
Behavioral changes must land in both files; the cross-backend tests
assert near-bitwise agreement of the produced trajectories.

Domain faults in coefficient tapes yield nan exactly where the Python
mirror yields nan (explicit guards, not C quiet-nan semantics, so the
two backends cannot diverge on edge cases like 0^-1).
"""

import numpy as np

from libc.math cimport fabs, isfinite, pow, sqrt
from libc.math cimport cos as ccos
from libc.math cimport exp as cexp
from libc.math cimport sin as csin

BACKEND_NAME = "cython"

cdef double _NAN = float("nan")

# Dormand-Prince 5(4) tableau (exact rationals; keep in sync with _pycore)
cdef double _C2 = 1.0 / 5.0
cdef double _C3 = 3.0 / 10.0
cdef double _C4 = 4.0 / 5.0
cdef double _C5 = 8.0 / 9.0
cdef double _A21 = 1.0 / 5.0
cdef double _A31 = 3.0 / 40.0
cdef double _A32 = 9.0 / 40.0
cdef double _A41 = 44.0 / 45.0
cdef double _A42 = -56.0 / 15.0
cdef double _A43 = 32.0 / 9.0
cdef double _A51 = 19372.0 / 6561.0
cdef double _A52 = -25360.0 / 2187.0
cdef double _A53 = 64448.0 / 6561.0
cdef double _A54 = -212.0 / 729.0
cdef double _A61 = 9017.0 / 3168.0
cdef double _A62 = -355.0 / 33.0
cdef double _A63 = 46732.0 / 5247.0
cdef double _A64 = 49.0 / 176.0
cdef double _A65 = -5103.0 / 18656.0
cdef double _B1 = 35.0 / 384.0
cdef double _B3 = 500.0 / 1113.0
cdef double _B4 = 125.0 / 192.0
cdef double _B5 = -2187.0 / 6784.0
cdef double _B6 = 11.0 / 84.0
cdef double _E1 = 71.0 / 57600.0
cdef double _E3 = -71.0 / 16695.0
cdef double _E4 = 71.0 / 1920.0
cdef double _E5 = -17253.0 / 339200.0
cdef double _E6 = 22.0 / 525.0
cdef double _E7 = -1.0 / 40.0

cdef double _P[7][4]
_P[0][0] = 1.0
_P[0][1] = -8048581381.0 / 2820520608.0
_P[0][2] = 8663915743.0 / 2820520608.0
_P[0][3] = -12715105075.0 / 11282082432.0
_P[1][0] = 0.0
_P[1][1] = 0.0
_P[1][2] = 0.0
_P[1][3] = 0.0
_P[2][0] = 0.0
_P[2][1] = 131558114200.0 / 32700410799.0
_P[2][2] = -68118460800.0 / 10900136933.0
_P[2][3] = 87487479700.0 / 32700410799.0
_P[3][0] = 0.0
_P[3][1] = -1754552775.0 / 470086768.0
_P[3][2] = 14199869525.0 / 1410260304.0
_P[3][3] = -10690763975.0 / 1880347072.0
_P[4][0] = 0.0
_P[4][1] = 127303824393.0 / 49829197408.0
_P[4][2] = -318862633887.0 / 49829197408.0
_P[4][3] = 701980252875.0 / 199316789632.0
_P[5][0] = 0.0
_P[5][1] = -282668133.0 / 205662961.0
_P[5][2] = 2019193451.0 / 616988883.0
_P[5][3] = -1453857185.0 / 822651844.0
_P[6][0] = 0.0
_P[6][1] = 40617522.0 / 29380423.0
_P[6][2] = -110615467.0 / 29380423.0
_P[6][3] = 69997945.0 / 29380423.0

cdef double _SAFETY = 0.9
cdef double _MIN_FACTOR = 0.2
cdef double _MAX_FACTOR = 10.0
cdef double _PI_ALPHA = 0.7 / 5.0
cdef double _PI_BETA = 0.4 / 5.0
cdef int _OVERLAP_MAX_ITER = 4

# opcodes, pinned to sldelay.expressions
cdef int _OP_CONST = 0
cdef int _OP_X = 1
cdef int _OP_ADD = 2
cdef int _OP_SUB = 3
cdef int _OP_MUL = 4
cdef int _OP_DIV = 5
cdef int _OP_POW = 6
cdef int _OP_NEG = 7
cdef int _OP_SIN = 8
cdef int _OP_COS = 9
cdef int _OP_EXP = 10
cdef int _OP_ABS = 11
cdef int _OP_SQRT = 12


cdef double _tape_eval(const int[:, ::1] prog, const double[::1] consts, double x) noexcept nogil:
    cdef double stack[64]
    cdef int sp = 0
    cdef int k, op, arg
    cdef double b, base, r
    for k in range(prog.shape[0]):
        op = prog[k, 0]
        arg = prog[k, 1]
        if op == _OP_CONST:
            stack[sp] = consts[arg]
            sp += 1
        elif op == _OP_X:
            stack[sp] = x
            sp += 1
        elif op == _OP_ADD:
            sp -= 1
            stack[sp - 1] += stack[sp]
        elif op == _OP_SUB:
            sp -= 1
            stack[sp - 1] -= stack[sp]
        elif op == _OP_MUL:
            sp -= 1
            stack[sp - 1] *= stack[sp]
        elif op == _OP_DIV:
            sp -= 1
            b = stack[sp]
            if b == 0.0:
                stack[sp - 1] = _NAN
            else:
                stack[sp - 1] /= b
        elif op == _OP_POW:
            sp -= 1
            base = stack[sp - 1]
            b = stack[sp]
            r = pow(base, b)
            if r != r or (not isfinite(r) and isfinite(base) and isfinite(b)):
                r = _NAN
            stack[sp - 1] = r
        elif op == _OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == _OP_SIN:
            b = stack[sp - 1]
            stack[sp - 1] = csin(b) if isfinite(b) else _NAN
        elif op == _OP_COS:
            b = stack[sp - 1]
            stack[sp - 1] = ccos(b) if isfinite(b) else _NAN
        elif op == _OP_EXP:
            b = stack[sp - 1]
            stack[sp - 1] = cexp(b) if b < 709.0 else _NAN
        elif op == _OP_ABS:
            stack[sp - 1] = fabs(stack[sp - 1])
        else:  # _OP_SQRT
            b = stack[sp - 1]
            stack[sp - 1] = sqrt(b) if b >= 0.0 else _NAN
    return stack[0]


cdef double _poly_eval(const double* coef, double theta) noexcept nogil:
    cdef double acc = coef[4]
    acc = acc * theta + coef[3]
    acc = acc * theta + coef[2]
    acc = acc * theta + coef[1]
    return acc * theta + coef[0]


cdef double _hist_eval(const double[::1] nodes, const double[:, :, ::1] coeffs, int m, double alpha) noexcept nogil:
    # index of the step containing alpha: bisect_right(nodes[:m+1]) - 1, clamped
    cdef int lo = 0
    cdef int hi = m + 1
    cdef int mid, i
    while lo < hi:
        mid = (lo + hi) // 2
        if nodes[mid] <= alpha:
            lo = mid + 1
        else:
            hi = mid
    i = lo - 1
    if i < 0:
        i = 0
    elif i > m - 1:
        i = m - 1
    cdef double theta = (alpha - nodes[i]) / (nodes[i + 1] - nodes[i])
    cdef double acc = coeffs[i, 0, 4]
    acc = acc * theta + coeffs[i, 0, 3]
    acc = acc * theta + coeffs[i, 0, 2]
    acc = acc * theta + coeffs[i, 0, 1]
    return acc * theta + coeffs[i, 0, 0]


def integrate_delay(
    q_prog,
    q_consts,
    d_prog,
    d_consts,
    double psq,
    double lam,
    double t0,
    double t1,
    double y0,
    double yp0,
    double rtol,
    double atol,
    double max_step,
    double t_floor,
    long max_steps,
):
    """See _pycore.integrate_delay; identical contract and status codes."""
    cdef int[:, ::1] qp = np.ascontiguousarray(q_prog, dtype=np.intc)
    cdef double[::1] qc = np.ascontiguousarray(q_consts, dtype=np.float64)
    cdef int[:, ::1] dp = np.ascontiguousarray(d_prog, dtype=np.intc)
    cdef double[::1] dc = np.ascontiguousarray(d_consts, dtype=np.float64)

    cdef int cap = 512
    nodes_arr = np.empty(cap + 1, dtype=np.float64)
    coeffs_arr = np.empty((cap, 2, 5), dtype=np.float64)
    cdef double[::1] nodes = nodes_arr
    cdef double[:, :, ::1] coeffs = coeffs_arr

    cdef int m = 0  # accepted steps
    nodes[0] = t0

    cdef double t = t0
    cdef double y0_ = y0
    cdef double y1_ = yp0
    cdef int status = 0
    cdef double detail = 0.0

    cdef double cur[2][5]
    cdef double newpoly[2][5]
    cdef double K[7][2]

    cdef bint overlap = False
    cdef bint viol = False
    cdef double bad = 0.0

    cdef double dv, alpha0, k1_0, k1_1, h, span, err_prev
    cdef long steps = 0
    cdef bint final, failed, converged
    cdef double z0, z1, e0, e1, prev_z0, prev_z1, u0, u1, ts, wd, qv, alphav
    cdef double k6_0 = 0.0
    cdef double k6_1 = 0.0
    cdef double s0, s1, sc0, sc1, r0, r1, err, factor, acc0, acc1, pim
    cdef int it, mm, i, j

    dv = _tape_eval(dp, dc, t0)
    alpha0 = t0 - dv
    if alpha0 > t0 + 1e-9 or alpha0 < t_floor - 1e-9:
        return nodes_arr[: m + 1].copy(), np.zeros((0, 2, 5)), 3, alpha0
    k1_0 = y1_
    k1_1 = -(lam * y0_ + _tape_eval(qp, qc, t0) * y0_) / psq

    h = max_step
    span = t1 - t0
    if h > span / 10.0:
        h = span / 10.0
    if h > span:
        h = span

    err_prev = 1.0

    while t < t1:
        if steps >= max_steps:
            status = 4
            detail = t
            break
        steps += 1

        final = False
        if h >= t1 - t:
            h = t1 - t
            final = True
        if h < 1e-14 * (fabs(t) + 1.0):
            status = 1
            detail = t
            break

        # Taylor predictor for lookups inside the attempted step
        cur[0][0] = y0_
        cur[0][1] = h * k1_0
        cur[0][2] = 0.5 * h * h * k1_1
        cur[0][3] = 0.0
        cur[0][4] = 0.0
        cur[1][0] = y1_
        cur[1][1] = h * k1_1
        cur[1][2] = 0.0
        cur[1][3] = 0.0
        cur[1][4] = 0.0

        z0 = z1 = 0.0
        e0 = e1 = 0.0
        prev_z0 = prev_z1 = _NAN
        failed = False
        converged = False

        for it in range(_OVERLAP_MAX_ITER):
            overlap = False
            viol = False
            bad = 0.0

            K[0][0] = k1_0
            K[0][1] = k1_1

            for j in range(1, 7):
                if j == 1:
                    ts = t + _C2 * h
                    u0 = y0_ + h * (_A21 * K[0][0])
                    u1 = y1_ + h * (_A21 * K[0][1])
                elif j == 2:
                    ts = t + _C3 * h
                    u0 = y0_ + h * (_A31 * K[0][0] + _A32 * K[1][0])
                    u1 = y1_ + h * (_A31 * K[0][1] + _A32 * K[1][1])
                elif j == 3:
                    ts = t + _C4 * h
                    u0 = y0_ + h * (_A41 * K[0][0] + _A42 * K[1][0] + _A43 * K[2][0])
                    u1 = y1_ + h * (_A41 * K[0][1] + _A42 * K[1][1] + _A43 * K[2][1])
                elif j == 4:
                    ts = t + _C5 * h
                    u0 = y0_ + h * (
                        _A51 * K[0][0] + _A52 * K[1][0] + _A53 * K[2][0] + _A54 * K[3][0]
                    )
                    u1 = y1_ + h * (
                        _A51 * K[0][1] + _A52 * K[1][1] + _A53 * K[2][1] + _A54 * K[3][1]
                    )
                elif j == 5:
                    ts = t + h
                    u0 = y0_ + h * (
                        _A61 * K[0][0]
                        + _A62 * K[1][0]
                        + _A63 * K[2][0]
                        + _A64 * K[3][0]
                        + _A65 * K[4][0]
                    )
                    u1 = y1_ + h * (
                        _A61 * K[0][1]
                        + _A62 * K[1][1]
                        + _A63 * K[2][1]
                        + _A64 * K[3][1]
                        + _A65 * K[4][1]
                    )
                else:  # j == 6, the FSAL stage at the 5th-order endpoint
                    ts = t + h
                    z0 = y0_ + h * (
                        _B1 * K[0][0] + _B3 * K[2][0] + _B4 * K[3][0] + _B5 * K[4][0] + _B6 * K[5][0]
                    )
                    z1 = y1_ + h * (
                        _B1 * K[0][1] + _B3 * K[2][1] + _B4 * K[3][1] + _B5 * K[4][1] + _B6 * K[5][1]
                    )
                    u0 = z0
                    u1 = z1

                # delayed lookup (mirrors _pycore.delayed)
                dv = _tape_eval(dp, dc, ts)
                alphav = ts - dv
                if alphav != alphav:
                    wd = _NAN
                elif alphav > ts + 1e-9:
                    viol = True
                    bad = alphav
                    wd = _NAN
                elif alphav >= ts - 1e-14 * (1.0 if ts < 1.0 else ts):
                    wd = u0
                elif alphav < t_floor - 1e-9:
                    viol = True
                    bad = alphav
                    wd = _NAN
                else:
                    if alphav < t_floor:
                        alphav = t_floor
                    if alphav <= t:
                        wd = _hist_eval(nodes, coeffs, m, alphav) if m > 0 else y0_
                    else:
                        overlap = True
                        wd = _poly_eval(&cur[0][0], (alphav - t) / h)

                qv = _tape_eval(qp, qc, ts)
                K[j][0] = u1
                K[j][1] = -(lam * u0 + qv * wd) / psq

            if viol:
                status = 3
                detail = bad
                failed = True
                break

            newpoly[0][0] = y0_
            newpoly[1][0] = y1_
            for mm in range(1, 5):
                acc0 = 0.0
                acc1 = 0.0
                for i in range(7):
                    pim = _P[i][mm - 1]
                    if pim != 0.0:
                        acc0 += pim * K[i][0]
                        acc1 += pim * K[i][1]
                newpoly[0][mm] = h * acc0
                newpoly[1][mm] = h * acc1

            e0 = h * (
                _E1 * K[0][0]
                + _E3 * K[2][0]
                + _E4 * K[3][0]
                + _E5 * K[4][0]
                + _E6 * K[5][0]
                + _E7 * K[6][0]
            )
            e1 = h * (
                _E1 * K[0][1]
                + _E3 * K[2][1]
                + _E4 * K[3][1]
                + _E5 * K[4][1]
                + _E6 * K[5][1]
                + _E7 * K[6][1]
            )

            k6_0 = K[6][0]
            k6_1 = K[6][1]

            if not overlap:
                converged = True
                break

            if prev_z0 == prev_z0:  # second or later pass
                s0 = atol + rtol * (fabs(z0) if fabs(z0) > fabs(y0_) else fabs(y0_))
                s1 = atol + rtol * (fabs(z1) if fabs(z1) > fabs(y1_) else fabs(y1_))
                if fabs(z0 - prev_z0) <= 0.01 * s0 and fabs(z1 - prev_z1) <= 0.01 * s1:
                    converged = True
                    break
            prev_z0 = z0
            prev_z1 = z1
            for mm in range(5):
                cur[0][mm] = newpoly[0][mm]
                cur[1][mm] = newpoly[1][mm]

        if failed:
            break
        if not converged:
            h *= 0.5
            continue

        if not (isfinite(z0) and isfinite(z1) and isfinite(e0) and isfinite(e1)):
            status = 2
            detail = t
            break

        sc0 = atol + rtol * (fabs(z0) if fabs(z0) > fabs(y0_) else fabs(y0_))
        sc1 = atol + rtol * (fabs(z1) if fabs(z1) > fabs(y1_) else fabs(y1_))
        r0 = e0 / sc0
        r1 = e1 / sc1
        err = sqrt(0.5 * (r0 * r0 + r1 * r1))

        if err <= 1.0:
            t = t1 if final else t + h
            if m == cap:
                cap *= 2
                new_nodes = np.empty(cap + 1, dtype=np.float64)
                new_coeffs = np.empty((cap, 2, 5), dtype=np.float64)
                new_nodes[: m + 1] = nodes_arr[: m + 1]
                new_coeffs[:m] = coeffs_arr[:m]
                nodes_arr = new_nodes
                coeffs_arr = new_coeffs
                nodes = nodes_arr
                coeffs = coeffs_arr
            nodes[m + 1] = t
            for mm in range(5):
                coeffs[m, 0, mm] = newpoly[0][mm]
                coeffs[m, 1, mm] = newpoly[1][mm]
            m += 1
            y0_ = z0
            y1_ = z1
            k1_0 = k6_0
            k1_1 = k6_1

            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * pow(err, -_PI_ALPHA) * pow(err_prev, _PI_BETA)
                if factor < _MIN_FACTOR:
                    factor = _MIN_FACTOR
                elif factor > _MAX_FACTOR:
                    factor = _MAX_FACTOR
            err_prev = err if err > 1e-4 else 1e-4
            h = h * factor
            if h > max_step:
                h = max_step
        else:
            factor = _SAFETY * pow(err, -0.2)
            if factor < _MIN_FACTOR:
                factor = _MIN_FACTOR
            elif factor > 0.9:
                factor = 0.9
            h = h * factor

    return nodes_arr[: m + 1].copy(), coeffs_arr[:m].copy(), status, detail
