"""Pure-Python stepping kernel (fallback backend).

Implements one subinterval of the delay equation

    psq * w''(x) + q(x) * w(x - delta(x)) + lam * w(x) = 0

as a first-order system advanced with the Dormand-Prince explicit 5(4)
pair, PI step-size control, and the standard quartic continuous
extension.  The retarded value w(x - delta(x)) is read from the
trajectory's own dense output under the method of steps; three cases:

  * zero deviation (argument equals the current stage abscissa): the
    current stage state is used directly, so delta == 0 degenerates to a
    plain ODE solve with no interpolation error;
  * argument at or behind the current step's start: settled history,
    evaluated from the stored step polynomials;
  * argument inside the current, not yet accepted step (vanishing
    deviation near the subinterval start): the step is computed against a
    predictor polynomial and re-run until its endpoint settles, starting
    from a second-order Taylor predictor.

Domain faults inside coefficient tapes produce nan (never exceptions),
matching the C kernel; the driver turns a non-finite state into an error
status.  `_core.pyx` mirrors this module operation for operation; keep
the two in lockstep when changing either.

Status codes returned (shared convention with _core):
    0 ok, 1 step size underflow, 2 non-finite state, 3 deviation
    violation (argument ahead of x or below the subinterval floor),
    4 step budget exhausted.
"""

from __future__ import annotations

import math
from bisect import bisect_right

import numpy as np

BACKEND_NAME = "python"

# Dormand-Prince 5(4) tableau (exact rationals).
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
# Quartic continuous extension: value = y + sum_m theta^m * h * sum_i P[i][m-1] K_i.
# Rows sum to the 5th-order weights, so theta = 1 reproduces the accepted endpoint.
_P = (
    (1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0),
    (0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0),
    (0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0),
    (0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0),
    (0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0),
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# PI controller exponents for a 4th-order error estimate
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0
_OVERLAP_MAX_ITER = 4

# opcodes, pinned to sldelay.expressions
_OP_CONST = 0
_OP_X = 1
_OP_ADD = 2
_OP_SUB = 3
_OP_MUL = 4
_OP_DIV = 5
_OP_POW = 6
_OP_NEG = 7
_OP_SIN = 8
_OP_COS = 9
_OP_EXP = 10
_OP_ABS = 11
_OP_SQRT = 12

_NAN = float("nan")


def _tape_eval(prog, consts, x):
    """Interpret a postfix coefficient program; faults yield nan, not raises."""
    stack = [0.0] * 8
    sp = 0
    for op, arg in prog:
        if op == _OP_CONST:
            if sp == len(stack):
                stack.extend([0.0] * len(stack))
            stack[sp] = consts[arg]
            sp += 1
        elif op == _OP_X:
            if sp == len(stack):
                stack.extend([0.0] * len(stack))
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
            try:
                stack[sp - 1] = math.pow(stack[sp - 1], stack[sp])
            except (ValueError, OverflowError):
                stack[sp - 1] = _NAN
        elif op == _OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == _OP_SIN:
            v = stack[sp - 1]
            stack[sp - 1] = math.sin(v) if math.isfinite(v) else _NAN
        elif op == _OP_COS:
            v = stack[sp - 1]
            stack[sp - 1] = math.cos(v) if math.isfinite(v) else _NAN
        elif op == _OP_EXP:
            v = stack[sp - 1]
            stack[sp - 1] = math.exp(v) if v < 709.0 else _NAN
        elif op == _OP_ABS:
            stack[sp - 1] = abs(stack[sp - 1])
        else:  # _OP_SQRT
            v = stack[sp - 1]
            stack[sp - 1] = math.sqrt(v) if v >= 0.0 else _NAN
    return stack[0]


def _poly_eval(coef, theta):
    """Horner for one component's ascending-power coefficients."""
    acc = coef[4]
    acc = acc * theta + coef[3]
    acc = acc * theta + coef[2]
    acc = acc * theta + coef[1]
    return acc * theta + coef[0]


def integrate_delay(
    q_prog,
    q_consts,
    d_prog,
    d_consts,
    psq,
    lam,
    t0,
    t1,
    y0,
    yp0,
    rtol,
    atol,
    max_step,
    t_floor,
    max_steps,
):
    """Advance the delay system over [t0, t1].

    Returns (nodes, coeffs, status, detail): nodes is the accepted mesh
    (float64, m+1), coeffs the per-step dense polynomials (m, 2, 5),
    status one of the codes in the module docstring, detail the abscissa
    connected with a failure (0.0 on success).
    """
    qp = [(int(a), int(b)) for a, b in np.asarray(q_prog)]
    qc = [float(v) for v in np.asarray(q_consts)]
    dp = [(int(a), int(b)) for a, b in np.asarray(d_prog)]
    dc = [float(v) for v in np.asarray(d_consts)]

    nodes = [t0]
    coeffs = []

    t = t0
    y0_, y1_ = float(y0), float(yp0)
    status = 0
    detail = 0.0

    def history(alpha):
        """Settled-history value of w at alpha <= current step start."""
        i = bisect_right(nodes, alpha) - 1
        if i < 0:
            i = 0
        elif i > len(coeffs) - 1:
            i = len(coeffs) - 1
        h_i = nodes[i + 1] - nodes[i]
        return _poly_eval(coeffs[i][0], (alpha - nodes[i]) / h_i)

    # cur holds the dense polynomial of the step being attempted (for
    # lookups that land inside it); refreshed by the overlap iteration
    cur = [[0.0] * 5, [0.0] * 5]

    state = {"overlap": False, "viol": False, "bad": 0.0}

    def delayed(ts, ystage, tn, h):
        """w at ts - delta(ts); returns nan and records on violation."""
        dv = _tape_eval(dp, dc, ts)
        alpha = ts - dv
        if alpha != alpha:  # nan delta
            return _NAN
        if alpha > ts + 1e-9:
            state["viol"] = True
            state["bad"] = alpha
            return _NAN
        if alpha >= ts - 1e-14 * (1.0 if ts < 1.0 else ts):
            return ystage  # zero deviation: current stage state
        if alpha < t_floor - 1e-9:
            state["viol"] = True
            state["bad"] = alpha
            return _NAN
        if alpha < t_floor:
            alpha = t_floor
        if alpha <= tn:
            # before the first acceptance the clamped argument can only be
            # t0 itself, whose value is the initial state
            return history(alpha) if coeffs else y0_
        state["overlap"] = True
        return _poly_eval(cur[0], (alpha - tn) / h)

    # first derivative evaluation at t0: the deviation conditions force the
    # retarded argument to equal t0 there (history is empty), so the only
    # admissible lookup value is the initial state itself
    dv = _tape_eval(dp, dc, t0)
    alpha0 = t0 - dv
    if alpha0 > t0 + 1e-9 or alpha0 < t_floor - 1e-9:
        return np.array(nodes), np.zeros((0, 2, 5)), 3, alpha0
    k1_0 = y1_
    k1_1 = -(lam * y0_ + _tape_eval(qp, qc, t0) * y0_) / psq

    h = max_step
    span = t1 - t0
    if h > span / 10.0:
        h = span / 10.0
    if h > span:
        h = span

    err_prev = 1.0
    steps = 0

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
        if h < 1e-14 * (abs(t) + 1.0):
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

        accepted_poly = None
        z0 = z1 = 0.0
        e0 = e1 = 0.0
        prev_z0 = prev_z1 = _NAN
        failed = False
        converged = False

        for _ in range(_OVERLAP_MAX_ITER):
            state["overlap"] = False
            state["viol"] = False
            state["bad"] = 0.0

            K = [[k1_0, k1_1], None, None, None, None, None, None]

            def stage(ts, u0, u1):
                wd = delayed(ts, u0, t, h)
                qv = _tape_eval(qp, qc, ts)
                return u1, -(lam * u0 + qv * wd) / psq

            u0 = y0_ + h * (_A21 * K[0][0])
            u1 = y1_ + h * (_A21 * K[0][1])
            K[1] = stage(t + _C2 * h, u0, u1)

            u0 = y0_ + h * (_A31 * K[0][0] + _A32 * K[1][0])
            u1 = y1_ + h * (_A31 * K[0][1] + _A32 * K[1][1])
            K[2] = stage(t + _C3 * h, u0, u1)

            u0 = y0_ + h * (_A41 * K[0][0] + _A42 * K[1][0] + _A43 * K[2][0])
            u1 = y1_ + h * (_A41 * K[0][1] + _A42 * K[1][1] + _A43 * K[2][1])
            K[3] = stage(t + _C4 * h, u0, u1)

            u0 = y0_ + h * (_A51 * K[0][0] + _A52 * K[1][0] + _A53 * K[2][0] + _A54 * K[3][0])
            u1 = y1_ + h * (_A51 * K[0][1] + _A52 * K[1][1] + _A53 * K[2][1] + _A54 * K[3][1])
            K[4] = stage(t + _C5 * h, u0, u1)

            u0 = y0_ + h * (
                _A61 * K[0][0] + _A62 * K[1][0] + _A63 * K[2][0] + _A64 * K[3][0] + _A65 * K[4][0]
            )
            u1 = y1_ + h * (
                _A61 * K[0][1] + _A62 * K[1][1] + _A63 * K[2][1] + _A64 * K[3][1] + _A65 * K[4][1]
            )
            K[5] = stage(t + h, u0, u1)

            z0 = y0_ + h * (
                _B1 * K[0][0] + _B3 * K[2][0] + _B4 * K[3][0] + _B5 * K[4][0] + _B6 * K[5][0]
            )
            z1 = y1_ + h * (
                _B1 * K[0][1] + _B3 * K[2][1] + _B4 * K[3][1] + _B5 * K[4][1] + _B6 * K[5][1]
            )

            K[6] = stage(t + h, z0, z1)

            if state["viol"]:
                status = 3
                detail = state["bad"]
                failed = True
                break

            newpoly = [[y0_, 0.0, 0.0, 0.0, 0.0], [y1_, 0.0, 0.0, 0.0, 0.0]]
            for m in range(1, 5):
                acc0 = 0.0
                acc1 = 0.0
                for i in range(7):
                    pim = _P[i][m - 1]
                    if pim != 0.0:
                        acc0 += pim * K[i][0]
                        acc1 += pim * K[i][1]
                newpoly[0][m] = h * acc0
                newpoly[1][m] = h * acc1

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

            k6_0, k6_1 = K[6]

            if not state["overlap"]:
                accepted_poly = newpoly
                converged = True
                break

            # iterate the step until its endpoint settles well below tol
            if prev_z0 == prev_z0:  # not nan: second or later pass
                s0 = atol + rtol * (abs(z0) if abs(z0) > abs(y0_) else abs(y0_))
                s1 = atol + rtol * (abs(z1) if abs(z1) > abs(y1_) else abs(y1_))
                if abs(z0 - prev_z0) <= 0.01 * s0 and abs(z1 - prev_z1) <= 0.01 * s1:
                    accepted_poly = newpoly
                    converged = True
                    break
            prev_z0, prev_z1 = z0, z1
            cur[0][:] = newpoly[0]
            cur[1][:] = newpoly[1]

        if failed:
            break
        if not converged:
            # overlap iteration did not settle: retry with a smaller step
            h *= 0.5
            continue

        if not (
            math.isfinite(z0) and math.isfinite(z1) and math.isfinite(e0) and math.isfinite(e1)
        ):
            status = 2
            detail = t
            break

        sc0 = atol + rtol * (abs(z0) if abs(z0) > abs(y0_) else abs(y0_))
        sc1 = atol + rtol * (abs(z1) if abs(z1) > abs(y1_) else abs(y1_))
        r0 = e0 / sc0
        r1 = e1 / sc1
        err = math.sqrt(0.5 * (r0 * r0 + r1 * r1))

        if err <= 1.0:
            # snap the final node to t1 so the mesh ends exactly on the
            # subinterval boundary regardless of rounding in t + h
            t = t1 if final else t + h
            nodes.append(t)
            coeffs.append(accepted_poly)
            y0_, y1_ = z0, z1
            k1_0, k1_1 = k6_0, k6_1

            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * (err ** -_PI_ALPHA) * (err_prev ** _PI_BETA)
                if factor < _MIN_FACTOR:
                    factor = _MIN_FACTOR
                elif factor > _MAX_FACTOR:
                    factor = _MAX_FACTOR
            err_prev = err if err > 1e-4 else 1e-4
            h = h * factor
            if h > max_step:
                h = max_step
        else:
            factor = _SAFETY * (err ** -0.2)
            if factor < _MIN_FACTOR:
                factor = _MIN_FACTOR
            elif factor > 0.9:
                factor = 0.9
            h = h * factor

    nodes_arr = np.array(nodes, dtype=np.float64)
    if coeffs:
        coeffs_arr = np.array(coeffs, dtype=np.float64)
    else:
        coeffs_arr = np.zeros((0, 2, 5), dtype=np.float64)
    return nodes_arr, coeffs_arr, status, detail
