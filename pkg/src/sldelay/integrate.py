"""Subinterval solvers and residual verification.

`solve_left` integrates the delay equation on [0, pi/2] from the boundary
data (w, w')(0) = (a2, -a1); `solve_right` continues on [pi/2, pi] from
the transmitted values w(pi/2+) = (gamma1/delta1) w(pi/2-) and
w'(pi/2+) = (gamma2/delta2) w'(pi/2-).  Both return dense Trajectories.

Steps are capped at pi * p / (8 s) (eight mesh cells per quarter
oscillation of the local frequency s/p) on top of the error control, so
the dense output stays accurate for the retarded lookups even when the
tolerance alone would allow long steps.

`residual` re-checks a solved pair against the equation without reusing
the stepping machinery: the second derivative is formed by central
differences of the dense derivative, and the Volterra integral forms of
the two subinterval problems are evaluated by cumulative Simpson rules on
a uniform grid.  Both defects are reported in sup norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .problem import BREAK, X_END
from .quadrature import cumulative_simpson
from .trajectory import Trajectory

__all__ = [
    "DelayViolationError",
    "IntegrationError",
    "ResidualReport",
    "residual",
    "solve_both",
    "solve_left",
    "solve_right",
]

# frequency cap: at most this fraction of pi*p/s per step
_CELLS_PER_QUARTER_WAVE = 8
_MAX_STEPS = 2_000_000
_DEFAULT_TOL = 1e-10
_FD_STEP = 1e-5  # central-difference step for the second derivative check

_STATUS_MESSAGES = {
    1: "step size underflow near x = %r",
    2: "non-finite state near x = %r (coefficient domain fault or blow-up)",
    4: "step budget exhausted at x = %r",
}


class IntegrationError(RuntimeError):
    """The stepper could not complete the subinterval."""


class DelayViolationError(IntegrationError):
    """Retarded argument left the admissible range at run time."""


def _tol_pair(tol):
    if not (1e-13 <= tol <= 1e-3):
        raise ValueError("tol must lie in [1e-13, 1e-3], got %r" % tol)
    return tol, tol * 1e-3


def _run_kernel(spec, side, lam, y0, yp0, tol):
    if not (lam > 0.0):
        raise ValueError("lam must be positive, got %r" % lam)
    rtol, atol = _tol_pair(tol)
    s = math.sqrt(lam)
    p = spec.p_of(side)
    t0, t1 = (0.0, BREAK) if side == "left" else (BREAK, X_END)
    max_step = math.pi * p / (_CELLS_PER_QUARTER_WAVE * s)
    if max_step > t1 - t0:
        max_step = t1 - t0
    q = spec.q(side)
    dly = spec.delay(side)
    nodes, coeffs, status, detail = backend.integrate_delay(
        q.program,
        q.consts,
        dly.program,
        dly.consts,
        p * p,
        lam,
        t0,
        t1,
        y0,
        yp0,
        rtol,
        atol,
        max_step,
        t0,  # retarded arguments may not drop below the subinterval start
        _MAX_STEPS,
    )
    if status == 3:
        raise DelayViolationError(
            "retarded argument %r leaves [%r, x] on the %s subinterval" % (detail, t0, side)
        )
    if status != 0:
        raise IntegrationError(_STATUS_MESSAGES.get(status, "kernel status %d at x = %%r" % status) % detail)
    return Trajectory(side=side, lam=float(lam), nodes=nodes, coeffs=coeffs)


def solve_left(spec, lam, tol=_DEFAULT_TOL):
    """Dense solution on [0, pi/2] with (w, w')(0) = (a2, -a1)."""
    return _run_kernel(spec, "left", lam, spec.a2, -spec.a1, tol)


def solve_right(spec, lam, left=None, tol=_DEFAULT_TOL):
    """Dense solution on [pi/2, pi] continued from the left segment.

    `left` may be passed to reuse an existing solve; its lam must match.
    """
    if left is None:
        left = solve_left(spec, lam, tol)
    elif left.lam != lam:
        raise ValueError(
            "left segment was solved at lam = %r, requested %r" % (left.lam, lam)
        )
    w_b, wp_b = left.eval(BREAK)
    y0 = spec.gamma1 / spec.delta1 * w_b
    yp0 = spec.gamma2 / spec.delta2 * wp_b
    return _run_kernel(spec, "right", lam, y0, yp0, tol)


def solve_both(spec, lam, tol=_DEFAULT_TOL):
    """(left, right) trajectories at the same lam."""
    left = solve_left(spec, lam, tol)
    return left, solve_right(spec, lam, left=left, tol=tol)


@dataclass(frozen=True)
class ResidualReport:
    """Independent verification of a solved pair.

    sup_ode_defect: sup |p(x) w'' + q(x) w(x - delta(x)) + lam w| with w''
    from central differences of the dense derivative (finite-difference
    noise ~1e-10 * lam^1.5 at the default step, so this is a diagnostic).
    sup_integral_defect: sup over the grid of the mismatch against the
    Volterra integral forms, the stricter and better-conditioned check.
    transmission_defect: both matching conditions at the break.
    bc_defect: left boundary form and |w'(pi) + d lam w(pi)| (the latter
    is the characteristic value, zero only at eigenvalues).
    """

    sup_ode_defect: float
    sup_integral_defect: float
    transmission_defect: tuple
    bc_defect: tuple
    grid: int


def _ode_defect(spec, side, lam, traj, grid):
    p = spec.p_of(side)
    lo, hi = traj.x_lo, traj.x_hi
    xs = np.linspace(lo, hi, grid + 1)
    inner = xs[(xs >= lo + _FD_STEP) & (xs <= hi - _FD_STEP)]
    w, _ = traj.eval_many(inner)
    _, wp_plus = traj.eval_many(inner + _FD_STEP)
    _, wp_minus = traj.eval_many(inner - _FD_STEP)
    wpp = (wp_plus - wp_minus) / (2.0 * _FD_STEP)

    alphas = inner - spec.delay(side).evaluate_many(inner)
    wd, _ = traj.eval_many(np.clip(alphas, lo, hi))
    qv = spec.q(side).evaluate_many(inner)
    return float(np.abs(p * p * wpp + qv * wd + lam * w).max())


def _integral_defect_left(spec, lam, left, grid):
    s = math.sqrt(lam)
    p1 = spec.p1
    xs = np.linspace(0.0, BREAK, grid + 1)
    h = xs[1] - xs[0]
    qv = spec.q_left.evaluate_many(xs)
    alphas = xs - spec.delta_left.evaluate_many(xs)
    wd, _ = left.eval_many(np.clip(alphas, 0.0, BREAK))

    # sin(s (x - tau)/p) splits into sin/cos products, so one cumulative
    # pass serves every upper limit on the grid
    cs = np.cos(s * xs / p1)
    sn = np.sin(s * xs / p1)
    ic = cumulative_simpson(qv * cs * wd, h)
    is_ = cumulative_simpson(qv * sn * wd, h)
    integral = sn * ic - cs * is_

    rhs = spec.a2 * cs - (spec.a1 * p1 / s) * sn - integral / (s * p1)
    w, _ = left.eval_many(xs)
    return float(np.abs(w - rhs).max())


def _integral_defect_right(spec, lam, left, right, grid):
    s = math.sqrt(lam)
    p2 = spec.p2
    xs = np.linspace(BREAK, X_END, grid + 1)
    h = xs[1] - xs[0]
    qv = spec.q_right.evaluate_many(xs)
    alphas = xs - spec.delta_right.evaluate_many(xs)
    wd, _ = right.eval_many(np.clip(alphas, BREAK, X_END))

    w_b, wp_b = left.eval(BREAK)
    arg = s * (xs - BREAK) / p2
    cs = np.cos(arg)
    sn = np.sin(arg)
    # shifted split: sin(s(x - tau)/p2) = sin(arg_x)cos(arg_tau) - cos(arg_x)sin(arg_tau)
    ic = cumulative_simpson(qv * np.cos(arg) * wd, h)
    is_ = cumulative_simpson(qv * np.sin(arg) * wd, h)
    integral = sn * ic - cs * is_

    rhs = (
        spec.gamma1 / spec.delta1 * w_b * cs
        + spec.gamma2 * p2 * wp_b / (s * spec.delta2) * sn
        - integral / (s * p2)
    )
    w, _ = right.eval_many(xs)
    return float(np.abs(w - rhs).max())


def residual(spec, lam, left, right, grid=2048):
    """ResidualReport for a solved (left, right) pair at lam."""
    if left.lam != lam or right.lam != lam:
        raise ValueError("trajectories were not solved at lam = %r" % lam)
    ode = max(
        _ode_defect(spec, "left", lam, left, grid),
        _ode_defect(spec, "right", lam, right, grid),
    )
    integral = max(
        _integral_defect_left(spec, lam, left, grid),
        _integral_defect_right(spec, lam, left, right, grid),
    )

    w_b, wp_b = left.eval(BREAK)
    w_b2, wp_b2 = right.eval(BREAK)
    trans = (
        abs(spec.gamma1 * w_b - spec.delta1 * w_b2),
        abs(spec.gamma2 * wp_b - spec.delta2 * wp_b2),
    )

    w0, wp0 = left.eval(0.0)
    w_end, wp_end = right.eval(X_END)
    bc = (
        abs(spec.a1 * w0 + spec.a2 * wp0),
        abs(wp_end + spec.d * lam * w_end),
    )
    return ResidualReport(
        sup_ode_defect=ode,
        sup_integral_defect=integral,
        transmission_defect=trans,
        bc_defect=bc,
        grid=grid,
    )
