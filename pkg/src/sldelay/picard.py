"""Successive-approximation solver for the two subinterval problems.

Rewrites each half of

    p^2 w''(x) + q(x) w(x - delta(x)) + lam w(x) = 0

as the equivalent Volterra identity (variation of parameters, s = sqrt(lam)):

    w(x) = H(x) - (1 / (s p)) * int_a^x sin(s (x - t) / p) q(t) w(t - delta(t)) dt

with H the homogeneous solution matching the initial data at a, and
iterates w <- RHS(w) on a uniform grid until the sup change settles.
The oscillatory kernel is split as sin(s(x-t)/p) = sin(sx/p)cos(st/p) -
cos(sx/p)sin(st/p), which turns every sweep into two cumulative
trapezoid sums (O(grid) per sweep).

This route shares nothing with the stepping kernels (no Runge-Kutta, no
dense output, no tape interpreter beyond coefficient sampling), so
agreement between the two is a genuine cross-check of both.

Volterra kernels are quasi-nilpotent, so the sweeps settle for any
lam > 0, but only factorially in general; the uniform geometric bound
(1 / (s p)) * int |q| <= 1/2 per sweep needs lam >= 4 ((1/p) int |q|)^2.
Below that threshold expect many sweeps and size max_iter accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import BREAK, X_END
from .trajectory import Trajectory

__all__ = ["ConvergenceError", "PicardResult", "picard_solve"]

_DEFAULT_GRID = 4096
_DEFAULT_TOL = 1e-12
_DEFAULT_MAX_ITER = 80


class ConvergenceError(Exception):
    """Iteration failed to settle; carries the last observed ratio."""

    def __init__(self, message, last_ratio):
        super().__init__(message)
        self.last_ratio = last_ratio


@dataclass(frozen=True)
class PicardResult:
    """Converged fixed point of both subinterval iterations.

    ratios_* hold the per-sweep sup-change ratios (an empirical
    contraction record; empty when the first sweep already matched).
    """

    left: Trajectory
    right: Trajectory
    iterations: int
    ratios_left: tuple
    ratios_right: tuple


def _cumtrapz(y, h):
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum((y[1:] + y[:-1]), out=out[1:])
    out[1:] *= 0.5 * h
    return out


def _lookup_weights(alpha, x0, h, n):
    """Cubic 4-point interpolation stencils for fixed retarded arguments.

    Returns (base indices, 4 weight arrays); exact on the nodes, O(h^4)
    between them.  Arguments are clamped to the grid by the caller's
    validation guarantees up to rounding.
    """
    pos = (alpha - x0) / h
    pos = np.clip(pos, 0.0, float(n))
    base = np.clip(np.floor(pos).astype(np.intp) - 1, 0, n - 3)
    u = pos - base
    w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0
    w1 = u * (u - 2.0) * (u - 3.0) / 2.0
    w2 = -u * (u - 1.0) * (u - 3.0) / 2.0
    w3 = u * (u - 1.0) * (u - 2.0) / 6.0
    return base, (w0, w1, w2, w3)


def _hermite_cells(x, w, wp, wpp):
    """Per-cell cubics (ascending powers of theta) for value and slope."""
    h = x[1] - x[0]
    m = len(x) - 1
    coeffs = np.empty((m, 2, 4))
    for comp, (v, dv) in enumerate(((w, wp), (wp, wpp))):
        d = v[1:] - v[:-1]
        coeffs[:, comp, 0] = v[:-1]
        coeffs[:, comp, 1] = h * dv[:-1]
        coeffs[:, comp, 2] = 3.0 * d - h * (2.0 * dv[:-1] + dv[1:])
        coeffs[:, comp, 3] = -2.0 * d + h * (dv[:-1] + dv[1:])
    return coeffs


def _iterate_half(side, spec, lam, x, v0, v1, tol, max_iter):
    """Drive one subinterval to its fixed point.

    Returns (w, wp, g, sweeps, ratios) at the grid, where g = q * w_delayed
    (kept so the caller can reconstruct w'' from the equation).
    """
    s = math.sqrt(lam)
    p = spec.p_of(side)
    h = x[1] - x[0]
    n = len(x) - 1

    q_vals = spec.q(side).evaluate_many(x)
    alpha = x - spec.delay(side).evaluate_many(x)
    base, (c0, c1, c2, c3) = _lookup_weights(alpha, x[0], h, n)

    phase = (s / p) * (x - x[0])
    cos_x = np.cos(phase)
    sin_x = np.sin(phase)

    hom_w = v0 * cos_x + (v1 * p / s) * sin_x
    hom_wp = -(v0 * s / p) * sin_x + v1 * cos_x

    w = hom_w.copy()
    wp = hom_wp.copy()
    g = np.zeros_like(x)

    ratios = []
    prev_change = None
    for sweep in range(1, max_iter + 1):
        w_d = c0 * w[base] + c1 * w[base + 1] + c2 * w[base + 2] + c3 * w[base + 3]
        g = q_vals * w_d
        ic = _cumtrapz(g * cos_x, h)
        is_ = _cumtrapz(g * sin_x, h)
        w_new = hom_w - (sin_x * ic - cos_x * is_) / (s * p)
        wp_new = hom_wp - (cos_x * ic + sin_x * is_) / (p * p)

        change = float(np.max(np.abs(w_new - w)))
        w, wp = w_new, wp_new
        scale = max(1.0, float(np.max(np.abs(w))))
        if prev_change is not None and prev_change > 0.0 and math.isfinite(change):
            ratios.append(change / prev_change)
        if change <= tol * scale:
            return w, wp, g, sweep, tuple(ratios)
        if not math.isfinite(change):
            break
        prev_change = change

    last = ratios[-1] if ratios else float("inf")
    raise ConvergenceError(
        "%s-half iteration did not settle in %d sweeps (last ratio %.3g); "
        "below lam ~ 4 (int |q| / p)^2 settling is factorial, not geometric, "
        "so a larger max_iter may still converge" % (side, max_iter, last),
        last,
    )


def picard_solve(spec, lam, grid=_DEFAULT_GRID, tol=_DEFAULT_TOL, max_iter=_DEFAULT_MAX_ITER):
    """Solve both subintervals by fixed-point iteration of the integral form.

    Independent oracle for the stepping kernels: same initial data
    conventions (left starts from (a2, -a1), right from the transmitted
    values), different discretization entirely.  Requires lam > 0 and
    effectively lam of a few times (int |q| / p)^2 for contraction.
    """
    if not lam > 0.0:
        raise ValueError("successive approximations need lam > 0, got %r" % lam)
    if grid < 8:
        raise ValueError("grid must be at least 8 intervals, got %r" % grid)

    xl = np.linspace(0.0, BREAK, grid + 1)
    wl, wpl, gl, sweeps_l, ratios_l = _iterate_half(
        "left", spec, lam, xl, spec.a2, -spec.a1, tol, max_iter
    )

    v0 = (spec.gamma1 / spec.delta1) * wl[-1]
    v1 = (spec.gamma2 / spec.delta2) * wpl[-1]
    xr = np.linspace(BREAK, X_END, grid + 1)
    wr, wpr, gr, sweeps_r, ratios_r = _iterate_half(
        "right", spec, lam, xr, v0, v1, tol, max_iter
    )

    wppl = -(lam * wl + gl) / spec.p_of("left") ** 2
    wppr = -(lam * wr + gr) / spec.p_of("right") ** 2
    left = Trajectory("left", lam, xl.copy(), _hermite_cells(xl, wl, wpl, wppl))
    right = Trajectory("right", lam, xr.copy(), _hermite_cells(xr, wr, wpr, wppr))
    return PicardResult(left, right, sweeps_l + sweeps_r, ratios_l, ratios_r)
