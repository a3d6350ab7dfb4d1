"""High-frequency approximations of the spectrum and eigenfunctions.

Everything here follows from the integral forms of the two subinterval
problems for the a2 != 0 boundary family: with c = p1 p2 / (p1 + p2),
the n-th positive root of the characteristic function sits near

    s*_n = (2 n + 1) c

(near 2 n c when a2 == 0, where only the window centers are used), and
carries a 1/n correction

    s_n ~ s*_n - (2 / (pi (2n + 1))) * K,
    K = (d / p2) D(pi) + d a1 p1 / a2 + 1 / p2 + (d / p1) B(pi/2)

built from the slow quadrature terms

    A(x) = 1/2 int_0^{min(x, pi/2)}  q(t) sin(s delta(t) / p1) dt
    B(x) = 1/2 int_0^{min(x, pi/2)}  q(t) cos(s delta(t) / p1) dt
    C(x) = 1/2 int_{pi/2}^{max(x, pi/2)} q(t) sin(s delta(t) / p2) dt
    D(x) = 1/2 int_{pi/2}^{max(x, pi/2)} q(t) cos(s delta(t) / p2) dt.

The published derivation carries the B-term as (d / p1) B(pi/2), while
its eigenfunction display drops the 1/p1; both readings are available
through `variant` ("b-over-p1", the default, and "b-plain"); they agree
whenever p1 == 1, which covers every shipped example.

The 1/n correction is only valid when the deviation behaves: q and
delta smooth with bounded derivatives (condition a), delta' <= 1 with
delta vanishing at each subinterval opening (condition b).  Violations
raise AsymptoticsUnavailable rather than returning numbers the
derivation does not back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import BREAK, X_END, validate_delay
from .quadrature import cumulative_simpson, integrate_adaptive
from .reports import write_csv

__all__ = [
    "AsymptoticsUnavailable",
    "AsymptoticPrediction",
    "QuadTerms",
    "VARIANTS",
    "leading_eigenfunction",
    "leading_s",
    "oscillatory_decay",
    "prediction",
    "predictions_to_csv",
    "quad_terms",
    "refined_eigenfunction",
    "refined_s",
]

VARIANTS = ("b-over-p1", "b-plain")

_EIGENFUNCTION_GRID = 2048


class AsymptoticsUnavailable(Exception):
    """The requested formula is outside its derivation's hypotheses."""


@dataclass(frozen=True)
class QuadTerms:
    """Slow quadrature terms at evaluation point x and frequency s."""

    x: float
    s: float
    a: float  # sin-type, left half
    b: float  # cos-type, left half
    c: float  # sin-type, right half
    d: float  # cos-type, right half


@dataclass(frozen=True)
class AsymptoticPrediction:
    """Window center, refined root and its ingredients for one index."""

    n: int
    s_leading: float
    s_refined: float | None
    delta_n: float | None
    terms: QuadTerms


def leading_s(spec, n):
    """Center of the n-th root window."""
    c = spec.p1 * spec.p2 / (spec.p1 + spec.p2)
    if spec.a2 != 0.0:
        return (2 * n + 1) * c
    return 2 * n * c


def _require(cond, why):
    if not cond:
        raise AsymptoticsUnavailable(why)


def _require_refinable(spec, what):
    _require(
        spec.a2 != 0.0,
        "%s assumes the a2 != 0 boundary family (a2 is 0 here)" % what,
    )
    _require(
        spec.d != 0.0,
        "%s carries the eigenparameter boundary coefficient d, which is 0 here "
        "(solve-only problem)" % what,
    )
    report = validate_delay(spec)
    _require(
        report.refined_ok,
        "%s needs smooth, sub-unit-slope deviations vanishing at the subinterval "
        "openings (worst violation %.3g)" % (what, report.worst_violation),
    )


def quad_terms(spec, x, s, rel_tol=1e-10):
    """Point values of the four slow terms by adaptive quadrature."""
    if s <= 0.0:
        raise ValueError("frequency s must be positive, got %r" % s)
    x = float(x)

    def half(side, lo, hi):
        p = spec.p_of(side)
        q = spec.q(side)
        dl = spec.delay(side)
        if hi <= lo:
            return 0.0, 0.0
        cap = math.pi * p / (8.0 * s)

        def f_sin(t):
            return q.evaluate_many(t) * np.sin((s / p) * dl.evaluate_many(t))

        def f_cos(t):
            return q.evaluate_many(t) * np.cos((s / p) * dl.evaluate_many(t))

        sin_part = 0.5 * integrate_adaptive(f_sin, lo, hi, rel_tol=rel_tol, max_panel=cap)
        cos_part = 0.5 * integrate_adaptive(f_cos, lo, hi, rel_tol=rel_tol, max_panel=cap)
        return sin_part, cos_part

    a, b = half("left", 0.0, min(x, BREAK))
    c, d = half("right", BREAK, max(x, BREAK))
    return QuadTerms(x=x, s=s, a=a, b=b, c=c, d=d)


def _bracket(spec, terms, variant):
    if variant not in VARIANTS:
        raise ValueError("variant must be one of %r, got %r" % (VARIANTS, variant))
    b_term = terms.b / spec.p1 if variant == "b-over-p1" else terms.b
    return (
        (spec.d / spec.p2) * terms.d
        + spec.d * spec.a1 * spec.p1 / spec.a2
        + 1.0 / spec.p2
        + spec.d * b_term
    )


def refined_s(spec, n, variant="b-over-p1"):
    """Leading root plus its 1/n correction."""
    _require_refinable(spec, "the refined root formula")
    s_star = leading_s(spec, n)
    terms = quad_terms(spec, X_END, s_star)
    return s_star - (2.0 / (math.pi * (2 * n + 1))) * _bracket(spec, terms, variant)


def prediction(spec, n, variant="b-over-p1"):
    """Leading and, when backed by the hypotheses, refined root for index n."""
    s_star = leading_s(spec, n)
    terms = quad_terms(spec, X_END, s_star)
    try:
        _require_refinable(spec, "the refined root formula")
    except AsymptoticsUnavailable:
        return AsymptoticPrediction(n=n, s_leading=s_star, s_refined=None, delta_n=None, terms=terms)
    delta = -(2.0 / (math.pi * (2 * n + 1))) * _bracket(spec, terms, variant)
    return AsymptoticPrediction(
        n=n, s_leading=s_star, s_refined=s_star + delta, delta_n=delta, terms=terms
    )


def _cumulative_pair(spec, side, s, grid=_EIGENFUNCTION_GRID):
    """Uniform-grid antiderivatives of the side's sin/cos slow terms."""
    lo, hi = (0.0, BREAK) if side == "left" else (BREAK, X_END)
    p = spec.p_of(side)
    x = np.linspace(lo, hi, grid + 1)
    h = x[1] - x[0]
    q = spec.q(side).evaluate_many(x)
    arg = (s / p) * spec.delay(side).evaluate_many(x)
    sin_term = 0.5 * cumulative_simpson(q * np.sin(arg), h)
    cos_term = 0.5 * cumulative_simpson(q * np.cos(arg), h)
    return x, sin_term, cos_term


def _interp_cubic(xg, yg, x):
    """4-point Lagrange interpolation of a smooth gridded function."""
    h = xg[1] - xg[0]
    n = len(xg) - 1
    pos = np.clip((x - xg[0]) / h, 0.0, float(n))
    base = np.clip(np.floor(pos).astype(np.intp) - 1, 0, n - 3)
    u = pos - base
    w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0
    w1 = u * (u - 2.0) * (u - 3.0) / 2.0
    w2 = -u * (u - 1.0) * (u - 3.0) / 2.0
    w3 = u * (u - 1.0) * (u - 2.0) / 6.0
    return w0 * yg[base] + w1 * yg[base + 1] + w2 * yg[base + 2] + w3 * yg[base + 3]


def _sample_grids(samples):
    if samples < 2:
        raise ValueError("samples must be >= 2 per subinterval, got %r" % samples)
    xl = np.linspace(0.0, BREAK, samples)
    xr = np.linspace(BREAK, X_END, samples)
    return xl, xr


def leading_eigenfunction(spec, n, samples=513):
    """Zeroth-order eigenfunction profile on both halves.

    Returns (x, u) with the transmission point reported twice, once per
    branch, carrying the gamma1/delta1 jump.
    """
    _require(
        spec.a2 != 0.0,
        "the eigenfunction expansions assume the a2 != 0 boundary family",
    )
    xl, xr = _sample_grids(samples)
    k = 2 * n + 1
    ul = spec.a2 * np.cos(spec.p2 * k * xl / (spec.p1 + spec.p2))
    jump = spec.gamma1 * spec.a2 / spec.delta1
    ur = jump * np.cos(
        math.pi * (spec.p2 - spec.p1) * k / (2.0 * (spec.p1 + spec.p2))
        + spec.p1 * k * xr / (spec.p1 + spec.p2)
    )
    return np.concatenate([xl, xr]), np.concatenate([ul, ur])


def refined_eigenfunction(spec, n, samples=513, variant="b-over-p1"):
    """First-order eigenfunction profile on both halves.

    Evaluated at the window center s* with the 1/n phase and amplitude
    corrections written out explicitly; the transmission point appears
    twice (left branch value, then its gamma1/delta1 transmission).
    """
    _require_refinable(spec, "the refined eigenfunction expansion")
    xl, xr = _sample_grids(samples)
    s = leading_s(spec, n)
    k = 2 * n + 1
    p1, p2 = spec.p1, spec.p2
    a1, a2 = spec.a1, spec.a2

    terms_full = quad_terms(spec, X_END, s)
    kb = _bracket(spec, terms_full, variant)

    xg_l, a_grid, b_grid = _cumulative_pair(spec, "left", s)
    a_of = _interp_cubic(xg_l, a_grid, xl)
    b_of = _interp_cubic(xg_l, b_grid, xl)
    a_half = float(a_grid[-1])
    b_half = float(b_grid[-1])

    phase_l = s * xl / p1
    ul = (
        a2 * np.cos(phase_l) * (1.0 + a_of / (s * p1))
        + a2 * np.sin(phase_l) * (2.0 * xl / (math.pi * k * p1)) * kb
        - (1.0 / s) * np.sin(phase_l) * (a1 * p1 + (a2 / p1) * b_of)
    )

    xg_r, c_grid, d_grid = _cumulative_pair(spec, "right", s)
    c_of = _interp_cubic(xg_r, c_grid, xr)
    d_of = _interp_cubic(xg_r, d_grid, xr)

    jump = spec.gamma1 * a2 / spec.delta1
    theta = s * xr / p2 + math.pi * (p2 - p1) * k / (2.0 * (p1 + p2))
    ur = (
        jump * (1.0 + a_half / (s * p1)) + (jump / (s * p2)) * c_of
    ) * np.cos(theta) + (
        jump * (2.0 / (math.pi * k)) * kb * (xr / p2 + math.pi * (p2 - p1) / (2.0 * p1 * p2))
        - (
            (jump / (s * p2)) * d_of
            + (spec.gamma1 / (s * spec.delta1)) * (a1 * p1 + (a2 / p1) * b_half)
        )
    ) * np.sin(theta)

    return np.concatenate([xl, xr]), np.concatenate([ul, ur])


def oscillatory_decay(spec, s_values, rel_tol=1e-10):
    """Fast-phase integral sizes at each s; the derivation's decay input.

    Each row reports s, the four scaled integral magnitudes
    s * |int q(t) trig(s (2 tau - delta(t)) / p) dt| (tau the offset into
    the subinterval), and their sum, the per-s decay metric.
    """
    _require_refinable(spec, "the oscillatory decay report")
    rows = []
    for s in s_values:
        s = float(s)
        if s <= 0.0:
            raise ValueError("frequencies must be positive, got %r" % s)
        sizes = []
        for side, lo, hi in (("left", 0.0, BREAK), ("right", BREAK, X_END)):
            p = spec.p_of(side)
            q = spec.q(side)
            dl = spec.delay(side)
            cap = math.pi * p / (16.0 * s)

            def arg(t):
                return (s / p) * (2.0 * (t - lo) - dl.evaluate_many(t))

            def f_sin(t):
                return q.evaluate_many(t) * np.sin(arg(t))

            def f_cos(t):
                return q.evaluate_many(t) * np.cos(arg(t))

            sizes.append(s * abs(integrate_adaptive(f_sin, lo, hi, rel_tol=rel_tol, max_panel=cap)))
            sizes.append(s * abs(integrate_adaptive(f_cos, lo, hi, rel_tol=rel_tol, max_panel=cap)))
        rows.append((s, sizes[0], sizes[1], sizes[2], sizes[3], sum(sizes)))
    return tuple(rows)


def predictions_to_csv(path, spec, n_min, n_max, variant="b-over-p1"):
    """Prediction table (n, s_leading, s_refined, delta_n, A, B, C, D).

    The quad-term columns are taken at the far end of each subinterval,
    the values the correction K actually consumes; refined cells are
    empty when the hypotheses fail.
    """
    if n_min < 1:
        raise ValueError("indices start at 1, got %r" % n_min)
    if n_max < n_min:
        raise ValueError("n_max %r below n_min %r" % (n_max, n_min))
    rows = []
    for n in range(n_min, n_max + 1):
        pred = prediction(spec, n, variant=variant)
        t = pred.terms
        rows.append(
            [pred.n, pred.s_leading, pred.s_refined, pred.delta_n, t.a, t.b, t.c, t.d]
        )
    write_csv(
        path,
        ["n", "s_leading", "s_refined", "delta_n", "A", "B", "C", "D"],
        rows,
        comments=["bracket variant: %s" % variant],
    )
