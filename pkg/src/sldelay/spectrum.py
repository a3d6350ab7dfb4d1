"""Eigenvalue location for the full transmission problem.

The characteristic function

    F(lam) = w'(pi, lam) + d lam w(pi, lam)

is built from the right-half trajectory; its positive zeros in s =
sqrt(lam) are the eigenvalues.  Two complementary strategies:

  * `find_eigenvalues` scans one half-width-c window around each
    asymptotic center (c = p1 p2 / (p1 + p2)); cheap and indexed, but
    the window picture is an asymptotic statement, so low indices may
    come back flagged rather than resolved;
  * `global_scan` walks (0, s_max] on a uniform grid with no indexing
    assumptions at all and numbers whatever it brackets consecutively.

Both return Eigenpair records carrying the final bracket, the scaled
residual, and honesty flags (`sign_change`, `suspect`, `note`) instead
of silently repairing anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .asymptotics import leading_s
from .integrate import solve_both
from .problem import X_END
from .quadrature import integrate_adaptive

__all__ = [
    "Eigenpair",
    "QNorms",
    "N_RELIABLE",
    "characteristic",
    "scaled_characteristic",
    "locate_window",
    "find_eigenvalues",
    "global_scan",
    "eigenfunction",
    "compute_qnorms",
]

_SCAN_CELLS = 64
TOL_ROOT = 1e-9
SOLVER_TOL = 1e-11
# window indices at and above this are treated as asymptotically safe;
# below it callers should be ready to fall back to a global scan
N_RELIABLE = 8


@dataclass(frozen=True)
class Eigenpair:
    """One located root of the characteristic function.

    `s` is nan when the window produced no sign change at all; `suspect`
    marks entries whose window either lacked a root or held more than
    one candidate.
    """

    n: int
    s: float
    lam: float
    f_residual: float       # |F(s^2) / s| at the reported root
    bracket: tuple          # final enclosing (lo, hi) in s
    sign_change: bool       # strict F(lo) F(hi) < 0 held for the bracket
    suspect: bool = False
    note: str = ""

    @property
    def found(self):
        return not math.isnan(self.s)


@dataclass(frozen=True)
class QNorms:
    """Averaged absolute coefficient masses (1/p_i) int |q| per half."""

    q1: float
    q2: float

    @property
    def lam_floor(self):
        """Smallest lam at which the uniform estimates apply."""
        return max(4.0 * self.q1 * self.q1, 4.0 * self.q2 * self.q2)


def characteristic(spec, lam, tol=SOLVER_TOL):
    """F(lam) = w'(pi) + d lam w(pi)."""
    _, right = solve_both(spec, lam, tol=tol)
    w, wp = right.eval(X_END)
    return wp + spec.d * lam * w


def scaled_characteristic(spec, s, tol=SOLVER_TOL):
    """F(s^2) / s, the form whose zeros are hunted in s."""
    if not s > 0.0:
        raise ValueError("scaled characteristic needs s > 0, got %r" % s)
    return characteristic(spec, s * s, tol=tol) / s


def locate_window(spec, n):
    """(lo, hi) bracket of half-width c around the n-th window center."""
    if n < 1:
        raise ValueError("window indices start at 1, got %r" % n)
    c = spec.p1 * spec.p2 / (spec.p1 + spec.p2)
    center = leading_s(spec, n)
    return center - c, center + c


def _bisect(g, lo, hi, g_lo, tol_root):
    """Shrink a strict sign-change bracket below tol_root."""
    while hi - lo > tol_root:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket at rounding resolution
        g_mid = g(mid)
        if g_mid == 0.0:
            return mid, mid
        if (g_lo < 0.0) != (g_mid < 0.0):
            hi = mid
        else:
            lo, g_lo = mid, g_mid
    return lo, hi


def _roots_in(g, grid, values, tol_root):
    """All bracketed roots of g over consecutive grid cells.

    Returns (root, bracket, sign_change) triples; exact zeros at grid
    nodes are kept as degenerate brackets.
    """
    out = []
    for i in range(len(grid) - 1):
        if values[i] == 0.0:
            neighbors = values[i - 1] * values[i + 1] if 0 < i else 0.0
            out.append((grid[i], (grid[i], grid[i]), bool(neighbors < 0.0)))
            continue
        if values[i] * values[i + 1] < 0.0:
            lo, hi = _bisect(g, grid[i], grid[i + 1], values[i], tol_root)
            out.append((0.5 * (lo + hi), (lo, hi), True))
    if len(values) and values[-1] == 0.0:
        out.append((grid[-1], (grid[-1], grid[-1]), False))
    return out


def find_eigenvalues(spec, n_min, n_max, tol_root=TOL_ROOT, solver_tol=SOLVER_TOL):
    """Window-scan roots for indices n_min..n_max (inclusive).

    Every index yields exactly one Eigenpair; windows with no sign
    change produce a nan sentinel, windows with several candidates keep
    the one nearest the center and are flagged suspect.  A root shared
    by two adjacent windows flags both (window collapse).
    """
    if n_min < 1:
        raise ValueError("n_min must be >= 1, got %r" % n_min)
    if n_max < n_min:
        raise ValueError("n_max %r below n_min %r" % (n_max, n_min))

    def g(s):
        return scaled_characteristic(spec, s, tol=solver_tol)

    pairs = []
    for n in range(n_min, n_max + 1):
        lo, hi = locate_window(spec, n)
        center = leading_s(spec, n)
        grid = np.linspace(lo, hi, _SCAN_CELLS + 1)
        values = np.array([g(x) for x in grid])
        roots = _roots_in(g, grid, values, tol_root)
        if not roots:
            pairs.append(
                Eigenpair(
                    n=n,
                    s=float("nan"),
                    lam=float("nan"),
                    f_residual=float("nan"),
                    bracket=(lo, hi),
                    sign_change=False,
                    suspect=True,
                    note="no sign change in window",
                )
            )
            continue
        root, bracket, strict = min(roots, key=lambda r: abs(r[0] - center))
        note = ""
        suspect = False
        if len(roots) > 1:
            suspect = True
            note = "window held %d sign changes" % len(roots)
        pairs.append(
            Eigenpair(
                n=n,
                s=float(root),
                lam=float(root) ** 2,
                f_residual=abs(g(float(root))),
                bracket=(float(bracket[0]), float(bracket[1])),
                sign_change=strict,
                suspect=suspect,
                note=note,
            )
        )

    for i in range(1, len(pairs)):
        a, b = pairs[i - 1], pairs[i]
        if a.found and b.found and abs(a.s - b.s) <= 10.0 * tol_root:
            msg = "adjacent windows collapsed onto one root"
            pairs[i - 1] = replace(a, suspect=True, note=(a.note or msg))
            pairs[i] = replace(b, suspect=True, note=(b.note or msg))
    return pairs


def global_scan(spec, s_max, grid_step=None, tol_root=TOL_ROOT, solver_tol=SOLVER_TOL):
    """Index-free sweep of (0, s_max]; roots numbered 1.. in order.

    The default grid step c/2 is half the worst-case root spacing; a
    requested step is capped there so cells cannot straddle two roots.
    """
    c = spec.p1 * spec.p2 / (spec.p1 + spec.p2)
    step = 0.5 * c if grid_step is None else min(float(grid_step), 0.5 * c)
    if not s_max > step:
        raise ValueError("s_max must exceed the scan step %r, got %r" % (step, s_max))

    def g(s):
        return scaled_characteristic(spec, s, tol=solver_tol)

    count = int(math.floor((s_max - step) / step)) + 1
    grid = step + step * np.arange(count)
    if grid[-1] < s_max - 1e-12 * s_max:
        grid = np.append(grid, s_max)
    values = np.array([g(x) for x in grid])
    roots = _roots_in(g, grid, values, tol_root)

    pairs = []
    for k, (root, bracket, strict) in enumerate(roots, start=1):
        pairs.append(
            Eigenpair(
                n=k,
                s=float(root),
                lam=float(root) ** 2,
                f_residual=abs(g(float(root))),
                bracket=(float(bracket[0]), float(bracket[1])),
                sign_change=strict,
                note="global scan",
            )
        )
    for i in range(1, len(pairs)):
        if abs(pairs[i].s - pairs[i - 1].s) <= 10.0 * tol_root:
            msg = "nearly coincident with neighbor root"
            pairs[i - 1] = replace(pairs[i - 1], suspect=True, note=msg)
            pairs[i] = replace(pairs[i], suspect=True, note=msg)
    return pairs


def eigenfunction(spec, pair, samples=513, solver_tol=SOLVER_TOL):
    """Numeric eigenfunction profile (x, w, w') on both halves.

    `pair` is an Eigenpair or a bare lam; the transmission point shows
    up twice, once per one-sided branch.
    """
    lam = pair.lam if isinstance(pair, Eigenpair) else float(pair)
    if samples < 2:
        raise ValueError("samples must be >= 2 per subinterval, got %r" % samples)
    left, right = solve_both(spec, lam, tol=solver_tol)
    xl = np.linspace(left.x_lo, left.x_hi, samples)
    xr = np.linspace(right.x_lo, right.x_hi, samples)
    wl, wpl = left.eval_many(xl)
    wr, wpr = right.eval_many(xr)
    return (
        np.concatenate([xl, xr]),
        np.concatenate([wl, wr]),
        np.concatenate([wpl, wpr]),
    )


def compute_qnorms(spec, rel_tol=1e-10):
    """QNorms from adaptive quadrature of |q| on each half."""
    q_l = spec.q("left")
    q_r = spec.q("right")
    mass_l = integrate_adaptive(
        lambda x: np.abs(q_l.evaluate_many(x)), 0.0, math.pi / 2, rel_tol=rel_tol
    )
    mass_r = integrate_adaptive(
        lambda x: np.abs(q_r.evaluate_many(x)), math.pi / 2, math.pi, rel_tol=rel_tol
    )
    return QNorms(q1=mass_l / spec.p1, q2=mass_r / spec.p2)
