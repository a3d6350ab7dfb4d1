"""Dense solution representation for one subinterval.

A Trajectory stores the accepted mesh and, per step, polynomial
coefficients in the local variable theta = (x - x_i) / h_i for both the
solution value and its derivative.  The stepping kernels emit quartics
(the standard continuous extension of the 5(4) pair); the fixed-grid
oracle emits cubics.  Either way evaluation is a short Horner loop, and
the polynomials agree at shared mesh nodes to rounding because each
step's polynomial reproduces the accepted endpoint states exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .reports import write_csv

__all__ = ["Trajectory"]


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-polynomial (value, derivative) on [x_lo, x_hi]."""

    side: str               # "left" or "right"
    lam: float              # spectral parameter the segment was solved at
    nodes: np.ndarray = field(repr=False)   # (m+1,) increasing mesh
    coeffs: np.ndarray = field(repr=False)  # (m, 2, k) ascending theta powers

    @property
    def x_lo(self):
        return float(self.nodes[0])

    @property
    def x_hi(self):
        return float(self.nodes[-1])

    def _locate(self, xs):
        lo, hi = self.nodes[0], self.nodes[-1]
        span = hi - lo
        if np.any(xs < lo - 1e-12 * span) or np.any(xs > hi + 1e-12 * span):
            raise ValueError(
                "evaluation outside [%r, %r] (side %r)" % (float(lo), float(hi), self.side)
            )
        xc = np.clip(xs, lo, hi)
        idx = np.searchsorted(self.nodes, xc, side="right") - 1
        idx = np.clip(idx, 0, len(self.coeffs) - 1)
        theta = (xc - self.nodes[idx]) / (self.nodes[idx + 1] - self.nodes[idx])
        return idx, theta

    def eval_many(self, xs):
        """Vectorized (w, w') at points xs within the subinterval."""
        xs = np.asarray(xs, dtype=np.float64)
        idx, theta = self._locate(xs)
        c = self.coeffs[idx]  # (..., 2, k)
        k = c.shape[-1]
        w = c[..., 0, k - 1].copy()
        wp = c[..., 1, k - 1].copy()
        for m in range(k - 2, -1, -1):
            w = w * theta + c[..., 0, m]
            wp = wp * theta + c[..., 1, m]
        return w, wp

    def eval(self, x):
        """(w, w') at a scalar x."""
        w, wp = self.eval_many(np.array([float(x)]))
        return float(w[0]), float(wp[0])

    def node_mismatch(self):
        """Largest jump of (w, w') across interior mesh nodes.

        Diagnostic for the continuity invariant; values sit at rounding
        level because each polynomial interpolates the accepted states.
        """
        if len(self.coeffs) < 2:
            return 0.0
        k = self.coeffs.shape[-1]
        end_vals = self.coeffs[:-1].sum(axis=2)       # theta = 1 of step i
        start_vals = self.coeffs[1:, :, 0]            # theta = 0 of step i+1
        return float(np.abs(end_vals - start_vals).max())

    def to_csv(self, path, samples=512, comments=()):
        """Uniform sampling x, w, w_prime written as deterministic CSV."""
        if samples < 2:
            raise ValueError("samples must be >= 2")
        xs = np.linspace(self.x_lo, self.x_hi, samples)
        w, wp = self.eval_many(xs)
        rows = [(float(x), float(a), float(b)) for x, a, b in zip(xs, w, wp)]
        write_csv(path, ("x", "w", "w_prime"), rows, comments)
