"""Named verification battery behind the `check` CLI command.

Every check measures something concrete about one config and reports
pass/fail/skip with the measured number and its bound; a skip always
carries the reason.  Failures are never repaired here: a bad delay or a
blown bound shows up as a failing entry, not an exception, so one broken
property cannot hide the state of the rest.

The frozen-constants mechanism anchors reproducibility: `mode="freeze"`
stores a handful of measured invariants (sup norms, one eigenvalue, the
refined-convergence constant) next to the config; later runs in
`mode="check"` must reproduce them to three significant digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import AsymptoticsUnavailable, leading_s, oscillatory_decay, refined_s
from .backend import BACKEND
from .integrate import (
    DelayViolationError,
    IntegrationError,
    residual,
    solve_both,
)
from .picard import ConvergenceError, picard_solve
from .problem import BREAK, X_END, scaled_boundary, validate_delay, violations
from .quadrature import QuadratureError
from .spectrum import (
    N_RELIABLE,
    compute_qnorms,
    find_eigenvalues,
    global_scan,
    locate_window,
)

__all__ = ["CheckResult", "CheckReport", "run_checks", "FROZEN_KEYS"]

_RESIDUAL_LAMS = (25.0, 100.0, 400.0)
_INTEGRAL_BOUND = 1e-7
_LINEARITY_SCALES = (-2.0, 0.5, 3.0)
_LINEARITY_BOUND = 1e-9
_BOUND_POINTS = 32
_BOUND_SLACK = -1e-8
_PICARD_BOUND = 1e-6
_CONVERGENCE_SPREAD = 5.0
_DECAY_FREQUENCIES = (10.0, 20.0, 40.0, 80.0)
_FROZEN_REL = 5e-3  # three significant digits
_SAMPLES = 513

FROZEN_KEYS = ("sup_w1", "sup_w2", "sup_w1p_scaled", "eigen_s_low", "refined_c2")

_RUNTIME_ERRORS = (
    IntegrationError,
    DelayViolationError,
    ConvergenceError,
    QuadratureError,
    AsymptoticsUnavailable,
    ValueError,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str             # "pass" / "fail" / "skip"
    measured: float | None = None
    bound: float | None = None
    note: str = ""

    def to_doc(self):
        return {
            "name": self.name,
            "status": self.status,
            "measured": self.measured,
            "bound": self.bound,
            "note": self.note,
        }


@dataclass(frozen=True)
class CheckReport:
    digest: str
    backend: str
    mode: str
    checks: tuple

    @property
    def passed(self):
        return all(c.status != "fail" for c in self.checks)

    def to_doc(self):
        return {
            "digest": self.digest,
            "backend": self.backend,
            "mode": self.mode,
            "passed": self.passed,
            "checks": [c.to_doc() for c in self.checks],
        }


def _result(name, ok, measured=None, bound=None, note=""):
    return CheckResult(
        name=name,
        status="pass" if ok else "fail",
        measured=None if measured is None else float(measured),
        bound=None if bound is None else float(bound),
        note=note,
    )


def _skip(name, note):
    return CheckResult(name=name, status="skip", note=note)


def _guard(name, fn):
    """Run one check body; runtime failures become failing entries."""
    try:
        return fn()
    except _RUNTIME_ERRORS as exc:
        return _result(name, False, note="%s: %s" % (type(exc).__name__, exc))


def _sup_profile(traj, samples=_SAMPLES):
    xs = np.linspace(traj.x_lo, traj.x_hi, samples)
    w, wp = traj.eval_many(xs)
    return float(np.max(np.abs(w))), float(np.max(np.abs(wp)))


def run_checks(spec, digest, mode="check", frozen=None):
    """Execute the battery; returns (CheckReport, frozen_constants_doc).

    `frozen` is the previously stored constants mapping (or None); the
    returned constants doc is what `mode="freeze"` should persist.
    """
    if mode not in ("check", "freeze"):
        raise ValueError("mode must be 'check' or 'freeze', got %r" % mode)
    checks = []

    # structural invariants, graded instead of raised
    problems = violations(spec)
    checks.append(
        _result(
            "config-invariants",
            not problems,
            measured=float(len(problems)),
            bound=0.0,
            note="; ".join(problems),
        )
    )
    structurally_sound = not problems

    delay_report = validate_delay(spec)
    checks.append(
        _result(
            "refined-conditions",
            delay_report.refined_ok,
            measured=delay_report.worst_violation,
            bound=0.0,
            note=(
                ""
                if delay_report.refined_ok
                else "condition_a=%s condition_b=%s"
                % (delay_report.condition_a_ok, delay_report.condition_b_ok)
            ),
        )
    )

    if not structurally_sound:
        report = CheckReport(digest=digest, backend=BACKEND, mode=mode, checks=tuple(checks))
        return report, {}

    qn = compute_qnorms(spec)
    solved = {}

    def solve_at(lam):
        if lam not in solved:
            solved[lam] = solve_both(spec, lam, tol=1e-11)
        return solved[lam]

    def check_integral_residuals():
        worst = 0.0
        notes = []
        for lam in _RESIDUAL_LAMS:
            left, right = solve_at(lam)
            rep = residual(spec, lam, left, right)
            worst = max(worst, rep.sup_integral_defect)
            notes.append("lam=%g:%.3g" % (lam, rep.sup_integral_defect))
        return _result(
            "integral-residuals", worst <= _INTEGRAL_BOUND, worst, _INTEGRAL_BOUND, " ".join(notes)
        )

    checks.append(_guard("integral-residuals", check_integral_residuals))

    def check_matching_defects():
        lam = 100.0
        left, right = solve_at(lam)
        rep = residual(spec, lam, left, right)
        scale = max(1.0, max(_sup_profile(left)[0], _sup_profile(right)[0]))
        worst = max(rep.transmission_defect) / scale
        bc = rep.bc_defect[0] / scale
        measured = max(worst, bc)
        return _result(
            "matching-defects",
            measured <= 1e-10,
            measured,
            1e-10,
            "transmission=%.3g bc_left=%.3g" % (worst, bc),
        )

    checks.append(_guard("matching-defects", check_matching_defects))

    def check_linearity():
        lam = 100.0
        left, right = solve_at(lam)
        xs_l = np.linspace(left.x_lo, left.x_hi, 257)
        xs_r = np.linspace(right.x_lo, right.x_hi, 257)
        base_l = left.eval_many(xs_l)[0]
        base_r = right.eval_many(xs_r)[0]
        scale = max(1.0, float(np.max(np.abs(base_l))), float(np.max(np.abs(base_r))))
        worst = 0.0
        for c in _LINEARITY_SCALES:
            sl, sr = solve_both(scaled_boundary(spec, c), lam, tol=1e-11)
            dev_l = np.max(np.abs(sl.eval_many(xs_l)[0] - c * base_l))
            dev_r = np.max(np.abs(sr.eval_many(xs_r)[0] - c * base_r))
            worst = max(worst, float(max(dev_l, dev_r)) / (abs(c) * scale))
        return _result("linearity", worst <= _LINEARITY_BOUND, worst, _LINEARITY_BOUND)

    checks.append(_guard("linearity", check_linearity))

    # one shared sweep feeds the a-priori bounds and the frozen sup constants
    lam_lo = max(qn.lam_floor, 1.0) * (1.0 + 1e-9)
    lam_grid = np.geomspace(lam_lo, 100.0 * lam_lo, _BOUND_POINTS)
    sup_w1 = sup_w2 = sup_w1p_scaled = 0.0
    bound_slack = math.inf
    sweep_note = ""
    try:
        for lam in lam_grid:
            left, right = solve_at(float(lam))
            s = math.sqrt(lam)
            m1, m1p = _sup_profile(left)
            m2, _ = _sup_profile(right)
            sup_w1 = max(sup_w1, m1)
            sup_w2 = max(sup_w2, m2)
            sup_w1p_scaled = max(sup_w1p_scaled, m1p / s)
            if qn.q1 > 0.0:
                e = math.sqrt(
                    4.0 * qn.q1**2 * spec.a2**2 + spec.p1**2 * spec.a1**2
                )
                b1 = e / qn.q1
                b2 = (2.0 * e / qn.q1) * (
                    abs(spec.gamma1 / spec.delta1)
                    + abs(spec.p2 * spec.gamma2 / (spec.p1 * spec.delta1))
                )
                b3 = e / (spec.p1 * qn.q1)
                bound_slack = min(
                    bound_slack,
                    (b1 - m1) / b1,
                    (b2 - m2) / b2,
                    (b3 - m1p / s) / b3,
                )
    except _RUNTIME_ERRORS as exc:
        sweep_note = "%s: %s" % (type(exc).__name__, exc)

    if sweep_note:
        checks.append(_result("uniform-bounds", False, note=sweep_note))
    elif qn.q1 == 0.0:
        checks.append(
            _skip(
                "uniform-bounds",
                "q vanishes on the left half; the 1/q1 estimates are vacuous",
            )
        )
    else:
        checks.append(
            _result(
                "uniform-bounds",
                bound_slack >= _BOUND_SLACK,
                bound_slack,
                _BOUND_SLACK,
                "worst relative slack across %d frequencies, all three estimates"
                % _BOUND_POINTS,
            )
        )

    # spectral batch shared by the root-quality checks
    low_pairs = high_pairs = None
    batch_note = ""
    try:
        low_pairs = find_eigenvalues(spec, 1, 4)
        high_pairs = find_eigenvalues(spec, N_RELIABLE, N_RELIABLE + 3)
    except _RUNTIME_ERRORS as exc:
        batch_note = "%s: %s" % (type(exc).__name__, exc)

    if batch_note:
        checks.append(_result("eigen-residuals", False, note=batch_note))
        checks.append(_result("window-uniqueness", False, note=batch_note))
    else:
        found = [p for p in low_pairs + high_pairs if p.found]
        worst_res = max((p.f_residual for p in found), default=math.inf)
        checks.append(
            _result(
                "eigen-residuals",
                len(found) == len(low_pairs) + len(high_pairs) and worst_res <= 1e-6,
                worst_res,
                1e-6,
                "windows 1..4 and %d..%d" % (N_RELIABLE, N_RELIABLE + 3),
            )
        )
        bad_high = [p.n for p in high_pairs if p.suspect or not p.sign_change]
        checks.append(
            _result(
                "window-uniqueness",
                not bad_high,
                measured=float(len(bad_high)),
                bound=0.0,
                note="suspect windows: %s" % bad_high if bad_high else "",
            )
        )

    def check_scan_alignment():
        s_hi = locate_window(spec, 4)[1]
        scan = global_scan(spec, s_hi)
        if low_pairs is None:
            return _result("scan-window-alignment", False, note=batch_note)
        worst = 0.0
        for p in low_pairs:
            if not p.found:
                return _result(
                    "scan-window-alignment", False, note="window %d missing" % p.n
                )
            if p.n > len(scan):
                return _result(
                    "scan-window-alignment",
                    False,
                    note="scan found %d roots below %g, window %d not covered"
                    % (len(scan), s_hi, p.n),
                )
            worst = max(worst, abs(scan[p.n - 1].s - p.s))
        return _result("scan-window-alignment", worst <= 1e-7, worst, 1e-7)

    checks.append(_guard("scan-window-alignment", check_scan_alignment))

    def check_count_growth():
        s_one = locate_window(spec, 4)[1]
        k1 = len(global_scan(spec, s_one))
        k2 = len(global_scan(spec, 2.0 * s_one))
        return _result(
            "root-count-growth",
            k2 >= k1 + 3 and abs(k2 - 2 * k1) <= 3,
            measured=float(k2 - 2 * k1),
            bound=3.0,
            note="counts %d below %g and %d below %g" % (k1, s_one, k2, 2.0 * s_one),
        )

    checks.append(_guard("root-count-growth", check_count_growth))

    def check_picard():
        worst = 0.0
        worst_ratio = 0.0
        notes = []
        for base in (25.0, 100.0):
            lam = max(base, 1.5 * qn.lam_floor)
            left, right = solve_at(lam)
            res = picard_solve(spec, lam)
            for rk, pc in ((left, res.left), (right, res.right)):
                xs = np.linspace(rk.x_lo, rk.x_hi, _SAMPLES)
                dev = float(np.max(np.abs(rk.eval_many(xs)[0] - pc.eval_many(xs)[0])))
                worst = max(worst, dev)
            ratios = res.ratios_left + res.ratios_right
            worst_ratio = max(worst_ratio, max(ratios, default=0.0))
            notes.append("lam=%g:%.3g" % (lam, worst))
        ok = worst <= _PICARD_BOUND and worst_ratio <= 0.5 + 1e-3
        return _result(
            "integral-route-agreement",
            ok,
            worst,
            _PICARD_BOUND,
            "%s worst_contraction_ratio=%.3g" % (" ".join(notes), worst_ratio),
        )

    checks.append(_guard("integral-route-agreement", check_picard))

    def check_decay():
        try:
            rows = oscillatory_decay(spec, _DECAY_FREQUENCIES)
        except AsymptoticsUnavailable as exc:
            return _skip("oscillatory-decay", str(exc))
        metrics = [r[-1] for r in rows]
        bound = 2.0 * metrics[0] + 1e-12
        return _result(
            "oscillatory-decay",
            max(metrics) <= bound,
            max(metrics),
            bound,
            "metrics " + " ".join("%.6g" % m for m in metrics),
        )

    checks.append(_guard("oscillatory-decay", check_decay))

    refined_c2 = None

    def check_convergence():
        nonlocal refined_c2
        if high_pairs is None or not all(p.found for p in high_pairs):
            return [_result("leading-convergence", False, note=batch_note or "roots missing")]
        out = []
        lead_vals = [
            (2 * p.n + 1) * abs(p.s - leading_s(spec, p.n)) for p in high_pairs
        ]
        spread = max(lead_vals) / max(float(np.median(lead_vals)), 1e-300)
        out.append(
            _result(
                "leading-convergence",
                spread <= _CONVERGENCE_SPREAD,
                spread,
                _CONVERGENCE_SPREAD,
                "scaled gaps " + " ".join("%.4g" % v for v in lead_vals),
            )
        )
        try:
            ref_vals = [
                (2 * p.n + 1) ** 2 * abs(p.s - refined_s(spec, p.n)) for p in high_pairs
            ]
        except AsymptoticsUnavailable as exc:
            out.append(_skip("refined-convergence", str(exc)))
            return out
        refined_c2 = float(np.median(ref_vals))
        spread = max(ref_vals) / max(refined_c2, 1e-300)
        out.append(
            _result(
                "refined-convergence",
                spread <= _CONVERGENCE_SPREAD,
                spread,
                _CONVERGENCE_SPREAD,
                "scaled gaps " + " ".join("%.4g" % v for v in ref_vals),
            )
        )
        return out

    conv = _guard("leading-convergence", check_convergence)
    checks.extend(conv if isinstance(conv, list) else [conv])

    constants = {
        "sup_w1": sup_w1,
        "sup_w2": sup_w2,
        "sup_w1p_scaled": sup_w1p_scaled,
        "eigen_s_low": (
            high_pairs[0].s if high_pairs is not None and high_pairs[0].found else None
        ),
        "refined_c2": refined_c2,
    }

    if mode == "freeze":
        checks.append(
            _skip("frozen-constants", "freeze run: constants recorded, nothing to compare")
        )
    elif frozen is None:
        checks.append(
            _skip("frozen-constants", "no frozen sidecar; run check --mode freeze first")
        )
    else:
        stored = frozen.get("constants", {})
        stored_digest = frozen.get("digest", "")
        if stored_digest != digest:
            checks.append(
                _result(
                    "frozen-constants",
                    False,
                    note="config digest changed since freeze (%s -> %s)"
                    % (stored_digest[:12], digest[:12]),
                )
            )
        else:
            worst = 0.0
            mismatches = []
            for key in FROZEN_KEYS:
                old = stored.get(key)
                new = constants.get(key)
                if old is None and new is None:
                    continue
                if old is None or new is None:
                    mismatches.append(key)
                    continue
                rel = abs(new - old) / max(abs(old), 1e-300)
                worst = max(worst, rel)
                if rel > _FROZEN_REL:
                    mismatches.append(key)
            checks.append(
                _result(
                    "frozen-constants",
                    not mismatches,
                    worst,
                    _FROZEN_REL,
                    "drifted: %s" % ", ".join(mismatches) if mismatches else "",
                )
            )

    report = CheckReport(digest=digest, backend=BACKEND, mode=mode, checks=tuple(checks))
    return report, {"digest": digest, "constants": constants}
