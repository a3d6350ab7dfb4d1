import math

import numpy as np
import pytest

from sldelay.integrate import (
    DelayViolationError,
    IntegrationError,
    residual,
    solve_both,
    solve_left,
    solve_right,
)
from sldelay.problem import BREAK, load_problem, parse_problem, scaled_boundary

from conftest import config_doc


def closed_form_left(spec, lam, xs):
    """Exact solution when q == 0: pure trigonometric arc.

    w = a2 cos(s x / p1) - (a1 p1 / s) sin(s x / p1).
    """
    s = math.sqrt(lam)
    return spec.a2 * np.cos(s * xs / spec.p1) - (spec.a1 * spec.p1 / s) * np.sin(
        s * xs / spec.p1
    )


def test_zero_potential_matches_cosine(trivial_spec):
    lam = 4.0
    traj = solve_left(trivial_spec, lam, tol=1e-11)
    xs = np.linspace(0.0, BREAK, 257)
    w, wp = traj.eval_many(xs)
    assert np.abs(w - np.cos(2.0 * xs)).max() < 1e-10
    assert np.abs(wp + 2.0 * np.sin(2.0 * xs)).max() < 1e-9
    w_b, _ = traj.eval(BREAK)
    assert w_b == pytest.approx(math.cos(math.pi), abs=1e-10)


def test_zero_potential_sine_branch():
    spec = load_problem(config_doc(a1=1.0, a2=0.0))
    lam = 9.0
    traj = solve_left(spec, lam, tol=1e-11)
    xs = np.linspace(0.0, BREAK, 129)
    w, _ = traj.eval_many(xs)
    assert np.abs(w - closed_form_left(spec, lam, xs)).max() < 1e-10


def test_speed_scaling():
    spec = load_problem(config_doc(p1=2.0, p2=2.0))
    lam = 4.0  # s = 2, frequency s/p1 = 1
    traj = solve_left(spec, lam, tol=1e-11)
    xs = np.linspace(0.0, BREAK, 65)
    w, _ = traj.eval_many(xs)
    assert np.abs(w - np.cos(xs)).max() < 1e-11


def test_right_segment_continues_left(trivial_spec):
    lam = 9.0
    left, right = solve_both(trivial_spec, lam, tol=1e-11)
    xs = np.linspace(BREAK, math.pi, 129)
    w, _ = right.eval_many(xs)
    assert np.abs(w - np.cos(3.0 * xs)).max() < 1e-9


def test_transmission_jump(canonical_spec):
    lam = 25.0
    left, right = solve_both(canonical_spec, lam)
    w_b, wp_b = left.eval(BREAK)
    w_b2, wp_b2 = right.eval(BREAK)
    # gamma1 w(pi/2-) = delta1 w(pi/2+), exact by construction
    assert canonical_spec.gamma1 * w_b == pytest.approx(canonical_spec.delta1 * w_b2, abs=1e-13)
    assert canonical_spec.gamma2 * wp_b == pytest.approx(canonical_spec.delta2 * wp_b2, abs=1e-13)


def test_mismatched_lambda_rejected(trivial_spec):
    left = solve_left(trivial_spec, 4.0)
    with pytest.raises(ValueError):
        solve_right(trivial_spec, 9.0, left=left)


def test_nonpositive_lambda_rejected(trivial_spec):
    with pytest.raises(ValueError):
        solve_left(trivial_spec, 0.0)
    with pytest.raises(ValueError):
        solve_left(trivial_spec, -4.0)


def test_tolerance_range_enforced(trivial_spec):
    with pytest.raises(ValueError):
        solve_left(trivial_spec, 4.0, tol=1e-2)
    with pytest.raises(ValueError):
        solve_left(trivial_spec, 4.0, tol=1e-14)


def test_step_cap_follows_frequency(canonical_spec):
    lam = 400.0  # s = 20
    traj = solve_left(canonical_spec, lam)
    steps = np.diff(traj.nodes)
    assert steps.max() <= math.pi * canonical_spec.p1 / (8 * 20.0) + 1e-15
    # right side has p2 = 2, so the cap is twice as loose
    right = solve_right(canonical_spec, lam)
    assert np.diff(right.nodes).max() <= math.pi * canonical_spec.p2 / (8 * 20.0) + 1e-15


def test_node_continuity(canonical_spec):
    lam = 100.0
    left, right = solve_both(canonical_spec, lam)
    scale = max(1.0, float(np.abs(left.coeffs[:, :, 0]).max()))
    assert left.node_mismatch() <= 1e-12 * scale
    assert right.node_mismatch() <= 1e-12 * scale


def test_eval_outside_domain_rejected(trivial_spec):
    traj = solve_left(trivial_spec, 4.0)
    with pytest.raises(ValueError):
        traj.eval(-0.5)
    with pytest.raises(ValueError):
        traj.eval(BREAK + 0.5)


def test_linearity_in_boundary_data(canonical_spec):
    lam = 49.0
    base_l, base_r = solve_both(canonical_spec, lam)
    xs_l = np.linspace(0.0, BREAK, 101)
    xs_r = np.linspace(BREAK, math.pi, 101)
    for c in (-2.0, 0.5, 3.0):
        scaled = scaled_boundary(canonical_spec, c)
        sl, sr = solve_both(scaled, lam)
        for base, new, xs in ((base_l, sl, xs_l), (base_r, sr, xs_r)):
            w0, wp0 = base.eval_many(xs)
            w1, wp1 = new.eval_many(xs)
            assert np.abs(w1 - c * w0).max() < 1e-9 * max(1.0, abs(c))
            assert np.abs(wp1 - c * wp0).max() < 1e-8 * max(1.0, abs(c)) * math.sqrt(lam)


def test_residual_zero_potential(trivial_spec):
    lam = 25.0
    left, right = solve_both(trivial_spec, lam, tol=1e-11)
    rep = residual(trivial_spec, lam, left, right)
    assert rep.sup_integral_defect < 1e-9
    assert rep.transmission_defect[0] < 1e-13
    assert rep.transmission_defect[1] < 1e-13
    assert rep.bc_defect[0] < 1e-13
    assert rep.grid == 2048


def test_residual_canonical():
    spec = load_problem(config_doc(
        p2=2.0, gamma1=2.0, q_left="1", q_right="1",
        delta_left="x/2", delta_right="(x - pi/2)/2",
    ))
    for lam in (25.0, 100.0):
        left, right = solve_both(spec, lam, tol=1e-11)
        rep = residual(spec, lam, left, right)
        assert rep.sup_integral_defect < 1e-7
        # ODE defect is finite-difference limited, looser by construction
        assert rep.sup_ode_defect < 1e-4 * (1.0 + lam)


def test_residual_detects_perturbation(canonical_spec):
    lam = 100.0
    left, right = solve_both(canonical_spec, lam, tol=1e-11)
    clean = residual(canonical_spec, lam, left, right)
    bumped = Trajectory = type(left)
    tampered = bumped(
        side=left.side, lam=left.lam, nodes=left.nodes, coeffs=left.coeffs * 1.01
    )
    rep = residual(canonical_spec, lam, tampered, right)
    assert rep.sup_integral_defect > 1e-3
    assert rep.sup_integral_defect > 1e3 * clean.sup_integral_defect


def test_runtime_delay_violation():
    # passes the load-time grid only because we bypass it: the right-side
    # deviation reaches below pi/2 at run time
    spec = parse_problem(config_doc(delta_right="1.0"))
    with pytest.raises(DelayViolationError):
        solve_right(spec, 25.0)


def test_blowup_reported():
    # q = exp(x^2) * 1e6 is huge but finite; a domain fault comes from sqrt
    spec = parse_problem(config_doc(q_left="sqrt(x - 1)"))
    with pytest.raises(IntegrationError):
        solve_left(spec, 25.0)


def test_vanishing_delay_overlap(canonical_spec):
    # delta = x/2 keeps early retarded arguments inside the current step;
    # the overlap iteration must not disturb accuracy: compare against a
    # much tighter solve
    lam = 64.0
    coarse = solve_left(canonical_spec, lam, tol=1e-8)
    fine = solve_left(canonical_spec, lam, tol=1e-12)
    xs = np.linspace(0.0, BREAK, 257)
    wc, _ = coarse.eval_many(xs)
    wf, _ = fine.eval_many(xs)
    assert np.abs(wc - wf).max() < 1e-6


def test_trajectory_csv_export(tmp_path, trivial_spec):
    traj = solve_left(trivial_spec, 4.0)
    out = tmp_path / "traj.csv"
    traj.to_csv(out, samples=16, comments=("tol=1e-10",))
    lines = out.read_text().splitlines()
    assert lines[0] == "# tol=1e-10"
    assert lines[1] == "x,w,w_prime"
    assert len(lines) == 18
    first = lines[2].split(",")
    assert float(first[0]) == 0.0
    assert float(first[1]) == 1.0
