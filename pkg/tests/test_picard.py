"""Fixed-point integral-form solver: exactness, contraction, cross-route agreement."""

import math

import numpy as np
import pytest

from sldelay.integrate import solve_both
from sldelay.picard import ConvergenceError, picard_solve
from sldelay.problem import parse_problem

from conftest import config_doc


def test_zero_coefficient_is_exact_first_sweep(trivial_spec):
    # q == 0 makes the homogeneous part the fixed point; one sweep per half
    res = picard_solve(trivial_spec, 25.0)
    assert res.iterations == 2
    assert res.ratios_left == ()
    assert res.ratios_right == ()
    x = np.linspace(0.0, math.pi / 2, 513)
    w, wp = res.left.eval_many(x)
    np.testing.assert_allclose(w, np.cos(5.0 * x), rtol=0, atol=1e-12)
    np.testing.assert_allclose(wp, -5.0 * np.sin(5.0 * x), rtol=0, atol=1e-11)


def test_contraction_ratio_bound(canonical_spec):
    # int |q| / p1 = pi/2 on the left, so lam >= 4 (pi/2)^2 ~ 9.87 contracts
    # with per-sweep factor at most 1/2
    for lam in (25.0, 100.0):
        res = picard_solve(canonical_spec, lam)
        for r in res.ratios_left + res.ratios_right:
            assert r <= 0.5 + 1e-6


def test_ratio_shrinks_with_lam(canonical_spec):
    worst = [
        max(res.ratios_left + res.ratios_right)
        for res in (picard_solve(canonical_spec, lam) for lam in (25.0, 400.0))
    ]
    assert worst[1] < worst[0]


@pytest.mark.parametrize("lam", [25.0, 100.0])
def test_agrees_with_stepping_route(canonical_spec, lam):
    left, right = solve_both(canonical_spec, lam, tol=1e-11)
    res = picard_solve(canonical_spec, lam)
    for rk, pic in ((left, res.left), (right, res.right)):
        x = np.linspace(rk.x_lo, rk.x_hi, 1025)
        w_rk, wp_rk = rk.eval_many(x)
        w_pc, wp_pc = pic.eval_many(x)
        assert np.max(np.abs(w_rk - w_pc)) < 1e-7
        assert np.max(np.abs(wp_rk - wp_pc)) < 1e-6 * math.sqrt(lam)


def test_agrees_with_stepping_route_trivial(trivial_spec):
    left, _ = solve_both(trivial_spec, 100.0, tol=1e-11)
    res = picard_solve(trivial_spec, 100.0)
    x = np.linspace(0.0, math.pi / 2, 513)
    assert np.max(np.abs(left.eval_many(x)[0] - res.left.eval_many(x)[0])) < 1e-10


def test_transmission_values(canonical_spec):
    res = picard_solve(canonical_spec, 50.0)
    wl, wpl = res.left.eval(math.pi / 2)
    wr, wpr = res.right.eval(math.pi / 2)
    g = canonical_spec
    assert wr == pytest.approx((g.gamma1 / g.delta1) * wl, rel=1e-12)
    assert wpr == pytest.approx((g.gamma2 / g.delta2) * wpl, rel=1e-12)


def test_cell_continuity(canonical_spec):
    res = picard_solve(canonical_spec, 100.0)
    assert res.left.node_mismatch() < 1e-9
    assert res.right.node_mismatch() < 1e-9


def test_sweep_budget_below_contraction_threshold():
    # far below lam ~ 4 (int |q| / p)^2 the sweeps settle factorially, so a
    # short budget raises while a generous one still converges
    spec = parse_problem(config_doc(q_left="8"))
    with pytest.raises(ConvergenceError) as exc:
        picard_solve(spec, 0.25, max_iter=12)
    assert math.isfinite(exc.value.last_ratio) or exc.value.last_ratio == math.inf

    # the 1/s amplification and the large q cost some grid accuracy here;
    # still solidly the same solution as the stepping route
    res = picard_solve(spec, 0.25, max_iter=200)
    left, _ = solve_both(spec, 0.25, tol=1e-11)
    x = np.linspace(0.0, math.pi / 2, 513)
    assert np.max(np.abs(left.eval_many(x)[0] - res.left.eval_many(x)[0])) < 1e-6


def test_rejects_bad_arguments(trivial_spec):
    with pytest.raises(ValueError):
        picard_solve(trivial_spec, 0.0)
    with pytest.raises(ValueError):
        picard_solve(trivial_spec, -4.0)
    with pytest.raises(ValueError):
        picard_solve(trivial_spec, 25.0, grid=4)
