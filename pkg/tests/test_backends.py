"""Parity between the compiled kernel and its pure-Python mirror."""

import os
import subprocess
import sys

import numpy as np
import pytest

import sldelay.backend as backend
from sldelay import expressions
from sldelay import _pycore
from sldelay.integrate import DelayViolationError, IntegrationError, solve_both, solve_left
from sldelay.problem import parse_problem

from conftest import config_doc

_core = pytest.importorskip("sldelay._core", reason="compiled kernel not built")


@pytest.fixture
def patched_backend(monkeypatch):
    """Run integrate-level code against a chosen kernel."""

    def use(name):
        monkeypatch.setattr(backend, "integrate_delay", backend.get_kernel(name).integrate_delay)

    return use


def _solve_pair(use, spec, lam, tol=1e-11):
    use("python")
    py = solve_both(spec, lam, tol=tol)
    use("cython")
    cy = solve_both(spec, lam, tol=tol)
    return py, cy


def test_backend_names():
    assert _pycore.BACKEND_NAME == "python"
    assert _core.BACKEND_NAME == "cython"
    assert backend.BACKEND in ("python", "cython")


def test_get_kernel_roundtrip():
    assert backend.get_kernel("python") is _pycore
    assert backend.get_kernel("cython") is _core
    assert backend.get_kernel() is backend.get_kernel(backend.BACKEND)
    with pytest.raises(ValueError):
        backend.get_kernel("fortran")


@pytest.mark.parametrize("forced", ["python", "cython"])
def test_env_forcing(forced):
    code = "import sldelay.backend as b; print(b.BACKEND)"
    env = dict(os.environ, SLDELAY_BACKEND=forced)
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == forced


def test_env_forcing_rejects_unknown():
    env = dict(os.environ, SLDELAY_BACKEND="mystery")
    out = subprocess.run(
        [sys.executable, "-c", "import sldelay.backend"],
        env=env,
        capture_output=True,
        text=True,
    )
    assert out.returncode != 0
    assert "SLDELAY_BACKEND" in out.stderr


def test_pycore_opcodes_pinned():
    # the kernels hard-code the tape opcodes; they must track expressions
    assert _pycore._OP_CONST == expressions.OP_CONST
    assert _pycore._OP_X == expressions.OP_X
    assert _pycore._OP_ADD == expressions.OP_ADD
    assert _pycore._OP_SUB == expressions.OP_SUB
    assert _pycore._OP_MUL == expressions.OP_MUL
    assert _pycore._OP_DIV == expressions.OP_DIV
    assert _pycore._OP_POW == expressions.OP_POW
    assert _pycore._OP_NEG == expressions.OP_NEG
    assert _pycore._OP_SIN == expressions.OP_SIN
    assert _pycore._OP_COS == expressions.OP_COS
    assert _pycore._OP_EXP == expressions.OP_EXP
    assert _pycore._OP_ABS == expressions.OP_ABS
    assert _pycore._OP_SQRT == expressions.OP_SQRT


@pytest.mark.parametrize("lam", [2.0, 25.0, 400.0, 2500.0])
def test_trajectories_agree_canonical(patched_backend, canonical_spec, lam):
    (lp, rp), (lc, rc) = _solve_pair(patched_backend, canonical_spec, lam)
    for p, c in ((lp, lc), (rp, rc)):
        assert p.nodes.shape == c.nodes.shape
        np.testing.assert_allclose(c.nodes, p.nodes, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(c.coeffs, p.coeffs, rtol=1e-12, atol=1e-300)
    # currently bit-identical (same fp ops, contraction disabled)
    assert np.array_equal(lp.coeffs, lc.coeffs)
    assert np.array_equal(rp.coeffs, rc.coeffs)


def test_trajectories_agree_all_opcodes(patched_backend):
    # exercise every tape opcode through both interpreters
    doc = config_doc(
        q_left="sin(x) + cos(x/2) - exp(-x) * abs(x - 1) + sqrt(x + 1) / (x + 2)^2",
        q_right="-(x - 2)^2 / 10 + 1",
        delta_left="abs(sin(x)) / 4",
        delta_right="(x - pi/2) / 2",
    )
    spec = parse_problem(doc)
    (lp, rp), (lc, rc) = _solve_pair(patched_backend, spec, 50.0)
    np.testing.assert_allclose(lc.coeffs, lp.coeffs, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(rc.coeffs, rp.coeffs, rtol=1e-12, atol=1e-300)


def test_vanishing_delay_agrees(patched_backend):
    # overlap iteration active near x = 0 on the left half
    spec = parse_problem(config_doc(q_left="1", q_right="1", delta_left="x/2"))
    (lp, _), (lc, _) = _solve_pair(patched_backend, spec, 30.0)
    x = np.linspace(0.0, np.pi / 2, 257)
    wp = lp.eval_many(x)
    wc = lc.eval_many(x)
    np.testing.assert_allclose(wc, wp, rtol=1e-12, atol=1e-14)


def test_failure_statuses_agree(patched_backend):
    # retarded argument ahead of x: both kernels flag the deviation
    bad = parse_problem(config_doc(delta_right="1.0"))
    for name in ("python", "cython"):
        patched_backend(name)
        with pytest.raises(DelayViolationError):
            solve_both(bad, 10.0)
    # non-finite coefficient: both kernels stop with the same error class
    blowup = parse_problem(config_doc(q_left="sqrt(x - 1)"))
    for name in ("python", "cython"):
        patched_backend(name)
        with pytest.raises(IntegrationError):
            solve_left(blowup, 10.0)
