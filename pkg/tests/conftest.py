import math
from pathlib import Path

import pytest

from sldelay.problem import load_problem

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def config_doc(**overrides):
    """Baseline valid config (the zero-coefficient reduction), overridable."""
    doc = {
        "p1": 1.0,
        "p2": 1.0,
        "gamma1": 1.0,
        "gamma2": 1.0,
        "delta1": 1.0,
        "delta2": 1.0,
        "a1": 0.0,
        "a2": 1.0,
        "d": 1.0,
        "q_left": "0",
        "q_right": "0",
        "delta_left": "0",
        "delta_right": "0",
    }
    doc.update(overrides)
    return doc


@pytest.fixture(scope="session")
def trivial_spec():
    return load_problem(CONFIG_DIR / "trivial.json")


@pytest.fixture(scope="session")
def trivial_d0_spec():
    return load_problem(config_doc(d=0.0))


@pytest.fixture(scope="session")
def canonical_spec():
    return load_problem(CONFIG_DIR / "canonical.json")


def tan_root(n):
    """Oracle for the zero-coefficient problem with d = 1.

    Eigenroots solve tan(s*pi) = s, rewritten pole-free as
    g(s) = sin(s*pi) - s*cos(s*pi) = 0, which changes sign across [n, n+1]:
    g(n) = -n*(-1)^n and g(n+1) = (n+1)*(-1)^n.  Plain bisection, no use of
    the package under test.
    """

    def g(s):
        return math.sin(s * math.pi) - s * math.cos(s * math.pi)

    lo, hi = float(n), float(n + 1)
    glo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gmid = g(mid)
        if gmid == 0.0:
            return mid
        if (glo < 0.0) == (gmid < 0.0):
            lo, glo = mid, gmid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)
