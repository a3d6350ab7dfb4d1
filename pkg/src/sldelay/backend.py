"""Stepping-kernel selection.

The compiled Cython kernel (`sldelay._core`) and the pure-Python mirror
(`sldelay._pycore`) expose the same `integrate_delay` entry point.  The
compiled one is picked when importable; set SLDELAY_BACKEND=python or
=cython to force a choice (forcing cython without the extension built is
an error rather than a silent fallback).
"""

from __future__ import annotations

import os

__all__ = ["BACKEND", "get_kernel", "integrate_delay"]

_forced = os.environ.get("SLDELAY_BACKEND", "").strip().lower()

if _forced in ("", "auto"):
    try:
        from . import _core as _kernel

        BACKEND = "cython"
    except ImportError:
        from . import _pycore as _kernel

        BACKEND = "python"
elif _forced == "python":
    from . import _pycore as _kernel

    BACKEND = "python"
elif _forced == "cython":
    try:
        from . import _core as _kernel
    except ImportError as exc:
        raise ImportError(
            "SLDELAY_BACKEND=cython but the compiled kernel is not available: %s" % exc
        ) from exc

    BACKEND = "cython"
else:
    raise ImportError("SLDELAY_BACKEND must be 'auto', 'python' or 'cython', not %r" % _forced)

integrate_delay = _kernel.integrate_delay


def get_kernel(name=None):
    """Return a kernel module by name ('python'/'cython'), default the active one."""
    if name in (None, BACKEND):
        return _kernel
    if name == "python":
        from . import _pycore

        return _pycore
    if name == "cython":
        from . import _core

        return _core
    raise ValueError("unknown backend %r" % name)
