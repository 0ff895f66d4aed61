"""Backend selection for the hot kernels.

The compiled extension ``paravolt._kernels`` is used when it imports; setting
``PARAVOLT_PURE_PYTHON=1`` forces the numpy fallback.  ``BACKEND`` names the
choice and ``backend(name)`` returns either module explicitly (tests and the
benchmark compare them).
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def backend(name: str) -> ModuleType:
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def available() -> list[str]:
    return ["compiled", "python"] if _compiled is not None else ["python"]


if _compiled is not None and os.environ.get("PARAVOLT_PURE_PYTHON") != "1":
    BACKEND = "compiled"
    _impl = _compiled
else:
    BACKEND = "python"
    _impl = _fallback

bony_blocks = _impl.bony_blocks
volterra_midpoint = _impl.volterra_midpoint
bessel_j = _impl.bessel_j
bessel_zeros = _impl.bessel_zeros
