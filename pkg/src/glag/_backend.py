"""Select the kernel implementation at import time.

The compiled ``glag._kernels`` extension is used when it was built; otherwise
the numpy versions in ``glag._fallback`` are bound.  Setting the environment
variable ``GLAG_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _fallback

if os.environ.get("GLAG_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

kernels = _compiled if _compiled is not None else _fallback
BACKEND = "cython" if _compiled is not None else "python"

ds_project = kernels.ds_project
lap_min = kernels.lap_min
group_shrink = kernels.group_shrink


def available():
    """Names of the kernel backends importable in this environment."""
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def get(name):
    """Return the kernel module registered under ``name``."""
    if name == "python":
        return _fallback
    if name == "cython" and _compiled is not None:
        return _compiled
    raise ValueError(f"kernel backend {name!r} is not available")
