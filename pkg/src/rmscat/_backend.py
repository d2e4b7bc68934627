"""Select the compiled kernels when available, else the NumPy fallback.

Set ``RMSCAT_PURE=1`` to force the fallback.
"""

import os

from . import _fallback

impl = _fallback
name = "python"

if os.environ.get("RMSCAT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        impl = _kernels
        name = "compiled"


def get(which):
    """Return the kernel module named ``"compiled"`` or ``"python"``."""
    if which == "python":
        return _fallback
    if which == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {which!r}")
