"""Kernel core selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is missing or when ``ADASCALE_PURE_PYTHON=1`` is set (useful for
benchmarking the two cores against each other).
"""

import os

if os.environ.get("ADASCALE_PURE_PYTHON", "") == "1":
    from . import _pykernels as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _pykernels as kernels


def active_core() -> str:
    """Name of the kernel core selected at import time."""
    return "compiled" if kernels.COMPILED else "python"
