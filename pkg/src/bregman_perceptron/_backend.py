"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python module
is the fallback. Set ``BREGMAN_PERCEPTRON_PURE=1`` to force the fallback
(useful for benchmarking and for debugging suspected kernel issues). Both
backends produce bit-identical results, so the choice never affects output,
only speed.
"""

from __future__ import annotations

import os

_force_pure = os.environ.get("BREGMAN_PERCEPTRON_PURE", "") not in ("", "0")

if _force_pure:
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels_cy as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

BACKEND: str = kernels.BACKEND_NAME

__all__ = ["kernels", "BACKEND"]
