"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``FEEDBACKFAIR_PURE=1`` is set, the numpy implementations are used.  Both
produce identical results.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("FEEDBACKFAIR_PURE"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py

assign_cells = _impl.assign_cells
eqop_thresholds = _impl.eqop_thresholds
shift_population = _impl.shift_population
