"""Kernel backend selection.

The compiled extension is preferred when built; a pure-numpy implementation
with identical semantics is used otherwise. ``BACKEND`` records the choice,
and setting ``CNEIGH_KERNEL=python`` (or ``compiled``) before import forces
one side, which the benchmark uses to compare both.
"""

import os

from cneigh import _kernels_py

_forced = os.environ.get("CNEIGH_KERNEL")

if _forced == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from cneigh import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise ImportError("CNEIGH_KERNEL=compiled but the extension is not built")
        _impl = _kernels_py
        BACKEND = "python"

loo_cell_summary_sorted = _impl.loo_cell_summary_sorted


def available_backends():
    """Name -> kernel mapping for every importable backend."""
    backends = {"python": _kernels_py.loo_cell_summary_sorted}
    try:
        from cneigh import _kernels

        backends["compiled"] = _kernels.loo_cell_summary_sorted
    except ImportError:
        pass
    return backends
