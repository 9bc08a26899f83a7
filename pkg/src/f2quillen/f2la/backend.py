"""Kernel backend selection.

The compiled extension is used when it imports; setting
``F2QUILLEN_BACKEND=python`` forces the pure-Python kernels.
"""

from __future__ import annotations

import os

from . import _pycore

_requested = os.environ.get("F2QUILLEN_BACKEND", "").strip().lower()

if _requested == "python":
    kernels = _pycore
else:
    try:
        from . import _core as kernels  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise
        kernels = _pycore

BACKEND: str = kernels.BACKEND


def available() -> dict[str, object]:
    """Map backend name to kernel module for every importable backend."""
    found: dict[str, object] = {"python": _pycore}
    try:
        from . import _core

        found["compiled"] = _core
    except ImportError:
        pass
    return found
