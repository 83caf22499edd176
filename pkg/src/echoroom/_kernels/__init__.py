"""Kernel backend selection: compiled extension if available, else pure Python.

Set ``ECHOROOM_BACKEND=python`` to force the fallback (useful for
benchmarking and debugging); any other value, or an import failure of the
extension, is resolved automatically.
"""

import os

from . import py_backend

_forced = os.environ.get("ECHOROOM_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = py_backend
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = py_backend

run_restart = _impl.run_restart
BACKEND_NAME = _impl.BACKEND_NAME


def backend_name() -> str:
    """Name of the kernel backend active in this process."""
    return BACKEND_NAME
