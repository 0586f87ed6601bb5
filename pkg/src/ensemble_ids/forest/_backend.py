"""Selects the compiled split kernel when built, else the numpy one.

Set ``ENSEMBLE_IDS_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _splitter_py

PURE_ENV = "ENSEMBLE_IDS_PURE_PYTHON"

try:
    if os.environ.get(PURE_ENV, "") not in ("", "0"):
        raise ImportError("pure-Python kernel requested")
    from . import _splitter as _compiled
except ImportError:
    _compiled = None

KERNELS = {"python": _splitter_py}
if _compiled is not None:
    KERNELS["compiled"] = _compiled

DEFAULT = "compiled" if _compiled is not None else "python"


def get(name: str | None = None):
    name = name or DEFAULT
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} unavailable (have {sorted(KERNELS)})") from None
