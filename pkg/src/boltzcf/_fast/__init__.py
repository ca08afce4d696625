"""Backend selection: compiled core when available, numpy fallback otherwise.

``BOLTZCF_BACKEND=pure`` forces the fallback; ``BOLTZCF_BACKEND=compiled``
raises if the extension is missing.  The active backend's name is exposed as
``BACKEND`` and reported in experiment fingerprints.
"""

import os

from . import pure as _pure
from .stencils import derivative_tables

_requested = os.environ.get("BOLTZCF_BACKEND", "auto").lower()

if _requested == "pure":
    _impl = _pure
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = _pure

BACKEND = _impl.NAME
eval_profile = _impl.eval_profile
collision_bracket = _impl.collision_bracket
gain_bilinear = _impl.gain_bilinear

__all__ = [
    "BACKEND",
    "derivative_tables",
    "eval_profile",
    "collision_bracket",
    "gain_bilinear",
    "pure_backend",
]


def pure_backend():
    """The numpy implementation, importable regardless of selection (benchmarks)."""
    return _pure
