"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting
``TDAPIPE_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

from . import _pykernels

_BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    _BACKENDS["cython"] = _ckernels

if _ckernels is not None and not os.environ.get("TDAPIPE_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"

_impl = _BACKENDS[BACKEND]
reduce_columns = _impl.reduce_columns
dtw = _impl.dtw
h0_union_find = _impl.h0_union_find


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name):
    """Module exposing ``reduce_columns``, ``dtw`` and ``h0_union_find``."""
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}") from None
