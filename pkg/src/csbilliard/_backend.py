"""Kernel selection: compiled extension if importable, numpy fallback otherwise.

Set ``CSBILLIARD_BACKEND=python`` to force the fallback.
"""
import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _fallback}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled


def get(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return kernels
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(_BACKENDS)}") from None


def available():
    return sorted(_BACKENDS)


_requested = os.environ.get("CSBILLIARD_BACKEND", "").strip().lower()
if _requested:
    kernels = get(_requested)
    BACKEND = _requested
elif _compiled is not None:
    kernels = _compiled
    BACKEND = "cython"
else:
    kernels = _fallback
    BACKEND = "python"
