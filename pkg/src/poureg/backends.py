"""Kernel backend selection.

The accumulation/evaluation hot loops exist twice: a compiled extension
(``poureg._kernels``, Cython) and a pure-numpy fallback
(``poureg._kernels_np``) with identical semantics and accumulation order.
The compiled backend is used when importable; set ``POUREG_KERNELS`` to
``python`` or ``compiled`` to force a choice at import time.
"""

import os

from . import _kernels_np

try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

_BACKENDS = {"python": _kernels_np}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available_backends():
    """Names of the importable kernel backends."""
    return tuple(sorted(_BACKENDS))


def get_kernels(name=None):
    """Return a kernel module by name, or the default backend if name is None."""
    if name is None:
        name = os.environ.get("POUREG_KERNELS", "").strip().lower() or None
    if name is None:
        return _compiled if _compiled is not None else _kernels_np
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {', '.join(available_backends())}"
        ) from None


# Backend bound at import; the whole library routes through this module object.
kernels = get_kernels()
