"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when it is
absent or when ``CAMALIGN_BACKEND=python`` is set. Both expose the same
functions (compare / write / shift_tags / execute) over the same buffers.
"""

import os

from . import _kernel_fallback

_FORCED = os.environ.get("CAMALIGN_BACKEND", "").strip().lower()

try:
    from . import _kernel  # type: ignore[attr-defined]
except ImportError:
    _kernel = None

if _FORCED in ("python", "py", "fallback"):
    DEFAULT = _kernel_fallback
elif _FORCED in ("c", "compiled", "native"):
    if _kernel is None:
        raise ImportError("CAMALIGN_BACKEND requested the compiled kernel "
                          "but camalign._kernel is not built")
    DEFAULT = _kernel
else:
    DEFAULT = _kernel if _kernel is not None else _kernel_fallback


def available_backends():
    """Name -> module map of importable kernels."""
    out = {"python": _kernel_fallback}
    if _kernel is not None:
        out["compiled"] = _kernel
    return out


def get_backend(name=None):
    if name is None:
        return DEFAULT
    try:
        return available_backends()[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; "
                         f"available: {sorted(available_backends())}") from None


def backend_name():
    return DEFAULT.NAME
