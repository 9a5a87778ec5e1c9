"""Pick the compiled kernels when they import, else the numpy fallback.

Set ``DSCOFS_BACKEND=python`` to force the fallback (useful for comparing
the two, or on platforms where the extension did not build).
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


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    """Return the kernel module ``name`` (``"cython"`` or ``"python"``).

    With no name, the environment override applies and the compiled
    kernels are preferred.
    """
    if name is None:
        name = os.environ.get("DSCOFS_BACKEND", "").strip().lower() or None
    if name is None:
        return _BACKENDS.get("cython", _fallback)
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}") from None


def backend_name(module=None):
    module = module if module is not None else get_backend()
    return "cython" if module is _compiled and _compiled is not None else "python"
