"""Select the compiled kernels when available, pure Python otherwise.

The compiled extension is optional: if it failed to build or is explicitly
disabled, the pure-Python reference kernels take over with identical
semantics.  Set ``LRKBEST_BACKEND=py`` to force the reference kernels or
``LRKBEST_BACKEND=c`` to fail loudly when the extension is missing.
"""

import os

from . import _kernels_py

__all__ = ["active", "BACKEND_NAME", "available_backends", "get_backend"]


def _load_compiled():
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


_requested = os.environ.get("LRKBEST_BACKEND", "").strip().lower()
if _requested in ("", "c", "py", "python"):
    pass
else:
    raise ImportError(
        f"LRKBEST_BACKEND={_requested!r} not understood; use 'c' or 'py'"
    )

if _requested in ("py", "python"):
    active = _kernels_py
else:
    _compiled = _load_compiled()
    if _compiled is None and _requested == "c":
        raise ImportError(
            "LRKBEST_BACKEND=c requested but the compiled kernels are unavailable"
        )
    active = _compiled if _compiled is not None else _kernels_py

BACKEND_NAME = active.BACKEND_NAME


def available_backends() -> tuple:
    """Names of the kernel sets importable in this installation."""
    names = ["python"]
    if _load_compiled() is not None:
        names.insert(0, "c")
    return tuple(names)


def get_backend(name: str):
    """Fetch a kernel module by name ('c' or 'python') regardless of selection."""
    if name in ("py", "python"):
        return _kernels_py
    if name == "c":
        compiled = _load_compiled()
        if compiled is None:
            raise ImportError("the compiled kernel extension is not available")
        return compiled
    raise ValueError(f"unknown backend {name!r}; use 'c' or 'python'")
