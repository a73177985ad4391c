"""Kernel backend selection.

The compiled extension ``rankdistill._kernels`` is preferred when it built;
otherwise the numpy twin ``rankdistill._kernels_py`` is used. Set the
environment variable ``RANKDISTILL_BACKEND`` to ``compiled`` or ``python``
before import to force one side (the benchmark and the equivalence tests do
this through :func:`get_kernels`).
"""

from __future__ import annotations

import os

from . import _kernels_py
from .errors import ArgumentError

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

HAVE_COMPILED = _compiled is not None


def get_kernels(name: str | None = None):
    """Return a kernel module by name: 'compiled', 'python', or None for auto."""
    if name is None or name == "":
        return _compiled if _compiled is not None else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ArgumentError(
                "compiled kernels requested but the extension is not built; "
                "run `pip install -e . --no-build-isolation`"
            )
        return _compiled
    raise ArgumentError(f"unknown kernel backend {name!r}")


def available_backends() -> dict[str, object]:
    out: dict[str, object] = {"python": _kernels_py}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


kernels = get_kernels(os.environ.get("RANKDISTILL_BACKEND"))

BACKEND_NAME = "compiled" if getattr(kernels, "IS_COMPILED", False) else "python"
