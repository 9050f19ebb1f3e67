"""Kernel dispatch: compiled extension when built, numpy fallback otherwise.

Set ``ORISVLC_PURE_PYTHON=1`` to force the fallback. Both backends expose the
same functions with the same contracts.
"""

import os

from . import _kernels_py

_NAMES = ("segments_blocked", "pivot", "price", "primal_ratio", "dual_leave", "dual_ratio")

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("ORISVLC_PURE_PYTHON"):
    try:
        from . import _kernels_c as _impl  # noqa: F811
    except ImportError:  # extension not built
        _impl = _kernels_py
    else:
        BACKEND = "cython"

segments_blocked = _impl.segments_blocked
pivot = _impl.pivot
price = _impl.price
primal_ratio = _impl.primal_ratio
dual_leave = _impl.dual_leave
dual_ratio = _impl.dual_ratio


def backend(name):
    """Module implementing the kernels for ``name`` ("python" or "cython")."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels_c
        return _kernels_c
    raise ValueError(name)
