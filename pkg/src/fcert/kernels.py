"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy implementation in ``_pykernels`` is loaded. Both expose
``robust_scores``, ``certify_batch`` and ``extrema`` with identical results.
"""
from __future__ import annotations

from . import _pykernels

try:
    from . import _ckernels as _impl
except ImportError:  # extension not built
    _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"


def available_backends() -> dict:
    out = {"python": _pykernels}
    if _impl is not _pykernels:
        out["cython"] = _impl
    return out


robust_scores = _impl.robust_scores
certify_batch = _impl.certify_batch
extrema = _impl.extrema
