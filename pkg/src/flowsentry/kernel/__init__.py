"""Neighbor kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; set ``FLOWSENTRY_BACKEND=python``
to force the fallback. :data:`BACKEND` names the active one.
"""

import os

import numpy as np

from . import _fallback

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_forced = os.environ.get("FLOWSENTRY_BACKEND", "").strip().lower()
if _forced not in ("", "python", "compiled"):
    raise ImportError(f"FLOWSENTRY_BACKEND must be 'python' or 'compiled', got {_forced!r}")
if _forced == "compiled" and _ckernels is None:
    raise ImportError("FLOWSENTRY_BACKEND=compiled but flowsentry.kernel._ckernels is not built")

_impl = _fallback if (_forced == "python" or _ckernels is None) else _ckernels
BACKEND = "python" if _impl is _fallback else "compiled"

AVAILABLE = {"python": _fallback}
if _ckernels is not None:
    AVAILABLE["compiled"] = _ckernels


def _csr(indptr, indices):
    return (np.ascontiguousarray(indptr, dtype=np.int64),
            np.ascontiguousarray(indices, dtype=np.int64))


def neighbor_mean(indptr, indices, h, backend=None):
    """Row ``u`` of the result is the mean of ``h[v]`` over the CSR neighbors of ``u``.

    Rows without neighbors are zero.
    """
    impl = AVAILABLE[backend] if backend else _impl
    indptr, indices = _csr(indptr, indices)
    return impl.neighbor_mean(indptr, indices, np.ascontiguousarray(h, dtype=np.float64))


def neighbor_mean_adjoint(indptr, indices, g, n_src, backend=None):
    """Transpose of :func:`neighbor_mean` applied to ``g``."""
    impl = AVAILABLE[backend] if backend else _impl
    indptr, indices = _csr(indptr, indices)
    return impl.neighbor_mean_adjoint(indptr, indices,
                                      np.ascontiguousarray(g, dtype=np.float64), int(n_src))


def nearest_neighbor_swap(indptr, indices, x, mask, backend=None):
    """Copy of ``x`` where each masked row with neighbors takes its closest neighbor's row.

    Closeness is Euclidean; ties go to the lowest neighbor index.
    """
    impl = AVAILABLE[backend] if backend else _impl
    indptr, indices = _csr(indptr, indices)
    return impl.nearest_neighbor_swap(indptr, indices,
                                      np.ascontiguousarray(x, dtype=np.float64),
                                      np.ascontiguousarray(mask, dtype=np.uint8))
