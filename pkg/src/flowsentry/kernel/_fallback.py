"""Pure numpy versions of the compiled neighbor kernels.

Summation order matches the compiled loops (CSR order per target row), so both
backends agree bit for bit on the same inputs.
"""

import numpy as np


def _rows(indptr):
    return np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))


def neighbor_mean(indptr, indices, h):
    n = len(indptr) - 1
    deg = np.diff(indptr)
    out = np.zeros((n, h.shape[1]))
    np.add.at(out, _rows(indptr), h[indices])
    nz = deg > 0
    out[nz] /= deg[nz, None]
    return out


def neighbor_mean_adjoint(indptr, indices, g, n_src):
    deg = np.diff(indptr)
    rows = _rows(indptr)
    out = np.zeros((n_src, g.shape[1]))
    np.add.at(out, indices, g[rows] / deg[rows, None])
    return out


def nearest_neighbor_swap(indptr, indices, x, mask):
    out = np.array(x, dtype=np.float64, copy=True)
    for u in np.flatnonzero(mask):
        nbrs = indices[indptr[u]:indptr[u + 1]]
        if nbrs.size == 0:
            continue
        diff = x[u] - x[nbrs]
        dist = (diff * diff).sum(axis=1)
        # np.argmin returns the first minimum; CSR neighbors are sorted ascending
        out[u] = x[nbrs[np.argmin(dist)]]
    return out
