"""Hot loops of the resampling statistics.

Each kernel exists twice: a compiled loop (``*_nb``) and a vectorized numpy
version (``*_np``). The public names dispatch on :data:`USE_NUMBA`. Both paths
consume identical index arrays, so resampled results do not depend on which
one ran.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit

# Rows per block in the numpy bootstrap path; bounds the (rows, n_a, n_b) temporary.
_NP_BLOCK = 256
# Below this many cross pairs the compiled AUC loops compare directly instead of sorting.
_PAIRWISE_MAX = 512


@njit
def _u_sorted(a, b_sorted):
    # counts are integers, so this matches the pairwise definition exactly
    u = 0.0
    for i in range(a.shape[0]):
        lo = np.searchsorted(b_sorted, a[i], side="left")
        hi = np.searchsorted(b_sorted, a[i], side="right")
        u += lo + 0.5 * (hi - lo)
    return u


@njit
def auc_u_nb(a, b):
    return _u_sorted(a, np.sort(b))


def auc_u_np(a, b):
    a = np.asarray(a, dtype=np.float64)[:, None]
    b = np.asarray(b, dtype=np.float64)[None, :]
    return float(np.count_nonzero(a > b)) + 0.5 * float(np.count_nonzero(a == b))


@njit
def bootstrap_auc_nb(a, b, ia, ib):
    reps = ia.shape[0]
    na = ia.shape[1]
    nb = ib.shape[1]
    out = np.empty(reps)
    denom = float(na * nb)
    av = np.empty(na)
    bv = np.empty(nb)
    pairwise = na * nb <= _PAIRWISE_MAX
    for r in range(reps):
        for i in range(na):
            av[i] = a[ia[r, i]]
        for j in range(nb):
            bv[j] = b[ib[r, j]]
        if pairwise:
            u = 0.0
            for i in range(na):
                for j in range(nb):
                    if av[i] > bv[j]:
                        u += 1.0
                    elif av[i] == bv[j]:
                        u += 0.5
        else:
            bv.sort()
            u = _u_sorted(av, bv)
        out[r] = u / denom
    return out


def bootstrap_auc_np(a, b, ia, ib):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    reps, na = ia.shape
    nb = ib.shape[1]
    out = np.empty(reps)
    for start in range(0, reps, _NP_BLOCK):
        stop = min(start + _NP_BLOCK, reps)
        av = a[ia[start:stop]][:, :, None]
        bv = b[ib[start:stop]][:, None, :]
        gt = np.count_nonzero(av > bv, axis=(1, 2))
        eq = np.count_nonzero(av == bv, axis=(1, 2))
        out[start:stop] = (gt + 0.5 * eq) / (na * nb)
    return out


@njit
def row_take_sum_nb(values, idx, k):
    rows = idx.shape[0]
    out = np.empty(rows)
    for r in range(rows):
        s = 0.0
        for j in range(k):
            s += values[idx[r, j]]
        out[r] = s
    return out


def row_take_sum_np(values, idx, k):
    return np.asarray(values, dtype=np.float64)[idx[:, :k]].sum(axis=1)


@njit
def row_paired_dot_nb(x, y, perms):
    rows = perms.shape[0]
    n = perms.shape[1]
    out = np.empty(rows)
    for r in range(rows):
        s = 0.0
        for i in range(n):
            s += x[i] * y[perms[r, i]]
        out[r] = s
    return out


def row_paired_dot_np(x, y, perms):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return (x[None, :] * y[perms]).sum(axis=1)


NUMBA_KERNELS = {
    "auc_u": auc_u_nb,
    "bootstrap_auc": bootstrap_auc_nb,
    "row_take_sum": row_take_sum_nb,
    "row_paired_dot": row_paired_dot_nb,
}
NUMPY_KERNELS = {
    "auc_u": auc_u_np,
    "bootstrap_auc": bootstrap_auc_np,
    "row_take_sum": row_take_sum_np,
    "row_paired_dot": row_paired_dot_np,
}
BACKEND = "numba" if USE_NUMBA else "numpy"
_ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS


def auc_u(a: np.ndarray, b: np.ndarray) -> float:
    """Mann-Whitney U of ``a`` over ``b`` with half credit for ties."""
    return float(_ACTIVE["auc_u"](a, b))


def bootstrap_auc(a: np.ndarray, b: np.ndarray, ia: np.ndarray, ib: np.ndarray) -> np.ndarray:
    """AUC for every row of resample indices ``ia`` (into ``a``) and ``ib`` (into ``b``)."""
    return _ACTIVE["bootstrap_auc"](a, b, ia, ib)


def row_take_sum(values: np.ndarray, idx: np.ndarray, k: int) -> np.ndarray:
    """Sum of ``values`` over the first ``k`` indices of every row of ``idx``."""
    return _ACTIVE["row_take_sum"](values, idx, k)


def row_paired_dot(x: np.ndarray, y: np.ndarray, perms: np.ndarray) -> np.ndarray:
    """``sum_i x[i] * y[perm[i]]`` for every permutation row."""
    return _ACTIVE["row_paired_dot"](x, y, perms)
