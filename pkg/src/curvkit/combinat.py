"""Multi-index combinatorics and generalized Kronecker deltas.

Every antisymmetric slot in the package is addressed by a strictly increasing
tuple of axis labels (a :class:`MultiIndex`), stored in lexicographic order.
The cached index tables at the bottom of this module are what the double-form
algebra uses to vectorize products and contractions.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations
from math import comb

import numpy as np


class DegreeError(ValueError):
    """A degree is outside the admissible range for the dimension."""


class ArityError(ValueError):
    """Two index tuples that must have equal length do not."""


class MultiIndex(tuple):
    """Strictly increasing tuple of axis labels."""

    def __new__(cls, indices=()):
        idx = tuple(int(i) for i in indices)
        for a, b in zip(idx, idx[1:]):
            if a >= b:
                raise ValueError(f"multi-index must be strictly increasing, got {idx}")
        if idx and idx[0] < 0:
            raise ValueError(f"negative axis label in {idx}")
        return super().__new__(cls, idx)

    @property
    def degree(self) -> int:
        return len(self)

    def rank(self, n: int) -> int:
        return rank(self, n)

    def __repr__(self):
        return f"MultiIndex{tuple(self)}"


def _check_degree(n: int, r: int) -> None:
    if r < 0 or r > n:
        raise DegreeError(f"degree {r} invalid in dimension {n}")


@lru_cache(maxsize=None)
def _enumerate(n: int, r: int) -> tuple:
    return tuple(MultiIndex(c) for c in combinations(range(n), r))


def enumerate_multi_indices(n: int, r: int) -> list[MultiIndex]:
    """All C(n, r) increasing r-tuples of {0..n-1} in lexicographic order."""
    _check_degree(n, r)
    return list(_enumerate(n, r))


@lru_cache(maxsize=None)
def _rank_map(n: int, r: int) -> dict:
    return {idx: i for i, idx in enumerate(_enumerate(n, r))}


def rank(idx, n: int) -> int:
    """Lexicographic position of ``idx`` among the increasing tuples of its degree."""
    idx = MultiIndex(idx)
    _check_degree(n, len(idx))
    if idx and idx[-1] >= n:
        raise ValueError(f"{idx} has labels outside 0..{n - 1}")
    # combinatorial number system, lexicographic variant
    r = len(idx)
    pos, prev = 0, -1
    for slot, a in enumerate(idx):
        for b in range(prev + 1, a):
            pos += comb(n - b - 1, r - slot - 1)
        prev = a
    return pos


def unrank(i: int, n: int, r: int) -> MultiIndex:
    _check_degree(n, r)
    if not 0 <= i < comb(n, r):
        raise IndexError(f"rank {i} out of range for C({n},{r})")
    out, a = [], 0
    for slot in range(r):
        while True:
            block = comb(n - a - 1, r - slot - 1)
            if i < block:
                break
            i -= block
            a += 1
        out.append(a)
        a += 1
    return MultiIndex(out)


def sort_sign(t) -> tuple[MultiIndex | None, int]:
    """Sort an index tuple, returning the increasing tuple and the permutation sign.

    A repeated index gives ``(None, 0)``.
    """
    t = list(t)
    if len(set(t)) != len(t):
        return None, 0
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(t)):
        j = i
        while j > 0 and t[j - 1] > t[j]:
            t[j - 1], t[j] = t[j], t[j - 1]
            sign = -sign
            j -= 1
    return MultiIndex(t), sign


def _det_delta(upper, lower) -> int:
    p = len(upper)
    total = 0
    for perm in permutations(range(p)):
        term = 1
        for a, b in enumerate(perm):
            if upper[a] != lower[b]:
                term = 0
                break
        if term:
            _, s = sort_sign(perm)
            total += s
    return total


def generalized_kronecker(upper, lower) -> int:
    """Generalized Kronecker delta: det of the p x p matrix of ordinary deltas."""
    upper, lower = tuple(upper), tuple(lower)
    if len(upper) != len(lower):
        raise ArityError(f"arity mismatch: {len(upper)} upper vs {len(lower)} lower")
    if len(upper) == 0:
        raise ArityError("generalized Kronecker delta needs at least one index")
    if len(upper) <= 4:
        return _det_delta(upper, lower)
    su, sgn_u = sort_sign(upper)
    sl, sgn_l = sort_sign(lower)
    if su is None or sl is None or su != sl:
        return 0
    return sgn_u * sgn_l


# ---------------------------------------------------------------------------
# index tables for the vectorized double-form kernels


@lru_cache(maxsize=None)
def shuffle_table(n: int, r: int, p: int):
    """Splittings of every increasing (r+p)-tuple into an r-part and a p-part.

    Returns ``(first, second, sign)``, each of shape ``(C(n, r+p), C(r+p, r))``:
    ranks of the r-part and p-part and the shuffle sign.
    """
    _check_degree(n, r + p)
    rows = _enumerate(n, r + p)
    m = comb(r + p, r)
    first = np.zeros((len(rows), m), dtype=np.intp)
    second = np.zeros((len(rows), m), dtype=np.intp)
    sign = np.zeros((len(rows), m))
    rk_r, rk_p = _rank_map(n, r), _rank_map(n, p)
    for row, idx in enumerate(rows):
        for col, pos in enumerate(combinations(range(r + p), r)):
            a = tuple(idx[i] for i in pos)
            b = tuple(idx[i] for i in range(r + p) if i not in pos)
            _, s = sort_sign(pos + tuple(i for i in range(r + p) if i not in pos))
            first[row, col] = rk_r[a]
            second[row, col] = rk_p[b]
            sign[row, col] = s
    for arr in (first, second, sign):
        arr.setflags(write=False)
    return first, second, sign


@lru_cache(maxsize=None)
def insertion_table(n: int, r: int):
    """Where axis ``a`` lands when prepended to an increasing (r-1)-tuple.

    Returns ``(target, sign)`` of shape ``(C(n, r-1), n)``; ``sign`` is the
    sign of sorting ``(a,) + I`` and 0 when ``a`` already occurs in ``I``.
    """
    _check_degree(n, r)
    if r < 1:
        raise DegreeError("insertion needs r >= 1")
    rows = _enumerate(n, r - 1)
    rk = _rank_map(n, r)
    target = np.zeros((len(rows), n), dtype=np.intp)
    sign = np.zeros((len(rows), n))
    for row, idx in enumerate(rows):
        for a in range(n):
            srt, s = sort_sign((a,) + tuple(idx))
            if s:
                target[row, a] = rk[srt]
                sign[row, a] = s
    target.setflags(write=False)
    sign.setflags(write=False)
    return target, sign


@lru_cache(maxsize=None)
def complement_table(n: int, r: int):
    """Rank of the complement of each increasing r-tuple and sign(I, I^c)."""
    _check_degree(n, r)
    rk = _rank_map(n, n - r)
    comp = np.zeros(comb(n, r), dtype=np.intp)
    sign = np.zeros(comb(n, r))
    for i, idx in enumerate(_enumerate(n, r)):
        rest = tuple(a for a in range(n) if a not in idx)
        comp[i] = rk[rest]
        sign[i] = sort_sign(tuple(idx) + rest)[1]
    return comp, sign


def compound_matrix(a: np.ndarray, r: int) -> np.ndarray:
    """r-th compound: the matrix of r x r minors, rows/cols in lexicographic order.

    Works on stacks of matrices (leading batch axes).
    """
    a = np.asarray(a)
    n = a.shape[-1]
    if r == 0:
        return np.ones(a.shape[:-2] + (1, 1), dtype=a.dtype)
    idx = np.array(_enumerate(n, r), dtype=np.intp)
    sub = a[..., idx[:, None, :, None], idx[None, :, None, :]]
    if r == 1:
        return sub[..., 0, 0]
    if r == 2:
        return sub[..., 0, 0] * sub[..., 1, 1] - sub[..., 0, 1] * sub[..., 1, 0]
    return np.linalg.det(sub)
