"""Pure-Python (numpy) kernels: full-enumeration scans over F_d^{2n}.

Same contract as the compiled ``_core`` extension.  Accumulation orders
are kept identical to the C loops (rows ascending, then cells
ascending; probability factors in position order) so both backends
return bit-identical arrays given the same inputs.

Vector index convention: big-endian base-d digits of the interleaved
coordinates (u1, v1, ..., un, vn), so numeric index order equals
lexicographic coordinate order.  The symbol at word position t is
u_{t+1} + d * v_{t+1}.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=8)
def _coords(n: int, d: int) -> np.ndarray:
    """(d^{2n}, 2n) int8 matrix of all coordinate vectors."""
    width = 2 * n
    idx = np.arange(d**width, dtype=np.int64)
    cols = [(idx // d ** (width - 1 - j)) % d for j in range(width)]
    return np.stack(cols, axis=1).astype(np.int8)


@lru_cache(maxsize=8)
def _symbols(n: int, d: int) -> np.ndarray:
    """(d^{2n}, n) int16 matrix of the symbol word of every vector."""
    c = _coords(n, d)
    return (c[:, 0::2].astype(np.int16) + d * c[:, 1::2]).astype(np.int16)


def hc_scores(n: int, d: int, ln_table: np.ndarray) -> np.ndarray:
    """Raw entropy score of every vector's Markov type.

    score(x) = sum_a R_a ln R_a - sum_{a,b} C_ab ln C_ab over the
    transition counts C of x's symbol word (R_a = row sums), using the
    supplied natural-log table; H_c = score / ((n-1) ln d).
    """
    S = _symbols(n, d)
    m = d * d
    ln_table = np.asarray(ln_table, dtype=np.float64)
    codes = S[:, :-1].astype(np.int32) * m + S[:, 1:]
    acc = np.zeros(S.shape[0], dtype=np.float64)
    head = S[:, :-1]
    nrows = np.zeros(S.shape[0], dtype=np.int32)
    ncells = np.zeros(S.shape[0], dtype=np.int32)
    for a in np.unique(head):
        R = (head == a).sum(axis=1)
        nrows += R > 0
        acc += R * ln_table[R]
    for code in np.unique(codes):
        C = (codes == code).sum(axis=1)
        ncells += C > 0
        acc -= C * ln_table[C]
    # a word whose empirical kernel is deterministic (one cell per
    # touched row) has H_c = 0 exactly; emit 0.0 rather than the float
    # dust of the cancelling sums, so zero-entropy ties break by index
    return np.where(nrows == ncells, 0.0, acc)


def seq_probs(n: int, d: int, transition: np.ndarray,
              initial: np.ndarray) -> np.ndarray:
    """Markov word probability of every vector's symbol word."""
    S = _symbols(n, d)
    T = np.asarray(transition, dtype=np.float64)
    p = np.asarray(initial, dtype=np.float64)
    probs = p[S[:, 0]].copy()
    for t in range(n - 1):
        probs *= T[S[:, t], S[:, t + 1]]
    return probs


def syndrome_keys(n: int, d: int, wbasis: np.ndarray) -> np.ndarray:
    """Packed syndrome of every vector against twisted basis rows.

    wbasis holds rows w(b) with <x, b> = x . w(b) mod d; the key packs
    the r syndrome digits as sum_t digit_t d^t.
    """
    wbasis = np.asarray(wbasis, dtype=np.int64)
    if wbasis.size == 0:
        return np.zeros(d ** (2 * n), dtype=np.int64)
    c = _coords(n, d).astype(np.int64)
    digits = (c @ wbasis.T) % d
    weights = d ** np.arange(wbasis.shape[0], dtype=np.int64)
    return digits @ weights


def coset_min(keys: np.ndarray, scores: np.ndarray,
              num_keys: int) -> np.ndarray:
    """Per-coset argmin of the score, ties broken by smallest index.

    Returns one representative index per key, in ascending key order.
    """
    order = np.argsort(scores, kind="stable")
    uniq, first = np.unique(keys[order], return_index=True)
    if len(uniq) != num_keys:
        raise ValueError(f"expected {num_keys} cosets, found {len(uniq)}")
    return order[first].astype(np.int64)
