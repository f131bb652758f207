"""Second-order (Markov) type combinatorics.

The Markov type of a word x = (x_1, ..., x_n) over an m-letter alphabet
is its transition-count matrix C_ab = |{i : (x_i, x_{i+1}) = (a, b)}|
normalized by n-1, together with the initial symbol.  A count matrix is
realizable from initial u exactly when the transition multigraph admits
an Eulerian trail starting at u: per-symbol flow balance (out minus in
is +1 at u, -1 at some terminal, 0 elsewhere; or 0 everywhere for a
closed trail) plus connectivity of the positive-degree symbols.

Entropies are in base-d units.  Exact class sizes come from Whittle's
cofactor formula, cross-checked against a brute-force walk counter.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError

ENUMERATION_GUARD = 5_000_000  # max compositions visited by enumerate_types


# ---------------------------------------------------------------------------
# realizability

def _degree_data(counts):
    m = len(counts)
    out = [sum(counts[a]) for a in range(m)]
    inn = [sum(counts[a][b] for a in range(m)) for b in range(m)]
    return out, inn


def _connected(counts) -> bool:
    """All positive-degree symbols in one weakly connected component."""
    m = len(counts)
    out, inn = _degree_data(counts)
    active = [a for a in range(m) if out[a] or inn[a]]
    if not active:
        return False
    parent = {a: a for a in active}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(m):
        for b in range(m):
            if counts[a][b]:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
    return len({find(a) for a in active}) == 1


def admissible_initials(counts) -> list[int]:
    """Symbols u such that the counts are realizable with x_1 = u."""
    m = len(counts)
    out, inn = _degree_data(counts)
    if sum(out) == 0:
        return []
    diff = [out[a] - inn[a] for a in range(m)]
    pos = [a for a in range(m) if diff[a] > 0]
    neg = [a for a in range(m) if diff[a] < 0]
    if len(pos) > 1 or len(neg) > 1:
        return []
    if pos and (diff[pos[0]] != 1 or diff[neg[0]] != -1):
        return []
    if not _connected(counts):
        return []
    if pos:
        return pos
    return [a for a in range(m) if out[a] or inn[a]]


def flow_terminal(counts, initial: int) -> int:
    """Terminal symbol forced by the flow condition (initial for closed)."""
    m = len(counts)
    out, inn = _degree_data(counts)
    for a in range(m):
        if inn[a] - out[a] == 1:
            return a
    return initial


def is_realizable(counts, initial: int) -> bool:
    return initial in admissible_initials(counts)


@dataclass(frozen=True)
class MarkovType:
    """Transition counts (total n-1), initial symbol, and word length."""

    counts: tuple[tuple[int, ...], ...]
    initial: int
    n: int

    def __post_init__(self):
        total = sum(map(sum, self.counts))
        if self.n < 2:
            raise ValueError("Markov types need n >= 2")
        if total != self.n - 1:
            raise ValueError(f"counts total {total} != n-1 = {self.n - 1}")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("counts must be nonnegative")
        if not is_realizable(self.counts, self.initial):
            raise ValueError(f"counts not realizable from initial "
                             f"{self.initial}")

    @property
    def m(self) -> int:
        return len(self.counts)

    @property
    def terminal(self) -> int:
        return flow_terminal(self.counts, self.initial)

    def matrix(self) -> np.ndarray:
        """The normalized joint distribution Q = counts / (n-1)."""
        return np.asarray(self.counts, dtype=float) / (self.n - 1)


def markov_type(seq, m: int) -> MarkovType:
    seq = list(seq)
    n = len(seq)
    if n < 2:
        raise ValueError("Markov type undefined for sequences shorter than 2")
    if any(not 0 <= s < m for s in seq):
        raise ValueError(f"symbols must lie in [0, {m})")
    counts = [[0] * m for _ in range(m)]
    for a, b in zip(seq, seq[1:]):
        counts[a][b] += 1
    return MarkovType(tuple(tuple(r) for r in counts), seq[0], n)


# ---------------------------------------------------------------------------
# entropy / divergence of a count matrix (natural-log raw forms)

def entropy_score(counts) -> float:
    """sum_a R_a ln R_a - sum_ab C_ab ln C_ab; equals (n-1) ln(d) H_c."""
    acc = 0.0
    for row in counts:
        R = sum(row)
        if R:
            acc += R * math.log(R)
        for c in row:
            if c:
                acc -= c * math.log(c)
    return acc


def conditional_type_entropy(t: MarkovType, d: int) -> float:
    """H_c(Q) = H(Qrev | Qbar) in base-d units."""
    return entropy_score(t.counts) / ((t.n - 1) * math.log(d))


def divergence_score(counts, transition) -> float:
    """sum_ab C_ab ln(C_ab / (R_a P_ab)); equals (n-1) ln(d) D(Q||P)."""
    T = np.asarray(transition, dtype=float)
    acc = 0.0
    for a, row in enumerate(counts):
        R = sum(row)
        for b, c in enumerate(row):
            if c:
                if T[a, b] <= 0.0:
                    return math.inf
                acc += c * math.log(c / (R * T[a, b]))
    return acc


def type_divergence(t: MarkovType, transition, d: int) -> float:
    """D(Q||P) in base-d units; +inf when Q leaves P's support."""
    return divergence_score(t.counts, transition) / ((t.n - 1) * math.log(d))


# ---------------------------------------------------------------------------
# enumeration of realizable types

def _compositions(total: int, cells: int):
    for bars in itertools.combinations(range(total + cells - 1), cells - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + cells - 1 - prev - 1)
        yield out


def _composition_count(total: int, cells: int) -> int:
    return math.comb(total + cells - 1, cells - 1)


def enumerate_types(n: int, m: int, initial=None) -> list[MarkovType]:
    """All realizable Markov types of length-n words, optionally with a
    fixed initial symbol.  Every returned type is witnessed by at least
    one word; there are no duplicates."""
    if n < 2:
        raise ValueError("Markov types need n >= 2")
    total = n - 1
    cells = m * m
    if _composition_count(total, cells) > ENUMERATION_GUARD:
        raise ResourceLimitError(
            f"type enumeration at n={n}, m={m} needs "
            f"{_composition_count(total, cells)} compositions "
            f"(guard {ENUMERATION_GUARD})")
    out = []
    for flat in _compositions(total, cells):
        counts = tuple(tuple(flat[a * m:(a + 1) * m]) for a in range(m))
        for u in admissible_initials(counts):
            if initial is not None and u != initial:
                continue
            out.append(MarkovType(counts, u, n))
    return out


def distinct_type_matrices(n: int, m: int) -> list[tuple[tuple[int, ...], ...]]:
    """Distinct realizable count matrices (the union over initials)."""
    if n < 2:
        raise ValueError("Markov types need n >= 2")
    total = n - 1
    cells = m * m
    if _composition_count(total, cells) > ENUMERATION_GUARD:
        raise ResourceLimitError(
            f"type enumeration at n={n}, m={m} exceeds the guard")
    out = []
    for flat in _compositions(total, cells):
        counts = tuple(tuple(flat[a * m:(a + 1) * m]) for a in range(m))
        if admissible_initials(counts):
            out.append(counts)
    return out


# ---------------------------------------------------------------------------
# exact class sizes

def _int_det(M) -> int:
    """Bareiss fraction-free determinant of an integer matrix."""
    A = [row[:] for row in M]
    k = len(A)
    if k == 0:
        return 1
    sign = 1
    prev = 1
    for i in range(k - 1):
        if A[i][i] == 0:
            pivot = next((r for r in range(i + 1, k) if A[r][i]), None)
            if pivot is None:
                return 0
            A[i], A[pivot] = A[pivot], A[i]
            sign = -sign
        for r in range(i + 1, k):
            for c in range(i + 1, k):
                A[r][c] = (A[r][c] * A[i][i] - A[r][i] * A[i][c]) // prev
            A[r][i] = 0
        prev = A[i][i]
    return sign * A[-1][-1]


def whittle_count(counts, initial: int) -> int:
    """Number of words with the given transition counts and x_1 = initial,
    via Whittle's cofactor formula (0 when unrealizable).

    With out_a the row sums and t the terminal symbol, the count equals
    (prod_a out_a! / prod_ab C_ab!) times the (t, initial) cofactor of
    I - C/out over the positive-degree symbols.  Computed exactly in
    integers by clearing denominators row by row.
    """
    if initial not in admissible_initials(counts):
        return 0
    m = len(counts)
    out, inn = _degree_data(counts)
    t = flow_terminal(counts, initial)
    states = [a for a in range(m) if out[a] or inn[a]]
    pos = {a: i for i, a in enumerate(states)}
    k = len(states)
    # integer matrix diag(out) - C; deleting row t clears the only
    # possibly-zero out_a, so dividing by prod_{a != t} out_a is exact
    M = [[(out[a] if a == b else 0) - counts[a][b] for b in states]
         for a in states]
    minor = [[M[i][j] for j in range(k) if j != pos[initial]]
             for i in range(k) if i != pos[t]]
    det = _int_det(minor)
    sign = -1 if (pos[t] + pos[initial]) % 2 else 1
    multinom = 1
    for a in states:
        multinom *= math.factorial(out[a])
    for a in states:
        for b in states:
            multinom //= math.factorial(counts[a][b])
    denom = 1
    for a in states:
        if a != t:
            denom *= out[a]
    value, rem = divmod(sign * det * multinom, denom)
    if rem:
        raise ArithmeticError("Whittle cofactor did not divide evenly")
    return value


def exhaustive_count(counts, initial: int) -> int:
    """Walk-counting oracle for the class size (memoized DFS)."""
    if initial not in admissible_initials(counts):
        return 0
    m = len(counts)
    memo: dict = {}

    def rec(flat, cur):
        key = (flat, cur)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if not any(flat):
            memo[key] = 1
            return 1
        total = 0
        base = cur * m
        for b in range(m):
            if flat[base + b]:
                nxt = list(flat)
                nxt[base + b] -= 1
                total += rec(tuple(nxt), b)
        memo[key] = total
        return total

    flat0 = tuple(c for row in counts for c in row)
    return rec(flat0, initial)


def type_class_size(t: MarkovType, method: str = "whittle") -> int:
    """|T_Q^n(u)|, exact.  'whittle' is the fast path, 'exhaustive' the
    independent oracle; they agree wherever both run."""
    if method == "whittle":
        return whittle_count(t.counts, t.initial)
    if method == "exhaustive":
        return exhaustive_count(t.counts, t.initial)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# probabilities and the two standard bounds

def type_probability(ch, t: MarkovType) -> float:
    """Pr{ type of X = Q | X_1 = u } for the channel's Markov chain:
    class size times d^{-(n-1)[H_c(Q) + D(Q||P)]}; 0 when D = inf."""
    dscore = divergence_score(t.counts, ch.transition)
    if math.isinf(dscore):
        return 0.0
    size = type_class_size(t)
    return size * math.exp(-entropy_score(t.counts) - dscore)


def eq3_bound(t: MarkovType, d: int) -> float:
    """Upper bound d^{(n-1) H_c(Q)} on the class size."""
    return math.exp(entropy_score(t.counts))


def eq4_bound(t: MarkovType, ch) -> float:
    """Upper bound d^{-(n-1) D(Q||P)} on the conditional type probability."""
    dscore = divergence_score(t.counts, ch.transition)
    return 0.0 if math.isinf(dscore) else math.exp(-dscore)
