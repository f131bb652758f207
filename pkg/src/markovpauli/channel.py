"""Markov-modulated Pauli channel model and its entropy functionals.

A channel is a first-order homogeneous Markov chain over the error
alphabet X = {0..d-1}^2 (size m = d^2): an initial distribution p and
transition probabilities P(v|u).  The probability of an error word is

    P_n(x_1, ..., x_n) = p(x_1) * prod_j P(x_{j+1} | x_j).

All entropic quantities are returned in base-d units (log_d); for d=2
that coincides with bits.  The conventions 0 log 0 = 0 and
log(a/0) = +inf for a > 0 apply throughout, and an infinite divergence
is an ordinary value, not an error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChainError
from .symplectic import check_prime, symbol_index

PROB_ATOL = 1e-12
TP_ATOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MarkovPauliChannel:
    """Transition matrix and initial distribution over X = {0..d-1}^2.

    Symbol s encodes the error X^i Z^j with s = i + d*j, so for d=2 the
    alphabet order is I, X, Z, XZ.
    """

    d: int
    transition: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        check_prime(self.d)
        m = self.d**2
        T = _frozen(self.transition)
        p = _frozen(self.initial)
        if T.shape != (m, m):
            raise ValueError(f"transition must be {m}x{m}, got {T.shape}")
        if p.shape != (m,):
            raise ValueError(f"initial must have length {m}, got {p.shape}")
        if (T < 0).any():
            u, v = map(int, np.argwhere(T < 0)[0])
            raise ValueError(f"transition[{u}][{v}] = {T[u, v]} is negative")
        rows = T.sum(axis=1)
        bad = np.argwhere(np.abs(rows - 1.0) > PROB_ATOL)
        if bad.size:
            u = int(bad[0][0])
            raise ValueError(f"transition row {u} sums to {rows[u]!r}, not 1")
        if (p < 0).any():
            u = int(np.argwhere(p < 0)[0][0])
            raise ValueError(f"initial entry {u} = {p[u]} is negative")
        if abs(p.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"initial sums to {p.sum()!r}, not 1")
        object.__setattr__(self, "transition", T)
        object.__setattr__(self, "initial", p)

    @property
    def m(self) -> int:
        return self.d**2

    @classmethod
    def from_matrix(cls, d: int, transition, initial=None) -> "MarkovPauliChannel":
        """Build a channel; initial defaults to the stationary distribution."""
        if initial is None:
            probe = cls(d, transition, np.full(d**2, 1.0 / d**2))
            initial = stationary_distribution(probe)
        return cls(d, transition, initial)

    @classmethod
    def memoryless(cls, single, d: int) -> "MarkovPauliChannel":
        """I.i.d. errors: every row of the transition matrix equals `single`."""
        single = np.asarray(single, dtype=float)
        return cls(d, np.tile(single, (d**2, 1)), single)

    def to_config(self) -> dict:
        return {"d": self.d,
                "transition": self.transition.tolist(),
                "initial": self.initial.tolist()}


def sequence_probability(ch: MarkovPauliChannel, seq) -> float:
    """P_n(x) = p(x_1) prod_j P(x_{j+1}|x_j); 0 as soon as a factor is 0."""
    seq = list(seq)
    if not seq:
        raise ValueError("sequence must have length >= 1")
    m = ch.m
    if any(not 0 <= s < m for s in seq):
        raise ValueError(f"symbols must lie in [0, {m})")
    p = float(ch.initial[seq[0]])
    for a, b in zip(seq, seq[1:]):
        p *= float(ch.transition[a, b])
    return p


def _closed_classes(T: np.ndarray) -> list[set[int]]:
    """Closed communicating classes of the positive-entry digraph."""
    m = T.shape[0]
    adj = [set(np.nonzero(T[u] > 0)[0].tolist()) for u in range(m)]

    def reach(starts, edges):
        seen = set(starts)
        stack = list(starts)
        while stack:
            u = stack.pop()
            for v in edges[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    radj = [set() for _ in range(m)]
    for u in range(m):
        for v in adj[u]:
            radj[v].add(u)
    classes = []
    assigned = set()
    for u in range(m):
        if u in assigned:
            continue
        scc = reach([u], adj) & reach([u], radj)
        assigned |= scc
        if all(adj[w] <= scc for w in scc):
            classes.append(scc)
    return classes


def stationary_distribution(ch: MarkovPauliChannel) -> np.ndarray:
    """Unique q with qP = q, or DegenerateChainError when not unique.

    Uniqueness holds exactly when the chain has a single closed
    communicating class; states outside it get weight 0.  Solved
    directly as a linear system, then polished by power iteration until
    the residual ||qP - q||_inf is at numerical floor.
    """
    T = ch.transition
    classes = _closed_classes(T)
    if len(classes) != 1:
        raise DegenerateChainError(
            f"stationary distribution is not unique: {len(classes)} closed "
            f"communicating classes {sorted(map(sorted, classes))}")
    cls_idx = sorted(classes[0])
    Tc = T[np.ix_(cls_idx, cls_idx)]
    r = len(cls_idx)
    M = Tc.T - np.eye(r)
    M[-1, :] = 1.0
    b = np.zeros(r)
    b[-1] = 1.0
    qc = np.linalg.solve(M, b)
    qc = np.maximum(qc, 0.0)
    qc /= qc.sum()
    for _ in range(50):  # one step per spec; extra only if residual high
        res = np.max(np.abs(qc @ Tc - qc))
        qc = qc @ Tc
        qc /= qc.sum()
        if res <= 1e-13:
            break
    q = np.zeros(ch.m)
    q[cls_idx] = qc
    if np.max(np.abs(q @ T - q)) > PROB_ATOL:
        raise DegenerateChainError("stationary solve did not reach residual "
                                   f"{PROB_ATOL}: {np.max(np.abs(q @ T - q))}")
    return q


def conditional_entropy(transition, p, d: int) -> float:
    """H(P|p) = -sum_{u: p(u)>0} sum_v p(u) P(v|u) log_d P(v|u)."""
    T = np.asarray(transition, dtype=float)
    p = np.asarray(p, dtype=float)
    acc = 0.0
    for u in range(len(p)):
        if p[u] <= 0:
            continue
        row = T[u]
        pos = row > 0
        acc -= p[u] * float(np.dot(row[pos], np.log(row[pos])))
    return acc / math.log(d)


def marginals(Q):
    """Row marginal, column marginal, and reverse kernel of a joint Q.

    Returns (qbar, qdbar, qrev) with qrev[u] = Q[u]/qbar[u]; rows with
    qbar[u] = 0 are NaN (the kernel is undefined there).
    """
    Q = np.asarray(Q, dtype=float)
    qbar = Q.sum(axis=1)
    qdbar = Q.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        qrev = Q / qbar[:, None]
    qrev[qbar == 0, :] = np.nan
    return qbar, qdbar, qrev


def kl_conditional(Q, transition, d: int) -> float:
    """D(Q||P) = sum Q(u,v) log_d( Qrev(v|u) / P(v|u) ), with the
    conventions 0 log 0 = 0 and log(a/0) = +inf for a > 0."""
    Q = np.asarray(Q, dtype=float)
    T = np.asarray(transition, dtype=float)
    qbar = Q.sum(axis=1)
    pos = Q > 0
    if (pos & (T <= 0)).any():
        return math.inf
    acc = 0.0
    for u in range(Q.shape[0]):
        if qbar[u] <= 0:
            continue
        vmask = pos[u]
        acc += float(np.dot(Q[u, vmask],
                            np.log(Q[u, vmask] / (qbar[u] * T[u, vmask]))))
    return acc / math.log(d)


def binary_entropy(z: float) -> float:
    if z <= 0.0 or z >= 1.0:
        return 0.0
    return -z * math.log2(z) - (1 - z) * math.log2(1 - z)


def gilbert_channel(epsilon: float, gamma: float) -> MarkovPauliChannel:
    """Gilbert-style burst channel over the d=2 Pauli alphabet.

    Symbol 0 (identity) is the good state; the probability of an error
    is epsilon from the good state and stays elevated via gamma once in
    a bad state, split evenly over X, Z, XZ.  Initial distribution is
    the stationary one.
    """
    if not (0.0 < epsilon < 1.0 and 0.0 < gamma < 1.0):
        raise ValueError(f"epsilon and gamma must be in (0, 1), got "
                         f"({epsilon}, {gamma})")
    T = np.empty((4, 4))
    T[0] = [1 - epsilon, epsilon / 3, epsilon / 3, epsilon / 3]
    for u in (1, 2, 3):
        T[u] = [1 - gamma, gamma / 3, gamma / 3, gamma / 3]
    return MarkovPauliChannel.from_matrix(2, T)


def gilbert_capacity_bound(epsilon: float, gamma: float) -> float:
    """Closed-form 1 - H(P|q) of the Gilbert channel, in bits."""
    if not (0.0 < epsilon < 1.0 and 0.0 < gamma < 1.0):
        raise ValueError(f"epsilon and gamma must be in (0, 1), got "
                         f"({epsilon}, {gamma})")
    log3 = math.log2(3.0)
    num = ((1 - gamma) * (binary_entropy(epsilon) + epsilon * log3)
           + epsilon * (binary_entropy(gamma) + gamma * log3))
    return 1.0 - num / (1 - gamma + epsilon)


# ---------------------------------------------------------------------------
# Weyl operators and the twirl distribution of a Kraus map

def weyl_operator(i: int, j: int, d: int) -> np.ndarray:
    """N_(i,j) = X^i Z^j with X|t> = |t-1 mod d> and Z|t> = w^t |t>."""
    check_prime(d)
    w = np.exp(2j * np.pi / d)
    N = np.zeros((d, d), dtype=complex)
    for t in range(d):
        N[(t - i) % d, t] = w ** (j * t)
    return N


def pauli_twirl(kraus, d: int) -> np.ndarray:
    """Distribution over X induced by expanding Kraus operators in the
    Weyl basis: P(y) = sum_x |a_{xy}|^2 with A_x = sum_y a_{xy} N_y.

    The coefficients come from the trace orthogonality
    Tr(N_y^dag N_z) = d * delta_{yz}.  Requires a trace-preserving map.
    """
    ops = [np.asarray(A, dtype=complex) for A in kraus]
    if not ops:
        raise ValueError("need at least one Kraus operator")
    for A in ops:
        if A.shape != (d, d):
            raise ValueError(f"Kraus operators must be {d}x{d}, got {A.shape}")
    total = sum(A.conj().T @ A for A in ops)
    if np.max(np.abs(total - np.eye(d))) > TP_ATOL:
        raise ValueError("Kraus set is not trace preserving: "
                         f"max |sum A^dag A - I| = "
                         f"{np.max(np.abs(total - np.eye(d)))}")
    m = d * d
    basis = [weyl_operator(*_pair(y, d), d) for y in range(m)]
    out = np.zeros(m)
    for A in ops:
        for y, N in enumerate(basis):
            a = np.trace(N.conj().T @ A) / d
            out[y] += abs(a) ** 2
    return out


def _pair(s: int, d: int) -> tuple[int, int]:
    return s % d, s // d


def product_extension(single, n: int):
    """Evaluator of the i.i.d. word distribution prod_i P_A(y_i)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    single = np.asarray(single, dtype=float)

    def evaluate(seq) -> float:
        seq = list(seq)
        if len(seq) != n:
            raise ValueError(f"expected length {n}, got {len(seq)}")
        p = 1.0
        for s in seq:
            p *= float(single[s])
        return p

    return evaluate


# ---------------------------------------------------------------------------
# channel-config files

def channel_from_config(obj) -> MarkovPauliChannel:
    """Build a channel from a config dict.

    Either {"gilbert": {"epsilon": ..., "gamma": ...}} or
    {"d": ..., "transition": [[...], ...], "initial": [...]} with the
    initial distribution optional (defaults to stationary).
    """
    if not isinstance(obj, dict):
        raise ValueError("channel config must be a JSON object")
    if "gilbert" in obj:
        g = obj["gilbert"]
        for key in ("epsilon", "gamma"):
            if key not in g:
                raise ValueError(f"gilbert config is missing '{key}'")
        return gilbert_channel(float(g["epsilon"]), float(g["gamma"]))
    for key in ("d", "transition"):
        if key not in obj:
            raise ValueError(f"channel config is missing '{key}'")
    d = int(obj["d"])
    check_prime(d)
    m = d * d
    T = obj["transition"]
    if len(T) != m:
        raise ValueError(f"transition must have {m} rows, got {len(T)}")
    for u, row in enumerate(T):
        if len(row) != m:
            raise ValueError(f"transition row {u} has {len(row)} entries, "
                             f"expected {m}")
    initial = obj.get("initial")
    if initial is not None and len(initial) != m:
        raise ValueError(f"initial must have {m} entries, got {len(initial)}")
    return MarkovPauliChannel.from_matrix(d, np.asarray(T, dtype=float),
                                          None if initial is None
                                          else np.asarray(initial, dtype=float))


def load_channel_config(path) -> MarkovPauliChannel:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"channel config {path} is not valid JSON: {exc}")
    return channel_from_config(obj)
