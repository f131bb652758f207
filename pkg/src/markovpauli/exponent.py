"""The error exponent E(R, P) and its finite-length oracle.

E(R, P) minimizes D(Q||P) + |1 - H(Qrev|Qbar) - R|^+ over joint
distributions Q on X^2 with equal marginals (base-d units throughout).
The objective is convex on that polytope: D is jointly convex, the
conditional entropy is concave, and the positive-part clip of a convex
function is convex.

The optimizer is an entropic (multiplicative-update) descent: a
gradient step in the exponent followed by an exact KL projection onto
the balance constraints, which for this linear family is a
matrix-balancing rescaling Q(u,v) -> x_u Q(u,v) / x_v computed by an
Osborne-style fixed point.  The clip kink is smoothed by a softplus
with a decreasing temperature ladder (final smoothing error below
1e-9), and random restarts guard against step-size accidents; on a
convex problem all restarts must agree, which the tests check.

Cells where P(v|u) = 0 are frozen at 0 (any mass there gives infinite
divergence), as are cells outside the cyclic part of P's support
digraph (balanced distributions are mixtures of cycle flows).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import markov_types as mt
from .channel import (MarkovPauliChannel, conditional_entropy, kl_conditional,
                      stationary_distribution)
from .errors import ConvergenceError

_TAU_LADDER = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9)


def joint_conditional_entropy(Q, d: int) -> float:
    """H(Qrev|Qbar) = -sum Q(u,v) log_d( Q(u,v)/Qbar(u) ) of a joint Q."""
    Q = np.asarray(Q, dtype=float)
    qbar = Q.sum(axis=1)
    acc = 0.0
    for u in range(Q.shape[0]):
        row = Q[u]
        pos = row > 0
        if pos.any():
            acc -= float(np.dot(row[pos], np.log(row[pos] / qbar[u])))
    return acc / math.log(d)


def objective(Q, channel, R: float) -> float:
    """D(Q||P) + |1 - H(Qrev|Qbar) - R|^+; +inf off P's support."""
    T = channel.transition if isinstance(channel, MarkovPauliChannel) \
        else np.asarray(channel, dtype=float)
    d = channel.d if isinstance(channel, MarkovPauliChannel) \
        else round(len(T) ** 0.5)
    div = kl_conditional(Q, T, d)
    if math.isinf(div):
        return math.inf
    return div + max(1.0 - joint_conditional_entropy(Q, d) - R, 0.0)


def capacity_threshold(ch: MarkovPauliChannel) -> float:
    """1 - H(P|q) with q the stationary distribution, in base-d units."""
    q = stationary_distribution(ch)
    return 1.0 - conditional_entropy(ch.transition, q, ch.d)


# ---------------------------------------------------------------------------
# feasible support

def _scc_ids(adj: np.ndarray) -> np.ndarray:
    """Strongly connected component ids (Kosaraju on a small digraph)."""
    m = adj.shape[0]
    order = []
    seen = [False] * m

    def dfs(u, edges, out):
        stack = [(u, 0)]
        seen[u] = True
        while stack:
            v, i = stack.pop()
            nbrs = np.nonzero(edges[v])[0]
            if i < len(nbrs):
                stack.append((v, i + 1))
                w = int(nbrs[i])
                if not seen[w]:
                    seen[w] = True
                    stack.append((w, 0))
            else:
                out.append(v)

    for u in range(m):
        if not seen[u]:
            dfs(u, adj, order)
    seen = [False] * m
    comp = np.full(m, -1)
    cid = 0
    for u in reversed(order):
        if not seen[u]:
            members = []
            dfs(u, adj.T, members)
            comp[members] = cid
            cid += 1
    return comp


def feasible_support(T: np.ndarray) -> np.ndarray:
    """Cells that can carry mass in a balanced Q with D(Q||P) < inf.

    A balanced nonnegative matrix decomposes into directed cycle flows,
    so its support lies on edges whose endpoints share a strongly
    connected component of the positive-entry digraph.
    """
    adj = np.asarray(T) > 0
    comp = _scc_ids(adj)
    return adj & (comp[:, None] == comp[None, :])


# ---------------------------------------------------------------------------
# entropic descent

def _balance(W: np.ndarray, mask: np.ndarray, tol: float = 1e-14,
             max_iter: int = 2000) -> np.ndarray:
    """KL projection of a positive-on-mask W onto the balanced simplex.

    The projection onto the linear family {row sums == column sums,
    total 1} has the form x_u W(u,v) / x_v up to normalization; the
    scaling x is found by the Osborne fixed point x_u <- x_u
    sqrt(col_u / row_u).
    """
    B = np.where(mask, W, 0.0)
    for _ in range(max_iter):
        r = B.sum(axis=1)
        c = B.sum(axis=0)
        active = (r > 0) | (c > 0)
        if np.max(np.abs(r - c)) <= tol * B.sum():
            break
        scale = np.ones_like(r)
        nz = active & (r > 0) & (c > 0)
        scale[nz] = np.sqrt(c[nz] / r[nz])
        B = B * scale[:, None] / scale[None, :]
    return B / B.sum()


def _softplus(s: float, tau: float) -> float:
    if tau <= 0.0:
        return max(s, 0.0)
    z = s / tau
    if z > 40.0:
        return s
    if z < -40.0:
        return tau * math.exp(z)
    return tau * math.log1p(math.exp(z))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


class _Problem:
    """Smoothed objective on the active support, natural-log scale."""

    def __init__(self, T: np.ndarray, d: int, R: float):
        self.d = d
        self.R = R
        self.lnd = math.log(d)
        self.mask = feasible_support(T)
        if not self.mask.any():
            raise ValueError("transition matrix admits no balanced "
                             "distribution with finite divergence")
        self.lnT = np.where(self.mask, np.log(np.where(self.mask, T, 1.0)),
                            0.0)

    def split(self, Q):
        """(D, H_c) in base-d units for Q supported on the mask."""
        qbar = Q.sum(axis=1)
        pos = self.mask & (Q > 0)
        lnqrev = np.zeros_like(Q)
        lnqrev[pos] = np.log(Q[pos] / qbar[np.nonzero(pos)[0]])
        div = float(np.sum(Q[pos] * (lnqrev[pos] - self.lnT[pos])))
        hc = -float(np.sum(Q[pos] * lnqrev[pos]))
        return div / self.lnd, hc / self.lnd

    def value(self, Q, tau: float) -> float:
        div, hc = self.split(Q)
        return div + _softplus(1.0 - hc - self.R, tau)

    def grad(self, Q, tau: float) -> np.ndarray:
        """Natural-log-scale gradient on the active cells."""
        qbar = Q.sum(axis=1)
        pos = self.mask & (Q > 0)
        lnqrev = np.zeros_like(Q)
        lnqrev[pos] = np.log(Q[pos] / qbar[np.nonzero(pos)[0]])
        _, hc = self.split(Q)
        sig = _sigmoid((1.0 - hc - self.R) / tau) if tau > 0 \
            else (1.0 if 1.0 - hc - self.R > 0 else 0.0)
        return np.where(pos, lnqrev - self.lnT + sig * lnqrev, 0.0)


def _descend(prob: _Problem, Q0: np.ndarray, max_iter: int,
             ftol: float) -> tuple[np.ndarray, int]:
    Q = Q0
    iters = 0
    for tau in _TAU_LADDER:
        f0 = prob.value(Q, tau)
        eta = 1.0
        stall = 0
        for _ in range(max_iter):
            iters += 1
            g = prob.grad(Q, tau)
            lnQ = np.where(prob.mask, np.log(np.where(prob.mask, Q, 1.0)),
                           -np.inf)
            accepted = False
            for _ in range(50):
                lnW = lnQ - eta * g
                lnW -= lnW[prob.mask].max()
                Qn = _balance(np.exp(np.where(prob.mask, lnW, -np.inf)),
                              prob.mask)
                fn = prob.value(Qn, tau)
                if fn < f0 - 1e-15:
                    accepted = True
                    break
                eta *= 0.5
                if eta < 1e-14:
                    break
            if not accepted:
                break
            gain = f0 - fn
            Q, f0 = Qn, fn
            eta = min(eta * 1.5, 16.0)
            if gain < ftol:
                stall += 1
                if stall >= 3:
                    break
            else:
                stall = 0
    return Q, iters


@dataclass(frozen=True)
class ExponentResult:
    rate: float
    value: float
    argmin: np.ndarray
    kkt_residual: float
    iterations: int
    restarts: int
    converged: bool
    restart_values: tuple = ()


def _stationary_product(ch: MarkovPauliChannel) -> np.ndarray:
    q = stationary_distribution(ch)
    return q[:, None] * ch.transition


def _kkt_residual(prob: _Problem, Q: np.ndarray, kink_width: float = 1e-7
                  ) -> float:
    """Stationarity residual: distance of the subdifferential from the
    constraint row space, minimized over the clip subgradient weight.

    The subgradient of the clip contributes sigma * grad(-H_c) with
    sigma = 1 when the clip is active, 0 when inactive, and anywhere in
    [0, 1] at the kink; the reported residual takes the best sigma.
    """
    qbar = Q.sum(axis=1)
    pos = prob.mask & (Q > 0)
    lnqrev = np.zeros_like(Q)
    lnqrev[pos] = np.log(Q[pos] / qbar[np.nonzero(pos)[0]])
    gD = np.where(pos, lnqrev - prob.lnT, 0.0)[prob.mask]
    gH = np.where(pos, lnqrev, 0.0)[prob.mask]
    _, hc = prob.split(Q)
    slack = 1.0 - hc - prob.R
    if slack > kink_width:
        lo = hi = 1.0
    elif slack < -kink_width:
        lo = hi = 0.0
    else:
        lo, hi = 0.0, 1.0

    m = prob.mask.shape[0]
    u_idx, v_idx = np.nonzero(prob.mask)
    rows = [np.ones(len(u_idx))]
    for w in range(m):
        rows.append((u_idx == w).astype(float) - (v_idx == w).astype(float))
    A = np.stack(rows)

    def tangent(g):
        lam, *_ = np.linalg.lstsq(A.T, g, rcond=None)
        return g - A.T @ lam

    pD, pH = tangent(gD), tangent(gH)
    denom = float(pH @ pH)
    sigma = lo if denom == 0.0 else min(max(-float(pD @ pH) / denom, lo), hi)
    resid = pD + sigma * pH
    scale = 1.0 + np.linalg.norm(gD + sigma * gH)
    return float(np.linalg.norm(resid) / scale)


def exponent(ch: MarkovPauliChannel, R: float, restarts: int = 6,
             seed: int = 0, tol: float = 1e-9, max_iter: int = 400,
             warm_starts=()) -> ExponentResult:
    """Global minimum of the exponent objective at rate R.

    Deterministic given the seed.  Raises ConvergenceError (carrying
    the best value and residual) when restarts disagree beyond
    tolerance, which on this convex problem indicates failure.
    """
    if not 0.0 <= R <= 1.0:
        raise ValueError(f"rate must lie in [0, 1], got {R}")
    prob = _Problem(ch.transition, ch.d, R)
    m = ch.m

    q_prod = _stationary_product(ch)
    f_prod = objective(q_prod, ch, R)
    if f_prod <= 1e-15:
        # the stationary product is feasible and f >= 0, so this is the
        # global minimum to within rounding
        value = max(f_prod, 0.0)
        return ExponentResult(R, value, q_prod, 0.0, 0, 0, True, (value,))

    rng = np.random.default_rng(seed)
    uniform = _balance(np.where(prob.mask, 1.0, 0.0), prob.mask)
    blend = _balance(np.where(prob.mask, 0.98 * q_prod + 0.02 * uniform,
                              0.0), prob.mask)
    starts = [blend, uniform]
    starts.extend(_balance(np.where(prob.mask,
                                    rng.gamma(1.0, 1.0, size=(m, m)), 0.0),
                           prob.mask)
                  for _ in range(max(0, restarts - len(starts))))
    starts.extend(np.asarray(w, dtype=float) for w in warm_starts)

    best_Q, best_f, values, total_iters = None, math.inf, [], 0
    for Q0 in starts:
        Q, iters = _descend(prob, Q0, max_iter, tol * 1e-2)
        total_iters += iters
        f = prob.value(Q, 0.0)
        values.append(f)
        if f < best_f:
            best_f, best_Q = f, Q
    if f_prod < best_f:
        best_f, best_Q = f_prod, q_prod

    spread = max(values) - min(values) if values else 0.0
    resid = _kkt_residual(prob, best_Q)
    converged = spread <= max(1e-7, 100 * tol)
    value = max(best_f, 0.0)
    if not converged:
        raise ConvergenceError(
            f"restart values spread {spread:.3e} exceeds tolerance",
            best_value=value, residual=resid)
    return ExponentResult(R, value, best_Q, resid, total_iters,
                          len(starts), converged, tuple(values))


def exponent_sweep(ch: MarkovPauliChannel, rates, restarts: int = 6,
                   seed: int = 0, tol: float = 1e-9) -> list[ExponentResult]:
    """E(R) on a rate grid, warm-starting each point from the previous
    argmin; returned in the order of the grid."""
    out = []
    prev = None
    for i, R in enumerate(rates):
        warm = () if prev is None else (prev,)
        r = exponent(ch, float(R), restarts=restarts if i == 0 else 2,
                     seed=seed, tol=tol, warm_starts=warm)
        prev = r.argmin
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# finite-n type oracle

def exponent_type_oracle(ch: MarkovPauliChannel, R: float, n: int) -> float:
    """min over realizable length-n Markov types of D(Q||P) + |1-R-H_c|^+.

    Exact by enumeration.  When every positive column of the transition
    matrix lies in a set of at most two symbols, the finite-divergence
    types live on a 2x2 count block (plus at most one entry edge from
    an outside initial symbol), which keeps the enumeration polynomial
    in n; otherwise the general type enumeration (with its guard) runs.
    """
    if n < 2:
        raise ValueError("type oracle needs n >= 2")
    T = ch.transition
    m = ch.m
    cols = sorted(int(v) for v in range(m) if (T[:, v] > 0).any())
    if len(cols) <= 2:
        return _oracle_small_support(ch, R, n, cols)
    best = math.inf
    for counts in mt.distinct_type_matrices(n, m):
        best = min(best, _type_objective(counts, T, ch.d, R, n - 1))
    return best


def _type_objective(counts, T, d, R, divisor) -> float:
    dscore = mt.divergence_score(counts, T)
    if math.isinf(dscore):
        return math.inf
    lnd = math.log(d)
    hc = mt.entropy_score(counts) / (divisor * lnd)
    return dscore / (divisor * lnd) + max(1.0 - hc - R, 0.0)


def _block_values(total: int, start: int, lnT: np.ndarray):
    """Vectorized (divergence score, entropy score) over all feasible
    2x2 count blocks with the given total, trail starting at `start`
    (0 or 1).  lnT is the 2x2 log-transition block with -inf marking
    structural zeros.  Returns natural-log scores.

    The flow condition pins c10 to c01 (equal for a closed trail, off
    by one for an open one), so the feasible set is quadratic in the
    total and enumerated over (c00, c01) planes per flow case.
    """
    if total == 0:
        return (np.zeros(1), np.zeros(1))
    r = np.arange(total + 1)
    c00g, c01g = np.meshgrid(r, r, indexing="ij")
    c00g, c01g = c00g.ravel(), c01g.ravel()
    parts_d, parts_h = [], []
    for delta in (0, 1) if start == 0 else (0, -1):
        c00, c01 = c00g, c01g
        c10 = c01 - delta
        c11 = total - c00 - c01 - c10
        ok = (c10 >= 0) & (c11 >= 0)
        if delta == 0:
            # closed trail: with no cross edges only the start's
            # self-loop may carry counts
            if start == 0:
                ok &= np.where(c01 == 0, (c11 == 0) & (c00 == total), True)
            else:
                ok &= np.where(c01 == 0, (c00 == 0) & (c11 == total), True)
        for cnt, (a, b) in ((c00, (0, 0)), (c01, (0, 1)),
                            (c10, (1, 0)), (c11, (1, 1))):
            if np.isinf(lnT[a, b]):
                ok &= cnt <= 0
        if not ok.any():
            continue
        c00, c01, c10, c11 = (c[ok] for c in (c00, c01, c10, c11))
        r0 = c00 + c01
        r1 = c10 + c11

        def xlnx(v):
            return np.where(v > 0, v * np.log(np.maximum(v, 1)), 0.0)

        hscore = (xlnx(r0) + xlnx(r1) - xlnx(c00) - xlnx(c01)
                  - xlnx(c10) - xlnx(c11))
        dscore = np.zeros(len(c00))
        for cnt, row, (a, b) in ((c00, r0, (0, 0)), (c01, r0, (0, 1)),
                                 (c10, r1, (1, 0)), (c11, r1, (1, 1))):
            lt = 0.0 if np.isinf(lnT[a, b]) else lnT[a, b]
            dscore = dscore + np.where(
                cnt > 0,
                cnt * (np.log(np.maximum(cnt, 1))
                       - np.log(np.maximum(row, 1)) - lt),
                0.0)
        parts_d.append(dscore)
        parts_h.append(hscore)
    if not parts_d:
        return (np.full(1, np.inf), np.zeros(1))
    return np.concatenate(parts_d), np.concatenate(parts_h)


def _oracle_small_support(ch: MarkovPauliChannel, R: float, n: int,
                          cols) -> float:
    T = ch.transition
    d = ch.d
    lnd = math.log(d)
    m = ch.m
    if len(cols) == 1:
        s = cols[0]
        # the only finite-divergence types: s-loops, possibly entered
        best = math.inf
        if T[s, s] > 0:
            dd = (n - 1) * (-math.log(T[s, s]))
            best = min(best, dd / ((n - 1) * lnd) + max(1.0 - R, 0.0))
            for u in range(m):
                if u != s and T[u, s] > 0:
                    dd = -math.log(T[u, s]) - (n - 2) * math.log(T[s, s])
                    hval = 0.0
                    best = min(best, dd / ((n - 1) * lnd)
                               + max(1.0 - hval - R, 0.0))
        return best
    s0, s1 = cols
    sub = np.array([[T[s0, s0], T[s0, s1]], [T[s1, s0], T[s1, s1]]])
    with np.errstate(divide="ignore"):
        lnT = np.where(sub > 0, np.log(np.where(sub > 0, sub, 1.0)), -np.inf)
    divisor = (n - 1) * lnd
    best = math.inf

    def block_min(total, start, extra_dscore):
        nonlocal best
        dscore, hscore = _block_values(total, start, lnT)
        vals = (dscore + extra_dscore) / divisor \
            + np.maximum(1.0 - hscore / divisor - R, 0.0)
        v = float(np.min(vals))
        best = min(best, v)

    for si, s in enumerate(cols):
        block_min(n - 1, si, 0.0)
    for u in range(m):
        if u in cols:
            continue
        for si, s in enumerate(cols):
            if T[u, s] > 0:
                block_min(n - 2, si, -math.log(T[u, s]))
    return best
