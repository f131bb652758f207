import itertools
import math

import numpy as np
import pytest

from markovpauli import markov_types as mt
from markovpauli.channel import (MarkovPauliChannel, gilbert_channel,
                                 sequence_probability)
from markovpauli.errors import ResourceLimitError
from oracles import brute_type_tally


def _random_channel(rng, d=2):
    m = d * d
    return MarkovPauliChannel.from_matrix(d, rng.dirichlet(np.ones(m), m))


# ---------------------------------------------------------------------------
# the type map

def test_markov_type_direct_count():
    t = mt.markov_type((0, 1, 1), 4)
    assert t.initial == 0
    assert t.counts[0][1] == 1 and t.counts[1][1] == 1
    assert sum(map(sum, t.counts)) == 2
    assert t.matrix()[0, 1] == pytest.approx(0.5)


def test_constant_sequence_type():
    t = mt.markov_type((2,) * 6, 4)
    assert t.counts[2][2] == 5
    assert t.matrix()[2, 2] == 1.0
    assert t.terminal == 2


def test_alternating_sequence():
    t = mt.markov_type((0, 1, 0, 1, 0), 4)
    assert t.matrix()[0, 1] == pytest.approx(0.5)
    assert t.matrix()[1, 0] == pytest.approx(0.5)
    assert t.terminal == 0


def test_too_short_rejected():
    with pytest.raises(ValueError):
        mt.markov_type((3,), 4)


def test_unrealizable_counts_rejected():
    counts = ((0, 1, 0, 0), (0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 0, 0))
    with pytest.raises(ValueError, match="realizable"):
        mt.MarkovType(counts, 0, 3)  # two disconnected edges


# ---------------------------------------------------------------------------
# enumeration

def test_single_transition_types():
    types = mt.enumerate_types(2, 4)
    assert len(types) == 16
    for u in range(4):
        assert sum(1 for t in types if t.initial == u) == 4


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_enumeration_matches_brute_force(n):
    tally = brute_type_tally(n, 4)
    enum = {(t.counts, t.initial) for t in mt.enumerate_types(n, 4)}
    assert enum == set(tally)


def test_enumeration_initial_filter():
    all_types = mt.enumerate_types(4, 4)
    for u in range(4):
        got = mt.enumerate_types(4, 4, initial=u)
        assert {(t.counts, t.initial) for t in got} == \
            {(t.counts, t.initial) for t in all_types if t.initial == u}


def test_enumeration_guard():
    with pytest.raises(ResourceLimitError):
        mt.enumerate_types(60, 4)


def test_distinct_matrices_union_over_initials():
    n = 5
    types = mt.enumerate_types(n, 4)
    assert set(mt.distinct_type_matrices(n, 4)) == {t.counts for t in types}


def test_type_count_growth():
    counts = [len(mt.distinct_type_matrices(n, 4)) for n in range(2, 8)]
    assert all(a < b for a, b in zip(counts, counts[1:]))
    for n, c in zip(range(2, 8), counts):
        assert c <= math.comb(n - 1 + 15, 15)


# ---------------------------------------------------------------------------
# class sizes

def test_constant_type_size_one():
    t = mt.markov_type((1, 1, 1, 1), 4)
    assert mt.type_class_size(t) == 1
    assert mt.type_class_size(t, "exhaustive") == 1


def test_documented_two_sequence_type():
    # counts (a,a):1, (a,b):1, (b,a):1 from a: exactly aaba and abaa
    counts = ((1, 1, 0, 0), (1, 0, 0, 0), (0, 0, 0, 0), (0, 0, 0, 0))
    t = mt.MarkovType(counts, 0, 4)
    assert mt.type_class_size(t) == 2
    assert mt.type_class_size(t, "exhaustive") == 2


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_class_sizes_match_brute_force(n):
    tally = brute_type_tally(n, 4)
    for (counts, u), size in tally.items():
        assert mt.whittle_count(counts, u) == size
        assert mt.exhaustive_count(counts, u) == size


def test_whittle_agrees_with_dfs_at_larger_n():
    rng = np.random.default_rng(0)
    types = mt.enumerate_types(8, 4, initial=0)
    for t in rng.choice(len(types), size=60, replace=False):
        t = types[int(t)]
        assert mt.whittle_count(t.counts, t.initial) == \
            mt.exhaustive_count(t.counts, t.initial)


def test_unrealizable_size_is_zero():
    counts = ((0, 1, 0, 0), (0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 0, 0))
    assert mt.whittle_count(counts, 0) == 0
    assert mt.exhaustive_count(counts, 0) == 0
    # wrong initial for a realizable matrix
    counts2 = ((0, 2, 0, 0), (1, 0, 0, 0), (0,) * 4, (0,) * 4)
    assert mt.whittle_count(counts2, 1) == 0


# ---------------------------------------------------------------------------
# bounds and probabilities

def _all_types_up_to(nmax, m=4):
    for n in range(2, nmax + 1):
        for t in mt.enumerate_types(n, m):
            yield t


def test_eq3_class_size_bound():
    for t in _all_types_up_to(6):
        assert mt.type_class_size(t) <= mt.eq3_bound(t, 2) * (1 + 1e-9)


def test_eq4_probability_bound():
    rng = np.random.default_rng(1)
    channels = [gilbert_channel(0.1, 0.3), _random_channel(rng)]
    for ch in channels:
        for t in _all_types_up_to(5):
            assert mt.type_probability(ch, t) <= \
                mt.eq4_bound(t, ch) * (1 + 1e-9)


def test_type_probabilities_partition():
    rng = np.random.default_rng(2)
    channels = [gilbert_channel(0.1, 0.3), _random_channel(rng)]
    for ch in channels:
        for n in (2, 3, 4, 5, 6):
            for u in range(4):
                total = sum(mt.type_probability(ch, t)
                            for t in mt.enumerate_types(n, 4, initial=u))
                assert total == pytest.approx(1.0, abs=1e-10)


def test_deterministic_chain_forced_type():
    T = np.zeros((4, 4))
    T[:, 2] = 1.0
    p = np.zeros(4)
    p[2] = 1.0
    ch = MarkovPauliChannel(2, T, p)
    t = mt.markov_type((2, 2, 2, 2), 4)
    assert mt.type_probability(ch, t) == pytest.approx(1.0)


def test_gilbert_constant_type_probability():
    ch = gilbert_channel(0.1, 0.3)
    t = mt.markov_type((0, 0, 0, 0), 4)
    assert mt.type_probability(ch, t) == pytest.approx(0.9**3, rel=1e-12)


def test_per_sequence_factorization_identity():
    rng = np.random.default_rng(3)
    channels = [gilbert_channel(0.1, 0.3), _random_channel(rng)]
    # plus a channel with zero transitions to exercise the D = inf path
    T = np.zeros((4, 4))
    T[:, 0] = 0.5
    T[:, 1] = 0.5
    channels.append(MarkovPauliChannel.from_matrix(2, T))
    for ch in channels:
        for n in (2, 3, 4, 5, 6):
            for seq in itertools.product(range(4), repeat=n):
                t = mt.markov_type(seq, 4)
                hc = mt.entropy_score(t.counts)
                dv = mt.divergence_score(t.counts, ch.transition)
                lhs = sequence_probability(ch, seq)
                if math.isinf(dv):
                    assert lhs == 0.0
                else:
                    rhs = float(ch.initial[seq[0]]) * math.exp(-hc - dv)
                    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


def test_marginal_near_balance():
    for n in (2, 3, 4, 5, 6, 7):
        for counts in mt.distinct_type_matrices(n, 4):
            Q = np.asarray(counts, dtype=float) / (n - 1)
            imbalance = np.max(np.abs(Q.sum(axis=1) - Q.sum(axis=0)))
            assert imbalance <= 1.0 / (n - 1) + 1e-15
