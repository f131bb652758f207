import itertools
import json
import math

import numpy as np
import pytest

from markovpauli import channel as mc
from markovpauli.errors import DegenerateChainError
from oracles import plain_word_probability


def _random_channel(rng, d=2):
    m = d * d
    T = rng.dirichlet(np.ones(m), size=m)
    return mc.MarkovPauliChannel.from_matrix(d, T)


# ---------------------------------------------------------------------------
# construction and validation

def test_row_sum_validation_names_row():
    T = np.eye(4)
    T[2, 2] = 0.5
    with pytest.raises(ValueError, match="row 2"):
        mc.MarkovPauliChannel(2, T, np.full(4, 0.25))


def test_negative_entry_named():
    T = np.full((4, 4), 0.25)
    T[1, 3] = -0.25
    T[1, 0] = 0.75
    with pytest.raises(ValueError, match=r"transition\[1\]\[3\]"):
        mc.MarkovPauliChannel(2, T, np.full(4, 0.25))


def test_initial_validation():
    T = np.full((4, 4), 0.25)
    with pytest.raises(ValueError, match="initial"):
        mc.MarkovPauliChannel(2, T, np.array([0.5, 0.5, 0.5, 0.5]))


def test_arrays_frozen():
    ch = mc.gilbert_channel(0.1, 0.3)
    with pytest.raises(ValueError):
        ch.transition[0, 0] = 0.0


# ---------------------------------------------------------------------------
# sequence probability

def test_length_one_is_initial():
    ch = mc.gilbert_channel(0.2, 0.4)
    for u in range(4):
        assert mc.sequence_probability(ch, [u]) == ch.initial[u]


def test_deterministic_chain_probability_one():
    T = np.zeros((4, 4))
    T[:, 1] = 1.0  # every state hops to symbol 1
    p = np.zeros(4)
    p[1] = 1.0
    ch = mc.MarkovPauliChannel(2, T, p)
    assert mc.sequence_probability(ch, [1, 1, 1]) == 1.0


def test_gilbert_two_symbol_word():
    ch = mc.gilbert_channel(0.1, 0.3)
    # stationary q(0) = (1-gamma)/(1-gamma+eps) = 0.875, then eps/3
    expected = 0.875 * (0.1 / 3.0)
    assert mc.sequence_probability(ch, [0, 1]) == pytest.approx(expected,
                                                                rel=1e-12)


def test_empty_sequence_rejected():
    with pytest.raises(ValueError):
        mc.sequence_probability(mc.gilbert_channel(0.1, 0.1), [])


def test_total_probability_exhaustive():
    rng = np.random.default_rng(3)
    for ch in (mc.gilbert_channel(0.1, 0.3), _random_channel(rng)):
        for n in (1, 2, 3, 4):
            total = sum(mc.sequence_probability(ch, seq)
                        for seq in itertools.product(range(4), repeat=n))
            assert total == pytest.approx(1.0, abs=1e-12)


def test_matches_plain_python_oracle():
    rng = np.random.default_rng(4)
    ch = _random_channel(rng)
    T = [[float(x) for x in row] for row in ch.transition]
    p = [float(x) for x in ch.initial]
    for _ in range(50):
        seq = [int(s) for s in rng.integers(0, 4, size=rng.integers(1, 7))]
        assert mc.sequence_probability(ch, seq) == pytest.approx(
            plain_word_probability(T, p, seq), rel=1e-14)


# ---------------------------------------------------------------------------
# stationary distribution

def test_gilbert_stationary_closed_form():
    for eps, gamma in ((0.1, 0.3), (0.25, 0.6), (0.01, 0.02)):
        ch = mc.gilbert_channel(eps, gamma)
        q = mc.stationary_distribution(ch)
        q0 = (1 - gamma) / (1 - gamma + eps)
        assert q[0] == pytest.approx(q0, abs=1e-12)
        assert q[1:] == pytest.approx(np.full(3, (1 - q0) / 3), abs=1e-12)
        assert np.max(np.abs(q @ ch.transition - q)) <= 1e-12


def test_equal_rows_are_stationary():
    eps = 0.2
    ch = mc.gilbert_channel(eps, eps)
    q = mc.stationary_distribution(ch)
    assert q == pytest.approx([1 - eps, eps / 3, eps / 3, eps / 3],
                              abs=1e-12)


def test_doubly_stochastic_gives_uniform():
    T = np.full((4, 4), 0.25)
    ch = mc.MarkovPauliChannel(2, T, np.full(4, 0.25))
    assert mc.stationary_distribution(ch) == pytest.approx(np.full(4, 0.25))


def test_transient_states_get_zero_mass():
    # columns 2,3 empty: symbols 2,3 are transient
    T = np.array([[0.9, 0.1, 0, 0], [0.5, 0.5, 0, 0],
                  [0.3, 0.7, 0, 0], [0.6, 0.4, 0, 0]], dtype=float)
    ch = mc.MarkovPauliChannel.from_matrix(2, T)
    q = mc.stationary_distribution(ch)
    assert q[2] == q[3] == 0.0
    assert np.max(np.abs(q @ T - q)) <= 1e-12


def test_degenerate_chain_rejected():
    with pytest.raises(DegenerateChainError, match="closed"):
        mc.stationary_distribution(
            mc.MarkovPauliChannel(2, np.eye(4), np.full(4, 0.25)))


# ---------------------------------------------------------------------------
# entropy and divergence

def test_conditional_entropy_deterministic():
    T = np.zeros((4, 4))
    T[:, 0] = 1.0
    assert mc.conditional_entropy(T, np.full(4, 0.25), 2) == 0.0


def test_conditional_entropy_uniform_rows():
    T = np.full((4, 4), 0.25)
    assert mc.conditional_entropy(T, np.full(4, 0.25), 2) == pytest.approx(2.0)


def test_conditional_entropy_gilbert_closed_form():
    eps, gamma = 0.1, 0.3
    ch = mc.gilbert_channel(eps, gamma)
    q = mc.stationary_distribution(ch)
    h = mc.binary_entropy
    log3 = math.log2(3)
    expected = ((1 - gamma) * (h(eps) + eps * log3)
                + eps * (h(gamma) + gamma * log3)) / (1 - gamma + eps)
    got = mc.conditional_entropy(ch.transition, q, 2)
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(0.718653, abs=5e-7)


def test_kl_zero_iff_product():
    rng = np.random.default_rng(5)
    ch = _random_channel(rng)
    q = rng.dirichlet(np.ones(4))
    Q = q[:, None] * ch.transition
    assert mc.kl_conditional(Q, ch.transition, 2) == pytest.approx(0.0,
                                                                   abs=1e-12)


def test_kl_infinite_on_forbidden_transition():
    T = np.zeros((4, 4))
    T[:, 0] = 1.0
    Q = np.zeros((4, 4))
    Q[0, 1] = 1.0
    assert mc.kl_conditional(Q, T, 2) == math.inf


def test_kl_perturbed_row_value():
    # one row with Q(u0, .) = (0.4, 0.2, 0.2, 0.2) against uniform rows
    T = np.full((4, 4), 0.25)
    Q = np.zeros((4, 4))
    Q[0] = [0.4, 0.2, 0.2, 0.2]
    expected = (0.4 * math.log2(0.4 / 0.25)
                + 3 * 0.2 * math.log2(0.2 / 0.25))
    assert mc.kl_conditional(Q, T, 2) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.0780719, abs=1e-6)


def test_kl_uniform_single_row_is_zero():
    T = np.full((4, 4), 0.25)
    Q = np.zeros((4, 4))
    Q[0] = 0.25
    assert mc.kl_conditional(Q, T, 2) == pytest.approx(0.0, abs=1e-12)


def test_kl_nonnegative_random():
    rng = np.random.default_rng(6)
    for _ in range(50):
        ch = _random_channel(rng)
        Q = rng.dirichlet(np.ones(16)).reshape(4, 4)
        assert mc.kl_conditional(Q, ch.transition, 2) >= -1e-13


def test_marginals():
    rng = np.random.default_rng(7)
    q = rng.dirichlet(np.ones(4))
    Q = np.outer(q, q)
    qbar, qdbar, qrev = mc.marginals(Q)
    assert qbar == pytest.approx(q)
    assert qdbar == pytest.approx(q)
    assert qrev == pytest.approx(np.tile(q, (4, 1)))
    # concentrated mass
    Q2 = np.zeros((4, 4))
    Q2[1, 2] = 1.0
    qbar, qdbar, qrev = mc.marginals(Q2)
    assert qbar[1] == 1.0 and qdbar[2] == 1.0
    assert np.isnan(qrev[0]).all()  # undefined row
    assert qbar.sum() == pytest.approx(1.0)
    assert qdbar.sum() == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# the Gilbert family

def test_gilbert_depolarizing_at_equal_parameters():
    eps = 0.17
    ch = mc.gilbert_channel(eps, eps)
    row = [1 - eps, eps / 3, eps / 3, eps / 3]
    for u in range(4):
        assert ch.transition[u] == pytest.approx(row, abs=1e-15)


def test_gilbert_case_table():
    ch = mc.gilbert_channel(0.1, 0.3)
    assert ch.transition[1, 0] == pytest.approx(0.7)  # 1 - gamma
    assert ch.transition[0, 0] == pytest.approx(0.9)
    assert ch.transition[0, 2] == pytest.approx(0.1 / 3)
    assert ch.transition[3, 2] == pytest.approx(0.1)
    assert ch.transition.sum(axis=1) == pytest.approx(np.ones(4), abs=1e-15)


def test_gilbert_param_validation():
    for eps, gamma in ((0.0, 0.5), (0.5, 1.0), (-0.1, 0.5), (0.3, 1.5)):
        with pytest.raises(ValueError):
            mc.gilbert_channel(eps, gamma)


def test_capacity_bound_depolarizing_value():
    got = mc.gilbert_capacity_bound(0.1, 0.1)
    expected = 1 - mc.binary_entropy(0.1) - 0.1 * math.log2(3)
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(0.372508, abs=5e-7)


def test_capacity_bound_cross_path():
    for eps in (0.05, 0.2, 0.5):
        for gamma in (0.1, 0.4, 0.9):
            ch = mc.gilbert_channel(eps, gamma)
            via_entropy = 1 - mc.conditional_entropy(
                ch.transition, mc.stationary_distribution(ch), 2)
            assert mc.gilbert_capacity_bound(eps, gamma) == pytest.approx(
                via_entropy, abs=1e-10)
    assert mc.gilbert_capacity_bound(0.1, 0.3) == pytest.approx(
        0.281347, abs=5e-7)


def test_capacity_bound_error_free_limit():
    assert mc.gilbert_capacity_bound(1e-9, 0.3) == pytest.approx(1.0,
                                                                 abs=1e-6)


# ---------------------------------------------------------------------------
# Weyl operators and the twirl

def test_weyl_unitary_and_identity():
    for d in (2, 3, 5):
        assert mc.weyl_operator(0, 0, d) == pytest.approx(np.eye(d))
        for i in range(d):
            for j in range(d):
                N = mc.weyl_operator(i, j, d)
                assert N @ N.conj().T == pytest.approx(np.eye(d), abs=1e-12)


def test_weyl_trace_orthogonality():
    d = 3
    ops = [mc.weyl_operator(i, j, d) for j in range(d) for i in range(d)]
    for a, A in enumerate(ops):
        for b, B in enumerate(ops):
            tr = np.trace(A.conj().T @ B)
            assert abs(tr - (d if a == b else 0)) < 1e-12


def test_twirl_identity_channel():
    dist = mc.pauli_twirl([np.eye(2)], 2)
    assert dist == pytest.approx([1, 0, 0, 0], abs=1e-15)


def test_twirl_weyl_aligned_depolarizing():
    eps = 0.13
    kraus = [math.sqrt(1 - eps) * mc.weyl_operator(0, 0, 2)]
    kraus += [math.sqrt(eps / 3) * mc.weyl_operator(i, j, 2)
              for (i, j) in ((1, 0), (0, 1), (1, 1))]
    dist = mc.pauli_twirl(kraus, 2)
    assert dist == pytest.approx([1 - eps, eps / 3, eps / 3, eps / 3],
                                 abs=1e-14)


def test_twirl_amplitude_damping_vs_expansion_oracle():
    eta = 0.3
    A0 = np.array([[1, 0], [0, math.sqrt(1 - eta)]], dtype=complex)
    A1 = np.array([[0, math.sqrt(eta)], [0, 0]], dtype=complex)
    dist = mc.pauli_twirl([A0, A1], 2)
    # oracle: solve for the expansion coefficients with lstsq
    basis = np.stack([mc.weyl_operator(s % 2, s // 2, 2).ravel()
                      for s in range(4)], axis=1)
    expected = np.zeros(4)
    for A in (A0, A1):
        coef, *_ = np.linalg.lstsq(basis, A.ravel(), rcond=None)
        expected += np.abs(coef) ** 2
    assert dist == pytest.approx(expected, abs=1e-12)
    assert dist.sum() == pytest.approx(1.0, abs=1e-12)


def test_twirl_random_maps_are_distributions():
    rng = np.random.default_rng(8)
    for _ in range(20):
        nk = int(rng.integers(1, 5))
        raw = rng.normal(size=(2 * nk, 2)) + 1j * rng.normal(size=(2 * nk, 2))
        qmat, _ = np.linalg.qr(raw)
        kraus = [qmat[2 * i:2 * i + 2, :] for i in range(nk)]
        dist = mc.pauli_twirl(kraus, 2)
        assert (dist >= -1e-12).all()
        assert dist.sum() == pytest.approx(1.0, abs=1e-9)


def test_twirl_phase_invariance():
    rng = np.random.default_rng(9)
    raw = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    qmat, _ = np.linalg.qr(raw)
    kraus = [qmat[0:2, :], qmat[2:4, :]]
    base = mc.pauli_twirl(kraus, 2)
    phased = [np.exp(1j * 0.7) * kraus[0], np.exp(-1j * 2.1) * kraus[1]]
    assert mc.pauli_twirl(phased, 2) == pytest.approx(base, abs=1e-12)


def test_twirl_rejects_non_trace_preserving():
    with pytest.raises(ValueError, match="trace preserving"):
        mc.pauli_twirl([0.5 * np.eye(2)], 2)


# ---------------------------------------------------------------------------
# product extension

def test_product_extension_basics():
    single = np.array([0.7, 0.1, 0.1, 0.1])
    ev = mc.product_extension(single, 1)
    for s in range(4):
        assert ev([s]) == single[s]
    delta = np.array([0.0, 1.0, 0.0, 0.0])
    ev3 = mc.product_extension(delta, 3)
    assert ev3([1, 1, 1]) == 1.0
    assert ev3([1, 0, 1]) == 0.0


def test_product_extension_matches_memoryless_chain():
    rng = np.random.default_rng(10)
    single = rng.dirichlet(np.ones(4))
    ch = mc.MarkovPauliChannel.memoryless(single, 2)
    for n in range(1, 7):
        ev = mc.product_extension(single, n)
        for _ in range(20):
            seq = [int(s) for s in rng.integers(0, 4, n)]
            assert ev(seq) == pytest.approx(
                mc.sequence_probability(ch, seq), rel=1e-13)


# ---------------------------------------------------------------------------
# config files

def test_gilbert_config_route(tmp_path):
    path = tmp_path / "ch.json"
    path.write_text(json.dumps({"gilbert": {"epsilon": 0.1, "gamma": 0.3}}))
    ch = mc.load_channel_config(path)
    assert ch.transition[1, 0] == pytest.approx(0.7)


def test_matrix_config_defaults_to_stationary(tmp_path):
    ch0 = mc.gilbert_channel(0.2, 0.5)
    path = tmp_path / "ch.json"
    path.write_text(json.dumps({"d": 2,
                                "transition": ch0.transition.tolist()}))
    ch = mc.load_channel_config(path)
    assert ch.initial == pytest.approx(mc.stationary_distribution(ch0))


def test_config_errors_name_offender(tmp_path):
    bad = {"d": 2, "transition": [[0.25] * 4] * 3}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    with pytest.raises(ValueError, match="4 rows"):
        mc.load_channel_config(path)
    bad2 = {"d": 2, "transition": [[0.25] * 4] * 4, "initial": [1.0]}
    path.write_text(json.dumps(bad2))
    with pytest.raises(ValueError, match="initial"):
        mc.load_channel_config(path)
    path.write_text("{not json")
    with pytest.raises(ValueError, match="JSON"):
        mc.load_channel_config(path)


def test_config_roundtrip():
    ch = mc.gilbert_channel(0.15, 0.45)
    again = mc.channel_from_config(ch.to_config())
    assert again.transition == pytest.approx(ch.transition, abs=0)
    assert again.initial == pytest.approx(ch.initial, abs=0)
