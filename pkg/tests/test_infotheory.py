import numpy as np
import pytest

from driftbench.infotheory import (
    DiscreteMatrix,
    FactorColumn,
    conditional_total_correlation,
    entropy,
    joint_entropy,
    mutual_information,
    tc_reduction,
    total_correlation,
)
from oracles import (
    oracle_entropy,
    oracle_joint_entropy,
    oracle_mutual_information,
)

XOR = np.array([[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]] * 2)


def test_entropy_hand_values():
    assert entropy([0, 1, 0, 1]) == pytest.approx(1.0, abs=1e-12)
    assert entropy([0, 0, 0, 0]) == 0.0
    assert entropy([0, 0, 0, 1]) == pytest.approx(0.811278, abs=1e-6)


def test_entropy_rejects_empty():
    with pytest.raises(ValueError):
        entropy(np.zeros(0, dtype=int))


def test_joint_entropy_hand_values():
    u = [0, 1, 0, 1]
    assert joint_entropy(np.column_stack([u, u])) == pytest.approx(1.0, abs=1e-12)
    four = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
    assert joint_entropy(four) == pytest.approx(2.0, abs=1e-12)
    m = np.column_stack([[0, 0, 1, 1], [0, 1, 1, 1]])
    assert joint_entropy(m) == pytest.approx(1.5, abs=1e-12)


def test_mutual_information_hand_values():
    u = [0, 1, 0, 1]
    assert mutual_information(u, u) == pytest.approx(1.0, abs=1e-12)
    assert mutual_information([0, 0, 1, 1], [0, 1, 0, 1]) == 0.0
    assert mutual_information([0, 0, 1, 1], [0, 1, 1, 1]) == pytest.approx(
        1 + 0.811278 - 1.5, abs=1e-6
    )


def test_mutual_information_length_mismatch():
    with pytest.raises(ValueError):
        mutual_information([0, 1], [0, 1, 0])


def test_total_correlation_hand_values():
    # full factorial of three independent bits
    full = np.array([[(i >> b) & 1 for b in range(3)] for i in range(8)])
    assert total_correlation(full) == 0.0
    u = np.array([0, 1, 0, 1])
    assert total_correlation(np.column_stack([u, u, u])) == pytest.approx(2.0, abs=1e-12)
    m = np.column_stack([[0, 0, 1, 1], [0, 1, 1, 1]])
    assert total_correlation(m) == pytest.approx(0.311278, abs=1e-6)


def test_conditional_tc_cases():
    m = np.column_stack([[0, 0, 1, 1], [0, 1, 1, 1]])
    z_const = np.zeros(4, dtype=int)
    assert conditional_total_correlation(m, z_const) == pytest.approx(
        total_correlation(m), abs=1e-12
    )
    u = np.array([0, 1, 0, 1])
    pair = np.column_stack([u, u])
    assert conditional_total_correlation(pair, u) == 0.0
    # XOR triple conditioned on one input leaves a perfectly coupled pair
    assert conditional_total_correlation(XOR, XOR[:, 0]) == pytest.approx(1.0, abs=1e-12)


def test_tc_reduction_cases():
    u = np.array([0, 1, 0, 1])
    pair = np.column_stack([u, u])
    assert tc_reduction(pair, np.zeros(4, dtype=int)) == 0.0
    assert tc_reduction(pair, u) == pytest.approx(1.0, abs=1e-12)
    # conditioning on the XOR output explains nothing
    assert tc_reduction(XOR, XOR[:, 2]) == pytest.approx(0.0, abs=1e-12)


def test_matches_oracle_on_random_columns():
    gen = np.random.default_rng(5)
    for _ in range(40):
        n = int(gen.integers(2, 50))
        a = gen.integers(0, 3, size=n)
        b = gen.integers(0, 2, size=n)
        assert entropy(a) == pytest.approx(oracle_entropy(a.tolist()), abs=1e-12)
        assert joint_entropy(np.column_stack([a, b])) == pytest.approx(
            oracle_joint_entropy([a.tolist(), b.tolist()]), abs=1e-12
        )
        assert mutual_information(a, b) == pytest.approx(
            oracle_mutual_information(a.tolist(), b.tolist()), abs=1e-12
        )


def test_tc_identity_against_mi_decomposition():
    # TC(X;Z) == sum_i I(X_i;Z) - I(X;Z) on plug-in estimates
    gen = np.random.default_rng(11)
    for _ in range(60):
        n = int(gen.integers(4, 64))
        d = int(gen.integers(1, 6))
        x = gen.integers(0, 2, size=(n, d))
        z = gen.integers(0, int(gen.integers(2, 4)), size=n)
        lhs = tc_reduction(x, z)
        mi_xz = (
            joint_entropy(x, clamp=False)
            + entropy(z, clamp=False)
            - joint_entropy(np.column_stack([x, z]), clamp=False)
        )
        rhs = sum(mutual_information(x[:, i], z, clamp=False) for i in range(d)) - mi_xz
        assert lhs == pytest.approx(rhs, abs=1e-9)
        assert lhs <= total_correlation(x) + 1e-9


def test_nonnegativity_and_clamp():
    gen = np.random.default_rng(17)
    for _ in range(50):
        n = int(gen.integers(2, 40))
        d = int(gen.integers(2, 5))
        x = gen.integers(0, 2, size=(n, d))
        z = gen.integers(0, 2, size=n)
        for value in (
            entropy(x[:, 0], clamp=False),
            joint_entropy(x, clamp=False),
            mutual_information(x[:, 0], z, clamp=False),
            total_correlation(x, clamp=False),
            conditional_total_correlation(x, z, clamp=False),
        ):
            assert value >= -1e-12
        assert mutual_information(x[:, 0], z) >= 0.0
        assert total_correlation(x) >= 0.0


def test_state_relabeling_invariance():
    gen = np.random.default_rng(23)
    x = gen.integers(0, 3, size=(40, 3))
    z = gen.integers(0, 2, size=40)
    tc = total_correlation(x)
    red = tc_reduction(x, z)
    # bijectively recode column 1 and flip z
    x2 = x.copy()
    x2[:, 1] = (x[:, 1] + 1) % 3
    assert total_correlation(x2) == pytest.approx(tc, abs=1e-12)
    assert tc_reduction(x2, 1 - z) == pytest.approx(red, abs=1e-12)


def test_discrete_matrix_validation():
    with pytest.raises(ValueError):
        DiscreteMatrix(np.array([[0, 2]]), cards=[2, 2])  # value out of range
    with pytest.raises(ValueError):
        DiscreteMatrix(np.zeros((2, 2), dtype=int), names=["a"])
    m = DiscreteMatrix(np.array([[0, 1], [1, 0]]))
    assert m.cards == [2, 2] and m.n == 2 and m.d == 2


def test_factor_column_validation():
    with pytest.raises(ValueError):
        FactorColumn(np.array([0, 2]), cardinality=2)
    col = FactorColumn(np.array([0, 1, 1]), cardinality=2)
    assert entropy(col) == pytest.approx(oracle_entropy([0, 1, 1]), abs=1e-12)
