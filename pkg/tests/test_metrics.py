import itertools

import numpy as np
import pytest

from oracles import logme_grid_oracle
from xferbench.errors import (
    DegenerateLabels,
    DimensionMismatch,
    EmptyInput,
    LengthMismatch,
    NotAProbability,
    SingularCovariance,
)
from xferbench.metrics import (
    energy_score,
    lda_separability,
    leep,
    logme,
    nce,
    softmax,
)


# --- LEEP ---


def test_leep_one_hot_identity():
    labels = np.array([0, 1, 2, 0, 1])
    probs = np.eye(3)[labels]
    assert leep(probs, labels) == pytest.approx(0.0, abs=1e-12)


def test_leep_uniform_predictions():
    # P(y|z) = 1/2 for every (y, z) cell, so each sample contributes log(1/2)
    labels = np.array([0, 0, 1, 1])
    probs = np.full((4, 3), 1.0 / 3.0)
    assert leep(probs, labels) == pytest.approx(np.log(0.5), abs=1e-9)


def test_leep_single_target_class():
    probs = softmax(np.random.default_rng(0).standard_normal((5, 4)))
    assert leep(probs, np.zeros(5, dtype=np.int64)) == pytest.approx(0.0, abs=1e-12)


def test_leep_always_nonpositive():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n, cs, ct = rng.integers(2, 30), rng.integers(2, 6), rng.integers(2, 5)
        probs = softmax(rng.standard_normal((n, cs)))
        labels = rng.integers(0, ct, size=n)
        assert leep(probs, labels) <= 1e-12


def test_leep_rejects_non_simplex():
    with pytest.raises(NotAProbability):
        leep(np.array([[0.5, 0.6], [0.5, 0.5]]), np.array([0, 1]))


def test_leep_rejects_empty():
    with pytest.raises(EmptyInput):
        leep(np.empty((0, 3)), np.empty(0, dtype=np.int64))


# --- NCE ---


def test_nce_identity_map():
    y = np.array([0, 1, 2, 1, 0])
    assert nce(y, y) == pytest.approx(0.0, abs=1e-12)


def test_nce_independent_uniform():
    z = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    y = np.array([0, 1, 0, 1, 0, 1, 0, 1])
    assert nce(z, y) == pytest.approx(-np.log(2), abs=1e-9)


def test_nce_single_sample():
    assert nce(np.array([3]), np.array([7])) == pytest.approx(0.0, abs=1e-12)


def test_nce_length_mismatch():
    with pytest.raises(LengthMismatch):
        nce(np.array([0, 1]), np.array([0]))


def test_nce_zero_iff_functional_exhaustive():
    # exhaustive over all (Z, Y) assignments for N=4, C=3
    n, c = 4, 3
    for z in itertools.product(range(c), repeat=n):
        za = np.array(z)
        for y in itertools.product(range(c), repeat=n):
            ya = np.array(y)
            val = nce(za, ya)
            functional = all(
                len({ya[i] for i in range(n) if za[i] == zz}) <= 1 for zz in set(z)
            )
            assert val <= 1e-12
            if functional:
                assert val == pytest.approx(0.0, abs=1e-12)
            else:
                assert val < -1e-9


def test_nce_zero_iff_functional_random_n6():
    rng = np.random.default_rng(11)
    for _ in range(500):
        z = rng.integers(0, 3, size=6)
        y = rng.integers(0, 3, size=6)
        val = nce(z, y)
        functional = all(len(set(y[z == zz])) <= 1 for zz in set(z.tolist()))
        assert (val == pytest.approx(0.0, abs=1e-12)) == functional


# --- energy ---


def test_energy_all_zero_logits():
    assert energy_score(np.zeros((5, 10))) == pytest.approx(np.log(10), abs=1e-9)


def test_energy_shift_property():
    rng = np.random.default_rng(5)
    logits = rng.standard_normal((8, 6))
    base = energy_score(logits)
    shifted = logits.copy()
    shifted[3] += 2.5
    assert energy_score(shifted) == pytest.approx(base + 2.5 / 8, abs=1e-9)


def test_energy_no_overflow():
    assert energy_score(np.array([[1000.0, 1000.0]])) == pytest.approx(
        1000.0 + np.log(2), abs=1e-9
    )


def test_energy_empty():
    with pytest.raises(EmptyInput):
        energy_score(np.empty((0, 3)))


# --- LogME ---


def test_logme_permutation_invariance():
    rng = np.random.default_rng(2)
    f = rng.standard_normal((12, 3))
    y = rng.integers(0, 3, size=12)
    base = logme(f, y)
    perm = rng.permutation(12)
    assert logme(f[perm], y[perm]) == pytest.approx(base, abs=1e-12)


def test_logme_separated_classes_matches_grid_oracle():
    rng = np.random.default_rng(7)
    means = np.array([[-3.0, 0.0], [3.0, 0.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    f = means[y] + 0.3 * rng.standard_normal((6, 2))
    assert logme(f, y) == pytest.approx(logme_grid_oracle(f, y), abs=1e-3)


def test_logme_degenerate_labels():
    with pytest.raises(DegenerateLabels):
        logme(np.random.rand(5, 2), np.zeros(5, dtype=np.int64))


def test_logme_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        logme(np.random.rand(5, 2), np.array([0, 1]))


# --- LDA separability ---


def test_lda_well_separated():
    rng = np.random.default_rng(7)
    means = np.array([[-10.0, 0.0], [10.0, 0.0]])
    y = np.repeat([0, 1], 50)
    x = means[y] + 0.1 * rng.standard_normal((100, 2))
    assert lda_separability(x, y, shrinkage=0.1) > -1e-3


def test_lda_shuffled_labels_collapse_to_prior():
    rng = np.random.default_rng(21)
    x = rng.standard_normal((2000, 4))
    y = rng.integers(0, 2, size=2000)
    assert lda_separability(x, y, shrinkage=0.1) == pytest.approx(
        np.log(0.5), abs=0.05
    )


def test_lda_monotone_in_separation():
    rng = np.random.default_rng(13)
    noise = rng.standard_normal((200, 2))
    y = np.repeat([0, 1], 100)
    scores = []
    for s in [0.5, 1.0, 2.0, 4.0, 8.0]:
        means = np.array([[-s / 2, 0.0], [s / 2, 0.0]])
        scores.append(lda_separability(means[y] + noise, y, shrinkage=0.1))
    assert all(a < b for a, b in zip(scores, scores[1:]))


def test_lda_degenerate_labels():
    with pytest.raises(DegenerateLabels):
        lda_separability(np.random.rand(10, 2), np.zeros(10, dtype=np.int64))


def test_lda_singular_covariance_at_zero_shrinkage():
    # duplicated column makes the pooled covariance rank-deficient
    rng = np.random.default_rng(1)
    col = rng.standard_normal(20)
    x = np.stack([col, col], axis=1)
    y = np.array([0, 1] * 10)
    with pytest.raises(SingularCovariance):
        lda_separability(x, y, shrinkage=0.0)
