import numpy as np
import pytest

from poureg import partition
from poureg.partition import (
    DomainError,
    evaluate_family,
    family_weights,
    make_dyadic,
    make_hat,
    probe_points,
    validate_partition,
)


@pytest.mark.parametrize(
    "dim,level,size", [(1, 0, 1), (1, 1, 2), (1, 4, 16), (2, 2, 16), (3, 2, 64)]
)
def test_dyadic_sizes(dim, level, size):
    assert make_dyadic(dim, level).size == size


@pytest.mark.parametrize("dim,knots,size", [(1, 2, 2), (1, 17, 17), (2, 3, 9), (3, 4, 64)])
def test_hat_sizes(dim, knots, size):
    assert make_hat(dim, knots).size == size


def test_single_cell_family_is_constant_one():
    fam = make_dyadic(1, 0)
    for x in (0.0, 0.3, 1.0):
        assert evaluate_family(fam, [x]) == [(0, 1.0)]


def test_dyadic_level1_indicator():
    fam = make_dyadic(1, 1)
    assert evaluate_family(fam, [0.3]) == [(0, 1.0)]
    assert evaluate_family(fam, [0.75]) == [(1, 1.0)]
    # half-open cells: 0.5 belongs to the right cell, 1.0 folds into it too
    assert evaluate_family(fam, [0.5]) == [(1, 1.0)]
    assert evaluate_family(fam, [1.0]) == [(1, 1.0)]


def test_dyadic_2d_exactly_one_nonzero():
    fam = make_dyadic(2, 2)
    entries = evaluate_family(fam, [0.7, 0.1])
    assert len(entries) == 1
    assert entries[0][1] == 1.0


def test_hat_k3_midknot_values():
    fam = make_hat(1, 3)
    assert evaluate_family(fam, [0.25]) == [(0, 0.5), (1, 0.5)]


def test_hat_k3_hand_evaluation():
    entries = dict(evaluate_family(make_hat(1, 3), [0.4]))
    assert entries[0] == pytest.approx(0.2, abs=1e-15)
    assert entries[1] == pytest.approx(0.8, abs=1e-15)


def test_hat_k3_boundary_knot():
    assert evaluate_family(make_hat(1, 3), [1.0]) == [(2, 1.0)]


def test_hat_k2_is_linear_pair():
    fam = make_hat(1, 2)
    for x in np.linspace(0, 1, 11):
        entries = dict(evaluate_family(fam, [x]))
        assert entries.get(0, 0.0) == pytest.approx(1 - x, abs=1e-15)
        assert entries.get(1, 0.0) == pytest.approx(x, abs=1e-15)


def test_tensor_hat_bilinear_center():
    fam = make_hat(2, 2)
    entries = dict(evaluate_family(fam, [0.5, 0.5]))
    assert entries[0] == pytest.approx(0.25)
    assert sum(entries.values()) == pytest.approx(1.0)
    assert len(entries) == 4


_FAMILIES = [
    make_dyadic(1, 3),
    make_dyadic(2, 2),
    make_dyadic(3, 1),
    make_hat(1, 2),
    make_hat(1, 17),
    make_hat(2, 5),
    make_hat(3, 3),
]


@pytest.mark.parametrize("fam", _FAMILIES, ids=lambda f: f.key())
def test_partition_of_unity_on_random_probes(fam):
    rng = np.random.default_rng(42)
    pts = rng.random((10_000, fam.dim))
    _, w = family_weights(fam, pts)
    assert np.max(np.abs(w.sum(axis=1) - 1.0)) <= 1e-9
    assert w.min() >= -1e-12 and w.max() <= 1.0 + 1e-12


@pytest.mark.parametrize("fam", _FAMILIES, ids=lambda f: f.key())
def test_locality_bound(fam):
    rng = np.random.default_rng(7)
    for x in rng.random((200, fam.dim)):
        assert len(evaluate_family(fam, x)) <= fam.max_support


def test_evaluate_family_rejects_points_outside_cube():
    fam = make_dyadic(1, 1)
    with pytest.raises(DomainError):
        evaluate_family(fam, [1.2])
    with pytest.raises(DomainError):
        evaluate_family(fam, [-0.1])
    with pytest.raises(DomainError):
        evaluate_family(make_hat(2, 3), [0.5, 1.0001])


def test_constructor_guards():
    with pytest.raises(ValueError):
        make_dyadic(0, 1)
    with pytest.raises(ValueError):
        make_dyadic(1, -1)
    with pytest.raises(ValueError, match="overflow"):
        make_dyadic(7, 9)  # 2**63 indices
    with pytest.raises(ValueError):
        make_hat(1, 1)
    with pytest.raises(ValueError):
        make_hat(0, 3)


@pytest.mark.parametrize("fam", _FAMILIES, ids=lambda f: f.key())
def test_validate_partition_passes(fam):
    report = validate_partition(fam, probes=1000, seed=3)
    assert report.passed
    assert report.max_sum_deviation <= 1e-9


def test_validate_partition_exact_for_indicators():
    report = validate_partition(make_dyadic(2, 3), probes=1000, seed=0)
    assert report.max_sum_deviation == 0.0


def test_validate_detects_corrupted_family(monkeypatch):
    # scale one weight by 0.9: the sums at points supported by that member drop
    original = partition.family_weights

    def corrupted(family, x):
        idx, w = original(family, x)
        w = w.copy()
        w[idx == 1] *= 0.9
        return idx, w

    monkeypatch.setattr(partition, "family_weights", corrupted)
    report = validate_partition(make_hat(1, 5), probes=1000, seed=0)
    assert not report.passed
    assert report.max_sum_deviation > 1e-9


def test_probe_points_deterministic_and_inside():
    a = probe_points(2, 500, seed=9)
    b = probe_points(2, 500, seed=9)
    assert np.array_equal(a, b)
    assert a.min() >= 0.0 and a.max() <= 1.0
    # corners are pinned so boundary handling is exercised
    assert any(np.array_equal(row, [1.0, 1.0]) for row in a[:8])
