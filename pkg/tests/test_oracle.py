"""Exact enumeration oracle: frozen hand values and agreement with Monte Carlo."""

import pytest

from poureg.metrics import (
    EnumerationBudgetError,
    estimate_expected_error,
    exact_expected_error,
)
from poureg.partition import make_dyadic, make_hat
from poureg.problems import InputError, get_problem


def test_two_atom_m1_hand_value():
    # two equal atoms in distinct cells, noiseless truth values (0, 1):
    # with probability 1/2 only the left atom is seen, leaving the right
    # cell empty (coefficient 0) at squared cost 0.5 * (1-0)^2; the other
    # dataset is exact.  E = 0.5 * 0.5 = 0.25
    p = get_problem("two-atom")
    assert exact_expected_error(p, make_dyadic(1, 1), 1) == 0.25


def test_two_atom_m2_hand_value():
    # one-atom datasets have probability 1/4 each; only the all-left one
    # pays 0.5, so E = 0.125
    p = get_problem("two-atom")
    assert exact_expected_error(p, make_dyadic(1, 1), 2) == 0.125


def test_two_atom_noisy_m1_hand_value():
    # atoms (0.25, 0.75), truth (0, 0.5), noise 0.25: four single-sample
    # datasets with probability 1/4 each; costs 5/32, 5/32, 1/32, 1/32
    p = get_problem("two-atom-noisy")
    assert exact_expected_error(p, make_dyadic(1, 1), 1) == 0.09375


def test_error_decreases_with_m_on_two_atom():
    p = get_problem("two-atom")
    fam = make_dyadic(1, 1)
    values = [exact_expected_error(p, fam, m) for m in (1, 2, 3, 4)]
    assert all(b < a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_constant_truth_is_exactly_zero_on_single_cell(m):
    p = get_problem("two-atom-constant")
    assert exact_expected_error(p, make_dyadic(1, 0), m) == 0.0


@pytest.mark.parametrize("m", [1, 2, 3])
def test_constant_truth_empty_cell_contribution(m):
    # at level 1 a constant truth still pays for the empty cell: the fitted
    # coefficient there is 0, not 0.5.  P(single-sided) = 2 * 0.5^m, each
    # such dataset costs 0.5 * 0.25
    p = get_problem("two-atom-constant")
    expected = 2 * 0.5**m * 0.125
    assert exact_expected_error(p, make_dyadic(1, 1), m) == expected


def test_oracle_supports_hat_families():
    # overlap between hats makes the fitted value at an atom a blend; the
    # oracle integrates the same functional the Monte Carlo path estimates
    p = get_problem("two-atom")
    fam = make_hat(1, 3)
    exact = exact_expected_error(p, fam, 2)
    est = estimate_expected_error(p, fam, 2, replications=6000, seed=8)
    assert abs(est.mean_sq - exact) <= 3 * est.std_err


def test_budget_guard_triggers():
    p = get_problem("two-atom-noisy")
    with pytest.raises(EnumerationBudgetError):
        exact_expected_error(p, make_dyadic(1, 1), 20)  # 4**20 datasets


def test_oracle_requires_atomic_measure():
    with pytest.raises(InputError):
        exact_expected_error(get_problem("lipschitz-1d"), make_dyadic(1, 1), 2)


@pytest.mark.parametrize("name,m", [("two-atom", 3), ("two-atom-noisy", 2)])
def test_monte_carlo_agrees_with_oracle(name, m):
    p = get_problem(name)
    fam = make_dyadic(1, 1)
    exact = exact_expected_error(p, fam, m)
    est = estimate_expected_error(p, fam, m, replications=4000, seed=13)
    assert est.std_err > 0
    assert abs(est.mean_sq - exact) <= 3 * est.std_err
