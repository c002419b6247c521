"""Weighted-L2 error metrics, closed-form deviation bounds, and expectation
estimators for the local-averaging estimator.

Expectations over the sampling of datasets are estimated by independent
seeded replications with reported standard errors, and verified on tiny
atomic problems by an exact enumeration oracle that walks every possible
dataset with its probability.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import partition
from .estimator import (
    FittedFunction,
    PopulationStats,
    coeffs_from_stats,
    fit,
    population_stats,
)
from .partition import DYADIC, PartitionFamily
from .problems import (
    ATOMIC,
    NOISELESS,
    UNIFORM,
    InputError,
    MarginalMeasure,
    RegressionProblem,
    replication_stream,
    sample_dataset,
)

_MAX_EXACT_CELLS = 1 << 22  # cap for exact common-grid piecewise integration

TARGET_POPULATION = "population"
TARGET_TRUTH = "truth"


class EnumerationBudgetError(ValueError):
    """The exact-expectation enumeration would exceed its term budget."""


@dataclass(frozen=True)
class Estimate:
    """A scalar estimate with its standard error (zero when exact)."""

    value: float
    std_err: float


@dataclass(frozen=True)
class ErrorEstimate:
    """Replication estimate of an expected squared weighted-L2 error."""

    mean_sq: float
    std_err: float
    replications: int
    mc_points: int


def run_indexed(fn, count: int, workers: int = 1) -> list:
    """Evaluate fn(0..count-1), optionally on a thread pool, in index order.

    Each index must be self-contained (derived RNG streams), so the result
    does not depend on the worker count.
    """
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(count)))
    return [fn(r) for r in range(count)]


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _refine_dyadic(values: np.ndarray, level: int, fine_level: int, dim: int) -> np.ndarray:
    """Cell values of a dyadic piecewise-constant function on a finer dyadic grid."""
    if level == fine_level:
        return values
    shift = fine_level - level
    cells_fine = 1 << fine_level
    cells_coarse = 1 << level
    idx = np.arange((1 << (fine_level * dim)), dtype=np.int64)
    coarse = np.zeros_like(idx)
    mult = 1
    for _ in range(dim):  # peel axis digits starting from the least significant
        digit = idx % cells_fine
        idx //= cells_fine
        coarse += (digit >> shift) * mult
        mult *= cells_coarse
    return values[coarse]


def _both_dyadic(f, g):
    return (
        isinstance(f, FittedFunction)
        and isinstance(g, FittedFunction)
        and f.family.kind == DYADIC
        and g.family.kind == DYADIC
        and f.family.dim == g.family.dim
    )


def l2_sq_distance(f, g, measure: MarginalMeasure, n_mc: int = 4096, seed=0) -> Estimate:
    """Integral of (f - g)^2 against the covariate measure, with standard error.

    Exact (zero standard error) for atomic measures and for two dyadic
    piecewise-constant expansions under the uniform measure; Monte Carlo
    with n_mc points otherwise.  Both functions must be vectorised over
    (n, d) point arrays.
    """
    if measure.kind == ATOMIC:
        diff = np.asarray(f(measure.atoms), dtype=np.float64) - np.asarray(
            g(measure.atoms), dtype=np.float64
        )
        return Estimate(float(np.dot(measure.atom_probs, diff**2)), 0.0)
    if measure.kind == UNIFORM and _both_dyadic(f, g):
        fine = max(f.family.level, g.family.level)
        if (1 << (fine * measure.dim)) <= _MAX_EXACT_CELLS:
            vf = _refine_dyadic(f.values, f.family.level, fine, measure.dim)
            vg = _refine_dyadic(g.values, g.family.level, fine, measure.dim)
            return Estimate(float(np.mean((vf - vg) ** 2)), 0.0)
    if n_mc < 2:
        raise InputError("n_mc must be >= 2")
    rng = _as_rng(seed)
    x = measure.sample(rng, n_mc)
    sq = (
        np.asarray(f(x), dtype=np.float64) - np.asarray(g(x), dtype=np.float64)
    ) ** 2
    return Estimate(float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(n_mc)))


# ---------------------------------------------------------------------------
# Closed-form bound evaluators (clamped to 1 so they are total probabilities)
# ---------------------------------------------------------------------------


def _check_mass(cell_mass: float):
    if not 0.0 <= cell_mass <= 1.0:
        raise InputError(f"cell mass must lie in [0, 1], got {cell_mass}")


def bernstein_response_bound(eps: float, m: int, cell_mass: float, y_bound: float) -> float:
    """Bernstein deviation bound for the empirical response mass of one index:
    min(1, 2 exp(-3 m eps^2 / (6 A^2 rho + 4 A eps))) with A the response bound
    and rho the population cell mass."""
    if eps <= 0:
        raise InputError("eps must be positive")
    if m < 1:
        raise InputError("m must be >= 1")
    if y_bound <= 0:
        raise InputError("y_bound must be positive")
    _check_mass(cell_mass)
    exponent = 3.0 * m * eps**2 / (6.0 * y_bound**2 * cell_mass + 4.0 * y_bound * eps)
    return min(1.0, 2.0 * math.exp(-exponent))


def bernstein_mass_bound(eps: float, m: int, cell_mass: float) -> float:
    """Bernstein deviation bound for the empirical cell mass of one index:
    min(1, 2 exp(-3 m eps^2 / (6 rho + 2 eps)))."""
    if eps <= 0:
        raise InputError("eps must be positive")
    if m < 1:
        raise InputError("m must be >= 1")
    _check_mass(cell_mass)
    exponent = 3.0 * m * eps**2 / (6.0 * cell_mass + 2.0 * eps)
    return min(1.0, 2.0 * math.exp(-exponent))


def tail_bound(eta: float, m: int, size: int, y_bound: float) -> float:
    """Exponential tail bound for the weighted-L2 gap between the fitted
    estimator and its population counterpart:
    min(1, 4 N exp(-3 m eta^2 / (128 A^2 N))) with N the family size."""
    if eta <= 0:
        raise InputError("eta must be positive")
    if m < 1 or size < 1:
        raise InputError("m and size must be >= 1")
    if y_bound <= 0:
        raise InputError("y_bound must be positive")
    exponent = 3.0 * m * eta**2 / (128.0 * y_bound**2 * size)
    return min(1.0, 4.0 * size * math.exp(-exponent))


def variance_bounds(cell_mass: float, y_bound: float) -> tuple[float, float]:
    """Closed-form caps (A^2 rho, rho) on the per-sample variances of the
    weighted response and of the basis weight at one index."""
    if y_bound <= 0:
        raise InputError("y_bound must be positive")
    _check_mass(cell_mass)
    return (y_bound**2 * cell_mass, cell_mass)


# ---------------------------------------------------------------------------
# Replication estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PopulationModel:
    """Population coefficients and cell masses of a problem under a family."""

    family: PartitionFamily
    coeff_values: np.ndarray
    stats_se: PopulationStats

    @property
    def cell_mass(self) -> np.ndarray:
        return self.stats_se.stats.cell_mass

    @property
    def exact(self) -> bool:
        return self.stats_se.exact

    def function(self) -> FittedFunction:
        return FittedFunction(self.family, self.coeff_values)


def population_model(
    problem: RegressionProblem,
    family: PartitionFamily,
    quadrature_n: int = 10**6,
    seed=0,
) -> PopulationModel:
    pop = population_stats(
        problem.truth, family, problem.measure, quadrature_n=quadrature_n, seed=seed
    )
    return PopulationModel(
        family=family, coeff_values=coeffs_from_stats(pop.stats), stats_se=pop
    )


def replication_errors(
    problem: RegressionProblem,
    family: PartitionFamily,
    m: int,
    replications: int,
    seed: int = 0,
    mc_points: int = 4096,
    population: PopulationModel | None = None,
    target: str = TARGET_POPULATION,
    workers: int = 1,
    quadrature_n: int = 10**6,
):
    """Squared weighted-L2 errors of the fitted estimator over R replications.

    Per replication: draw a size-m dataset from a derived stream, fit, and
    measure the squared distance to the target (the population fit or the
    truth).  For dyadic families the distance to the population fit is the
    mass-weighted sum of squared coefficient gaps (exact given the masses);
    other combinations fall back to l2_sq_distance, drawing any Monte Carlo
    points from the same replication stream.

    Returns (errors, coeff_gaps) where coeff_gaps is the (R, N) matrix of
    population-minus-fitted coefficients on the dyadic fast path and None
    otherwise.
    """
    if replications < 2:
        raise InputError("replications must be >= 2")
    if target not in (TARGET_POPULATION, TARGET_TRUTH):
        raise InputError(f"unknown target {target!r}")
    pop = population
    if pop is None and target == TARGET_POPULATION:
        pop = population_model(problem, family, quadrature_n=quadrature_n, seed=seed)
    dyadic_path = target == TARGET_POPULATION and family.kind == DYADIC
    pop_fn = pop.function() if (pop is not None and not dyadic_path) else None

    def one(r: int):
        rng = np.random.default_rng(replication_stream(seed, r))
        data = sample_dataset(problem, m, rng)
        coeffs = fit(data, family, problem.y_bound)
        fitted = FittedFunction(family, coeffs.values)
        if dyadic_path:
            gap = pop.coeff_values - coeffs.values
            return float(np.dot(pop.cell_mass, gap * gap)), gap
        reference = pop_fn if target == TARGET_POPULATION else problem.truth
        est = l2_sq_distance(reference, fitted, problem.measure, n_mc=mc_points, seed=rng)
        return est.value, None

    results = run_indexed(one, replications, workers)
    errors = np.array([v for v, _ in results])
    gaps = np.array([g for _, g in results]) if dyadic_path else None
    return errors, gaps, pop


def _population_noise_se(pop: PopulationModel, gaps, mean_sq: float) -> float:
    """First-order standard error contributed by the Monte Carlo population step."""
    if pop is None or pop.exact:
        return 0.0
    stats = pop.stats_se
    mass = pop.cell_mass
    occupied = mass > 0.0
    coeff_se = np.zeros_like(mass)
    coeff_se[occupied] = (
        np.sqrt(
            stats.response_se[occupied] ** 2
            + (pop.coeff_values[occupied] * stats.mass_se[occupied]) ** 2
        )
        / mass[occupied]
    )
    if gaps is not None:
        gap_mean = gaps.mean(axis=0)
        gap_sq_mean = (gaps**2).mean(axis=0)
        var = np.sum((gap_sq_mean * stats.mass_se) ** 2)
        var += np.sum((2.0 * mass * np.abs(gap_mean) * coeff_se) ** 2)
        return float(np.sqrt(var))
    # generic path: || delta Q || <= sqrt(sum rho_v * se(c_v)^2) by convexity
    dq = math.sqrt(float(np.sum(mass * coeff_se**2)))
    return 2.0 * math.sqrt(max(mean_sq, 0.0)) * dq


def estimate_expected_error(
    problem: RegressionProblem,
    family: PartitionFamily,
    m: int,
    replications: int,
    mc_points: int = 4096,
    seed: int = 0,
    population: PopulationModel | None = None,
    target: str = TARGET_POPULATION,
    workers: int = 1,
    quadrature_n: int = 10**6,
) -> ErrorEstimate:
    """Replication estimate of the expected squared weighted-L2 error.

    ``target`` selects the reference: the population fit of the truth
    (default) or the truth itself.  Monte Carlo noise from a non-exact
    population step is folded into the reported standard error.
    """
    errors, gaps, pop = replication_errors(
        problem,
        family,
        m,
        replications,
        seed=seed,
        mc_points=mc_points,
        population=population,
        target=target,
        workers=workers,
        quadrature_n=quadrature_n,
    )
    mean = float(errors.mean())
    se = float(errors.std(ddof=1) / math.sqrt(replications))
    if target == TARGET_POPULATION:
        se = float(math.hypot(se, _population_noise_se(pop, gaps, mean)))
    used_mc = 0 if (target == TARGET_POPULATION and family.kind == DYADIC) else mc_points
    return ErrorEstimate(
        mean_sq=mean, std_err=se, replications=replications, mc_points=used_mc
    )


# ---------------------------------------------------------------------------
# Exact enumeration oracle
# ---------------------------------------------------------------------------

_ENUM_CHUNK = 1 << 15


def exact_expected_error(
    problem: RegressionProblem,
    family: PartitionFamily,
    m: int,
    max_terms: int = 10**7,
) -> float:
    """Exact expected squared weighted-L2 gap to the population fit, by
    enumerating every possible dataset of an atomic problem with its
    probability.

    Requires an atomic covariate measure and at most two response values per
    atom (the two-point noise support).  Raises EnumerationBudgetError when
    the number of datasets exceeds ``max_terms``.
    """
    measure = problem.measure
    if measure.kind != ATOMIC:
        raise InputError("the enumeration oracle requires an atomic covariate measure")
    if m < 1:
        raise InputError("m must be >= 1")
    atoms = measure.atoms
    probs = measure.atom_probs
    truth_at = np.asarray(problem.truth(atoms), dtype=np.float64)
    sigma_at = problem.sigma_at(atoms)

    out_atom, out_y, out_p = [], [], []
    for a, (fa, sa, pa) in enumerate(zip(truth_at, sigma_at, probs)):
        if problem.noise_kind == NOISELESS or sa == 0.0:
            out_atom.append(a), out_y.append(fa), out_p.append(pa)
        else:
            out_atom.append(a), out_y.append(fa - sa), out_p.append(pa / 2.0)
            out_atom.append(a), out_y.append(fa + sa), out_p.append(pa / 2.0)
    out_atom = np.array(out_atom)
    out_y = np.array(out_y)
    out_p = np.array(out_p)
    n_out = len(out_p)

    total = n_out**m
    if total > max_terms:
        raise EnumerationBudgetError(
            f"{n_out}**{m} = {total} datasets exceed the budget of {max_terms}"
        )

    # Dense basis-by-atom weight table, assembled from the sparse evaluation.
    n_atoms = len(atoms)
    idx, w = partition.family_weights(family, atoms)
    table = np.zeros((family.size, n_atoms))
    cols = np.repeat(np.arange(n_atoms), idx.shape[1])
    np.add.at(table, (idx.ravel(), cols), w.ravel())

    pop_mass = table @ probs
    pop_resp = table @ (probs * truth_at)
    pop_coeff = np.zeros(family.size)
    np.divide(pop_resp, pop_mass, out=pop_coeff, where=pop_mass > 0.0)
    pop_at_atoms = pop_coeff @ table

    radix = n_out ** np.arange(m - 1, -1, -1, dtype=np.int64)
    chunk_totals: list[float] = []
    prob_totals: list[float] = []
    for start in range(0, total, _ENUM_CHUNK):
        ids = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.int64)
        digits = (ids[:, None] // radix[None, :]) % n_out  # (C, m) outcome codes
        sample_atoms = out_atom[digits]
        sample_y = out_y[digits]
        weight = out_p[digits].prod(axis=1)

        counts = np.zeros((len(ids), n_atoms))
        ysum = np.zeros((len(ids), n_atoms))
        rows = np.arange(len(ids))
        for j in range(m):
            np.add.at(counts, (rows, sample_atoms[:, j]), 1.0)
            np.add.at(ysum, (rows, sample_atoms[:, j]), sample_y[:, j])
        mass_z = counts @ table.T / m
        resp_z = ysum @ table.T / m
        coeff_z = np.zeros_like(mass_z)
        np.divide(resp_z, mass_z, out=coeff_z, where=mass_z > 0.0)
        fitted_at_atoms = coeff_z @ table
        err = ((pop_at_atoms[None, :] - fitted_at_atoms) ** 2) @ probs
        chunk_totals.append(float(np.sum(err * weight)))
        prob_totals.append(float(np.sum(weight)))

    total_prob = math.fsum(prob_totals)
    if abs(total_prob - 1.0) > 1e-9:
        raise AssertionError(f"enumerated probabilities sum to {total_prob}, not 1")
    return math.fsum(chunk_totals)


def approx_error(
    f,
    family: PartitionFamily,
    measure: MarginalMeasure,
    n_mc: int = 65536,
    seed: int = 0,
    quadrature_n: int = 10**6,
) -> float:
    """Weighted-L2 distance between f and its population fit under the family.

    Probes how fast the family of growing size can represent f: for truths
    with approximation order s the value decays like size**-s.
    """
    pop = population_stats(f, family, measure, quadrature_n=quadrature_n, seed=seed)
    fitted = FittedFunction(family, coeffs_from_stats(pop.stats))
    est = l2_sq_distance(f, fitted, measure, n_mc=n_mc, seed=seed)
    return math.sqrt(max(est.value, 0.0))
