"""The plug-in local-averaging estimator over a partition-of-unity family.

For every basis index v the fit computes the empirical response mass
(mean of y_j weighted by the basis value at x_j) and the empirical cell
mass (mean basis value).  The coefficient is their ratio, with the
convention that an index carrying zero mass gets coefficient zero.  The
fitted function is the coefficient-weighted sum of the basis, so its
values are convex combinations of coefficients and never exceed the data
bound.

Population counterparts replace empirical means by integrals against the
covariate measure: exactly for atomic measures and for dyadic families
under the uniform measure with degree <= 1 truths, by seeded Monte Carlo
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import partition
from .partition import DYADIC, PartitionFamily
from .problems import (
    ATOMIC,
    UNIFORM,
    AffineFunction,
    Dataset,
    InputError,
    MarginalMeasure,
)

POPULATION = "population"
EMPIRICAL = "empirical"

# Exact dyadic cell-average integration enumerates cell centers; beyond
# this size fall back to Monte Carlo.
_MAX_EXACT_CELLS = 1 << 22

_MC_CHUNKS = 50  # chunk count for Monte Carlo standard errors


@dataclass(frozen=True, eq=False)
class CellStats:
    """Per-index response mass and cell mass (empirical or population)."""

    response_mass: np.ndarray
    cell_mass: np.ndarray


@dataclass(frozen=True, eq=False)
class EstimatorCoeffs:
    """Coefficient vector bound to a family, with the response bound it obeys."""

    family_ref: str
    values: np.ndarray
    kind: str
    y_bound: float | None = None


@dataclass(frozen=True, eq=False)
class PopulationStats:
    """Population cell statistics plus per-index Monte Carlo standard errors."""

    stats: CellStats
    response_se: np.ndarray
    mass_se: np.ndarray
    exact: bool
    points: int


def _validate_samples(x, y, family: PartitionFamily, y_bound=None):
    xs = partition.check_domain(x, family.dim)
    ys = np.ascontiguousarray(y, dtype=np.float64)
    if ys.ndim != 1 or len(ys) != len(xs):
        raise InputError("y must be a 1-d array matching x")
    if not np.all(np.isfinite(ys)):
        raise InputError("responses must be finite")
    if y_bound is not None and len(ys) and np.abs(ys).max() > y_bound:
        raise InputError(f"response exceeds the stated bound {y_bound}")
    return xs, ys


def empirical_stats(data: Dataset, family: PartitionFamily, y_bound=None) -> CellStats:
    """Empirical response/cell masses of the dataset under the family."""
    xs, ys = _validate_samples(data.x, data.y, family, y_bound)
    if len(ys) < 1:
        raise InputError("dataset must contain at least one sample")
    response, mass = partition.accumulate(family, xs, ys)
    m = len(ys)
    return CellStats(response_mass=response / m, cell_mass=mass / m)


def coeffs_from_stats(stats: CellStats) -> np.ndarray:
    """Ratio of response mass to cell mass, zero wherever the mass is zero."""
    out = np.zeros_like(stats.response_mass)
    occupied = stats.cell_mass > 0.0
    np.divide(stats.response_mass, stats.cell_mass, out=out, where=occupied)
    return out


def fit(data: Dataset, family: PartitionFamily, y_bound: float) -> EstimatorCoeffs:
    """Fit the local-averaging coefficients from bounded data."""
    if y_bound <= 0:
        raise InputError("y_bound must be positive")
    stats = empirical_stats(data, family, y_bound=y_bound)
    return EstimatorCoeffs(
        family_ref=family.key(),
        values=coeffs_from_stats(stats),
        kind=EMPIRICAL,
        y_bound=float(y_bound),
    )


def _dyadic_cell_centers(family: PartitionFamily) -> np.ndarray:
    cells = 1 << family.level
    axis = (np.arange(cells, dtype=np.float64) + 0.5) / cells
    grids = np.meshgrid(*([axis] * family.dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _atomic_population(truth, family: PartitionFamily, measure: MarginalMeasure) -> CellStats:
    idx, w = partition.family_weights(family, measure.atoms)
    fy = np.asarray(truth(measure.atoms), dtype=np.float64)
    response = np.zeros(family.size)
    mass = np.zeros(family.size)
    pw = w * measure.atom_probs[:, None]
    np.add.at(mass, idx.ravel(), pw.ravel())
    np.add.at(response, idx.ravel(), (pw * fy[:, None]).ravel())
    return CellStats(response_mass=response, cell_mass=mass)


def population_stats(
    truth,
    family: PartitionFamily,
    measure: MarginalMeasure,
    quadrature_n: int = 10**6,
    seed=0,
) -> PopulationStats:
    """Population response/cell masses of ``truth`` under the measure.

    Atomic measures are summed exactly; dyadic families under the uniform
    measure with an affine truth use exact cell averages; every other
    combination is estimated by seeded Monte Carlo with chunked standard
    errors.
    """
    if measure.dim != family.dim:
        raise InputError("measure and family dimensions differ")
    zeros = np.zeros(family.size)
    if measure.kind == ATOMIC:
        stats = _atomic_population(truth, family, measure)
        return PopulationStats(stats, zeros, zeros.copy(), exact=True, points=0)
    if (
        measure.kind == UNIFORM
        and family.kind == DYADIC
        and isinstance(truth, AffineFunction)
        and family.size <= _MAX_EXACT_CELLS
    ):
        volume = 1.0 / family.size
        centers = _dyadic_cell_centers(family)
        stats = CellStats(
            response_mass=np.asarray(truth(centers), dtype=np.float64) * volume,
            cell_mass=np.full(family.size, volume),
        )
        return PopulationStats(stats, zeros, zeros.copy(), exact=True, points=0)

    if quadrature_n < 1:
        raise InputError("quadrature_n must be >= 1")
    rng = np.random.default_rng(seed)
    chunks = min(_MC_CHUNKS, quadrature_n)
    chunk_size = -(-quadrature_n // chunks)  # ceil division
    r_sum = np.zeros(family.size)
    r_sumsq = np.zeros(family.size)
    m_sum = np.zeros(family.size)
    m_sumsq = np.zeros(family.size)
    for _ in range(chunks):
        x = measure.sample(rng, chunk_size)
        fy = np.asarray(truth(x), dtype=np.float64)
        response, mass = partition.accumulate(family, x, fy)
        r_mean = response / chunk_size
        m_mean = mass / chunk_size
        r_sum += r_mean
        r_sumsq += r_mean**2
        m_sum += m_mean
        m_sumsq += m_mean**2
    response_mass = r_sum / chunks
    cell_mass = m_sum / chunks

    def _se(sumsq, mean):
        var = np.maximum(sumsq / chunks - mean**2, 0.0) * chunks / (chunks - 1)
        return np.sqrt(var / chunks)

    if chunks < 2:
        response_se = np.full(family.size, np.inf)
        mass_se = np.full(family.size, np.inf)
    else:
        response_se = _se(r_sumsq, response_mass)
        mass_se = _se(m_sumsq, cell_mass)
    return PopulationStats(
        CellStats(response_mass=response_mass, cell_mass=cell_mass),
        response_se,
        mass_se,
        exact=False,
        points=chunks * chunk_size,
    )


def population_coeffs(
    truth,
    family: PartitionFamily,
    measure: MarginalMeasure,
    quadrature_n: int = 10**6,
    seed=0,
    y_bound: float | None = None,
) -> EstimatorCoeffs:
    """Population coefficients of ``truth``: response mass over cell mass per index."""
    pop = population_stats(truth, family, measure, quadrature_n=quadrature_n, seed=seed)
    return EstimatorCoeffs(
        family_ref=family.key(),
        values=coeffs_from_stats(pop.stats),
        kind=POPULATION,
        y_bound=y_bound,
    )


class FittedFunction:
    """Callable coefficient-weighted sum of the basis, vectorised over points."""

    def __init__(self, family: PartitionFamily, values: np.ndarray):
        if len(values) != family.size:
            raise InputError("coefficient vector does not match the family size")
        self.family = family
        self.values = np.ascontiguousarray(values, dtype=np.float64)

    def __call__(self, x):
        pts = partition.check_domain(np.asarray(x, dtype=np.float64), self.family.dim)
        out = partition.expansion_values(self.family, self.values, pts)
        if np.ndim(x) == 1:
            return float(out[0])
        return out


def fitted_function(coeffs: EstimatorCoeffs, family: PartitionFamily) -> FittedFunction:
    if coeffs.family_ref != family.key():
        raise InputError(
            f"coefficients were fitted for {coeffs.family_ref}, not {family.key()}"
        )
    return FittedFunction(family, coeffs.values)


def evaluate(coeffs: EstimatorCoeffs, family: PartitionFamily, x) -> float:
    """Value of the estimator at a single point."""
    return fitted_function(coeffs, family)(np.asarray(x, dtype=np.float64).reshape(-1))


def coeffs_to_csv(values: np.ndarray, cell_mass: np.ndarray) -> str:
    """Serialise fitted coefficients as CSV with columns index, c_v, rho_v."""
    lines = ["index,c_v,rho_v"]
    for v, (c, r) in enumerate(zip(values, cell_mass)):
        lines.append(f"{v},{float(c)!r},{float(r)!r}")
    return "\n".join(lines) + "\n"


def coeffs_from_csv(text: str):
    """Parse the coefficient CSV format; returns (values, cell_mass)."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "index,c_v,rho_v":
        raise InputError("expected coefficient header index,c_v,rho_v")
    values, mass = [], []
    for expected, ln in enumerate(lines[1:]):
        cols = ln.split(",")
        if len(cols) != 3 or int(cols[0]) != expected:
            raise InputError("malformed coefficient rows")
        values.append(float(cols[1]))
        mass.append(float(cols[2]))
    return np.array(values), np.array(mass)
