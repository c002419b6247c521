"""Synthetic regression problems with almost-surely bounded responses.

A problem bundles a covariate distribution on [0, 1]^d, an evaluable
ground-truth conditional mean, and an optional symmetric two-point noise
scale sigma(x): responses are y = truth(x) +/- sigma(x) with equal
probability, so E[y | x] equals the truth exactly and |y| <= y_bound with
probability one (checked on construction over 10^4 probe points).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .partition import probe_points

UNIFORM = "uniform"
PRODUCT_BETA = "beta"
ATOMIC = "atomic"

NOISELESS = "noiseless"
TWO_POINT = "two-point"

_CONSTRUCTION_PROBES = 10_000


class InputError(ValueError):
    """Invalid sample data or problem parameters."""


@dataclass(frozen=True, eq=False)
class MarginalMeasure:
    """Covariate distribution on [0, 1]^dim: uniform, product Beta, or atomic."""

    kind: str
    dim: int
    beta_a: float | None = None
    beta_b: float | None = None
    atoms: np.ndarray | None = None
    atom_probs: np.ndarray | None = None

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == UNIFORM:
            return rng.random((n, self.dim))
        if self.kind == PRODUCT_BETA:
            return rng.beta(self.beta_a, self.beta_b, size=(n, self.dim))
        picks = rng.choice(len(self.atom_probs), size=n, p=self.atom_probs)
        return self.atoms[picks]


def uniform(dim: int) -> MarginalMeasure:
    return MarginalMeasure(kind=UNIFORM, dim=dim)


def product_beta(dim: int, a: float, b: float) -> MarginalMeasure:
    if a <= 0 or b <= 0:
        raise InputError("Beta parameters must be positive")
    return MarginalMeasure(kind=PRODUCT_BETA, dim=dim, beta_a=float(a), beta_b=float(b))


def atomic(points, probs) -> MarginalMeasure:
    atoms = np.atleast_2d(np.asarray(points, dtype=np.float64))
    p = np.asarray(probs, dtype=np.float64)
    if len(p) != len(atoms):
        raise InputError("one probability per atom required")
    if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
        raise InputError("atom probabilities must be positive and sum to 1")
    if atoms.min() < 0.0 or atoms.max() > 1.0:
        raise InputError("atoms must lie in the unit cube")
    return MarginalMeasure(kind=ATOMIC, dim=atoms.shape[1], atoms=atoms, atom_probs=p)


class AffineFunction:
    """f(x) = intercept + coef . x, vectorised over rows of x.

    Kept as a named class so exact integration paths can recognise
    degree <= 1 truths.
    """

    def __init__(self, coef, intercept: float):
        self.coef = np.asarray(coef, dtype=np.float64)
        self.intercept = float(intercept)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.coef + self.intercept


class SineProduct:
    """f(x) = amplitude * prod_i sin(pi * x_i)."""

    def __init__(self, amplitude: float):
        self.amplitude = float(amplitude)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.amplitude * np.prod(np.sin(np.pi * np.asarray(x)), axis=-1)


class StepFunction:
    """f(x) = low for x_0 < threshold, high otherwise (first coordinate only)."""

    def __init__(self, threshold: float, low: float, high: float):
        self.threshold = float(threshold)
        self.low = float(low)
        self.high = float(high)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x0 = np.asarray(x)[..., 0]
        return np.where(x0 >= self.threshold, self.high, self.low)


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    """A covariate measure, a bounded truth, and an optional two-point noise scale.

    ``rates`` maps a family kind to the known decay order s of the best
    size-N approximation of the truth by that family (error ~ N**-s), used
    by the rate experiment to pick family sizes.
    """

    name: str
    measure: MarginalMeasure
    truth: object
    noise_kind: str
    y_bound: float
    sigma: object | None = None
    rates: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.measure.dim

    def sigma_at(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if self.noise_kind == NOISELESS:
            return np.zeros(x.shape[0])
        if callable(self.sigma):
            return np.asarray(self.sigma(x), dtype=np.float64)
        return np.full(x.shape[0], float(self.sigma))


def make_problem(name, measure, truth, sigma, y_bound, rates=None) -> RegressionProblem:
    """Build a problem and verify sup |truth| + sigma <= y_bound on probe points."""
    if y_bound <= 0:
        raise InputError("y_bound must be positive")
    noise_kind = NOISELESS if sigma is None else TWO_POINT
    problem = RegressionProblem(
        name=name,
        measure=measure,
        truth=truth,
        noise_kind=noise_kind,
        y_bound=float(y_bound),
        sigma=sigma,
        rates=dict(rates or {}),
    )
    pts = probe_points(measure.dim, _CONSTRUCTION_PROBES, seed=0)
    if measure.kind == ATOMIC:
        pts = np.concatenate([pts, measure.atoms])
    reach = np.abs(np.asarray(truth(pts), dtype=np.float64)) + problem.sigma_at(pts)
    worst = float(reach.max())
    if worst > y_bound:
        raise InputError(
            f"|truth| + sigma reaches {worst:.6g} > y_bound {y_bound:.6g} on probe points"
        )
    return problem


@dataclass(frozen=True, eq=False)
class Dataset:
    """m samples (x_j, y_j) plus the seed descriptor that produced them."""

    x: np.ndarray
    y: np.ndarray
    seed: object = None

    @property
    def m(self) -> int:
        return len(self.y)


def replication_stream(master_seed: int, index: int) -> np.random.SeedSequence:
    """Independent RNG stream for replication ``index``, a pure function of its inputs.

    Results are therefore identical no matter how replications are
    distributed across workers.
    """
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))


def derived_seed(master_seed: int, *key: int) -> int:
    """Derived integer master seed for a keyed sub-computation.

    Pure function of its inputs; used to decorrelate grid points of an
    experiment while keeping a single user-facing seed.
    """
    stream = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key))
    return int(stream.generate_state(1, np.uint64)[0])


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def draw_responses(problem: RegressionProblem, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw y | x: truth(x) plus a symmetric +/- sigma(x) flip (or nothing)."""
    y = np.asarray(problem.truth(x), dtype=np.float64).copy()
    if problem.noise_kind == TWO_POINT:
        signs = rng.integers(0, 2, size=x.shape[0]) * 2.0 - 1.0
        y += signs * problem.sigma_at(x)
    return y


def sample_dataset(problem: RegressionProblem, m: int, seed) -> Dataset:
    """m i.i.d. samples from the problem; deterministic given the seed.

    ``seed`` may be an int, a SeedSequence, or an already-advanced Generator
    (in which case sampling advances the caller's stream).
    """
    if m < 1:
        raise InputError("m must be >= 1")
    rng = _as_rng(seed)
    x = problem.measure.sample(rng, m)
    y = draw_responses(problem, x, rng)
    if np.abs(y).max() > problem.y_bound:
        raise InputError("sampled response exceeds y_bound; problem construction is broken")
    return Dataset(x=x, y=y, seed=seed)


def dataset_to_csv(data: Dataset) -> str:
    """Serialise a dataset as CSV with columns x_1..x_d, y."""
    d = data.x.shape[1]
    lines = [",".join([f"x_{i + 1}" for i in range(d)] + ["y"])]
    for row, y in zip(data.x, data.y):
        lines.append(",".join([repr(float(v)) for v in row] + [repr(float(y))]))
    return "\n".join(lines) + "\n"


def dataset_from_csv(text: str) -> Dataset:
    """Parse the dataset CSV format written by ``dataset_to_csv``."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise InputError("empty dataset file")
    header = [h.strip() for h in lines[0].split(",")]
    if header[-1] != "y" or not all(h.startswith("x_") for h in header[:-1]):
        raise InputError("expected dataset header x_1,...,x_d,y")
    rows = np.array(
        [[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=np.float64
    )
    if rows.ndim != 2 or rows.shape[1] != len(header):
        raise InputError("malformed dataset rows")
    return Dataset(x=np.ascontiguousarray(rows[:, :-1]), y=rows[:, -1], seed=None)


def builtin_problems() -> dict[str, RegressionProblem]:
    """Catalog of named presets (fresh dict; problems themselves are immutable)."""
    lipschitz = AffineFunction([1.0], -0.5)  # (2x - 1) / 2
    two_atoms = atomic([[0.25], [0.75]], [0.5, 0.5])
    # Approximation orders are for the weighted-average coefficient operator,
    # whose hat-family error is limited by an O(h) coefficient bias on the
    # boundary band: order 3/(2*dim) for hats, 1/dim for indicators on
    # Lipschitz truths (both verified numerically in the metrics tests).
    catalog = {
        "lipschitz-1d": make_problem(
            "lipschitz-1d", uniform(1), lipschitz, 0.25, 1.0,
            rates={"dyadic": 1.0, "hat": 1.5},
        ),
        "smooth-2d": make_problem(
            "smooth-2d",
            uniform(2),
            SineProduct(0.5),
            0.25,
            1.0,
            rates={"dyadic": 0.5, "tensor-hat": 0.75},
        ),
        "beta-skew-1d": make_problem(
            "beta-skew-1d",
            product_beta(1, 2.0, 5.0),
            lipschitz,
            0.25,
            1.0,
            rates={"dyadic": 1.0},
        ),
        "constant-1d": make_problem(
            "constant-1d", uniform(1), AffineFunction([0.0], 0.5), None, 1.0
        ),
        "two-atom": make_problem(
            "two-atom", two_atoms, StepFunction(0.5, 0.0, 1.0), None, 1.0
        ),
        "two-atom-noisy": make_problem(
            "two-atom-noisy", two_atoms, StepFunction(0.5, 0.0, 0.5), 0.25, 1.0
        ),
        "two-atom-constant": make_problem(
            "two-atom-constant", two_atoms, AffineFunction([0.0], 0.5), None, 1.0
        ),
    }
    return catalog


def get_problem(name: str) -> RegressionProblem:
    catalog = builtin_problems()
    try:
        return catalog[name]
    except KeyError:
        known = ", ".join(sorted(catalog))
        raise LookupError(f"unknown problem preset {name!r}; known presets: {known}") from None
