"""Partition-of-unity basis families on the unit cube.

A family is a finite indexed set of measurable functions on [0, 1]^d with
values in [0, 1] that sum to one at every point.  Two constructions are
provided:

* ``dyadic``: indicator functions of the half-open dyadic cells at a
  given level, with the outer boundary folded into the last cell per axis
  so the closed cube is covered exactly once;
* ``hat`` / ``tensor-hat``: continuous piecewise-linear nodal functions
  on an equispaced knot grid (value 1 at their own vertex, 0 at every
  other vertex), and their tensor products in d >= 2.

Families are immutable; evaluation is pure and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels_np as _helpers
from .backends import kernels

DYADIC = "dyadic"
HAT = "hat"
TENSOR_HAT = "tensor-hat"

SUM_TOL = 1e-9          # allowed deviation of a family's pointwise sum from 1
WEIGHT_RANGE_TOL = 1e-12  # allowed slack outside [0, 1] per weight
MAX_INDEX_BITS = 62     # family size must fit a signed 64-bit basis index


class DomainError(ValueError):
    """A point lies outside the unit cube the family is defined on."""


@dataclass(frozen=True)
class PartitionFamily:
    """An indexed partition-of-unity family on [0, 1]^dim with ``size`` members."""

    kind: str
    dim: int
    size: int
    level: int | None = None
    knots: int | None = None

    @property
    def max_support(self) -> int:
        """Largest number of simultaneously nonzero members at any point."""
        if self.kind == DYADIC:
            return 1
        if self.kind == HAT:
            return 2
        return 1 << self.dim

    def key(self) -> str:
        """Stable identifier used to bind coefficient vectors to this family."""
        if self.kind == DYADIC:
            return f"dyadic(dim={self.dim},level={self.level})"
        return f"{self.kind}(dim={self.dim},knots={self.knots})"


def make_dyadic(dim: int, level: int) -> PartitionFamily:
    """Indicator family of the 2**(dim*level) dyadic cells of [0, 1]^dim.

    Cells are half-open along each axis; the face x_i = 1 belongs to the
    last cell along axis i, so the cells cover the closed cube exactly once.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    if dim * level > MAX_INDEX_BITS:
        raise ValueError(
            f"2**(dim*level) = 2**{dim * level} overflows the 64-bit basis index"
        )
    return PartitionFamily(kind=DYADIC, dim=dim, size=1 << (dim * level), level=level)


def make_hat(dim: int, knots: int) -> PartitionFamily:
    """Nodal hat family on the equispaced knots i/(knots-1), tensorised for dim >= 2.

    Each member is the product over axes of one-dimensional hats; it equals
    1 at its own grid vertex and 0 at all others, and the family sums to 1
    everywhere by construction.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if knots < 2:
        raise ValueError(f"knots must be >= 2, got {knots}")
    if dim > _helpers.MAX_DIM:
        raise ValueError(f"dim {dim} exceeds kernel limit {_helpers.MAX_DIM}")
    if dim * np.log2(knots) > MAX_INDEX_BITS:
        raise ValueError(f"knots**dim = {knots}**{dim} overflows the 64-bit basis index")
    kind = HAT if dim == 1 else TENSOR_HAT
    return PartitionFamily(kind=kind, dim=dim, size=knots**dim, knots=knots)


def check_domain(x: np.ndarray, dim: int) -> np.ndarray:
    """Coerce x to a (n, dim) float array and reject points outside [0, 1]^dim."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DomainError(f"expected points of dimension {dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < 0.0 or arr.max(initial=1.0) > 1.0:
        raise DomainError("points must lie in the unit cube [0, 1]^dim")
    return arr


def family_weights(family: PartitionFamily, x: np.ndarray):
    """Dense sparse form of the family at each row of x: (indices, weights).

    Both arrays have shape (n, s) where s = family.max_support; weights may
    contain zeros (entries on cell boundaries).  Rows sum to 1 exactly for
    indicators and up to rounding for hats.
    """
    x = check_domain(x, family.dim)
    if family.kind == DYADIC:
        idx = _helpers.dyadic_cell_index(x, family.level)
        return idx.reshape(-1, 1), np.ones((x.shape[0], 1))
    return _helpers.hat_corners(x, family.knots)


def evaluate_family(family: PartitionFamily, x) -> list[tuple[int, float]]:
    """Nonzero members at a single point, as (index, weight) pairs.

    At most 1 entry for dyadic families, 2 for hats, 2**dim for tensor hats.
    """
    idx, w = family_weights(family, np.asarray(x, dtype=np.float64).reshape(1, -1))
    return [(int(i), float(v)) for i, v in zip(idx[0], w[0]) if v != 0.0]


_SQRT_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


def probe_points(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic quasi-uniform probe points in [0, 1]^dim.

    A Kronecker lattice (fractional parts of multiples of irrational
    directions) with a seeded random shift, plus the cube corners and the
    center to pin down boundary behaviour.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    alphas = np.sqrt(np.array(_SQRT_PRIMES[:dim], dtype=np.float64)) % 1.0
    shift = np.random.default_rng(seed).random(dim)
    pts = (shift + np.outer(np.arange(count, dtype=np.float64), alphas)) % 1.0
    specials = [np.full(dim, 0.5)]
    if dim <= 6:
        corners = np.stack(
            np.meshgrid(*([np.array([0.0, 1.0])] * dim), indexing="ij"), axis=-1
        ).reshape(-1, dim)
        specials.extend(corners)
    n_special = min(len(specials), count)
    pts[:n_special] = np.stack(specials[:n_special])
    return pts


@dataclass(frozen=True)
class PartitionReport:
    """Result of probing a family against the partition-of-unity contract."""

    passed: bool
    max_sum_deviation: float
    min_weight: float
    max_weight: float
    probes: int

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}: max |sum - 1| = {self.max_sum_deviation:.3e}, "
            f"weights in [{self.min_weight:.3e}, {self.max_weight:.6f}] "
            f"over {self.probes} probes"
        )


def validate_partition(family: PartitionFamily, probes: int = 10_000, seed: int = 0) -> PartitionReport:
    """Probe the family at quasi-uniform points and check the two defining bounds.

    Passes iff max |sum of weights - 1| <= 1e-9 at every probe and every
    evaluated weight lies within 1e-12 of [0, 1].
    """
    pts = probe_points(family.dim, probes, seed)
    _, w = family_weights(family, pts)
    sums = w.sum(axis=1)
    max_dev = float(np.max(np.abs(sums - 1.0)))
    min_w = float(w.min())
    max_w = float(w.max())
    passed = (
        max_dev <= SUM_TOL
        and min_w >= -WEIGHT_RANGE_TOL
        and max_w <= 1.0 + WEIGHT_RANGE_TOL
    )
    return PartitionReport(
        passed=passed,
        max_sum_deviation=max_dev,
        min_weight=min_w,
        max_weight=max_w,
        probes=probes,
    )


def accumulate(family: PartitionFamily, x: np.ndarray, y: np.ndarray):
    """Raw per-index sums of y * weight and of weights over the samples.

    Hot path: dispatches to the active kernel backend.  Inputs must be
    pre-validated (x inside the cube, both arrays C-contiguous float64).
    """
    if family.kind == DYADIC:
        return kernels.dyadic_stats(x, y, family.level)
    return kernels.hat_stats(x, y, family.knots)


def expansion_values(family: PartitionFamily, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate sum_v values[v] * member_v(x) for each pre-validated row of x."""
    if family.kind == DYADIC:
        return kernels.dyadic_eval(values, family.level, x)
    return kernels.hat_eval(values, family.knots, x)
