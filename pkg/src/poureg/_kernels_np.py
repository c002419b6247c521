"""Pure-numpy kernels: accumulation and evaluation hot loops.

Drop-in fallback for the compiled extension ``poureg._kernels``.  Both
backends expose the same four functions and accumulate per-cell sums in
the same order (sample-major, corner-minor), so their outputs agree
bit-for-bit.

Callers are responsible for validating inputs: every coordinate must lie
in [0, 1] and arrays must be C-contiguous float64.
"""

import numpy as np

BACKEND_NAME = "python"

# Stack-allocated axis buffers in the compiled kernels cap the dimension;
# the fallback enforces the same limit so behaviour matches.
MAX_DIM = 16


def dyadic_cell_index(x, level):
    """Flat index (row-major over axes) of the dyadic cell containing each row of x.

    Cells are half-open with the outer boundary folded into the last cell
    per axis, so x = 1 maps to cell 2**level - 1.
    """
    cells = 1 << level
    idx = np.minimum((x * cells).astype(np.int64), cells - 1)
    np.clip(idx, 0, cells - 1, out=idx)
    flat = np.zeros(x.shape[0], dtype=np.int64)
    for axis in range(x.shape[1]):
        flat = flat * cells + idx[:, axis]
    return flat


def hat_corners(x, knots):
    """Per-point nonzero hat indices and weights for the tensor hat basis.

    Returns (idx, w) of shape (n, 2**d): for each point the 2**d grid
    vertices of its knot cell (row-major flat indices) and the product of
    the per-axis linear weights.  Weights are >= 0 and sum to 1 per row.
    """
    n, d = x.shape
    if d > MAX_DIM:
        raise ValueError(f"dimension {d} exceeds kernel limit {MAX_DIM}")
    u = x * (knots - 1)
    i0 = np.minimum(u.astype(np.int64), knots - 2)
    np.clip(i0, 0, knots - 2, out=i0)
    w1 = u - i0
    w0 = 1.0 - w1
    corners = 1 << d
    idx = np.zeros((n, corners), dtype=np.int64)
    w = np.ones((n, corners))
    for corner in range(corners):
        for axis in range(d):
            bit = (corner >> (d - 1 - axis)) & 1
            idx[:, corner] = idx[:, corner] * knots + i0[:, axis] + bit
            w[:, corner] *= w1[:, axis] if bit else w0[:, axis]
    return idx, w


def dyadic_stats(x, y, level):
    """Per-cell sums of y and of occupancy counts for the dyadic indicator family."""
    size = (1 << level) ** x.shape[1]
    flat = dyadic_cell_index(x, level)
    response = np.bincount(flat, weights=y, minlength=size)
    mass = np.bincount(flat, minlength=size).astype(np.float64)
    return response, mass


def hat_stats(x, y, knots):
    """Per-vertex sums of y * weight and of weights for the tensor hat family."""
    size = knots ** x.shape[1]
    idx, w = hat_corners(x, knots)
    response = np.zeros(size)
    mass = np.zeros(size)
    # ravel order is sample-major then corner, matching the compiled loop.
    np.add.at(response, idx.ravel(), (w * y[:, None]).ravel())
    np.add.at(mass, idx.ravel(), w.ravel())
    return response, mass


def dyadic_eval(values, level, x):
    """Evaluate a dyadic-indicator expansion with the given cell values at x."""
    return values[dyadic_cell_index(x, level)]


def hat_eval(values, knots, x):
    """Evaluate a tensor-hat expansion with the given vertex values at x."""
    idx, w = hat_corners(x, knots)
    out = np.zeros(x.shape[0])
    for corner in range(idx.shape[1]):
        out += values[idx[:, corner]] * w[:, corner]
    return out
