# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: accumulation and evaluation hot loops.

Mirrors ``poureg._kernels_np`` exactly, including the per-cell floating
accumulation order (sample-major, corner-minor), so both backends return
bit-identical results.  Callers validate inputs; coordinates outside
[0, 1] are clamped into the boundary cells rather than checked here.
"""

import numpy as np

BACKEND_NAME = "compiled"
MAX_DIM = 16

DEF _MAX_DIM = 16


def dyadic_stats(const double[:, ::1] x, const double[::1] y, int level):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t cells = (<Py_ssize_t> 1) << level
    cdef Py_ssize_t size = 1
    cdef Py_ssize_t axis
    for axis in range(d):
        size *= cells
    response = np.zeros(size)
    mass = np.zeros(size)
    cdef double[::1] rs = response
    cdef double[::1] ms = mass
    cdef Py_ssize_t j, c, flat
    with nogil:
        for j in range(n):
            flat = 0
            for axis in range(d):
                c = <Py_ssize_t> (x[j, axis] * cells)
                if c < 0:
                    c = 0
                elif c > cells - 1:
                    c = cells - 1
                flat = flat * cells + c
            rs[flat] += y[j]
            ms[flat] += 1.0
    return response, mass


def hat_stats(const double[:, ::1] x, const double[::1] y, int knots):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    if d > _MAX_DIM:
        raise ValueError(f"dimension {d} exceeds kernel limit {_MAX_DIM}")
    cdef Py_ssize_t size = 1
    cdef Py_ssize_t axis
    for axis in range(d):
        size *= knots
    response = np.zeros(size)
    mass = np.zeros(size)
    cdef double[::1] rs = response
    cdef double[::1] ms = mass
    cdef Py_ssize_t i0[_MAX_DIM]
    cdef double w0[_MAX_DIM]
    cdef double w1[_MAX_DIM]
    cdef Py_ssize_t j, c, corner, flat, bit
    cdef Py_ssize_t corners = (<Py_ssize_t> 1) << d
    cdef double u, w
    with nogil:
        for j in range(n):
            for axis in range(d):
                u = x[j, axis] * (knots - 1)
                c = <Py_ssize_t> u
                if c < 0:
                    c = 0
                elif c > knots - 2:
                    c = knots - 2
                i0[axis] = c
                w1[axis] = u - c
                w0[axis] = 1.0 - w1[axis]
            for corner in range(corners):
                flat = 0
                w = 1.0
                for axis in range(d):
                    bit = (corner >> (d - 1 - axis)) & 1
                    flat = flat * knots + i0[axis] + bit
                    w = w * (w1[axis] if bit else w0[axis])
                rs[flat] += y[j] * w
                ms[flat] += w
    return response, mass


def dyadic_eval(const double[::1] values, int level, const double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t cells = (<Py_ssize_t> 1) << level
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t j, c, flat, axis
    with nogil:
        for j in range(n):
            flat = 0
            for axis in range(d):
                c = <Py_ssize_t> (x[j, axis] * cells)
                if c < 0:
                    c = 0
                elif c > cells - 1:
                    c = cells - 1
                flat = flat * cells + c
            o[j] = values[flat]
    return out


def hat_eval(const double[::1] values, int knots, const double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    if d > _MAX_DIM:
        raise ValueError(f"dimension {d} exceeds kernel limit {_MAX_DIM}")
    out = np.zeros(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i0[_MAX_DIM]
    cdef double w0[_MAX_DIM]
    cdef double w1[_MAX_DIM]
    cdef Py_ssize_t j, c, corner, flat, bit, axis
    cdef Py_ssize_t corners = (<Py_ssize_t> 1) << d
    cdef double u, w, acc
    with nogil:
        for j in range(n):
            for axis in range(d):
                u = x[j, axis] * (knots - 1)
                c = <Py_ssize_t> u
                if c < 0:
                    c = 0
                elif c > knots - 2:
                    c = knots - 2
                i0[axis] = c
                w1[axis] = u - c
                w0[axis] = 1.0 - w1[axis]
            acc = 0.0
            for corner in range(corners):
                flat = 0
                w = 1.0
                for axis in range(d):
                    bit = (corner >> (d - 1 - axis)) & 1
                    flat = flat * knots + i0[axis] + bit
                    w = w * (w1[axis] if bit else w0[axis])
                acc += values[flat] * w
            o[j] = acc
    return out
