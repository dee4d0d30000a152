# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled truncated convolution kernels (same contract as _kernels_py)."""

from libc.stdint cimport int64_t
from libcpp.unordered_map cimport unordered_map
from cython.operator cimport dereference as deref, preincrement as inc

import numpy as np

BACKEND = "cython"


cdef inline tuple _sorted_arrays(dict b, bint floating):
    items = sorted(b.items())
    keys = np.fromiter((k for k, _ in items), dtype=np.int64, count=len(items))
    if floating:
        vals = np.fromiter((v for _, v in items), dtype=np.float64, count=len(items))
    else:
        vals = [v for _, v in items]
    return keys, vals


def convolve(dict a, dict b, int64_t limit):
    """Truncated product for arbitrary-precision (object) coefficients."""
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    keys, bvals = _sorted_arrays(b, False)
    cdef int64_t[::1] kb = keys
    cdef list vb = bvals
    cdef Py_ssize_t nb = kb.shape[0], j
    cdef int64_t x, lim
    cdef dict out = {}
    cdef object ca, prev, key
    for ka_obj, ca in a.items():
        x = ka_obj
        lim = limit - x
        for j in range(nb):
            if kb[j] >= lim:
                break
            key = x + kb[j]
            prev = out.get(key)
            if prev is None:
                out[key] = ca * vb[j]
            else:
                out[key] = prev + ca * vb[j]
    return {k: v for k, v in out.items() if v}


def convolve_float(dict a, dict b, int64_t limit):
    """Truncated product for double coefficients, accumulated in a C++ hash map."""
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    keys_b, vals_b = _sorted_arrays(b, True)
    keys_a = np.fromiter(a.keys(), dtype=np.int64, count=len(a))
    vals_a = np.fromiter(a.values(), dtype=np.float64, count=len(a))
    cdef int64_t[::1] kb = keys_b
    cdef double[::1] vb = vals_b
    cdef int64_t[::1] ka = keys_a
    cdef double[::1] va = vals_a
    cdef Py_ssize_t na = ka.shape[0], nb = kb.shape[0], i, j
    cdef int64_t x, lim
    cdef double c
    cdef unordered_map[int64_t, double] acc
    for i in range(na):
        x = ka[i]
        lim = limit - x
        c = va[i]
        for j in range(nb):
            if kb[j] >= lim:
                break
            acc[x + kb[j]] += c * vb[j]
    cdef dict out = {}
    cdef unordered_map[int64_t, double].iterator it = acc.begin()
    while it != acc.end():
        if deref(it).second != 0.0:
            out[deref(it).first] = deref(it).second
        inc(it)
    return out
