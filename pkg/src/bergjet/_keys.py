"""Packed monomial keys.

Six bits per exponent (at most 9 variables) and the total degree from bit
54 up.  Adding keys multiplies monomials, and for products of total degree
at most 63 no field carries, so ``key < (D + 1) << DEG_SHIFT`` is exactly
``degree <= D``.
"""

VAR_BITS = 6
VAR_MASK = (1 << VAR_BITS) - 1
DEG_SHIFT = 54
MAX_VARS = 9
MAX_DEGREE = 63

UNIT = tuple((1 << DEG_SHIFT) | (1 << (VAR_BITS * i)) for i in range(MAX_VARS))


def pack(exps):
    key = sum(exps) << DEG_SHIFT
    for i, e in enumerate(exps):
        key |= e << (VAR_BITS * i)
    return key


def unpack(key, nvars):
    return tuple((key >> (VAR_BITS * i)) & VAR_MASK for i in range(nvars))


def degree_of(key):
    return key >> DEG_SHIFT


def exponent(key, var):
    return (key >> (VAR_BITS * var)) & VAR_MASK


def limit(degree):
    return (degree + 1) << DEG_SHIFT
