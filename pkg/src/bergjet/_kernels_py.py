"""Pure-Python truncated convolution kernels.

Keys are packed monomials (see :mod:`bergjet._keys`); the total degree
lives in the top bits, so ``ka + kb < limit`` is the whole truncation test
and sorting keys sorts by degree.
"""

BACKEND = "python"


def convolve(a, b, limit):
    """Truncated product of two sparse coefficient tables.

    Parameters
    ----------
    a, b : dict
        ``{packed_key: coefficient}``; coefficients are ints or floats.
    limit : int
        Packed key bound ``(D + 1) << DEG_SHIFT``.

    Returns
    -------
    dict
        Nonzero entries of the truncated product.
    """
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    bitems = sorted(b.items())
    out = {}
    get = out.get
    for ka, ca in a.items():
        lim = limit - ka
        for kb, cb in bitems:
            if kb >= lim:
                break
            k = ka + kb
            prev = get(k)
            out[k] = ca * cb if prev is None else prev + ca * cb
    return {k: v for k, v in out.items() if v}


def convolve_float(a, b, limit):
    return convolve(a, b, limit)
