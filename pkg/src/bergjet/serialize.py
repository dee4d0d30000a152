"""JSON encodings of jets, coefficient sequences, potentials and bundle metrics."""

from __future__ import annotations

import json
from fractions import Fraction

from ._fields import QQi
from .errors import ParseError
from .geometry import PotentialJet
from .jets import Jet, JetMatrix
from .twisted import BundleMetricJet


def scalar_to_json(c, exact):
    if exact:
        c = QQi.coerce(c)
        return {
            "num_re": c.re.numerator,
            "den_re": c.re.denominator,
            "num_im": c.im.numerator,
            "den_im": c.im.denominator,
        }
    c = complex(c)
    return {"re": c.real, "im": c.imag}


def jet_terms(jet):
    return [{"exponents": list(e), **scalar_to_json(c, jet.exact)} for e, c in jet.items()]


def jet_to_json(jet):
    return {
        "nvars": jet.nvars,
        "degree": jet.degree,
        "mode": "exact" if jet.exact else "float",
        "terms": jet_terms(jet),
    }


def jet_from_json(obj):
    exact = obj.get("mode", "exact") == "exact"
    terms = {}
    for t in obj["terms"]:
        if exact:
            c = QQi(Fraction(t["num_re"], t["den_re"]), Fraction(t["num_im"], t["den_im"]))
        else:
            c = complex(t["re"], t["im"])
        terms[tuple(t["exponents"])] = c
    return Jet(obj["nvars"], obj["degree"], terms, exact=exact)


def plain_number(c):
    """Base values as JSON numbers: ints when exactly integral, else floats; complex as a pair."""
    if isinstance(c, QQi):
        if c.im == 0:
            return int(c.re) if c.re.denominator == 1 else float(c.re)
        return {"re": float(c.re), "im": float(c.im)}
    c = complex(c)
    return c.real if c.imag == 0 else {"re": c.real, "im": c.imag}


def _map_value(v, fn):
    if isinstance(v, list):
        return [_map_value(x, fn) for x in v]
    return fn(v)


def _coefficient_json(c):
    if isinstance(c, JetMatrix):
        return {
            "entries": [
                {"i": i, "j": j, "terms": jet_terms(c[i, j])} for i in range(c.rows) for j in range(c.cols)
            ]
        }
    return {"terms": jet_terms(c)}


def sequence_to_json(seq, degree_out):
    """``{n, N, degree, mode, b, base_values}``; ``b[m]`` is truncated to ``degree_out``."""
    out = seq.truncated(degree_out)
    return {
        "n": seq.n,
        "N": seq.order,
        "degree": degree_out,
        "work_degree": seq.work_degree,
        "mode": "exact" if seq.exact else "float",
        "b": [{"m": m, "valid_degree": seq.valid_degrees[m], **_coefficient_json(c)} for m, c in enumerate(out)],
        "base_values": [_map_value(v, plain_number) for v in seq.base_values],
        "base_values_exact": [_map_value(v, str) for v in seq.base_values] if seq.exact else None,
    }


# -- input files ----------------------------------------------------------------


def _load(text, what):
    try:
        return json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _number(value, where, exact):
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value) if exact else float(value)
    if isinstance(value, str):
        try:
            f = Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"{where}: cannot read {value!r} as a number") from None
        return f if exact else float(f)
    raise ParseError(f"{where}: expected a number, got {type(value).__name__}")


def _int(obj, key, where):
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def _coefficient(t, where, exact):
    if "re_num" in t or "im_num" in t:
        try:
            re = Fraction(_int(t, "re_num", where), _int(t, "re_den", where)) if "re_num" in t else Fraction(0)
            im = Fraction(_int(t, "im_num", where), _int(t, "im_den", where)) if "im_num" in t else Fraction(0)
        except ZeroDivisionError:
            raise ParseError(f"{where}: zero denominator") from None
        return QQi(re, im) if exact else complex(float(re), float(im))
    if "re" not in t and "im" not in t:
        raise ParseError(f"{where}: needs re/im or re_num/re_den fields")
    re = _number(t.get("re", 0), f"{where}.re", exact)
    im = _number(t.get("im", 0), f"{where}.im", exact)
    return QQi(re, im) if exact else complex(re, im)


def _exponents(t, key, n, where):
    e = t.get(key)
    if not isinstance(e, list) or len(e) != n or any(isinstance(v, bool) or not isinstance(v, int) or v < 0 for v in e):
        raise ParseError(f"{where}.{key}: expected {n} non-negative integers, got {e!r}")
    return e


def _term_table(terms, n, where, exact):
    if not isinstance(terms, list):
        raise ParseError(f"{where}: expected a list of terms")
    table = {}
    for idx, t in enumerate(terms):
        loc = f"{where}[{idx}]"
        if not isinstance(t, dict):
            raise ParseError(f"{loc}: expected an object")
        key = tuple(_exponents(t, "x_exp", n, loc) + _exponents(t, "xbar_exp", n, loc))
        c = _coefficient(t, loc, exact)
        table[key] = table[key] + c if key in table else c
    return table


def potential_from_json(text, degree, *, exact=True):
    """Parse ``{"dimension": n, "terms": [...]}`` into a :class:`PotentialJet`.

    The terms define a polynomial, so the jet is exact to any requested ``degree``.
    """
    obj = _load(text, "potential")
    if not isinstance(obj, dict):
        raise ParseError("potential: top level must be an object")
    n = _int(obj, "dimension", "potential")
    if n < 1:
        raise ParseError("potential.dimension: must be positive")
    table = _term_table(obj.get("terms"), n, "potential.terms", exact)
    return PotentialJet(n, Jet(2 * n, degree, table, exact=exact))


def bundle_from_json(text, n, degree, *, exact=True):
    """Parse ``{"rank": r, "entries": [{"i", "j", "terms"}]}``; missing entries are zero."""
    obj = _load(text, "bundle")
    if not isinstance(obj, dict):
        raise ParseError("bundle: top level must be an object")
    r = _int(obj, "rank", "bundle")
    if r < 1:
        raise ParseError("bundle.rank: must be positive")
    tables = [[{} for _ in range(r)] for _ in range(r)]
    entries = obj.get("entries")
    if not isinstance(entries, list):
        raise ParseError("bundle.entries: expected a list")
    for idx, e in enumerate(entries):
        loc = f"bundle.entries[{idx}]"
        if not isinstance(e, dict):
            raise ParseError(f"{loc}: expected an object")
        i, j = _int(e, "i", loc), _int(e, "j", loc)
        if not (0 <= i < r and 0 <= j < r):
            raise ParseError(f"{loc}: index ({i}, {j}) outside rank {r}")
        tables[i][j] = _term_table(e.get("terms"), n, f"{loc}.terms", exact)
    G = JetMatrix([[Jet(2 * n, degree, tables[i][j], exact=exact) for j in range(r)] for i in range(r)])
    return BundleMetricJet(n, G)
