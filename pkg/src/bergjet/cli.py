"""``bergjet`` command line: expand, validate, geometry, twist, contour-check.

Exit codes: 0 ok, 2 configuration or input error, 3 numeric or validation
failure, 4 insufficient truncation degree.  Failures print a JSON object with
an ``error`` member on stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from ._keys import MAX_DEGREE
from .errors import BergjetError, ConfigError, DegreeBudgetError
from .geometry import (
    MODEL_NAMES,
    hermitian_metric,
    model_potential,
    polarize,
    scalar_curvature,
)
from .kuranishi import good_contour_check, theta_map
from .recursion import expand, work_degree
from .serialize import (
    bundle_from_json,
    jet_terms,
    plain_number,
    potential_from_json,
    sequence_to_json,
)
from .twisted import (
    bundle_curvature,
    expand_twisted,
    predicted_b1,
    random_bundle_metric,
)

OUTPUT_DIR_ENV = "BERGJET_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def parse_k_range(text):
    """``a:b:step`` (inclusive) or a comma list of positive integers."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            a, b, step = parts
            if step <= 0 or b < a:
                raise ValueError
            ks = list(range(a, b + 1, step))
        else:
            ks = [int(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError(f"--k-range: cannot read {text!r} (use a:b:step or a comma list)") from None
    if not ks or min(ks) <= 0:
        raise ConfigError("--k-range: values must be positive")
    return ks


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def build_parser():
    p = _Parser(prog="bergjet", description="Bergman kernel expansion coefficients from potential jets.")
    p.add_argument("--version", action="version", version=f"bergjet {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, mode_default):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--model", choices=MODEL_NAMES, default=None)
        src.add_argument("--input", type=Path, help="potential JSON file")
        sp.add_argument("--n", type=int, default=1, help="complex dimension of a built-in model")
        sp.add_argument("--c", type=_fraction, default=Fraction(1, 10), help="quartic coefficient")
        sp.add_argument("--mode", choices=("exact", "float"), default=mode_default)
        sp.add_argument("--output", type=Path, default=None)
        sp.add_argument("--seed", type=int, default=0)

    e = sub.add_parser("expand", help="solve for b_0..b_N")
    common(e, "exact")
    e.add_argument("--order", type=int, default=2)
    e.add_argument("--degree", type=int, default=0, help="output jet degree")
    e.add_argument("--radius", type=float, default=None, help="validity radius echoed into output")

    v = sub.add_parser("validate", help="compare B_k^(N)(0) to a finite-k oracle")
    common(v, "float")
    v.add_argument("--order", type=int, default=2)
    v.add_argument("--k-range", default="10:40:10")
    v.add_argument("--radius", type=float, default=4.0, help="quadrature disc radius")

    g = sub.add_parser("geometry", help="metric, scalar curvature at the base point")
    common(g, "exact")
    g.add_argument("--degree", type=int, default=2)

    t = sub.add_parser("twist", help="matrix coefficients for a Hermitian bundle")
    common(t, "exact")
    t.add_argument("--order", type=int, default=1)
    t.add_argument("--degree", type=int, default=0)
    t.add_argument("--bundle", type=Path, default=None, help="bundle metric JSON (random rank-2 if omitted)")
    t.add_argument("--rank", type=int, default=2)

    c = sub.add_parser("contour-check", help="sample the good-contour inequality")
    common(c, "float")
    c.add_argument("--degree", type=int, default=8)
    c.add_argument("--radius", type=float, default=0.3)
    c.add_argument("--delta", type=float, default=None, help="margin (default half the smallest Levi eigenvalue)")
    c.add_argument("--samples", type=int, default=10_000)
    return p


def _config(args):
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if isinstance(v, (Path, Fraction)):
            v = str(v)
        cfg[k] = v
    return cfg


def _potential(args, degree):
    exact = args.mode == "exact"
    if args.input is not None:
        try:
            text = args.input.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.input}: {exc.strerror}") from None
        return potential_from_json(text, degree, exact=exact)
    if args.model is None:
        raise ConfigError("one of --model or --input is required")
    if args.n < 1:
        raise ConfigError("--n must be positive")
    return model_potential(args.model, args.n, degree, exact=exact, c=args.c)


def _check_order(args):
    if args.order < 0:
        raise ConfigError("--order must be non-negative")
    if getattr(args, "degree", 0) < 0:
        raise ConfigError("--degree must be non-negative")
    need = work_degree(args.order, getattr(args, "degree", 0)) + 2
    if need > MAX_DEGREE:
        raise DegreeBudgetError(
            f"order {args.order} needs jets of degree {need}, above the supported {MAX_DEGREE}", required=need
        )


def _scalar(v):
    return plain_number(v)


def _matrix(M):
    return [[plain_number(v) for v in row] for row in M]


# jet degree of the b_m used for the off-base first-difference comparison
PROBE_DEGREE = 8


def cmd_expand(args):
    _check_order(args)
    phi = _potential(args, work_degree(args.order, args.degree) + 2)
    seq = expand(phi, args.order, args.degree)
    out = sequence_to_json(seq, args.degree)
    out["validity_radius"] = args.radius
    return {"result": out}


def cmd_validate(args):
    from .oracles import expansion_error_sweep

    if args.mode != "float":
        raise ConfigError("validate runs quadrature oracles and requires --mode float")
    _check_order(args)
    ks = parse_k_range(args.k_range)
    if args.input is not None:
        # coefficients stay exact; only the oracle side is floating point
        args.mode = "exact"
        model = _potential(args, work_degree(args.order, PROBE_DEGREE) + 2)
        args.mode = "float"
    elif args.model is None:
        raise ConfigError("one of --model or --input is required")
    else:
        model = args.model
    sweep = expansion_error_sweep(model, args.order, ks, n=args.n, c=args.c, radius=args.radius)
    summary = sweep.summary()
    columns = ("k", "oracle_value", "expansion_value", "rel_error", "deriv_error")
    summary["rows"] = [dict(zip(columns, r)) for r in sweep.rows()]
    return {"result": summary, "_csv": sweep.to_csv()}


def cmd_geometry(args):
    phi = _potential(args, max(args.degree, 0) + 2)
    psi = polarize(phi)
    metric = hermitian_metric(psi)
    s = scalar_curvature(metric)
    return {
        "result": {
            "n": phi.n,
            "mode": args.mode,
            "levi_form": _matrix(phi.levi_form()),
            "min_eigenvalue": phi.min_eigenvalue(),
            "scalar_curvature_at_base": _scalar(s.base_value),
            "scalar_curvature_exact": str(s.base_value) if phi.exact else None,
            "scalar_curvature_terms": jet_terms(s.s),
        }
    }


def cmd_twist(args):
    _check_order(args)
    Dw = work_degree(args.order, args.degree)
    phi = _potential(args, Dw + 2)
    exact = args.mode == "exact"
    if args.bundle is not None:
        try:
            text = args.bundle.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.bundle}: {exc.strerror}") from None
        G = bundle_from_json(text, phi.n, Dw, exact=exact)
    else:
        if args.rank < 1:
            raise ConfigError("--rank must be positive")
        G = random_bundle_metric(phi.n, args.rank, np.random.default_rng(args.seed), Dw, exact=exact)
    seq = expand_twisted(phi, G, args.order, args.degree)
    out = sequence_to_json(seq, args.degree)
    out["rank"] = G.rank
    metric = hermitian_metric(polarize(phi))
    out["lambda_theta_E_at_base"] = _matrix(bundle_curvature(G, metric).lambda_theta.constant_matrix())
    out["predicted_b1"] = _matrix(predicted_b1(phi, G))
    if args.order >= 1:
        b1 = seq.base_values[1]
        pred = predicted_b1(phi, G)
        gap = max(abs(complex(b1[i][j]) - complex(pred[i][j])) for i in range(G.rank) for j in range(G.rank))
        out["b1_gap"] = gap
    return {"result": out}


def cmd_contour(args):
    if args.mode != "float":
        raise ConfigError("contour-check samples numerically and requires --mode float")
    if args.samples <= 0 or args.radius <= 0:
        raise ConfigError("--samples and --radius must be positive")
    phi = _potential(args, args.degree)
    psi = polarize(phi)
    report = good_contour_check(
        phi, psi, theta_map(psi), radius=args.radius, margin=args.delta, samples=args.samples, seed=args.seed
    )
    return {"result": report}


COMMANDS = {
    "expand": cmd_expand,
    "validate": cmd_validate,
    "geometry": cmd_geometry,
    "twist": cmd_twist,
    "contour-check": cmd_contour,
}


def _default_output(command, suffix):
    base = os.environ.get(OUTPUT_DIR_ENV)
    if not base:
        return None
    return Path(base) / f"{command}{suffix}"


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run(argv=None):
    """Run one command; returns the exit status."""
    args = None
    try:
        args = build_parser().parse_args(argv)
        payload = COMMANDS[args.command](args)
        csv_text = payload.pop("_csv", None)
        doc = {"version": __version__, "command": args.command, "config": _config(args), **payload}
        if csv_text is not None:
            path = args.output or _default_output(args.command, ".csv")
            if path is not None:
                _emit(csv_text, path)
                _emit(_dump(doc), path.with_suffix(".json"))
            else:
                _emit(_dump(doc), None)
        else:
            _emit(_dump(doc), args.output or _default_output(args.command, ".json"))
        return 0
    except BergjetError as exc:
        err = {"code": exc.code, "type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, DegreeBudgetError) and exc.required is not None:
            err["required_degree"] = exc.required
        status = exc.exit_code
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001  keep the structured-error contract for anything unforeseen
        err = {"code": "internal", "type": type(exc).__name__, "message": str(exc)}
        status = 3
    doc = {"version": __version__, "error": err}
    if args is not None:
        doc["command"] = args.command
        doc["config"] = _config(args)
    sys.stdout.write(_dump(doc))
    return status


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
