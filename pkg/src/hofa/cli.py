"""
Command-line interface.

Exit codes: 0 success, 1 a verification did not hold, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import codim, cumulants, famodel, jacobian, simulate
from .exceptions import ConstructionError, DomainError
from .symtensor import RATIONAL, LoadingMatrix, format_scalar, parse_scalar

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

SWEEP_COLUMNS = ["k", "p", "m", "M", "N", "dim", "codim", "h_value"]


class UsageError(Exception):
    pass


def parse_range(text: str) -> range:
    """``"a..b"`` (inclusive) or a single integer."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or a range a..b, got {text!r}") from None
    if hi < lo:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return range(lo, hi + 1)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# ---------------------------------------------------------------------------
# commands; each returns (exit code, text)


def cmd_dim(args) -> tuple[int, str]:
    spec = famodel.ModelSpec(args.p, args.m, args.k)
    d = famodel.dims(spec)
    out = {"k": spec.k, "p": spec.p, "m": spec.m, **d.to_json()}
    if args.json:
        return EXIT_OK, _dump(out)
    return EXIT_OK, (
        f"k={spec.k} p={spec.p} m={spec.m}: M={d.M} N={d.N} N'={d.N_prime} dim={d.dim} codim={d.codim}\n"
    )


def cmd_rank(args) -> tuple[int, str]:
    spec = famodel.ModelSpec(args.p, args.m, args.k)
    if spec.p < spec.m:
        raise DomainError(f"the model needs p >= m, got p={spec.p}, m={spec.m}")
    methods = ("svd", "modp", "exact") if args.method == "all" else (args.method,)
    if args.method == "exact" and spec.p < spec.m + 2:
        raise DomainError(f"--method exact needs p >= m + 2, got p={spec.p}, m={spec.m}")
    summary = jacobian.verify_dimension(spec, args.trials, args.seed, methods, tol_factor=args.tol_factor)
    # equality is only claimed where the witness argument applies
    ok = summary.methods_agree and (summary.all_match or not summary.certifiable)
    if args.json:
        return (EXIT_OK if ok else EXIT_FAIL), _dump(summary.to_json())
    lines = [
        f"k={spec.k} p={spec.p} m={spec.m} seed={args.seed}: expected min(M,N)={summary.expected_rank}, "
        f"scaling bound min(M-m,N)={summary.scaling_bound}"
    ]
    for r in summary.reports:
        extra = f" gap={r.gap:.3g}" if r.gap is not None else ""
        extra += f" prime={r.prime}" if r.prime is not None else ""
        lines.append(f"  {r.method:5s} {r.point:12s} rank={r.computed_rank}{extra}")
    lines.append("OK" if ok else "MISMATCH")
    return (EXIT_OK if ok else EXIT_FAIL), "\n".join(lines) + "\n"


def cmd_roots(args) -> tuple[int, str]:
    rep = codim.regime(args.k, args.m)
    if args.json:
        out = rep.to_json()
        out["h"] = str(codim.h_poly(args.k, args.m))
        return EXIT_OK, _dump(out)
    roots = ", ".join(f"~{float(r.midpoint):.6g}" for r in rep.positive_roots) or "none"
    return EXIT_OK, f"k={args.k} m={args.m}: regime {rep.regime}; positive roots: {roots}; p0={rep.p0}\n"


def cmd_polya(args) -> tuple[int, str]:
    cert = codim.polya_certificate(args.k, args.m, args.max_exponent)
    n_roots = codim.count_positive_roots(codim.h_poly(args.k, args.m))
    # a certificate must exist exactly when there is no positive root
    if cert is not None:
        ok = cert.verify() and n_roots == 0
    else:
        ok = n_roots > 0
    out = {"k": args.k, "m": args.m, "positive_roots": n_roots, "certificate": cert.to_json() if cert else None}
    code = EXIT_OK if ok else EXIT_FAIL
    if args.json:
        return code, _dump(out)
    if cert is None:
        return code, f"k={args.k} m={args.m}: no certificate ({n_roots} positive roots)\n"
    return code, (
        f"k={args.k} m={args.m}: h * (p + {cert.b})^{cert.exponent} has nonnegative coefficients ({cert.method})\n"
    )


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def cmd_convert(args) -> tuple[int, str]:
    seq = cumulants.TensorSequence.from_json(_load_json(args.input))
    if args.to == "cumulants":
        seq = cumulants.moments_to_cumulants(seq)
    elif args.to == "moments":
        seq = cumulants.cumulants_to_moments(seq)
    return EXIT_OK, _dump(seq.to_json())


def _default_loading(spec: famodel.ModelSpec, seed: int) -> LoadingMatrix:
    # multiples of 1/4 on [-2,-1] U [1,2], lower-triangular
    rng = np.random.default_rng(np.random.SeedSequence([seed, 99]))
    L = np.full((spec.p, spec.m), Fraction(0), dtype=object)
    for i in range(spec.p):
        for j in range(min(i + 1, spec.m)):
            L[i, j] = Fraction(int(rng.integers(4, 9)), 4) * (1 if rng.random() < 0.5 else -1)
    return LoadingMatrix(L, RATIONAL, lower_triangular=True)


def _read_loading(path: str, spec: famodel.ModelSpec) -> LoadingMatrix:
    raw = _load_json(path)
    if not isinstance(raw, dict) or "values" not in raw:
        raise DomainError("loading: missing field 'values'")
    rows = raw["values"]
    if not isinstance(rows, list) or len(rows) != spec.p or any(not isinstance(r, list) or len(r) != spec.m for r in rows):
        raise DomainError(f"loading.values: expected a {spec.p} x {spec.m} nested list")
    return LoadingMatrix([[parse_scalar(x, RATIONAL) for x in r] for r in rows], RATIONAL)


def cmd_simulate(args) -> tuple[int, str]:
    spec = famodel.ModelSpec(args.p, args.m, args.k)
    loading = _read_loading(args.loading, spec) if args.loading else _default_loading(spec, args.seed)
    noise = None if args.noise_dist == "none" else (args.noise_dist or args.dist)
    cfg = simulate.SimConfig(spec, args.dist, noise, loading, args.samples, args.seed)
    rep = simulate.validate(cfg)
    code = EXIT_FAIL if rep.status == "fail" else EXIT_OK
    if args.json:
        out = rep.to_json()
        out["loading"] = [[format_scalar(x, RATIONAL) for x in row] for row in loading.values]
        return code, _dump(out)
    lines = [f"k={spec.k} p={spec.p} m={spec.m} dist={args.dist} samples={args.samples} seed={args.seed}"]
    for r, d in rep.per_order().items():
        lines.append(f"  order {r}: max |dev|={d['max_deviation']:.4g} max z={d['max_normalized']:.3f} {d['status']}")
    lines.append(f"status: {rep.status} ({rep.seconds:.1f}s)")
    return code, "\n".join(lines) + "\n"


def _sweep_cell(cell: tuple[int, int, int, bool, int, int]) -> dict:
    k, p, m, with_rank, trials, seed = cell
    spec = famodel.ModelSpec(p, m, k)
    d = famodel.dims(spec)
    row = {"k": k, "p": p, "m": m, "M": d.M, "N": d.N, "dim": d.dim, "codim": d.codim,
           "h_value": int(codim.h_poly(k, m)(p))}
    if with_rank:
        if p >= m:
            s = jacobian.verify_dimension(spec, trials, seed, methods=("modp",), primes=(jacobian.DEFAULT_PRIME,))
            row["rank_observed"] = max(s.observed)
        else:
            row["rank_observed"] = None
    return row


def cmd_sweep(args) -> tuple[int, str]:
    cells = [
        (k, p, m, args.with_rank, args.trials, args.seed)
        for k in args.k_range for p in args.p_range for m in args.m_range
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells, chunksize=8))
    else:
        rows = [_sweep_cell(c) for c in cells]
    cols = SWEEP_COLUMNS + (["rank_observed"] if args.with_rank else [])
    if args.csv or not args.json:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({c: ("" if row[c] is None else row[c]) for c in cols})
        return EXIT_OK, buf.getvalue()
    return EXIT_OK, _dump({"seed": args.seed, "columns": cols, "rows": rows})


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hofa", description="Dimension, rank and codimension tools for higher-order factor analysis models."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--out", metavar="FILE", help="write output to FILE instead of stdout")

    def model(p: argparse.ArgumentParser, need_p: bool = True) -> None:
        p.add_argument("--k", type=int, required=True, help="maximal cumulant order")
        if need_p:
            p.add_argument("--p", type=int, required=True, help="observed dimension")
        p.add_argument("--m", type=int, required=True, help="number of factors")

    p = sub.add_parser("dim", help="parameter count, ambient dimension, dim and codim")
    model(p)
    common(p)
    p.set_defaults(func=cmd_dim)

    p = sub.add_parser("rank", help="Jacobian rank at random points and at the witness")
    model(p)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["svd", "modp", "exact", "all"], default="all")
    p.add_argument("--tol-factor", type=float, default=None, help="relative singular value cutoff")
    common(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("roots", help="positive roots of the codimension polynomial")
    model(p, need_p=False)
    common(p)
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("polya", help="certificate that the codimension polynomial has no positive root")
    model(p, need_p=False)
    p.add_argument("--max-exponent", type=int, default=400)
    common(p)
    p.set_defaults(func=cmd_polya)

    p = sub.add_parser("convert", help="moments <-> cumulants on a JSON tensor sequence")
    p.add_argument("input", help="JSON file with a tensor sequence")
    p.add_argument("--to", choices=["cumulants", "moments", "canonical"], required=True)
    common(p)
    p.set_defaults(func=cmd_convert, json=True)

    p = sub.add_parser("simulate", help="Monte Carlo check of the cumulant prediction")
    model(p)
    p.add_argument("--dist", choices=sorted(cumulants.DISTRIBUTIONS), default="centered-exponential",
                   help="factor law (also the noise law unless --noise-dist is given)")
    p.add_argument("--noise-dist", choices=sorted(cumulants.DISTRIBUTIONS) + ["none"], default=None)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loading", metavar="FILE", help='JSON {"values": [[...], ...]}; default is drawn from --seed')
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="tabulate dims and h over a grid")
    p.add_argument("--k-range", type=parse_range, required=True, metavar="A..B")
    p.add_argument("--p-range", type=parse_range, required=True, metavar="A..B")
    p.add_argument("--m-range", type=parse_range, required=True, metavar="A..B")
    p.add_argument("--with-rank", action="store_true", help="add the observed Jacobian rank (mod p)")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", action="store_true", help="CSV output (the default unless --json)")
    common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, text = args.func(args)
    except (DomainError, ConstructionError, UsageError) as exc:
        print(f"hofa {args.command}: error: {exc}", file=stderr)
        return EXIT_USAGE
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"hofa {args.command}: error: cannot write {args.out}: {exc.strerror}", file=stderr)
            return EXIT_USAGE
    else:
        stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
