"""Command-line entry point.

Exit codes: 0 pass, 1 mathematical counterexample, 2 usage error,
3 comparison that could not be certified at the requested precision.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .chvatal import figure_grid, scan_fixed_n, verify_range
from .cumulants import bernoulli_distribution, poisson1_analytic
from .edgeworth import build_model, loglog_slope, mean_expansion, residual_scan, uniform_regime
from .errors import DomainError
from .exactprob import DEFAULT_PRECISION_BITS, binomial_cdf, poisson_cdf, verify_poisson_monotonicity

log = logging.getLogger("lattice_edgeworth")

EXIT_OK, EXIT_COUNTEREXAMPLE, EXIT_USAGE, EXIT_UNCERTIFIED = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n_values: list = field(default_factory=list)
    k: Optional[int] = None
    dist: Optional[str] = None
    strict: bool = False
    mode: str = "scan"
    grid_points: int = 200
    m_max: Optional[int] = None
    precision_bits: int = DEFAULT_PRECISION_BITS
    fmt: str = "json"
    out: Optional[str] = None
    jobs: int = 1

    def __post_init__(self):
        if self.command in ("verify", "scan", "residual") and not self.n_values:
            raise UsageError("empty n range")
        if self.k is not None and not 1 <= self.k <= 8:
            raise UsageError("k must be in [1, 8]")
        if self.precision_bits < 64:
            raise UsageError("precision bits must be >= 64")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def fmt_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_range(text: str) -> list:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise UsageError(f"range {text!r} is not of the form A..B")
    try:
        a, b = int(lo), int(hi)
    except ValueError:
        raise UsageError(f"range {text!r} has non-integer ends") from None
    if a > b:
        raise UsageError(f"range {text!r} is empty")
    return list(range(a, b + 1))


def parse_n_list(items: Sequence[str]) -> list:
    out = []
    for item in items:
        for part in item.split(","):
            part = part.strip()
            if not part:
                continue
            out.extend(parse_range(part) if ".." in part else [int(part)])
    return out


def parse_dist(text: str, J: int):
    if text == "poisson1":
        return poisson1_analytic(J)
    name, _, arg = text.partition(":")
    if name == "bernoulli" and arg:
        try:
            p = Fraction(arg)
        except ValueError:
            raise UsageError(f"bad probability {arg!r}") from None
        return bernoulli_distribution(p, J)
    raise UsageError(f"unknown distribution {text!r}; use bernoulli:p or poisson1")


@contextlib.contextmanager
def open_out(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_verify(cfg: RunConfig) -> int:
    if min(cfg.n_values) < 2:
        raise UsageError("n must be >= 2")
    status = EXIT_OK
    with open_out(cfg.out) as fh:
        writer = None
        if cfg.fmt == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "argmin", "target", "unimodal", "matches", "sign_changes"])
        for report in verify_range(cfg.n_values, cfg.jobs):
            row = report.to_json_dict()
            if writer is None:
                fh.write(json.dumps(row) + "\n")
            else:
                writer.writerow([row["n"], row["argmin"], row["target"], str(row["unimodal"]).lower(),
                                 str(row["matches"]).lower(), ";".join(map(str, row["sign_changes"]))])
            if not (report.matches_conjecture and report.unimodal):
                status = EXIT_COUNTEREXAMPLE
                print(f"counterexample: n={report.n} m={report.argmin_m} (target {report.target_m}, "
                      f"unimodal={report.unimodal}, tie={report.argmin_tie})", file=sys.stderr)
    return status


def cmd_scan(cfg: RunConfig) -> int:
    (n,) = cfg.n_values
    if n < 2:
        raise UsageError("n must be >= 2")
    if cfg.grid_points < 2:
        raise UsageError("grid points must be >= 2")
    rows = scan_fixed_n(n, figure_grid(n, cfg.grid_points), include_left_limits=True)
    with open_out(cfg.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["p", "cdf_le", "cdf_lt", "rp_approx", "rp_residual"])
        for r in rows:
            writer.writerow([fmt_rational(r.p), fmt_float(r.cdf_le), fmt_float(r.cdf_lt),
                             fmt_float(r.rp_approx), fmt_float(r.rp_residual)])
    return EXIT_OK


def _mean_residual(dist, expansion, n: int, precision_bits: int) -> float:
    centre = n * Fraction(dist.mean)
    if centre.denominator != 1:
        raise UsageError(f"n * mean is not an integer for n={n}")
    t = int(centre)
    if dist.family == "poisson1":
        exact = float(poisson_cdf(n, t, expansion.strict, precision_bits))
    else:
        exact = float(binomial_cdf(n, Fraction(dict(dist.pmf)[1]), t, expansion.strict))
    return abs(expansion.value(n) - exact)


def cmd_residual(cfg: RunConfig) -> int:
    k = cfg.k or 1
    dist = parse_dist(cfg.dist or "bernoulli:1/2", k + 3)
    if cfg.mode == "mean":
        expansion = mean_expansion(dist, k, cfg.strict)
        if dist.family != "poisson1" and [x for x, _ in dist.pmf] != [0, 1]:
            raise UsageError("mean mode supports bernoulli and poisson1 only")
    else:
        if cfg.strict:
            log.warning("--strict only affects --mode mean; scan mode checks both sides anyway")
        model = build_model(dist, k)
    qualified_n, qualified_r = [], []
    with open_out(cfg.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "qualified", "sup_residual"])
        for n in cfg.n_values:
            if n < 1:
                raise UsageError("n must be >= 1")
            if cfg.mode == "mean":
                res = _mean_residual(dist, expansion, n, cfg.precision_bits)
            else:
                res = residual_scan(model, n).sup_residual
            ok = uniform_regime(dist, n)
            writer.writerow([n, "true" if ok else "false", fmt_float(res)])
            if ok and res > 0:
                qualified_n.append(n)
                qualified_r.append(res)
    if len(qualified_n) < 3:
        log.warning("fewer than 3 qualified n; slope omitted")
    else:
        print(f"slope: {fmt_float(loglog_slope(qualified_n, qualified_r))}", file=sys.stderr)
    return EXIT_OK


def cmd_poisson(cfg: RunConfig) -> int:
    if cfg.m_max is None or cfg.m_max < 1:
        raise UsageError("m-max must be >= 1")
    report = verify_poisson_monotonicity(cfg.m_max, cfg.precision_bits)
    with open_out(cfg.out) as fh:
        fh.write(json.dumps({
            "m_max": report.m_max,
            "precision_bits": report.precision_bits,
            "checks": report.checks,
            "violations": [list(v) for v in report.violations],
            "uncertified": [list(u) for u in report.uncertified],
        }) + "\n")
    if report.violations:
        return EXIT_COUNTEREXAMPLE
    if report.uncertified:
        return EXIT_UNCERTIFIED
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "scan": cmd_scan, "residual": cmd_residual, "poisson": cmd_poisson}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lattice-edgeworth",
                                     description="Lattice Edgeworth expansions and exact binomial/Poisson checks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="exact check that q_m is minimal at the integer nearest 2n/3")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n-max", type=int)
    g.add_argument("--n-range", help="inclusive range A..B")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", dest="fmt", choices=["json", "csv"], default="json")
    p.add_argument("--out")

    p = sub.add_parser("scan", help="P(Bi(n,p) <= np) and P(Bi(n,p) < np) over a p grid")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid-points", type=int, default=200)
    p.add_argument("--out")

    p = sub.add_parser("residual", help="sup residual of the lattice expansion against exact CDFs")
    p.add_argument("--dist", default="bernoulli:1/2", help="bernoulli:p or poisson1")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--n-list", nargs="+", required=True, help="values or ranges, comma or space separated")
    p.add_argument("--strict", action="store_true", help="expand P(S_n < n mu) (mean mode)")
    p.add_argument("--mode", choices=["scan", "mean"], default="scan")
    p.add_argument("--precision-bits", type=int, default=DEFAULT_PRECISION_BITS)
    p.add_argument("--out")

    p = sub.add_parser("poisson", help="certify monotonicity of P(Po(m) < m) and P(Po(m) <= m)")
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--precision-bits", type=int, default=DEFAULT_PRECISION_BITS)
    p.add_argument("--out")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    kw = {"command": cmd, "out": getattr(args, "out", None)}
    if cmd == "verify":
        if args.n_max is not None:
            if args.n_max < 2:
                raise UsageError("n must be >= 2")
            kw["n_values"] = list(range(2, args.n_max + 1))
        else:
            kw["n_values"] = parse_range(args.n_range)
        kw.update(jobs=args.jobs, fmt=args.fmt)
    elif cmd == "scan":
        kw.update(n_values=[args.n], grid_points=args.grid_points, fmt="csv")
    elif cmd == "residual":
        try:
            kw["n_values"] = parse_n_list(args.n_list)
        except ValueError:
            raise UsageError("n-list entries must be integers") from None
        kw.update(k=args.k, dist=args.dist, strict=args.strict, mode=args.mode,
                  precision_bits=args.precision_bits, fmt="csv")
    elif cmd == "poisson":
        kw.update(m_max=args.m_max, precision_bits=args.precision_bits)
    return RunConfig(**kw)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, DomainError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
