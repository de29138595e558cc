"""Command line front end.

Every command writes a JSON report (sorted keys, schema-checked) to
``--out-dir`` and prints it to stdout; table-like outputs go to CSV files.
Exit codes: 0 success, 2 configuration error, 3 numeric-domain error,
4 invariant violation.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import arith, ergodic, expsum, presets, regvar, report, thinset, variation
from .errors import ConfigError, InvariantViolation, ThinPrimesError

log = logging.getLogger("thinprimes")


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------

def int_arg(text: str) -> int:
    """Integer that may be written as 1e6 or 10**6."""
    text = str(text).strip()
    try:
        if "**" in text:
            base, exp = text.split("**")
            return int(base) ** int(exp)
        if any(ch in text for ch in "eE."):
            val = float(text)
            if val != int(val):
                raise ValueError
            return int(val)
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def fraction_arg(text: str) -> Fraction:
    try:
        return regvar.as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def int_list(text: str) -> list[int]:
    return [int_arg(t) for t in str(text).split(",") if t.strip()]


# ---------------------------------------------------------------------------
# shared option groups
# ---------------------------------------------------------------------------

def add_pair_args(p: argparse.ArgumentParser, sign: bool = True) -> None:
    if sign:
        p.add_argument("--sign", choices=["plus", "minus"], default="minus")
    p.add_argument("--c1", type=fraction_arg, default=Fraction(3, 2), help="exponent of h1 in [1, 2)")
    p.add_argument("--A1", type=float, default=0.0, help="log power of h1")
    p.add_argument("--c2", type=fraction_arg, default=None, help="exponent of h2 (default: c1)")
    p.add_argument("--A2", type=float, default=None, help="log power of h2 (default: A1)")


def pair_from(args) -> regvar.FunctionPair:
    return presets.make_pair(args.c1, args.A1, args.c2, args.A2)


def thin_from(args) -> thinset.ThinSetSpec:
    return thinset.ThinSetSpec(args.sign, pair_from(args), args.precision)


def config_dict(args) -> dict:
    # run-environment options do not affect results and stay out of the report
    skip = {"func", "config", "save_config", "quiet", "threads", "out_dir"}
    return {k: v for k, v in sorted(vars(args).items()) if not k.startswith("_") and k not in skip}


def emit(args, command: str, anchor: str, result: dict, stem: str | None = None) -> dict:
    rep = report.make_report(command, anchor, config_dict(args), result)
    out = Path(args.out_dir) / f"{stem or command.replace(' ', '_')}.json"
    text = report.write_json(rep, out)
    if not args.quiet:
        sys.stdout.write(text)
    return rep


def tables_for(args, limit: int) -> arith.SieveTables:
    return arith.build_sieve(max(limit, 2), threads=args.threads)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_sieve(args):
    tables = tables_for(args, args.limit)
    path = Path(args.out) if args.out else Path(args.out_dir) / "sieve.csv"
    arith.write_csv(tables, path)
    emit(args, "sieve", "sieve tables for primes, Mobius and von Mangoldt functions",
         {"limit": args.limit, "primes": int(tables.primes.size), "theta": tables.theta(args.limit),
          "path": str(path)})


def cmd_exponents(args):
    g1 = 1 / Fraction(args.c1)
    g2 = 1 / Fraction(args.c2 if args.c2 is not None else args.c1)
    res = regvar.check_exponent_conditions(args.d, g1, g2, args.table)
    emit(args, "exponents check", "admissibility conditions on (gamma1, gamma2) per polynomial degree", res,
         stem="exponents")


def cmd_thinset_enum(args):
    thin = thin_from(args)
    diag = thinset.Diagnostics()
    members = thinset.enumerate_members(thin, args.limit, None, diag)
    path = Path(args.out) if args.out else Path(args.out_dir) / "members.csv"
    report.write_csv(path, ["p"], ([int(p)] for p in members))
    result = {"count": int(members.size), "path": str(path), "boundary_cases": len(diag.boundary_cases),
              "diagnostics": diag.as_dict()}
    if args.dual and thin.is_dual and args.limit >= 2:
        dual = thinset.enumerate_dual(thin, args.limit, tables_for(args, args.limit))
        result["dual_identical"] = bool(np.array_equal(members, dual))
        if not result["dual_identical"]:
            emit(args, "thinset enum", "thin prime set defined by a fractional-part window", result,
                 stem="thinset_enum")
            raise InvariantViolation("fractional-part and floor(h(n)) enumerations differ")
    emit(args, "thinset enum", "thin prime set defined by a fractional-part window", result, stem="thinset_enum")


def cmd_thinset_count(args):
    thin = thin_from(args)
    res = thinset.count_vs_integral(thin, args.limit, tables_for(args, args.limit))
    emit(args, "thinset count", "asymptotic count of the thin set by the integral of psi/log", res,
         stem="thinset_count")


def _phase_spec(args) -> expsum.PhaseSpec:
    return expsum.PhaseSpec(args.xi, args.m, args.tau, expsum.IntPolynomial.parse(args.poly), pair_from(args))


def cmd_expsum(args):
    kind = args.kind
    if kind == "direct":
        spec = _phase_spec(args)
        res = expsum.direct_progression_sum(spec, args.j, args.K, args.epsilon, with_bounds=args.m != 0)
        bounds = res.extra.pop("bounds", {})
        emit(args, "expsum direct", "exponential sum over an arithmetic progression and its bounds",
             {"sum": res.as_dict(), "bounds": bounds}, stem="expsum_direct")
        return
    if kind == "vaughan":
        spec = _phase_spec(args)
        X, Xp = args.range
        u = args.u if args.u is not None else presets.arith_icbrt(X)
        res = expsum.vaughan_decompose(spec, X, Xp, u, tables_for(args, Xp), threads=args.threads)
        emit(args, "expsum vaughan", "Vaughan decomposition of the von Mangoldt weighted exponential sum", res,
             stem="expsum_vaughan")
        if res["difference"] > res["recombined"].error_bound:
            raise InvariantViolation(f"recombined sum differs from the direct sum by {res['difference']:.3g}")
        return
    thin = thin_from(args)
    poly = expsum.IntPolynomial.parse(args.poly)
    grid = args.ngrid or [args.limit]
    tables = tables_for(args, max(grid))
    rows = []
    for N in grid:
        if kind == "transfer3":
            rows.append(expsum.transfer_error_psi_weighted(args.xi, poly, thin, N, tables))
        else:
            rows.append(expsum.transfer_error_reweighted(args.xi, poly, thin, N, tables, args.weighting))
    expsum.write_sweep_csv(rows, Path(args.out_dir) / f"expsum_{kind}.csv")
    anchor = ("transfer of psi-weighted exponential sums to all primes" if kind == "transfer3"
              else "transfer of 1/psi-weighted exponential sums to all primes")
    emit(args, f"expsum {kind}", anchor, {"rows": rows}, stem=f"expsum_{kind}")


def read_sequence(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        try:
            for rec in csv.DictReader(fh):
                if rec.get("value_im") not in (None, ""):
                    rows.append((int(rec["index"]), complex(float(rec["value_re"]), float(rec["value_im"]))))
                else:
                    rows.append((int(rec["index"]), float(rec["value_re"])))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}: expected columns index,value_re[,value_im] ({exc})") from None
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    rows.sort()
    idx = [i for i, _ in rows]
    if idx != list(range(idx[0], idx[0] + len(idx))):
        raise ConfigError(f"{path}: indices must be consecutive")
    return idx[0], np.array([v for _, v in rows])


def cmd_variation(args):
    start, seq = read_sequence(args.input)
    result = {"r": args.r, "rho": args.rho, "length": int(seq.size), "start": start}
    if args.mode in ("exact", "both"):
        ex = variation.vr_exact(seq, args.r)
        result["exact"] = {"value": ex.value, "subsequence": [start + k for k in ex.subsequence]}
    if args.mode in ("split", "both"):
        sp = variation.vr_split(seq, args.r, args.rho, start=start)
        result["split"] = {"long": sp["long"], "short": sp["short"], "blocks": sp["blocks"]}
    emit(args, "variation", "r-variational seminorm with long and short parts", result)


def read_signal(spec: str) -> ergodic.SignalOnZ:
    if spec == "delta":
        return ergodic.SignalOnZ.delta(0)
    pts, vals = [], []
    with open(spec, newline="") as fh:
        try:
            for rec in csv.DictReader(fh):
                pts.append(int(rec["x"]))
                vals.append(float(rec["value"]))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{spec}: expected columns x,value ({exc})") from None
    return ergodic.SignalOnZ(np.array(pts), np.array(vals))


def cmd_ergodic(args):
    thin = thin_from(args)
    poly = expsum.IntPolynomial.parse(args.poly)
    f = read_signal(args.f)
    grid = args.ngrid
    tables = tables_for(args, max(grid))
    op = {"avg": "A", "hilbert": "H"}[args.kind]
    rep = ergodic.variation_experiment(thin, poly, f, args.r, args.rho, grid, tables, op, args.s, args.threads)
    trace = Path(args.out_dir) / f"ergodic_{args.kind}_trace.csv"
    header = ["N_max", "members", "norm", "ratio", "long_norm", "short_norm"]
    report.write_csv(trace, header, ([row.get(k, "") for k in header] for row in rep["rows"]))
    anchor = ("variational bound for averages along the thin set (empirical proxy)" if op == "A"
              else "variational bound for the truncated Hilbert transform along the thin set (empirical proxy)")
    emit(args, f"ergodic {args.kind}", anchor, rep, stem=f"ergodic_{args.kind}")


def cmd_preset(args):
    if args.action == "list":
        for name in presets.ACCEPTANCE_ORDER:
            fn, anchor = presets.PRESETS[name]
            print(f"{name}: {anchor}")
        return
    if args.name not in presets.PRESETS:
        raise ConfigError(f"unknown preset {args.name!r}; see 'preset list'")
    res = presets.run_preset(args.name, threads=args.threads)
    emit(args, f"preset {args.name}", res["anchor"], res, stem=f"preset_{args.name}")
    if not res["passed"]:
        log.warning("preset %s: criterion not met", args.name)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def global_options(suppress: bool) -> argparse.ArgumentParser:
        # Subcommands repeat the global options with suppressed defaults so a
        # flag given before the subcommand is not reset by the subparser.
        g = argparse.ArgumentParser(add_help=False, allow_abbrev=False)

        def d(value):
            return argparse.SUPPRESS if suppress else value

        g.add_argument("--threads", type=int, default=d(1), help="worker threads (results do not depend on it)")
        g.add_argument("--precision", choices=list(thinset.PRECISIONS), default=d("standard"))
        g.add_argument("--seed", type=int, default=d(0))
        g.add_argument("--out-dir", default=d("out"))
        g.add_argument("--config", default=d(None), help="flat key = value file supplying defaults")
        g.add_argument("--save-config", default=d(None), help="write the effective options as a config file")
        g.add_argument("--quiet", action="store_true", default=d(False), help="do not echo the JSON report")
        return g

    common = global_options(suppress=True)
    parser = argparse.ArgumentParser(prog="thinprimes", description=__doc__.splitlines()[0], allow_abbrev=False,
                                     parents=[global_options(suppress=False)])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(subparsers, name, func, **kw):
        p = subparsers.add_parser(name, allow_abbrev=False, parents=[common], **kw)
        p.set_defaults(func=func, _parser=p)
        return p

    p = add(sub, "sieve", cmd_sieve, help="build and dump arithmetic tables")
    p.add_argument("--limit", type=int_arg, default=None, help="required (here or in --config)")
    p.add_argument("--out", default=None)

    ex = sub.add_parser("exponents", allow_abbrev=False, help="exponent admissibility")
    ex_sub = ex.add_subparsers(dest="action", required=True)
    p = add(ex_sub, "check", cmd_exponents)
    p.add_argument("--d", type=int, default=None, help="required (here or in --config)")
    p.add_argument("--c1", type=fraction_arg, default=None, help="required (here or in --config)")
    p.add_argument("--c2", type=fraction_arg, default=None)
    p.add_argument("--table", choices=["section1", "thm3", "thm4"], default="thm3")

    ts = sub.add_parser("thinset", allow_abbrev=False, help="thin prime sets")
    ts_sub = ts.add_subparsers(dest="action", required=True)
    p = add(ts_sub, "enum", cmd_thinset_enum)
    add_pair_args(p)
    p.add_argument("--limit", type=int_arg, default=None, help="required (here or in --config)")
    p.add_argument("--out", default=None)
    p.add_argument("--dual", action="store_true", help="also run the floor(h(n)) enumeration and compare")
    p = add(ts_sub, "count", cmd_thinset_count)
    add_pair_args(p)
    p.add_argument("--limit", type=int_arg, default=None, help="required (here or in --config)")

    p = add(sub, "expsum", cmd_expsum, help="exponential sums")
    p.add_argument("kind", choices=["direct", "vaughan", "transfer3", "transfer4"])
    add_pair_args(p)
    p.add_argument("--xi", type=fraction_arg, default=Fraction(0))
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--tau", type=int, default=0, choices=[0, 1])
    p.add_argument("--poly", default="1")
    p.add_argument("--range", type=int_arg, nargs=2, metavar=("X", "XP"), default=[10**4, 2 * 10**4])
    p.add_argument("--u", type=int, default=None)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--K", type=int_arg, default=1024)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--limit", type=int_arg, default=10**6)
    p.add_argument("--ngrid", type=int_list, default=None, help="comma separated N values for sweeps")
    p.add_argument("--weighting", choices=["hilbert", "average"], default="hilbert")

    p = add(sub, "variation", cmd_variation, help="r-variation of a sequence")
    p.add_argument("--r", type=float, default=None, help="required (here or in --config)")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--input", default=None, help="CSV with index,value_re[,value_im] (required)")
    p.add_argument("--mode", choices=["exact", "split", "both"], default="both")

    p = add(sub, "ergodic", cmd_ergodic, help="averages and Hilbert transforms on Z")
    p.add_argument("kind", choices=["avg", "hilbert"])
    add_pair_args(p)
    p.add_argument("--poly", default="1")
    p.add_argument("--r", type=float, default=3.0)
    p.add_argument("--rho", type=float, default=0.4)
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("--f", default="delta", help="'delta' or a CSV with x,value")
    p.add_argument("--ngrid", type=int_list, default=[10**3, 10**4, 10**5])

    p = add(sub, "preset", cmd_preset, help="named acceptance runs")
    p.add_argument("action", choices=["run", "list"])
    p.add_argument("name", nargs="?")
    return parser


def check_required(args) -> None:
    """Options marked 'required' may come from argv or from --config."""
    for action in args._parser._actions:
        if action.help and action.help.startswith("required") or (action.help or "").endswith("(required)"):
            if getattr(args, action.dest, None) is None:
                raise ConfigError(f"missing required option {action.option_strings[0]}")


def apply_config(args, argv: list[str]) -> None:
    """Fill options not given on the command line from ``--config``."""
    if not args.config:
        return
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    cp.read_string("[run]\n" + text)
    sub = args._parser
    actions = {a.dest: a for a in sub._actions}
    for key, raw in cp["run"].items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise ConfigError(f"config key {key!r} is not an option of this command")
        action = actions[dest]
        if any(opt in argv for opt in action.option_strings):
            continue
        try:
            if isinstance(action, argparse._StoreTrueAction):
                val = raw.strip().lower() in ("1", "true", "yes", "on")
            elif action.nargs in ("+", "*") or isinstance(action.nargs, int):
                val = [action.type(t) if action.type else t for t in raw.split()]
            else:
                val = action.type(raw) if action.type else raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and val not in action.choices:
            raise ConfigError(f"config key {key!r}: {val!r} not in {list(action.choices)}")
        setattr(args, dest, val)


def save_config(args, path) -> None:
    """Write the flat key = value form of a parsed command (inverse of --config)."""
    lines = []
    sub = args._parser
    for action in sub._actions:
        if not action.option_strings or action.dest in ("help", "config", "save_config"):
            continue
        val = getattr(args, action.dest, None)
        if val is None:
            continue
        if isinstance(val, (list, tuple)):
            val = (" " if action.nargs is not None else ",").join(str(v) for v in val)
        lines.append(f"{action.dest} = {val}")
    Path(path).write_text("\n".join(lines) + "\n")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        apply_config(args, argv)
        check_required(args)
        if args.save_config:
            save_config(args, args.save_config)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        np.random.seed(args.seed)
        args.func(args)
    except ThinPrimesError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except (OverflowError, ZeroDivisionError, FloatingPointError) as exc:
        log.error("numeric error: %s", exc)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
