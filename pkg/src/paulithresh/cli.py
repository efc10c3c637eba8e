"""Command-line interface: every computation as a subcommand writing CSV.

Exit codes: 0 success, 2 configuration error, 3 budget exceeded,
4 numerical failure (no bracket or no convergence).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .channel import DomainError, NoiseFamily, shannon_entropy
from .concat import CodeStack, Repetition, exact_stack_entropy, mc_stack_entropy
from .errors import BudgetError, ConvergenceError
from .tables import TableConfig, build_table, infinite_bitflip_threshold, upper_bound_threshold
from .threshold import (
    composite_entropy_fn,
    hashing_entropy,
    solve_threshold_exact,
    solve_threshold_mc,
    stack_entropy_fn,
    sweep_optimal_n2,
    trace_independent_frontier,
    trace_two_pauli_frontier,
)

DEFAULT_SEED = 20240101
EXIT_CONFIG, EXIT_BUDGET, EXIT_NUMERIC = 2, 3, 4
_FLAGS = {"percent", "all_levels"}


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# Parsing helpers
# --------------------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:count`` (inclusive linspace)."""
    text = str(text).strip()
    if text.count(":") == 2 and "," not in text:
        a, b, k = text.split(":")
        return [float(v) for v in np.linspace(float(a), float(b), int(k))]
    return [float(v) for v in text.split(",") if v.strip()]


def _int_range(text: str) -> list[int]:
    """``a:b`` inclusive, or a comma list."""
    text = str(text).strip()
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b) + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def read_config(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        k, v = (t.strip() for t in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _add_common(p: argparse.ArgumentParser, stack: bool = True) -> None:
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--family", default="depolarizing", help="noise family, e.g. depolarizing, two-pauli, custom:dx,dy,dz")
    if stack:
        p.add_argument("--rep", help="single repetition code 'n,bit' or 'n,phase'")
        p.add_argument("--n1", type=int, help="inner bit-flip code length")
        p.add_argument("--n2", type=int, help="outer phase-flip code length")
        p.add_argument("--stack", help="stack file or inline stack such as five513x6 or 5in64,five513")
    p.add_argument("--samples", type=int, default=0, help="Monte Carlo samples (0 selects exact evaluation)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--budget", type=float, default=1e9, help="work budget for exact enumeration")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", "-o", help="CSV path (default stdout)")
    p.add_argument("--percent", action="store_true", help="print thresholds in percent")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="paulithresh", description="Entropic thresholds of concatenated codes under Pauli noise.")
    ap.add_argument("--version", action="version", version=f"paulithresh {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", help="average logical entropy at given noise levels")
    _add_common(p)
    p.add_argument("--p", required=False, help="parameter values: list or start:stop:count")
    p.add_argument("--all-levels", action="store_true", help="report every level of the stack")

    p = sub.add_parser("threshold", help="parameter where the entropy crosses the target")
    _add_common(p)
    p.add_argument("--target", type=float, default=1.0)
    p.add_argument("--bracket", help="lo,hi search bracket")
    p.add_argument("--method", choices=("bisect", "brent"), default="bisect")
    p.add_argument("--grid", help="Monte Carlo grid of parameter values")

    p = sub.add_parser("sweep", help="threshold of n1-in-n2 codes over a range of n2")
    _add_common(p, stack=False)
    p.add_argument("--n1", type=int, required=False)
    p.add_argument("--n2-range", default="1:40")

    p = sub.add_parser("frontier", help="threshold frontiers in two-parameter noise planes")
    _add_common(p, stack=False)
    p.add_argument("--kind", choices=("independent", "two-pauli"), default="independent")
    p.add_argument("--grid", default="0:0.2:12", help="fixed q_z values (independent) or p2 values (two-pauli)")
    p.add_argument("--n1-values", default="1:30", help="bit-flip lengths for the single-code classes")
    p.add_argument("--n2-range", default="1:90")

    p = sub.add_parser("table", help="reproduce a published table (1..8)")
    _add_common(p, stack=False)
    p.add_argument("--id", type=int, required=False)

    p = sub.add_parser("bound", help="hashing, upper and infinite bit-flip bounds along a family")
    _add_common(p, stack=False)

    p = sub.add_parser("mc", help="Monte Carlo entropy per level of a stack")
    _add_common(p)
    p.add_argument("--p", required=False)
    return ap


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        sub = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        defaults = {k: (_bool(v) if k in _FLAGS else v) for k, v in cfg.items()}
        sub.set_defaults(**defaults)
        args = ap.parse_args(argv)
    return args


def _config_hash(args: argparse.Namespace) -> str:
    items = {k: v for k, v in sorted(vars(args).items()) if k not in ("output", "config", "verbose", "workers")}
    return hashlib.sha256(json.dumps(items, sort_keys=True, default=str).encode()).hexdigest()[:12]


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if np.isnan(v):
            return ""
        return f"{float(v):.12g}"
    return "" if v is None else str(v)


def write_csv(args: argparse.Namespace, columns: list[str], rows: list[list], percent_cols: Sequence[str] = ()) -> None:
    buf = io.StringIO()
    buf.write(f"# paulithresh {__version__} config={_config_hash(args)} seed={args.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    pidx = {columns.index(c) for c in percent_cols if c in columns} if args.percent else set()
    for row in rows:
        cells = []
        for i, v in enumerate(row):
            if i in pidx and isinstance(v, (float, np.floating)):
                v = 100.0 * float(v)
            cells.append(_fmt(v))
        w.writerow(cells)
    text = buf.getvalue()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def _stack_from_args(args: argparse.Namespace) -> CodeStack | None:
    given = [x for x in (args.rep, args.stack) if x] + ([args.n1] if args.n1 is not None else [])
    if len(given) > 1:
        raise ConfigError("give at most one of --rep, --stack, --n1/--n2")
    if args.rep:
        parts = str(args.rep).split(",")
        if len(parts) != 2:
            raise ConfigError("--rep expects 'n,orientation'")
        return CodeStack((Repetition(int(parts[0]), parts[1]),))
    if args.stack:
        return CodeStack.from_string(args.stack)
    if args.n1 is not None:
        return CodeStack.composite(args.n1, args.n2 or 1)
    if args.n2 is not None:
        raise ConfigError("--n2 needs --n1")
    return None


def _entropy_fn(args, stack: CodeStack | None):
    if stack is None:
        return hashing_entropy, "none"
    if args.n1 is not None:
        return composite_entropy_fn(args.n1, args.n2 or 1, budget=args.budget, workers=args.workers), stack.describe()
    return stack_entropy_fn(stack, kernel_budget=args.budget, workers=args.workers), stack.describe()


def cmd_entropy(args: argparse.Namespace, mc_only: bool = False) -> None:
    fam = NoiseFamily.parse(args.family)
    if not args.p:
        raise ConfigError("--p is required")
    ps = _float_list(args.p)
    stack = _stack_from_args(args)
    rows = []
    use_mc = args.samples > 0 or mc_only
    if use_mc:
        if stack is None:
            raise ConfigError("Monte Carlo needs a code stack")
        samples = args.samples or 10_000
        for p in ps:
            est = mc_stack_entropy(stack, fam(p), samples, args.seed, workers=args.workers)
            for level, (m, se) in enumerate(est.levels, 1):
                rows.append([level, p, m, se, samples, args.seed])
    else:
        for p in ps:
            c = fam(p)
            if stack is None:
                rows.append([0, p, shannon_entropy(c), None, None, args.seed])
                continue
            depths = range(1, len(stack) + 1) if args.all_levels else [len(stack)]
            for d in depths:
                sub = stack.prefix(d)
                if args.n1 is not None and d == len(stack):
                    val = composite_entropy_fn(args.n1, args.n2 or 1, budget=args.budget, workers=args.workers)(c)
                else:
                    val = exact_stack_entropy(sub, c, kernel_budget=args.budget, workers=args.workers)
                rows.append([d, p, val, None, None, args.seed])
    write_csv(args, ["level", "p", "entropy", "std_error", "samples", "seed"], rows)


def cmd_threshold(args: argparse.Namespace) -> None:
    fam = NoiseFamily.parse(args.family)
    stack = _stack_from_args(args)
    if args.grid or args.samples > 0:
        if stack is None or not args.grid or args.samples <= 0:
            raise ConfigError("Monte Carlo thresholds need --stack, --grid and --samples")
        res = solve_threshold_mc(stack, fam, _float_list(args.grid), args.samples, args.seed,
                                 target=args.target, workers=args.workers)
    else:
        fn, code = _entropy_fn(args, stack)
        bracket = tuple(_float_list(args.bracket)) if args.bracket else None
        if bracket is not None and len(bracket) != 2:
            raise ConfigError("--bracket expects lo,hi")
        res = solve_threshold_exact(fn, fam, bracket, args.target, args.tol, method=args.method, code=code)
    cols = ["family", "code", "p", "method", "uncertainty", "entropy_target", "evaluations", "entropy_at_p", "fidelity"]
    row = [fam.label, res.code, res.p, res.method, res.uncertainty, res.entropy_target, res.evaluations,
           res.entropy_at_p, res.fidelity]
    write_csv(args, cols, [row], ("p", "uncertainty"))


def cmd_sweep(args: argparse.Namespace) -> None:
    if args.n1 is None:
        raise ConfigError("--n1 is required")
    fam = NoiseFamily.parse(args.family)
    best, _, curve = sweep_optimal_n2(args.n1, fam, _int_range(args.n2_range), tol=args.tol,
                                      budget=args.budget, workers=args.workers)
    rows = []
    for r in curve:
        n2 = int(r.code.split("in")[1])
        rows.append([args.n1, n2, r.p, r.evaluations, n2 == best])
    write_csv(args, ["n1", "n2", "p", "evaluations", "optimal"], rows, ("p",))


def cmd_frontier(args: argparse.Namespace) -> None:
    grid = _float_list(args.grid)
    n1_values = _int_range(args.n1_values)
    if args.kind == "two-pauli":
        rows = [[r["p2"], r["bit"], r["n1"], r["hashing"], r["cerf"]]
                for r in trace_two_pauli_frontier(grid, n1_values, args.tol)]
        write_csv(args, ["p2", "bit", "bit_n1", "hashing", "cerf"], rows, ("p2", "bit", "hashing", "cerf"))
        return
    n2_values = _int_range(args.n2_range)
    comp_n1 = [n for n in (1, 3, 5, 7) if n in n1_values] or [1]
    classes = {
        "bit": dict(n1_values=n1_values),
        "phase": dict(n1_values=n1_values),
        "bit-in-phase": dict(n1_values=comp_n1, n2_values=n2_values),
        "phase-in-bit": dict(n1_values=comp_n1, n2_values=n2_values),
        "hashing": {},
        "cerf": {},
    }
    traced = {k: trace_independent_frontier(k, grid, tol=args.tol, **kw) for k, kw in classes.items()}
    rows = []
    for i, qz in enumerate(grid):
        row: list = [qz]
        for k in classes:
            pt = traced[k][i]
            row.append(pt.q_x)
            if k not in ("hashing", "cerf"):
                row.append(pt.code)
        rows.append(row)
    cols = ["q_z", "bit", "bit_code", "phase", "phase_code", "bit_in_phase", "bit_in_phase_code",
            "phase_in_bit", "phase_in_bit_code", "hashing", "cerf"]
    write_csv(args, cols, rows, ("q_z", "bit", "phase", "bit_in_phase", "phase_in_bit", "hashing", "cerf"))


def cmd_table(args: argparse.Namespace) -> None:
    if args.id is None:
        raise ConfigError("--id is required")
    if not 1 <= args.id <= 8:
        raise ConfigError(f"table id must be 1..8, got {args.id}")
    cfg = TableConfig(budget=args.budget, samples=args.samples, seed=args.seed, workers=args.workers, tol=args.tol)
    t = build_table(args.id, cfg)
    write_csv(args, t.columns, t.rows, t.percent_columns)


def cmd_bound(args: argparse.Namespace) -> None:
    fam = NoiseFamily.parse(args.family)
    rows = []
    h = solve_threshold_exact(hashing_entropy, fam, tol=args.tol).p
    for name, p in (("hashing", h), ("upper", upper_bound_threshold(fam)),
                    ("bitflip-infinite", infinite_bitflip_threshold(fam))):
        c = fam(p)
        rows.append([fam.label, name, p, c.p_i, shannon_entropy(c)])
    write_csv(args, ["family", "bound", "p", "fidelity", "entropy"], rows, ("p",))


COMMANDS = {
    "entropy": cmd_entropy,
    "threshold": cmd_threshold,
    "sweep": cmd_sweep,
    "frontier": cmd_frontier,
    "table": cmd_table,
    "bound": cmd_bound,
    "mc": lambda a: cmd_entropy(a, mc_only=True),
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ConfigError, OSError) as exc:
        print(f"paulithresh: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except BudgetError as exc:
        print(f"paulithresh: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConvergenceError as exc:
        print(f"paulithresh: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DomainError, ValueError, OSError) as exc:
        print(f"paulithresh: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
