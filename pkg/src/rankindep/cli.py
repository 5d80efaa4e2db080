"""Command-line interface: ``rankindep {test, mvtest, simulate, scatter}``.

Exit codes: 0 success, 2 usage error (bad flags, bad column selection,
non-numeric cells), 3 I/O error, 4 degenerate statistic or too few rows.
A non-rejection is never an error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .combined import UNIVARIATE_METHODS, DegenerateStatisticError, TestOutcome, univariate_test
from .montecarlo import SCATTER_PAIRS, SCENARIOS, ScenarioSpec, null_scatter, run_power
from .mvstat import MV_METHODS, MV_MODES, mv_test
from .permutation import (
    DegeneratePermutationError,
    PermutationPlan,
    UnderpoweredConfigurationError,
    fresh_seed,
)
from .ranks import MultiSample

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class Table:
    header: Optional[List[str]]
    data: np.ndarray  # rows x columns

    def select(self, spec: str) -> List[int]:
        """Resolve a comma-separated list of column names or 0-based indices."""
        out = []
        for token in (t.strip() for t in spec.split(",")):
            if not token:
                continue
            if self.header is not None and token in self.header:
                out.append(self.header.index(token))
            elif token.lstrip("-").isdigit():
                idx = int(token)
                if not 0 <= idx < self.data.shape[1]:
                    raise CliError(f"column index {idx} out of range", EXIT_USAGE)
                out.append(idx)
            else:
                raise CliError(f"unknown column {token!r}", EXIT_USAGE)
        if not out:
            raise CliError(f"empty column selection {spec!r}", EXIT_USAGE)
        return out


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_table(path: str) -> Table:
    """Read a comma-separated UTF-8 file with an optional header row."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    if not rows:
        raise CliError(f"{path} contains no rows", EXIT_DEGENERATE)
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    width = len(header) if header is not None else len(rows[0]) if rows else 0
    values = []
    for lineno, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise CliError(f"line {lineno}: expected {width} cells, found {len(row)}", EXIT_USAGE)
        try:
            values.append([float(c) for c in row])
        except ValueError:
            raise CliError(f"line {lineno}: non-numeric cell in {row}", EXIT_USAGE) from None
    data = np.asarray(values, dtype=float).reshape(len(values), width)
    if not np.all(np.isfinite(data)):
        raise CliError("non-finite values (nan/inf) in input", EXIT_USAGE)
    return Table(header, data)


def _columns(table: Table, args, min_rows: int):
    if table.data.shape[0] < min_rows:
        raise CliError(f"need at least {min_rows} rows, found {table.data.shape[0]}", EXIT_DEGENERATE)
    cx = table.select(args.columns_x)
    cy = table.select(args.columns_y)
    if set(cx) & set(cy):
        raise CliError("X and Y column selections overlap", EXIT_USAGE)
    return table.data[:, cx], table.data[:, cy]


def outcome_csv(outcome: TestOutcome) -> str:
    d = outcome.to_dict()
    row = {k: d[k] for k in ("schema_version", "method", "statistic", "standardized",
                             "p_value", "p_source", "n", "seed")}
    row.update({f"component_{k}": v for k, v in sorted(d["components"].items())})
    row.update({f"estimate_{k}": v for k, v in sorted(d["estimates"].items())})
    row.update({f"detail_{k}": v for k, v in sorted(d["details"].items())})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
    writer.writeheader()
    writer.writerow({k: "" if v is None else v for k, v in row.items()})
    return buf.getvalue()


def _emit(text: str, output: Optional[str]):
    if output is None:
        sys.stdout.write(text)
        return
    try:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {output}: {exc}", EXIT_IO) from exc


def _serialize_outcome(outcome: TestOutcome, fmt: str) -> str:
    if fmt == "csv":
        return outcome_csv(outcome)
    return json.dumps(outcome.to_dict(), indent=2, sort_keys=True) + "\n"


def _seed(args) -> int:
    return fresh_seed() if args.seed is None else args.seed


# -- commands ---------------------------------------------------------------

def cmd_test(args) -> int:
    table = read_table(args.input)
    x, y = _columns(table, args, 2)
    if x.shape[1] != 1 or y.shape[1] != 1:
        raise CliError("test takes exactly one X and one Y column; use mvtest", EXIT_USAGE)
    outcome = univariate_test(x[:, 0], y[:, 0], method=args.method, scaling=args.scaling,
                              literal=args.literal, tie_seed=_seed(args))
    _emit(_serialize_outcome(outcome, args.format), args.output)
    return EXIT_OK


def cmd_mvtest(args) -> int:
    table = read_table(args.input)
    x, y = _columns(table, args, 3)
    seed = _seed(args)
    plan = None if args.mode == "borel_analytic" else PermutationPlan(args.permutations, seed)
    outcome = mv_test(MultiSample(x, y), method=args.method, mode=args.mode, plan=plan)
    if outcome.seed is None:
        outcome.seed = seed
    _emit(_serialize_outcome(outcome, args.format), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = ScenarioSpec(args.scenario, args.n)
    default = "xisym,cs,ck" if spec.multivariate else "cs,ck,cq,xisym"
    tests = [t.strip() for t in (args.tests or default).split(",") if t.strip()]
    report = run_power(tests, spec, args.reps, _seed(args), alpha=args.alpha, mode=args.mode,
                       B=args.permutations, workers=args.workers)
    _emit(report.to_csv() if args.format == "csv" else report.to_json(), args.output)
    return EXIT_OK


def cmd_scatter(args) -> int:
    pair = tuple(t.strip() for t in args.pair.split(","))
    seed = _seed(args)
    values = null_scatter(pair, args.n, args.reps, seed, workers=args.workers)
    if args.format == "csv":
        lines = [f"{pair[0]},{pair[1]}"] + [f"{a!r},{b!r}" for a, b in values.tolist()]
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps({"pair": list(pair), "n": args.n, "reps": args.reps, "seed": seed,
                           "values": values.tolist()}, sort_keys=True) + "\n"
    _emit(text, args.output)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _alpha(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rankindep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="master seed; sampled and recorded when omitted")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", default=None, help="output file (default: stdout)")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", required=True, help="comma-separated file, optional header")
    data.add_argument("--columns-x", default="0", help="X columns by name or 0-based index")
    data.add_argument("--columns-y", default="1", help="Y columns by name or 0-based index")

    p = sub.add_parser("test", parents=[data, common], help="univariate test on two columns")
    p.add_argument("--method", choices=sorted(UNIVARIATE_METHODS), default="ck")
    p.add_argument("--scaling", choices=("asymptotic", "finite"), default="asymptotic")
    p.add_argument("--literal", action="store_true",
                   help="use the unstandardized |tau| and 1.5|Q| components")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("mvtest", parents=[data, common], help="multivariate test")
    p.add_argument("--method", choices=MV_METHODS, default="ck")
    p.add_argument("--mode", choices=MV_MODES, default="grothe_permutation")
    p.add_argument("--permutations", type=int, default=1000)
    p.set_defaults(func=cmd_mvtest)

    p = sub.add_parser("simulate", parents=[common], help="size/power simulation")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--reps", type=_positive_int, default=5000)
    p.add_argument("--tests", default=None, help="comma-separated test names")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--mode", choices=MV_MODES, default="grothe_permutation",
                   help="inference mode for multivariate scenarios")
    p.add_argument("--permutations", type=int, default=500)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scatter", parents=[common], help="paired null draws for plotting")
    p.add_argument("--pair", default="kendall,xi",
                   help="one of: " + "; ".join(",".join(k) for k in sorted(SCATTER_PAIRS)))
    p.add_argument("--n", type=_positive_int, default=500)
    p.add_argument("--reps", type=_positive_int, default=10000)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_scatter)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        return args.func(args)
    except CliError as exc:
        print(f"rankindep: error: {exc}", file=sys.stderr)
        return exc.code
    except (DegenerateStatisticError, DegeneratePermutationError) as exc:
        print(f"rankindep: degenerate statistic: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except UnderpoweredConfigurationError as exc:
        print(f"rankindep: underpowered configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"rankindep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
