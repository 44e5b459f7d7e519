"""Command-line front end: ``levelbound {analyze,compare,shortcuts,simulate,oracle}``.

Output is CSV (default) or JSON, one record per row, written to ``--out`` or
standard output.  Exit status is 0 on success, 1 on invalid input and 2 when
a computed result fails its numeric checks.  Errors go to standard error as a
single line starting with ``ERROR:``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import (
    DEFAULT_EPSILON,
    Direction,
    NumericError,
    Scheme,
    compare_schemes,
    detect_shortcuts,
    exact_hitting_time,
    legal_directions,
    linear_bound,
    metric_bound,
)
from .levelmodel import LevelModel, load_model, onemax_model, twomax1_model
from .oracle import Problem, enumerate_chain, monte_carlo

BOUND_COLUMNS = ["label", "n", "scheme", "direction", "level", "bound", "exact", "ratio"]
COLUMNS = {
    "analyze": BOUND_COLUMNS,
    "compare": BOUND_COLUMNS,
    "shortcuts": ["label", "n", "k", "l", "ratio", "epsilon"],
    "simulate": ["label", "n", "start_level", "runs", "seed", "mean", "stddev", "exact", "z_score"],
    "oracle": ["label", "n", "kind", "level", "target", "oracle", "model", "abs_diff"],
}
GENERATORS = {"onemax": onemax_model, "twomax1": twomax1_model}
SANDWICH_RTOL = 1e-9


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    problem: Optional[str] = None
    model_path: Optional[str] = None
    n: tuple = ()
    scheme: str = Scheme.CKL.value
    direction: str = Direction.LOWER.value
    eps: float = DEFAULT_EPSILON
    runs: int = 1000
    seed: int = 0
    start_level: Optional[int] = None
    format: str = "csv"
    out: Optional[str] = None

    def validate(self) -> None:
        if self.command not in COLUMNS:
            raise UsageError(f"unknown subcommand {self.command!r}")
        if (self.problem is None) == (self.model_path is None):
            raise UsageError("give exactly one of --problem or --model")
        if self.problem is not None and not self.n:
            raise UsageError("--n is required with --problem")
        if self.model_path is not None and self.command in ("simulate", "oracle"):
            raise UsageError(f"{self.command} needs --problem, not --model")
        if self.command == "analyze" and self.scheme in {s.value for s in Scheme}:
            if Direction(self.direction) not in legal_directions(self.scheme):
                raise UsageError(f"scheme {self.scheme} has no {self.direction} bound")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _n_list(text: str) -> tuple:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty --n list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="levelbound", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (
        ("analyze", "one scheme and direction on one or more models"),
        ("compare", "every scheme and direction over an n-list"),
        ("shortcuts", "scan for level pairs that are skipped"),
        ("simulate", "Monte Carlo runs of the (1+1) EA"),
        ("oracle", "compare generators with the full 2^n chain"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--problem", choices=sorted(GENERATORS))
        p.add_argument("--model", dest="model_path", metavar="PATH")
        p.add_argument("--n", type=_n_list, default=())
        p.add_argument("--scheme", default=Scheme.CKL.value,
                       choices=[s.value for s in Scheme] + ["metric"])
        p.add_argument("--direction", default="lower", choices=[d.value for d in Direction])
        p.add_argument("--eps", type=float, default=DEFAULT_EPSILON)
        p.add_argument("--runs", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--start-level", type=int, default=None)
        p.add_argument("--format", default="csv", choices=["csv", "json"])
        p.add_argument("--out", default=None, metavar="PATH")
    return parser


def _threads() -> int:
    raw = os.environ.get("LEVELBOUND_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"LEVELBOUND_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise UsageError("LEVELBOUND_THREADS must be >= 0")
    return value or (os.cpu_count() or 1)


def _models(config: RunConfig) -> list:
    if config.model_path is not None:
        return [("", load_model(config.model_path))]
    gen = GENERATORS[config.problem]
    return [(n, gen(n)) for n in config.n]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _check_sandwich(label, n, rows) -> None:
    for row in rows:
        exact, bound = row["exact"], row["bound"]
        if exact is None:
            continue
        if row["direction"] == "lower" and bound > exact * (1 + SANDWICH_RTOL):
            raise NumericError(f"{label} lower {row['scheme']} bound exceeds exact at level {row['level']}")
        if row["direction"] == "upper" and bound < exact * (1 - SANDWICH_RTOL):
            raise NumericError(f"{label} upper {row['scheme']} bound below exact at level {row['level']}")


def _bound_rows(label, n, tag, direction, vec, exact) -> list:
    rows = []
    for k in range(1, vec.K + 1):
        ex = exact.at(k) if exact is not None else None
        d = vec.at(k)
        rows.append({
            "label": label, "n": n, "scheme": tag, "direction": direction, "level": k,
            "bound": d, "exact": ex, "ratio": d / ex if ex is not None else None,
        })
    return rows


def _analyze(config: RunConfig) -> list:
    rows = []
    for n, model in _models(config):
        if config.scheme == "metric":
            vec = metric_bound(model, config.direction)
        else:
            vec = linear_bound(model, config.scheme, config.direction)
        exact = exact_hitting_time(model) if model.is_exact else None
        part = _bound_rows(model.label, n, vec.tag, config.direction, vec, exact)
        _check_sandwich(model.label, n, part)
        rows += part
    return rows


def _compare_one(n, model: LevelModel) -> list:
    table = compare_schemes(model)
    rows = []
    for (tag, direction), vec in table.bounds.items():
        rows += _bound_rows(model.label, n, tag, direction, vec, table.exact)
    bad = table.sandwich_violations(SANDWICH_RTOL)
    if bad:
        tag, direction, k = bad[0]
        raise NumericError(f"{model.label}: {direction} {tag} bound breaks the sandwich at level {k}")
    return rows


def _compare(config: RunConfig) -> list:
    models = _models(config)
    with ThreadPoolExecutor(min(_threads(), len(models))) as pool:
        parts = list(pool.map(lambda item: _compare_one(*item), models))
    return [row for part in parts for row in part]


def _shortcuts(config: RunConfig) -> list:
    rows = []
    for n, model in _models(config):
        report = detect_shortcuts(model, config.eps)
        rows += [
            {"label": model.label, "n": n, "k": k, "l": l, "ratio": ratio, "epsilon": report.epsilon}
            for k, l, ratio in report.pairs
        ]
    return rows


def _simulate(config: RunConfig) -> list:
    rows = []
    for n in config.n:
        model = GENERATORS[config.problem](n)
        problem = Problem(config.problem, n)
        start = model.K if config.start_level is None else config.start_level
        sim = monte_carlo(problem, start, config.runs, config.seed, workers=_threads())
        exact = exact_hitting_time(model).at(start) if start > 0 else 0.0
        se = sim.stderr
        z = (sim.mean - exact) / se if se > 0 else (0.0 if sim.mean == exact else math.inf)
        rows.append({
            "label": model.label, "n": n, "start_level": start, "runs": sim.runs, "seed": sim.seed,
            "mean": sim.mean, "stddev": sim.std, "exact": exact, "z_score": z,
        })
    return rows


def _oracle(config: RunConfig) -> list:
    rows = []
    for n in config.n:
        model = GENERATORS[config.problem](n)
        chain = enumerate_chain(Problem(config.problem, n))
        if chain.K != model.K:
            raise NumericError(f"{model.label}: oracle has {chain.K} levels, model has {model.K}")
        for k in range(1, model.K + 1):
            for l in range(k):
                a, b = float(chain.level_q[k, l]), float(model.q[k, l])
                rows.append({"label": model.label, "n": n, "kind": "transition", "level": k,
                             "target": l, "oracle": a, "model": b, "abs_diff": abs(a - b)})
        exact = exact_hitting_time(model)
        for k in range(1, model.K + 1):
            a, b = float(chain.level_hitting[k]), exact.at(k)
            rows.append({"label": model.label, "n": n, "kind": "hitting_time", "level": k,
                         "target": None, "oracle": a, "model": b, "abs_diff": abs(a - b)})
    return rows


HANDLERS = {
    "analyze": _analyze,
    "compare": _compare,
    "shortcuts": _shortcuts,
    "simulate": _simulate,
    "oracle": _oracle,
}


def render(command: str, rows: list, fmt: str) -> str:
    columns = COLUMNS[command]
    if fmt == "json":
        return json.dumps([{c: row[c] for c in columns} for row in rows], indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def run(config: RunConfig, stdout=None) -> int:
    """Execute one configured command; returns the exit status."""
    stdout = stdout if stdout is not None else sys.stdout
    try:
        config.validate()
        text = render(config.command, HANDLERS[config.command](config), config.format)
        if config.out:
            with open(config.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            stdout.write(text)
    except (NumericError, RuntimeError, np.linalg.LinAlgError) as exc:
        _report("numeric", exc)
        return 2
    except (ValueError, OSError) as exc:
        _report("validation", exc)
        return 1
    return 0


def _report(kind: str, exc: Exception) -> None:
    message = " ".join(str(exc).split())
    print(f"ERROR: {kind}: {message}", file=sys.stderr)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        _report("usage", exc)
        return 1
    config = RunConfig(**vars(args))
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
