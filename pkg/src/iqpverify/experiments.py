"""Reproducible numerical experiments with CSV reports."""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .bitlin import BitVector
from .errors import ParseError, ValidationError
from .evaluators import all_correlations, correlation_clifford, output_distribution
from .keygen import random_2local, random_program

__all__ = [
    "ExperimentReport",
    "parse_report",
    "parallel_map",
    "exp_fig1a",
    "exp_fig1b",
    "exp_anticoncentration",
    "exp_parseval",
]

THREADS_ENV = "IQP_VERIFY_THREADS"

Cell = int | float | str


@dataclass(frozen=True)
class ExperimentReport:
    """Tabular experiment output plus the parameters that produced it."""

    experiment: str
    params: dict[str, Cell]
    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]
    wall_clock: float

    def to_csv(self) -> str:
        lines = [f"# experiment={self.experiment}"]
        for k in sorted(self.params):
            lines.append(f"# {k}={_format_cell(self.params[k])}")
        lines.append(f"# wall_clock={_format_cell(self.wall_clock)}")
        lines.append(",".join(self.columns))
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValidationError("row width differs from column count")
            lines.append(",".join(_format_cell(c) for c in row))
        return "\n".join(lines) + "\n"


def _format_cell(value: Cell) -> str:
    if isinstance(value, bool):
        raise ValidationError("boolean cells are not supported")
    if isinstance(value, (int, float)):
        return repr(value)
    if "," in value or "\n" in value or "#" in value:
        raise ValidationError(f"cell {value!r} would corrupt the table")
    return value


def _sniff_cell(text: str) -> Cell:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_report(text: str) -> ExperimentReport:
    """Inverse of :meth:`ExperimentReport.to_csv` (round-trips exactly)."""
    experiment: str | None = None
    wall_clock: float | None = None
    params: dict[str, Cell] = {}
    columns: tuple[str, ...] | None = None
    rows: list[tuple[Cell, ...]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, sep, value = body.partition("=")
            if not sep:
                raise ParseError(f"malformed parameter line {body!r}", line=lineno)
            key = key.strip()
            if key == "experiment":
                experiment = value
            elif key == "wall_clock":
                wall_clock = float(value)
            else:
                params[key] = _sniff_cell(value)
            continue
        cells = line.split(",")
        if columns is None:
            columns = tuple(cells)
            continue
        if len(cells) != len(columns):
            raise ParseError(
                f"expected {len(columns)} cells, found {len(cells)}", line=lineno
            )
        rows.append(tuple(_sniff_cell(c) for c in cells))
    if experiment is None:
        raise ParseError("missing '# experiment=' line")
    if wall_clock is None:
        raise ParseError("missing '# wall_clock=' line")
    if columns is None:
        raise ParseError("missing header row")
    return ExperimentReport(experiment, params, columns, tuple(rows), wall_clock)


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Ordered map over items, threaded when IQP_VERIFY_THREADS allows."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            threads = int(raw)
        except ValueError:
            raise ValidationError(f"{THREADS_ENV}={raw!r} is not an integer")
    else:
        threads = min(8, os.cpu_count() or 1)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _random_nonzero_secret(n: int, rng: np.random.Generator) -> BitVector:
    return BitVector(n, int(rng.integers(1, 1 << n, dtype=np.uint64)))


def _quantized_one(seed: int, stream, n: int):
    """One draw from the pi/8 ensemble: g level, or None for exact zero."""
    rng = np.random.default_rng([seed, *np.atleast_1d(stream).tolist()])
    program = random_program(n, n, "pi8", rng)
    secret = _random_nonzero_secret(n, rng)
    result = correlation_clifford(program, secret)
    return result.g


def exp_fig1b(count: int, n: int, seed: int = 0) -> ExperimentReport:
    """Histogram of exact correlation levels in the random pi/8 ensemble.

    Draws ``count`` programs with n uniform nonzero rows at angle pi/8 and a
    uniform nonzero secret each; every correlation is +/- 2^(-g/2) or exactly
    zero (reported as g = -1 with value 0).
    """
    if count < 1 or n < 1:
        raise ValidationError("count and n must be positive")
    start = time.perf_counter()
    levels = parallel_map(lambda i: _quantized_one(seed, i, n), range(count))
    zero = sum(1 for g in levels if g is None)
    histogram: dict[int, int] = {}
    for g in levels:
        if g is not None:
            histogram[g] = histogram.get(g, 0) + 1
    rows: list[tuple[Cell, ...]] = []
    if zero:
        rows.append((-1, 0.0, zero))
    for g in sorted(histogram):
        rows.append((g, 2.0 ** (-g / 2.0), histogram[g]))
    return ExperimentReport(
        experiment="fig1b",
        params={"count": count, "n": n, "seed": seed},
        columns=("g", "value", "count"),
        rows=tuple(rows),
        wall_clock=time.perf_counter() - start,
    )


def exp_fig1a(
    n_values: Sequence[int], count: int, seed: int = 0
) -> ExperimentReport:
    """Fraction of the pi/8 ensemble at each correlation level, per n."""
    if count < 1 or not n_values or min(n_values) < 1:
        raise ValidationError("need positive count and at least one n")
    start = time.perf_counter()
    rows: list[tuple[Cell, ...]] = []
    for n in n_values:
        levels = parallel_map(
            lambda i, n=n: _quantized_one(seed, (n, i), n), range(count)
        )
        zero = sum(1 for g in levels if g is None)
        histogram: dict[int, int] = {}
        for g in levels:
            if g is not None:
                histogram[g] = histogram.get(g, 0) + 1
        if zero:
            rows.append((n, -1, 0.0, zero / count))
        for g in sorted(histogram):
            rows.append((n, g, 2.0 ** (-g / 2.0), histogram[g] / count))
    return ExperimentReport(
        experiment="fig1a",
        params={
            "count": count,
            "n_values": "[" + " ".join(str(n) for n in n_values) + "]",
            "seed": seed,
        },
        columns=("n", "g", "value", "fraction"),
        rows=tuple(rows),
        wall_clock=time.perf_counter() - start,
    )


_TAIL_GRID = (0.05, 0.1, 0.2, 0.4)


def _anticoncentration_one(seed: int, n: int, index: int, secrets: int) -> list[float]:
    rng = np.random.default_rng([seed, n, index])
    program = random_2local(n, rng)
    correlations = all_correlations(program)
    picks = rng.integers(0, 1 << n, size=secrets)
    return [float(correlations[int(i)]) ** 2 for i in picks]


def exp_anticoncentration(
    n_values: Sequence[int],
    circuits: int,
    secrets_per_circuit: int = 1,
    seed: int = 0,
) -> ExperimentReport:
    """Second-moment and tail statistics of the two-local ensemble.

    For each n, draws random two-local programs, computes squared
    correlations of uniformly random strings, and reports the sample mean
    against the 3/2^n bound plus empirical tails against the Markov bound
    3/(a 2^n) on a fixed grid of thresholds a.
    """
    if circuits < 2 or secrets_per_circuit < 1 or not n_values:
        raise ValidationError("need at least two circuits and one n")
    start = time.perf_counter()
    rows: list[tuple[Cell, ...]] = []
    for n in n_values:
        batches = parallel_map(
            lambda i, n=n: _anticoncentration_one(seed, n, i, secrets_per_circuit),
            range(circuits),
        )
        values = np.array([v for batch in batches for v in batch])
        mean_sq = float(values.mean())
        stderr = float(values.std(ddof=1) / np.sqrt(values.size))
        rows.append((n, "mean_sq", "", mean_sq))
        rows.append((n, "stderr", "", stderr))
        rows.append((n, "bound", "", 3.0 / 2.0**n))
        for a in _TAIL_GRID:
            rows.append((n, "tail_empirical", a, float((values >= a).mean())))
            rows.append((n, "tail_markov", a, min(1.0, 3.0 / (a * 2.0**n))))
    return ExperimentReport(
        experiment="anticoncentration",
        params={
            "circuits": circuits,
            "secrets_per_circuit": secrets_per_circuit,
            "n_values": "[" + " ".join(str(n) for n in n_values) + "]",
            "seed": seed,
        },
        columns=("n", "metric", "a", "value"),
        rows=tuple(rows),
        wall_clock=time.perf_counter() - start,
    )


def exp_parseval(n: int, instances: int, seed: int = 0) -> ExperimentReport:
    """Check sum_x p(x)^2 == mean_s <Z_s>^2 on random programs."""
    if instances < 1 or n < 1:
        raise ValidationError("need positive n and instance count")
    start = time.perf_counter()

    def one(i: int) -> tuple[Cell, ...]:
        rng = np.random.default_rng([seed, i])
        program = random_program(n, 2 * n, "uniform-pi8", rng)
        probs = output_distribution(program).probs
        lhs = float(np.sum(probs**2))
        rhs = float(np.mean(all_correlations(program) ** 2))
        return (i, lhs, rhs, abs(lhs - rhs))

    rows = parallel_map(one, range(instances))
    return ExperimentReport(
        experiment="parseval",
        params={"n": n, "instances": instances, "seed": seed},
        columns=("instance", "collision_sum", "mean_corr_sq", "abs_diff"),
        rows=tuple(rows),
        wall_clock=time.perf_counter() - start,
    )
