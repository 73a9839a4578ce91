"""Exhaustive context sweeps and timing measurements.

A sweep walks context sets in canonical order (sets as bitmasks, bit i
= i-th declared context, counting upward from 0) and records which
sets leave the model unachievable.  The time budget is checked before
each evaluation, so at most the final evaluation runs past the
deadline; hitting the budget is a normal partial result, reported as
coverage below 1.0.

Timing uses the monotonic nanosecond clock around the full evaluate
call (including plan materialisation).  Warmup runs are excluded, and
the verdict plus work counters must be identical on every run; any
drift raises VerdictInstabilityError because it would make the numbers
meaningless.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from .genmodel import GeneratorConfig, random_model, worst_case_model
from .model import CgmModel, ContextSet, QualityConstraint, iter_tree
from .reasoner import _normalize_ctx


class VerdictInstabilityError(Exception):
    """Repeated timing runs disagreed on verdict or visited work."""


@dataclass(frozen=True)
class SweepReport:
    total_sets: int
    evaluated_sets: int
    unachievable_sets: tuple[tuple[str, ...], ...]
    coverage: float
    elapsed_seconds: float
    engine: str

    @property
    def complete(self) -> bool:
        return self.evaluated_sets == self.total_sets


@dataclass(frozen=True)
class TimingReport:
    runs: int
    mean_ns: float
    min_ns: int
    max_ns: int
    node_count: int
    context_count: int
    verdict: bool
    nodes_visited: int


@dataclass(frozen=True)
class ScalingPoint:
    node_count: int
    mean_ns: float
    min_ns: int
    max_ns: int


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def sweep_contexts(
    model: CgmModel,
    budget_seconds: float = 10.0,
    require: Mapping[str, QualityConstraint] | Iterable[QualityConstraint] | None = None,
    *,
    engine: str = "auto",
    jobs: int = 1,
    node: str | None = None,
) -> SweepReport:
    """Evaluate every context set, oldest bits first, within a budget.

    With jobs > 1 the mask range splits into contiguous chunks handled
    by worker threads; verdicts are independent, so parallelism cannot
    change results, only which sets fit inside the budget.
    """

    from .engine import evaluator_for

    n_ctx = len(model.contexts)
    if n_ctx > 62:
        raise ValueError("sweeping more than 62 contexts is not enumerable")
    if budget_seconds <= 0:
        raise ValueError("budget_seconds must be positive")
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    total = 1 << n_ctx

    lead = evaluator_for(model, require=require, node=node, engine=engine)
    engine_name = lead.name

    start = time.perf_counter()
    deadline = start + budget_seconds

    def run_range(lo: int, hi: int, evaluator=None) -> tuple[int, list[int]]:
        # Evaluator workspaces are reused between calls, so each worker
        # thread needs its own instance.
        if evaluator is None:
            evaluator = evaluator_for(model, require=require, node=node, engine=engine)
        bad: list[int] = []
        done = 0
        for mask in range(lo, hi):
            if time.perf_counter() >= deadline:
                break
            if not evaluator.verdict_mask(mask):
                bad.append(mask)
            done += 1
        return done, bad

    if jobs == 1 or total < 2 * jobs:
        evaluated, bad_masks = run_range(0, total, lead)
    else:
        chunk = (total + jobs - 1) // jobs
        ranges = [(i * chunk, min((i + 1) * chunk, total)) for i in range(jobs)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda r: run_range(*r), ranges))
        evaluated = sum(done for done, _ in results)
        bad_masks = [m for _, bad in results for m in bad]

    elapsed = time.perf_counter() - start
    names = model.context_names
    sets = tuple(
        tuple(names[i] for i in range(n_ctx) if mask >> i & 1) for mask in bad_masks
    )
    return SweepReport(
        total_sets=total,
        evaluated_sets=evaluated,
        unachievable_sets=sets,
        coverage=evaluated / total,
        elapsed_seconds=elapsed,
        engine=engine_name,
    )


def measure_achievability(
    model: CgmModel,
    ctx: ContextSet | Iterable[str] | None = None,
    runs: int = 100,
    *,
    require: Mapping[str, QualityConstraint] | Iterable[QualityConstraint] | None = None,
    warmup: int = 5,
    engine: str = "auto",
    node: str | None = None,
) -> TimingReport:
    """Time repeated evaluations of one model in one context set.

    Evaluator construction (including compilation) happens before any
    timed run; `warmup` further untimed runs absorb cache effects.
    """

    from .engine import evaluator_for

    if runs < 1:
        raise ValueError("runs must be at least 1")
    if warmup < 0:
        raise ValueError("warmup cannot be negative")
    evaluator = evaluator_for(model, require=require, node=node, engine=engine)
    context = _normalize_ctx(model, ctx)

    reference_outcome, reference_stats = evaluator.evaluate(context)
    for _ in range(warmup):
        evaluator.evaluate(context)

    times: list[int] = []
    for _ in range(runs):
        t0 = time.perf_counter_ns()
        outcome, stats = evaluator.evaluate(context)
        times.append(time.perf_counter_ns() - t0)
        if outcome.achievable != reference_outcome.achievable:
            raise VerdictInstabilityError(
                "verdict changed between timing runs; model evaluation is not stable"
            )
        if stats.nodes_visited != reference_stats.nodes_visited:
            raise VerdictInstabilityError(
                "visited-node count changed between timing runs"
            )

    if node is None:
        node_count = model.size
    else:
        node_count = sum(1 for _ in iter_tree(model.node(node)))
    return TimingReport(
        runs=runs,
        mean_ns=fmean(times),
        min_ns=min(times),
        max_ns=max(times),
        node_count=node_count,
        context_count=len(model.contexts),
        verdict=reference_outcome.achievable,
        nodes_visited=reference_stats.nodes_visited,
    )


def scaling_series(
    node_counts: Sequence[int],
    *,
    context_count: int,
    seed: int,
    runs: int = 100,
    warmup: int = 5,
    engine: str = "auto",
    worst_case: bool = True,
    models_per_size: int = 1,
    metrics: tuple[str, ...] = ("timeSeconds",),
    ctx: ContextSet | Iterable[str] | None = None,
    require: Mapping[str, QualityConstraint] | Iterable[QualityConstraint] | None = None,
) -> list[ScalingPoint]:
    """Measure evaluation time across model sizes.

    Per size, `models_per_size` seeded models (seed, seed+1, ...) are
    measured and their statistics pooled; worst-case models force a
    full traversal so the series exposes the evaluator's scaling.
    """

    if models_per_size < 1:
        raise ValueError("models_per_size must be at least 1")
    points: list[ScalingPoint] = []
    for n in node_counts:
        means: list[float] = []
        mins: list[int] = []
        maxs: list[int] = []
        for j in range(models_per_size):
            config = GeneratorConfig(
                node_count=n,
                context_count=context_count,
                seed=seed + j,
                metrics=metrics,
            )
            model = worst_case_model(config) if worst_case else random_model(config)
            report = measure_achievability(
                model,
                ctx=ctx,
                runs=runs,
                require=require,
                warmup=warmup,
                engine=engine,
            )
            means.append(report.mean_ns)
            mins.append(report.min_ns)
            maxs.append(report.max_ns)
        points.append(
            ScalingPoint(
                node_count=n,
                mean_ns=fmean(means),
                min_ns=min(mins),
                max_ns=max(maxs),
            )
        )
    return points


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    """Least-squares line and coefficient of determination."""

    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("need two sequences of equal length >= 2")
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    if sxx == 0:
        raise ValueError("x values are all identical")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_res = sum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return LinearFit(slope=slope, intercept=intercept, r_squared=r_squared)
