"""Command line interface.

Exit codes: 0 achievable (or command succeeded), 1 unachievable,
2 usage, parse or validation errors.
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict
from typing import NoReturn

import click

from .engine import available_engines, evaluator_for
from .genmodel import GeneratorConfig, random_model, worst_case_model
from .model import AchievabilityOutcome, CgmModel, QualityConstraint, validate_model
from .modelfile import ParseError, load_model, parse_quality_constraint, serialize_model
from .reasoner import EvalStats
from .sweep import linear_fit, scaling_series, sweep_contexts


def _fail(message: str) -> NoReturn:
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _load(path: str) -> CgmModel:
    try:
        model = load_model(path)
    except OSError as exc:
        _fail(str(exc))
    except ParseError as exc:
        _fail(f"{path}: {exc}")
    violations = validate_model(model)
    if violations:
        for violation in violations:
            click.echo(f"error: {path}: {violation}", err=True)
        sys.exit(2)
    return model


def _context_names(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _requirements(specs: tuple[str, ...]) -> list[QualityConstraint]:
    out = []
    for spec in specs:
        try:
            out.append(parse_quality_constraint(spec))
        except ParseError as exc:
            _fail(f"bad --require {spec!r}: {exc.message}")
    return out


def _evaluate(model, context_text, requires, node, engine):
    names = _context_names(context_text)
    try:
        ctx = model.context_set(names)
        evaluator = evaluator_for(model, require=_requirements(requires), node=node, engine=engine)
        return evaluator.evaluate(ctx), evaluator.name
    except KeyError:
        _fail(f"unknown node id {node!r}")
    except Exception as exc:  # undeclared contexts, algebra faults
        _fail(str(exc))


def _constraint_json(qc: QualityConstraint) -> dict:
    return {
        "metric": qc.metric,
        "comparison": str(qc.comparison),
        "threshold": qc.threshold,
    }


def _outcome_json(outcome: AchievabilityOutcome, stats: EvalStats, engine: str) -> dict:
    return {
        "achievable": outcome.achievable,
        "plan": sorted(outcome.plan.leaves) if outcome.plan is not None else None,
        "trace": [
            {
                "node": entry.node_id,
                "reason": str(entry.reason),
                "metric": entry.metric,
                "required": _constraint_json(entry.required) if entry.required else None,
                "provided": entry.provided,
                "detail": entry.detail or None,
            }
            for entry in outcome.trace
        ],
        "stats": {
            "nodes_visited": stats.nodes_visited,
            "leaves_checked": stats.leaves_checked,
        },
        "engine": engine,
    }


def _print_outcome(outcome: AchievabilityOutcome, stats, engine, output, show_plan):
    if output == "structured":
        click.echo(json.dumps(_outcome_json(outcome, stats, engine), indent=2))
    elif outcome.achievable:
        click.echo("ACHIEVABLE")
        if show_plan:
            click.echo("plan:")
            for leaf in outcome.plan.sorted():
                click.echo(f"  {leaf}")
    else:
        click.echo("UNACHIEVABLE")
        for entry in outcome.trace:
            click.echo(f"  {entry.render()}")
    sys.exit(0 if outcome.achievable else 1)


def _parse_budget(text: str) -> float:
    raw = text.strip().lower()
    try:
        if raw.endswith("ms"):
            value = float(raw[:-2]) / 1000.0
        elif raw.endswith("s"):
            value = float(raw[:-1])
        elif raw.endswith("m"):
            value = float(raw[:-1]) * 60.0
        else:
            value = float(raw)
    except ValueError:
        raise click.BadParameter(f"cannot parse time budget {text!r}")
    if value <= 0:
        raise click.BadParameter("time budget must be positive")
    return value


_ENGINE = click.option(
    "--engine",
    type=click.Choice(["auto", "python", "compiled"]),
    default="auto",
    show_default=True,
    help="Evaluator implementation.",
)
_OUTPUT = click.option(
    "--output",
    type=click.Choice(["text", "structured"]),
    default="text",
    show_default=True,
    help="Human-readable text or JSON.",
)
_CONTEXT = click.option(
    "--context",
    "context_text",
    default="",
    help="Comma-separated active context labels, e.g. 'C5,C10'.",
)
_REQUIRE = click.option(
    "--require",
    "requires",
    multiple=True,
    help="Extra root constraint such as 'timeSeconds<120'; repeatable.",
)
_NODE = click.option("--node", default=None, help="Evaluate only this subtree.")


@click.group()
def main() -> None:
    """Reason about contextual goal models with quality constraints."""


@main.command()
@click.argument("model_path", type=click.Path())
@_CONTEXT
@_REQUIRE
@_NODE
@_ENGINE
@_OUTPUT
def check(model_path, context_text, requires, node, engine, output):
    """Decide achievability; exit 0 if achievable, 1 if not."""
    model = _load(model_path)
    (outcome, stats), engine_name = _evaluate(model, context_text, requires, node, engine)
    _print_outcome(outcome, stats, engine_name, output, show_plan=False)


@main.command()
@click.argument("model_path", type=click.Path())
@_CONTEXT
@_REQUIRE
@_NODE
@_ENGINE
@_OUTPUT
def plan(model_path, context_text, requires, node, engine, output):
    """Like check, but print the chosen tasks and delegations."""
    model = _load(model_path)
    (outcome, stats), engine_name = _evaluate(model, context_text, requires, node, engine)
    _print_outcome(outcome, stats, engine_name, output, show_plan=True)


@main.command()
@click.argument("model_path", type=click.Path())
@click.option("--budget", default="10s", show_default=True, help="Time budget, e.g. 10s, 500ms, 2m.")
@_REQUIRE
@_NODE
@_ENGINE
@_OUTPUT
@click.option("--jobs", default=1, show_default=True, help="Worker threads.")
def sweep(model_path, budget, requires, node, engine, output, jobs):
    """Evaluate every context set and report the unachievable ones."""
    model = _load(model_path)
    budget_seconds = _parse_budget(budget)
    try:
        report = sweep_contexts(
            model,
            budget_seconds,
            require=_requirements(requires),
            engine=engine,
            jobs=jobs,
            node=node,
        )
    except KeyError:
        _fail(f"unknown node id {node!r}")
    except Exception as exc:
        _fail(str(exc))
    if output == "structured":
        click.echo(
            json.dumps(
                {
                    "total_sets": report.total_sets,
                    "evaluated_sets": report.evaluated_sets,
                    "coverage": report.coverage,
                    "elapsed_seconds": report.elapsed_seconds,
                    "engine": report.engine,
                    "unachievable_sets": [list(s) for s in report.unachievable_sets],
                },
                indent=2,
            )
        )
    else:
        click.echo(
            f"evaluated {report.evaluated_sets} of {report.total_sets} context sets "
            f"({report.coverage:.1%}) in {report.elapsed_seconds:.3f} s [{report.engine}]"
        )
        click.echo(f"unachievable: {len(report.unachievable_sets)} sets")
        for names in report.unachievable_sets:
            click.echo("  " + (", ".join(names) if names else "(no contexts)"))
    sys.exit(0)


@main.command()
@click.option("--nodes", required=True, type=int, help="Exact node count.")
@click.option("--contexts", required=True, type=int, help="Number of context labels.")
@click.option("--seed", required=True, type=int)
@click.option("--or-probability", default=0.5, show_default=True)
@click.option("--pragmatic-probability", default=0.3, show_default=True)
@click.option("--max-children", default=4, show_default=True)
@click.option("--applicability-rate", default=0.5, show_default=True)
@click.option("--metric", "metrics", multiple=True, help="Metric name; repeatable. Default timeSeconds.")
@click.option("--worst-case", is_flag=True, help="All-AND always-achievable stress model.")
def gen(nodes, contexts, seed, or_probability, pragmatic_probability, max_children, applicability_rate, metrics, worst_case):
    """Generate a seeded random model and print it."""
    config = GeneratorConfig(
        node_count=nodes,
        context_count=contexts,
        seed=seed,
        or_probability=or_probability,
        pragmatic_probability=pragmatic_probability,
        max_children=max_children,
        applicability_condition_rate=applicability_rate,
        metrics=tuple(metrics) if metrics else ("timeSeconds",),
    )
    try:
        model = worst_case_model(config) if worst_case else random_model(config)
    except ValueError as exc:
        _fail(str(exc))
    click.echo(serialize_model(model), nl=False)


@main.command()
@click.option("--nodes-from", default=1000, show_default=True, type=int)
@click.option("--nodes-to", default=10000, show_default=True, type=int)
@click.option("--step", default=1000, show_default=True, type=int)
@click.option("--contexts", default=20, show_default=True, type=int)
@click.option("--runs", default=100, show_default=True, type=int, help="Timed runs per model.")
@click.option("--warmup", default=5, show_default=True, type=int)
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--worst-case", is_flag=True, help="Bench the all-AND stress models.")
@click.option("--models-per-size", default=1, show_default=True, type=int)
@click.option(
    "--engine",
    type=click.Choice(["auto", "python", "compiled", "both"]),
    default="auto",
    show_default=True,
)
@_OUTPUT
def bench(nodes_from, nodes_to, step, contexts, runs, warmup, seed, worst_case, models_per_size, engine, output):
    """Time evaluations across model sizes; prints one row per size."""
    if nodes_from < 1 or nodes_to < nodes_from or step < 1:
        _fail("need 1 <= nodes-from <= nodes-to and step >= 1")
    sizes = list(range(nodes_from, nodes_to + 1, step))
    engines = ["python", "compiled"] if engine == "both" else [engine]
    if "compiled" in engines and "compiled" not in available_engines():
        _fail("compiled engine is not available in this install")
    try:
        series = {
            name: scaling_series(
                sizes,
                context_count=contexts,
                seed=seed,
                runs=runs,
                warmup=warmup,
                engine=name,
                worst_case=worst_case,
                models_per_size=models_per_size,
            )
            for name in engines
        }
    except ValueError as exc:
        _fail(str(exc))

    if output == "structured":
        click.echo(
            json.dumps(
                {
                    name: [asdict(point) for point in points]
                    for name, points in series.items()
                },
                indent=2,
            )
        )
        return
    if engine == "both":
        click.echo("# nodes\tpython_mean_ns\tcompiled_mean_ns\tspeedup")
        py_points, c_points = series["python"], series["compiled"]
        for py, cc in zip(py_points, c_points):
            ratio = py.mean_ns / cc.mean_ns if cc.mean_ns else float("inf")
            click.echo(f"{py.node_count}\t{py.mean_ns:.0f}\t{cc.mean_ns:.0f}\t{ratio:.1f}")
    else:
        points = series[engines[0]]
        click.echo("# nodes\tmean_ns\tmin_ns\tmax_ns")
        for point in points:
            click.echo(
                f"{point.node_count}\t{point.mean_ns:.0f}\t{point.min_ns}\t{point.max_ns}"
            )
        if len(points) >= 2:
            fit = linear_fit(
                [p.node_count for p in points], [p.mean_ns for p in points]
            )
            click.echo(
                f"# linear fit: {fit.slope:.1f} ns/node + {fit.intercept:.0f} ns, "
                f"r_squared={fit.r_squared:.4f}"
            )


if __name__ == "__main__":
    main()
