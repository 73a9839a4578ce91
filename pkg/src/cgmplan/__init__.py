"""Achievability reasoning for pragmatic contextual goal models.

A goal model is an AND/OR refinement tree whose applicability,
required quality and provided quality all depend on the active
contexts.  This package decides whether the root goal is achievable in
a given context set, produces the plan of tasks and delegations that
achieves it, explains failures, sweeps all context sets for
unachievable combinations and benchmarks evaluation cost.

Quick use:

    from cgmplan import fixtures, is_achievable
    model = fixtures.load_mpers()
    outcome, stats = is_achievable(model, {"C5"})
    assert "gpsLock" in outcome.plan
"""

from . import fixtures
from .context import (
    ConstraintAlgebraError,
    MissingMetricError,
    can_fulfill,
    effective_constraints,
    eval_condition,
    merge_constraints,
    provided_value,
    stricter_quality_constraint,
)
from .engine import available_engines, evaluator_for
from .genmodel import GeneratorConfig, SplitMix64, random_model, worst_case_model
from .model import (
    TRUE,
    AchievabilityOutcome,
    And,
    Atom,
    CgmModel,
    Comparison,
    Condition,
    ContextLabel,
    ContextSet,
    Decomposition,
    FailureReason,
    Interpretation,
    InterpretationRow,
    NodeKind,
    Not,
    Or,
    Plan,
    ProvidedQuality,
    ProvidedRow,
    QualityConstraint,
    RefinementNode,
    TraceEntry,
    UndeclaredContextError,
    Violation,
    delegation,
    goal,
    iter_tree,
    task,
    validate_model,
)
from .modelfile import (
    ParseError,
    load_model,
    parse_condition,
    parse_model,
    parse_quality_constraint,
    serialize_model,
    write_model,
)
from .reasoner import (
    EvalStats,
    OracleBoundError,
    applicable_children,
    brute_force_achievable,
    is_achievable,
    plan_union,
)
from .sweep import (
    LinearFit,
    ScalingPoint,
    SweepReport,
    TimingReport,
    VerdictInstabilityError,
    linear_fit,
    measure_achievability,
    scaling_series,
    sweep_contexts,
)

__version__ = "0.1.0"

__all__ = [
    "AchievabilityOutcome",
    "And",
    "Atom",
    "CgmModel",
    "Comparison",
    "Condition",
    "ConstraintAlgebraError",
    "ContextLabel",
    "ContextSet",
    "Decomposition",
    "EvalStats",
    "FailureReason",
    "GeneratorConfig",
    "Interpretation",
    "InterpretationRow",
    "LinearFit",
    "MissingMetricError",
    "NodeKind",
    "Not",
    "Or",
    "OracleBoundError",
    "ParseError",
    "Plan",
    "ProvidedQuality",
    "ProvidedRow",
    "QualityConstraint",
    "RefinementNode",
    "ScalingPoint",
    "SplitMix64",
    "SweepReport",
    "TRUE",
    "TimingReport",
    "TraceEntry",
    "UndeclaredContextError",
    "VerdictInstabilityError",
    "Violation",
    "applicable_children",
    "available_engines",
    "brute_force_achievable",
    "can_fulfill",
    "delegation",
    "effective_constraints",
    "eval_condition",
    "evaluator_for",
    "fixtures",
    "goal",
    "is_achievable",
    "iter_tree",
    "load_model",
    "measure_achievability",
    "merge_constraints",
    "parse_condition",
    "parse_model",
    "parse_quality_constraint",
    "plan_union",
    "provided_value",
    "random_model",
    "scaling_series",
    "serialize_model",
    "stricter_quality_constraint",
    "sweep_contexts",
    "task",
    "validate_model",
    "worst_case_model",
    "write_model",
]
