"""Seeded random goal models for testing and benchmarking.

Determinism contract: the same GeneratorConfig always produces the
identical model, on any platform and Python version.  That is why the
module carries its own SplitMix64 generator instead of relying on
`random`, whose sequence is not guaranteed across releases.  Draw
order is part of the contract: tree shape first (breadth first), then
per-node attributes in node-number order.

Two flavours:

* `random_model` mixes AND/OR decompositions, context-gated
  applicability, pragmatic interpretations and context-dependent
  provided quality, controlled by the config rates.  All generated
  constraints are upper bounds, so constraint folding can never hit a
  direction conflict.
* `worst_case_model` builds the adversarial input for the evaluator:
  every goal is an AND and every node applicable and satisfiable in
  every context (thresholds in [50, 100), provided values in [0, 50)),
  so one evaluation must visit every node exactly once.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .model import (
    TRUE,
    And,
    Atom,
    CgmModel,
    Comparison,
    Condition,
    ContextLabel,
    Decomposition,
    Interpretation,
    InterpretationRow,
    Not,
    ProvidedRow,
    ProvidedQuality,
    QualityConstraint,
    RefinementNode,
    goal,
    task,
)

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 PRNG (Steele, Lea and Flood's mixing constants).

    next_u64: state += 0x9E3779B97F4A7C15; z = state;
    z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
    z = (z ^ z>>27) * 0x94D049BB133111EB; return z ^ z>>31.
    Floats take the top 53 bits; randint uses a modulo draw (the tiny
    bias is irrelevant here and keeps the sequence trivially portable).
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        return lo + self.next_u64() % (hi - lo + 1)

    def chance(self, p: float) -> bool:
        return self.random() < p

    def choice(self, seq: Sequence):
        return seq[self.next_u64() % len(seq)]


@dataclass(frozen=True)
class GeneratorConfig:
    node_count: int
    context_count: int
    seed: int
    or_probability: float = 0.5
    pragmatic_probability: float = 0.3
    max_children: int = 4
    applicability_condition_rate: float = 0.5
    metrics: tuple[str, ...] = ("timeSeconds",)


def _validate_config(config: GeneratorConfig) -> None:
    if config.node_count < 1:
        raise ValueError("node_count must be at least 1")
    if config.context_count < 0:
        raise ValueError("context_count cannot be negative")
    if config.max_children < 2:
        raise ValueError("max_children must be at least 2")
    for name, value in (
        ("or_probability", config.or_probability),
        ("pragmatic_probability", config.pragmatic_probability),
        ("applicability_condition_rate", config.applicability_condition_rate),
    ):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must be within [0, 1]")
    if not isinstance(config.seed, int):
        raise ValueError("seed must be an integer")
    if not config.metrics:
        raise ValueError("metrics must name at least one metric")


def _tree_shape(rng: SplitMix64, config: GeneratorConfig) -> dict[int, list[int]]:
    """Assign children to numbered nodes 1..node_count, breadth first.

    Each expanded node draws 2..max_children children (capped by the
    remaining budget), so trees stay bushy and shallow.
    """

    children_of: dict[int, list[int]] = {}
    n = config.node_count
    if n == 1:
        return children_of
    queue: deque[int] = deque([1])
    next_num = 2
    remaining = n - 1
    while remaining > 0:
        parent = queue.popleft()
        k = min(remaining, rng.randint(2, config.max_children))
        kids = list(range(next_num, next_num + k))
        next_num += k
        remaining -= k
        children_of[parent] = kids
        queue.extend(kids)
    return children_of


def _literal(rng: SplitMix64, names: Sequence[str]) -> Condition:
    atom = Atom(rng.choice(names))
    return Not(atom) if rng.chance(0.5) else atom


def _condition(rng: SplitMix64, names: Sequence[str]) -> Condition:
    # 60% single literal, else a two-literal conjunction.
    if rng.chance(0.6) or len(names) < 2:
        return _literal(rng, names)
    return And(_literal(rng, names), _literal(rng, names))


def _constraints(
    rng: SplitMix64, metrics: Sequence[str], lo: float, hi: float
) -> tuple[QualityConstraint, ...]:
    picked = [m for m in metrics if rng.chance(0.7)]
    if not picked:
        picked = [rng.choice(metrics)]
    out = []
    for metric in picked:
        cmp = Comparison.LESS_THAN if rng.chance(0.5) else Comparison.LESS_OR_EQUAL
        out.append(QualityConstraint(metric, cmp, rng.uniform(lo, hi)))
    return tuple(out)


def _interpretation(
    rng: SplitMix64,
    names: Sequence[str],
    metrics: Sequence[str],
    lo: float,
    hi: float,
) -> Interpretation:
    rows = [InterpretationRow(TRUE, _constraints(rng, metrics, lo, hi))]
    if names:
        for _ in range(rng.randint(0, 2)):
            rows.append(
                InterpretationRow(_condition(rng, names), _constraints(rng, metrics, lo, hi))
            )
    return Interpretation(tuple(rows))


def _provided(
    rng: SplitMix64, names: Sequence[str], metrics: Sequence[str], lo: float, hi: float
) -> ProvidedQuality:
    rows = []
    for metric in metrics:
        if names and rng.chance(0.3):
            rows.append(ProvidedRow(_condition(rng, names), metric, rng.uniform(lo, hi)))
        rows.append(ProvidedRow(TRUE, metric, rng.uniform(lo, hi)))
    return ProvidedQuality(tuple(rows))


def _build(
    num: int,
    children_of: dict[int, list[int]],
    attrs: dict[int, dict],
) -> RefinementNode:
    spec = attrs[num]
    kids = children_of.get(num)
    if kids is None:
        return task(
            f"n{num}",
            provided=spec["provided"],
            when=spec["when"],
        )
    return goal(
        f"n{num}",
        decomposition=spec["decomposition"],
        children=[_build(k, children_of, attrs) for k in kids],
        when=spec["when"],
        interpretation=spec["interpretation"],
    )


def _generate(config: GeneratorConfig, worst_case: bool) -> CgmModel:
    _validate_config(config)
    rng = SplitMix64(config.seed)
    names = tuple(f"C{i + 1}" for i in range(config.context_count))
    contexts = tuple(ContextLabel(name) for name in names)
    children_of = _tree_shape(rng, config)
    metrics = tuple(config.metrics)

    if worst_case:
        thr_lo, thr_hi = 50.0, 100.0
        val_lo, val_hi = 0.0, 50.0
    else:
        thr_lo, thr_hi = 10.0, 100.0
        val_lo, val_hi = 0.0, 100.0

    attrs: dict[int, dict] = {}
    for num in range(1, config.node_count + 1):
        is_goal = num in children_of
        when: Condition = TRUE
        if not worst_case and names and rng.chance(config.applicability_condition_rate):
            when = _condition(rng, names)
        if is_goal:
            if worst_case:
                decomposition = Decomposition.AND
            else:
                decomposition = (
                    Decomposition.OR if rng.chance(config.or_probability) else Decomposition.AND
                )
            interpretation = None
            if metrics and rng.chance(config.pragmatic_probability):
                interpretation = _interpretation(rng, names, metrics, thr_lo, thr_hi)
            attrs[num] = {
                "when": when,
                "decomposition": decomposition,
                "interpretation": interpretation,
            }
        else:
            attrs[num] = {
                "when": when,
                "provided": _provided(rng, names, metrics, val_lo, val_hi),
            }

    root = _build(1, children_of, attrs)
    return CgmModel(contexts=contexts, root=root)


def random_model(config: GeneratorConfig) -> CgmModel:
    """A valid model with the configured mix of modelling features."""
    return _generate(config, worst_case=False)


def worst_case_model(config: GeneratorConfig) -> CgmModel:
    """All-AND, always-applicable, always-achievable stress model.

    Achievable in every context set by construction: every provided
    value lies strictly below every threshold, so one evaluation has
    no failure and no OR short-circuit, and must visit all nodes.
    """

    return _generate(config, worst_case=True)
