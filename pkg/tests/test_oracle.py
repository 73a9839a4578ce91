"""The brute-force plan enumerator, and agreement with the fast path.

brute_force_achievable enumerates every plan by exhaustive combination,
so its emptiness is an independent ground truth for is_achievable and
its plan set a ground truth for returned plans.
"""

from __future__ import annotations

from itertools import combinations

import pytest

from cgmplan import (
    GeneratorConfig,
    OracleBoundError,
    brute_force_achievable,
    is_achievable,
    parse_model,
    random_model,
)


def plans(text: str, active: tuple[str, ...] = ()) -> set[frozenset[str]]:
    return set(brute_force_achievable(parse_model(text), active))


OR_OF_TWO = """format_version: 1

goal root or
  interpretation
    when true: timeSeconds < 100
  task a
    provided
      when true: timeSeconds = 10
  task b
    provided
      when true: timeSeconds = 20
"""


def test_or_yields_every_viable_alternative() -> None:
    assert plans(OR_OF_TWO) == {frozenset({"a"}), frozenset({"b"})}


AND_OF_TWO = OR_OF_TWO.replace("goal root or", "goal root and")


def test_and_yields_the_single_combination() -> None:
    assert plans(AND_OF_TWO) == {frozenset({"a", "b"})}


def test_tight_requirement_filters_plans() -> None:
    tightened = OR_OF_TWO.replace("timeSeconds < 100", "timeSeconds < 15")
    assert plans(tightened) == {frozenset({"a"})}
    impossible = OR_OF_TWO.replace("timeSeconds < 100", "timeSeconds < 5")
    assert plans(impossible) == set()


NESTED = """format_version: 1

contexts:
  C: c

goal root and
  interpretation
    when true: timeSeconds < 100
  goal pick or
    task x
      provided
        when true: timeSeconds = 1
    task y when C
      provided
        when true: timeSeconds = 2
  task z
    provided
      when true: timeSeconds = 3
"""


def test_nested_or_multiplies_alternatives() -> None:
    assert plans(NESTED, ("C",)) == {
        frozenset({"x", "z"}),
        frozenset({"y", "z"}),
    }
    # Without C the gated branch disappears.
    assert plans(NESTED, ()) == {frozenset({"x", "z"})}


def test_or_with_no_applicable_child_has_no_plans() -> None:
    text = """format_version: 1

contexts:
  C: c

goal root or
  task t when C
    provided
      when true: timeSeconds = 1
"""
    assert plans(text, ()) == set()
    assert plans(text, ("C",)) == {frozenset({"t"})}


def test_oracle_bound() -> None:
    model = random_model(GeneratorConfig(node_count=25, context_count=0, seed=1))
    with pytest.raises(OracleBoundError):
        brute_force_achievable(model, ())
    # The bound is adjustable for deliberate slow runs.
    brute_force_achievable(model, (), max_nodes=25)


# ---------------------------------------------------------------------------
# Agreement between the oracle and the real evaluator
# ---------------------------------------------------------------------------


def _configs() -> list[GeneratorConfig]:
    out = []
    for seed in range(150):
        out.append(
            GeneratorConfig(
                node_count=1 + (seed * 7) % 12,
                context_count=seed % 4,
                seed=seed,
                or_probability=(seed % 5) / 4,
                pragmatic_probability=(seed % 3) / 2,
                applicability_condition_rate=(seed % 4) / 3,
            )
        )
    return out


@pytest.mark.parametrize("engine", ["python", "compiled"])
def test_verdicts_and_plans_match_oracle(engine: str) -> None:
    for cfg in _configs():
        model = random_model(cfg)
        names = model.context_names
        for r in range(len(names) + 1):
            for combo in combinations(names, r):
                oracle = brute_force_achievable(model, combo)
                out, _ = is_achievable(model, combo, engine=engine)
                assert out.achievable is bool(oracle), (cfg.seed, combo)
                if out.achievable:
                    assert out.plan is not None
                    assert out.plan.leaves in oracle, (cfg.seed, combo)
