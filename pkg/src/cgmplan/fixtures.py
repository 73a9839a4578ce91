"""Bundled example models."""

from __future__ import annotations

from importlib.resources import files

from .model import CgmModel
from .modelfile import parse_model


def mpers_text() -> str:
    """Source text of the bundled emergency-response model."""
    return files("cgmplan").joinpath("data/mpers.cgm").read_text(encoding="utf-8")


def load_mpers() -> CgmModel:
    """The mobile personal emergency response model, 18 nodes.

    Small enough for the brute-force oracle, rich enough to exercise
    every modelling feature: AND/OR mixes, context-gated tasks, one
    pragmatic goal with four interpretation rows, context-dependent
    provided quality and a delegation.
    """
    return parse_model(mpers_text())
