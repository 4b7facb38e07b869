# ensemble/routing.py
# Small molecules go to a fallback predictor instead of the ensemble.
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

from core.errors import ContractError, RoutingError
from ensemble.aggregate import PredictionSet, trimmed_middle_mean
from molecules.graph2d import MolGraph

logger = logging.getLogger(__name__)

DEFAULT_MIN_ATOMS = 4
DEFAULT_MIDDLE_K = 10


class Source(str, Enum):
    ENSEMBLE = "ensemble"
    FALLBACK = "fallback"


class FallbackPredictor(Protocol):
    def predict(self, g: MolGraph) -> float | None:
        """Gap in eV, or None when this predictor has nothing for the molecule."""
        ...


class LookupTableFallback:
    """Precomputed values keyed by sample id."""

    def __init__(self, table: dict[str, float]):
        self.table = dict(table)

    def predict(self, g: MolGraph) -> float | None:
        return self.table.get(g.mol_id)


@dataclass(frozen=True)
class RoutingRule:
    fallback: FallbackPredictor
    min_atoms_threshold: int = DEFAULT_MIN_ATOMS

    def __post_init__(self):
        if self.min_atoms_threshold < 1:
            raise ContractError(f"min_atoms_threshold must be >= 1, got {self.min_atoms_threshold}")

    def routes_to_fallback(self, g: MolGraph) -> bool:
        return g.n_atoms < self.min_atoms_threshold


def route_with_source(g: MolGraph, preds: PredictionSet | None, rule: RoutingRule,
                      k: int = DEFAULT_MIDDLE_K) -> tuple[float, Source]:
    if rule.routes_to_fallback(g):
        value = rule.fallback.predict(g)
        if value is None:
            raise RoutingError(g.mol_id, f"{g.n_atoms} atoms routes to the fallback, which has no entry")
        logger.debug("%s: fallback %.4f eV", g.mol_id, value)
        return float(value), Source.FALLBACK
    if preds is None:
        raise RoutingError(g.mol_id, "no member predictions")
    return trimmed_middle_mean(preds.values, k), Source.ENSEMBLE


def route_and_predict(g: MolGraph, preds: PredictionSet | None, rule: RoutingRule, k: int = DEFAULT_MIDDLE_K) -> float:
    """Fallback value below the atom threshold (strictly), trimmed middle mean otherwise."""
    value, _ = route_with_source(g, preds, rule, k)
    return value
