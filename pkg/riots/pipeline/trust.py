"""
Supplier trust.

Trust is the share of accurately reported functions, |S ∩ A| / |S ∪ A|, between
what a supplier states its product does (S) and what it actually does (A). A
component assessed secure with probability 1 - r under specifications trusted
at t is secure with probability (1 - r) * t, so its effective risk is
1 - (1 - r) * t.
"""
import logging
from typing import Dict, FrozenSet, Iterable, Union

from pydantic import BaseModel, ConfigDict

from riots.core.errors import EmptyUniverse, OutOfRange
from riots.model.graph import EventKind, SystemGraph, basic_events

logger = logging.getLogger(__name__)

RiskAssignment = Dict[str, float]


class FunctionSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    functions: FrozenSet[str] = frozenset()

    @classmethod
    def of(cls, functions: Iterable[str]) -> "FunctionSet":
        return cls(functions=frozenset(functions))


def _as_set(value: Union[FunctionSet, Iterable[str]]) -> FrozenSet[str]:
    if isinstance(value, FunctionSet):
        return value.functions
    return frozenset(value)


def jaccard_trust(specified: Union[FunctionSet, Iterable[str]], actual: Union[FunctionSet, Iterable[str]]) -> float:
    s, a = _as_set(specified), _as_set(actual)
    union = s | a
    if not union:
        raise EmptyUniverse("Trust is undefined when both the specified and actual function sets are empty")
    return len(s & a) / len(union)


def apply_trust(direct_risk: float, trust: float) -> float:
    for name, value in (("direct_risk", direct_risk), ("trust", trust)):
        if not 0.0 <= value <= 1.0:
            raise OutOfRange(f"{name} must lie in [0, 1], got {value}")
    if trust == 1.0:
        return direct_risk
    # 1 - (1 - r) can round below r in binary64
    return max(direct_risk, 1.0 - (1.0 - direct_risk) * trust)


def effective_risk_assignment(graph: SystemGraph) -> RiskAssignment:
    """Event probabilities with supplier trust folded into each supplied component."""
    assignment: RiskAssignment = {}
    adjusted = 0
    for event in basic_events(graph):
        probability = event.probability
        if event.kind is EventKind.COMPONENT_DIRECT:
            supplier = graph.suppliers[graph.components[event.event_id].supplier]
            if supplier.trust is not None:
                probability = apply_trust(probability, supplier.trust)
                adjusted += probability != event.probability
        assignment[event.event_id] = probability
    if adjusted:
        logger.info(f"🔄 Trust raised the risk of {adjusted} component(s)")
    return assignment
