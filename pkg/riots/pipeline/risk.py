"""
System risk and component importance.

Two evaluators of R(r):
  * mincut: 1 - prod_a (1 - prod_{y in a} r_y) over the minimal cutsets, an upper
    bound of the exact value for independent events;
  * exact: Shannon decomposition of the failure expression over the events in
    sorted order, memoised on (level, residual expression).

Birnbaum Importance is R(r_i = 1) - R(r_i = 0). Improvement Potential is reported
as the non-negative reduction R(r) - R(r_i = floor).
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from riots.core.config import settings
from riots.core.errors import FloorAboveCurrent, MissingEventProbability, TooLarge, UnknownEvent
from riots.model.graph import GateType
from riots.pipeline.cutsets import CutSetCollection, FailureExpr, Leaf, Node

logger = logging.getLogger(__name__)

RiskAssignment = Dict[str, float]
Backend = Literal["auto", "exact", "mincut"]

UNDERFLOW_GUARD = 1e-300


def stable_product(values: Iterable[float]) -> float:
    """Product in binary64, switching to log-space when a factor could underflow."""
    values = list(values)
    if not values:
        return 1.0
    if any(v == 0.0 for v in values):
        return 0.0
    if min(values) < UNDERFLOW_GUARD:
        return math.exp(math.fsum(math.log(v) for v in values))
    return math.prod(values)


def _require(r: Mapping[str, float], events: Iterable[str]) -> None:
    missing = [e for e in events if e not in r]
    if missing:
        raise MissingEventProbability(missing)


# --- 1. SYSTEM RISK ---

def cut_probability(cut: Iterable[str], r: Mapping[str, float]) -> float:
    return stable_product(r[e] for e in sorted(cut))


def system_risk_mincut(cuts: CutSetCollection, r: Mapping[str, float]) -> float:
    _require(r, sorted(set().union(*cuts.cutsets)) if cuts.cutsets else [])
    survive = stable_product(1.0 - cut_probability(cut, r) for cut in cuts.cutsets)
    return 1.0 - survive


_Residual = Union[bool, Tuple]


def _to_residual(node: Node, level_of: Mapping[str, int]) -> _Residual:
    if isinstance(node, Leaf):
        return ("v", level_of[node.event_id])
    return (node.op.value, tuple(_to_residual(c, level_of) for c in node.children))


def _restrict(node: _Residual, level: int, value: bool) -> _Residual:
    if node is True or node is False:
        return node
    tag, payload = node
    if tag == "v":
        return value if payload == level else node
    is_and = tag == GateType.AND.value
    out = []
    changed = False
    for child in payload:
        reduced = _restrict(child, level, value)
        if reduced is not child:
            changed = True
        if reduced is True or reduced is False:
            if reduced is not is_and:
                # AND with a false child, OR with a true child
                return reduced
            continue
        out.append(reduced)
    if not changed:
        return node
    if not out:
        return is_and
    if len(out) == 1:
        return out[0]
    return (tag, tuple(out))


def _event_order(expr: FailureExpr) -> List[str]:
    return sorted(expr.events)


def system_risk_exact(expr: FailureExpr, r: Mapping[str, float], exact_limit: Optional[int] = None) -> float:
    """Exact top-event probability by Shannon decomposition over sorted event order."""
    order = _event_order(expr)
    limit = exact_limit or settings.EXACT_LIMIT
    if len(order) > limit:
        raise TooLarge(len(order), limit)
    _require(r, order)

    n = len(order)
    probs = [float(r[e]) for e in order]
    level_of = {e: i for i, e in enumerate(order)}
    memo: Dict[Tuple[int, _Residual], float] = {}

    def prob(level: int, node: _Residual) -> float:
        if level == n:
            return 1.0 if node is True else 0.0
        key = (level, node)
        cached = memo.get(key)
        if cached is not None:
            return cached
        p = probs[level]
        v1 = prob(level + 1, _restrict(node, level, True))
        v0 = prob(level + 1, _restrict(node, level, False))
        value = p * v1 + (1.0 - p) * v0
        memo[key] = value
        return value

    return prob(0, _to_residual(expr.top, level_of))


def truth_table(expr: FailureExpr, order: Sequence[str]) -> np.ndarray:
    """
    Failure indicator over all 2^n states. State index bit (n-1-k) holds event
    order[k], so order[0] is the most significant bit.
    """
    n = len(order)
    states = np.arange(1 << n, dtype=np.int64)
    columns = {e: ((states >> (n - 1 - k)) & 1).astype(bool) for k, e in enumerate(order)}
    memo: Dict[int, np.ndarray] = {}

    def ev(node: Node) -> np.ndarray:
        if isinstance(node, Leaf):
            return columns[node.event_id]
        key = id(node)
        if key not in memo:
            parts = [ev(c) for c in node.children]
            reducer = np.logical_and if node.op is GateType.AND else np.logical_or
            memo[key] = reducer.reduce(parts)
        return memo[key]

    return ev(expr.top)


def system_risk_enumerated(expr: FailureExpr, r: Mapping[str, float], exact_limit: Optional[int] = None) -> float:
    """
    Exact probability by full enumeration. The truth table is folded one event at
    a time with the same arithmetic as the Shannon backend, so both agree bit for bit.
    """
    order = _event_order(expr)
    limit = exact_limit or settings.EXACT_LIMIT
    if len(order) > limit:
        raise TooLarge(len(order), limit)
    _require(r, order)

    values = truth_table(expr, order).astype(np.float64)
    for k in range(len(order) - 1, -1, -1):
        p = float(r[order[k]])
        values = p * values[1::2] + (1.0 - p) * values[0::2]
    return float(values[0])


# --- 2. EVALUATORS ---

class MincutEvaluator:
    backend = "mincut"

    def __init__(self, cuts: CutSetCollection):
        self.cuts = cuts
        self.events = sorted(cuts.events)

    def __call__(self, r: Mapping[str, float]) -> float:
        return system_risk_mincut(self.cuts, r)


class ExactEvaluator:
    backend = "exact"

    def __init__(self, expr: FailureExpr, exact_limit: Optional[int] = None):
        self.expr = expr
        self.events = sorted(expr.events)
        self.exact_limit = exact_limit or settings.EXACT_LIMIT
        if len(self.events) > self.exact_limit:
            raise TooLarge(len(self.events), self.exact_limit)

    def __call__(self, r: Mapping[str, float]) -> float:
        return system_risk_exact(self.expr, r, self.exact_limit)


Evaluator = Union[MincutEvaluator, ExactEvaluator, Callable[[Mapping[str, float]], float]]


def make_evaluator(
    expr: FailureExpr,
    cuts: CutSetCollection,
    backend: Backend = "auto",
    exact_limit: Optional[int] = None,
) -> Union[MincutEvaluator, ExactEvaluator]:
    limit = exact_limit or settings.EXACT_LIMIT
    if backend == "exact":
        return ExactEvaluator(expr, limit)
    if backend == "mincut":
        return MincutEvaluator(cuts)
    if len(expr.events) <= limit:
        return ExactEvaluator(expr, limit)
    logger.info(f"🔄 {len(expr.events)} events exceed exact limit {limit}; using the mincut backend")
    return MincutEvaluator(cuts)


# --- 3. IMPORTANCE ---

def _with(r: Mapping[str, float], event_id: str, value: float) -> RiskAssignment:
    updated = dict(r)
    updated[event_id] = value
    return updated


def birnbaum(evaluator: Evaluator, r: Mapping[str, float], i: str) -> float:
    if i not in r:
        raise UnknownEvent(f"No probability assigned to event '{i}'")
    return evaluator(_with(r, i, 1.0)) - evaluator(_with(r, i, 0.0))


def improvement_potential(evaluator: Evaluator, r: Mapping[str, float], i: str, floor: float = 0.0) -> float:
    if i not in r:
        raise UnknownEvent(f"No probability assigned to event '{i}'")
    if not 0.0 <= floor <= r[i]:
        raise FloorAboveCurrent(f"Floor {floor} for '{i}' must lie in [0, {r[i]}]")
    if floor == r[i]:
        return 0.0
    return evaluator(r) - evaluator(_with(r, i, floor))


class ImportanceRow(BaseModel):
    event_id: str
    kind: str
    risk: float
    bi: float
    ip: float
    bi_rank: int
    ip_rank: int


class ImportanceReport(BaseModel):
    system_risk: float
    backend: Literal["exact", "mincut"]
    lower_bound: bool = Field(False, description="Truncated cutsets fed the mincut backend")
    floor: float = 0.0
    rows: List[ImportanceRow] = Field(default_factory=list)

    def ranking(self, measure: Literal["bi", "ip"]) -> List[str]:
        key = f"{measure}_rank"
        return [row.event_id for row in sorted(self.rows, key=lambda row: getattr(row, key))]

    def row(self, event_id: str) -> ImportanceRow:
        for row in self.rows:
            if row.event_id == event_id:
                return row
        raise UnknownEvent(f"Event '{event_id}' is not in the report")


def _ranks(values: Mapping[str, float]) -> Dict[str, int]:
    ordered = sorted(values, key=lambda e: (-values[e], e))
    return {e: pos for pos, e in enumerate(ordered, start=1)}


def importance_report(
    expr: FailureExpr,
    cuts: CutSetCollection,
    r: Mapping[str, float],
    floor: float = 0.0,
    backend: Backend = "auto",
    exact_limit: Optional[int] = None,
    workers: Optional[int] = None,
) -> ImportanceReport:
    events = sorted(expr.events)
    _require(r, events)
    extras = sorted(set(r) - set(events))
    if extras:
        raise UnknownEvent(f"Probabilities given for events outside the expression: {', '.join(extras)}")

    evaluator = make_evaluator(expr, cuts, backend, exact_limit)
    system_risk = evaluator(r)

    def measure(event_id: str) -> Tuple[float, float]:
        bi = birnbaum(evaluator, r, event_id)
        ip = improvement_potential(evaluator, r, event_id, min(floor, r[event_id]))
        return bi, ip

    workers = workers or settings.WORKERS
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            measured = dict(zip(events, pool.map(measure, events)))
    else:
        measured = {e: measure(e) for e in events}

    bi_rank = _ranks({e: measured[e][0] for e in events})
    ip_rank = _ranks({e: measured[e][1] for e in events})
    rows = [
        ImportanceRow(
            event_id=e,
            kind=expr.events[e].kind.value,
            risk=r[e],
            bi=measured[e][0],
            ip=measured[e][1],
            bi_rank=bi_rank[e],
            ip_rank=ip_rank[e],
        )
        for e in events
    ]
    lower_bound = evaluator.backend == "mincut" and cuts.truncated
    logger.info(f"✅ Importance for {len(rows)} event(s) on the {evaluator.backend} backend, R = {system_risk:.6g}")
    return ImportanceReport(
        system_risk=system_risk, backend=evaluator.backend,
        lower_bound=lower_bound, floor=floor, rows=rows,
    )
