"""
Failure logic and minimal cutsets.

compile_failure_logic turns a flat system graph into an AND/OR expression over
basic events:

    fail(c) = OR( direct(c), supplier(c), owner(supplier(c)), gate_c(fail(d) for d in deps(c)) )

Shared suppliers and owners appear as repeated leaves of the same event, which is
how common-cause failure enters the analysis. minimal_cutsets expands the
expression top-down (MOCUS) and removes supersets by absorption.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple, Union

from riots.core.config import settings
from riots.core.errors import Exploded, NotFlat, NotValidated, UnknownEvent
from riots.model.graph import BasicEvent, GateType, SystemGraph, basic_events

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Leaf:
    event_id: str


@dataclass(frozen=True, eq=False)
class Gate:
    op: GateType
    children: Tuple["Node", ...]


Node = Union[Leaf, Gate]


def make_gate(op: GateType, children: Iterable[Node]) -> Node:
    """Builds a gate, merging same-op children and collapsing single-child gates."""
    flat: List[Node] = []
    for child in children:
        if isinstance(child, Gate) and child.op is op:
            flat.extend(child.children)
        else:
            flat.append(child)
    if not flat:
        raise ValueError("a gate needs at least one child")
    if len(flat) == 1:
        return flat[0]
    return Gate(op, tuple(flat))


@dataclass(frozen=True)
class FailureExpr:
    top: Node
    events: Mapping[str, BasicEvent]

    def evaluate(self, true_events: Iterable[str]) -> bool:
        state = set(true_events)
        memo: Dict[int, bool] = {}

        def ev(node: Node) -> bool:
            if isinstance(node, Leaf):
                return node.event_id in state
            key = id(node)
            if key not in memo:
                if node.op is GateType.AND:
                    memo[key] = all(ev(c) for c in node.children)
                else:
                    memo[key] = any(ev(c) for c in node.children)
            return memo[key]

        return ev(self.top)

    def referenced_events(self) -> List[str]:
        found: Set[str] = set()
        seen: Set[int] = set()
        stack: List[Node] = [self.top]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                found.add(node.event_id)
            elif id(node) not in seen:
                seen.add(id(node))
                stack.extend(node.children)
        return sorted(found)

    def to_dict(self) -> dict:
        def walk(node: Node):
            if isinstance(node, Leaf):
                return node.event_id
            return {node.op.value: [walk(c) for c in node.children]}
        return walk(self.top)


@dataclass(frozen=True)
class CutSetCollection:
    cutsets: Tuple[FrozenSet[str], ...]
    events: Mapping[str, BasicEvent]
    truncated: bool = False
    max_order: Optional[int] = None

    def __len__(self) -> int:
        return len(self.cutsets)

    def __iter__(self):
        return iter(self.cutsets)

    def as_sorted_lists(self) -> List[List[str]]:
        return [sorted(c) for c in self.cutsets]

    def singletons(self) -> List[str]:
        return sorted(next(iter(c)) for c in self.cutsets if len(c) == 1)


# --- 1. COMPILE ---

def compile_failure_logic(graph: SystemGraph) -> FailureExpr:
    if not graph.validated:
        raise NotValidated("Graph was not produced by build_graph; validate it first")
    if not graph.is_flat:
        raise NotFlat("Failure logic needs a flat graph; call flatten first")

    fail: Dict[str, Node] = {}
    for cid in graph.topological_order():
        component = graph.components[cid]
        supplier = graph.suppliers[component.supplier]
        terms: List[Node] = [Leaf(cid), Leaf(supplier.id)]
        if supplier.owner:
            terms.append(Leaf(supplier.owner))
        if component.depends_on:
            terms.append(make_gate(component.gate, [fail[d] for d in component.depends_on]))
        fail[cid] = make_gate(GateType.OR, terms)

    events = {e.event_id: e for e in basic_events(graph)}
    return FailureExpr(top=fail[graph.root], events=events)


def is_cut(expr: FailureExpr, events: Iterable[str]) -> bool:
    chosen = set(events)
    unknown = sorted(chosen - set(expr.events))
    if unknown:
        raise UnknownEvent(f"Unknown events: {', '.join(unknown)}")
    return expr.evaluate(chosen)


# --- 2. MOCUS ---

class _GateTable:
    """Numbers distinct gate objects so rows can hold them as ints."""

    def __init__(self, top: Node):
        self.gates: List[Gate] = []
        self._index: Dict[int, int] = {}
        self.item(top)

    def item(self, node: Node) -> Union[str, int]:
        if isinstance(node, Leaf):
            return node.event_id
        key = id(node)
        if key not in self._index:
            self._index[key] = len(self.gates)
            self.gates.append(node)
        return self._index[key]


def _expand(start: Node, table: _GateTable, max_order: Optional[int], cap: int) -> Tuple[Set[FrozenSet[str]], bool]:
    """Top-down expansion of one branch into (possibly non-minimal) cutsets."""
    first = table.item(start)
    if isinstance(first, str):
        return {frozenset([first])}, False

    stack: List[Tuple[FrozenSet[str], FrozenSet[int]]] = [(frozenset(), frozenset([first]))]
    seen = set(stack)
    finished: Set[FrozenSet[str]] = set()
    truncated = False

    while stack:
        events, gates = stack.pop()
        if not gates:
            finished.add(events)
            continue
        gate_idx = min(gates)
        rest = gates - {gate_idx}
        gate = table.gates[gate_idx]
        children = [table.item(c) for c in gate.children]

        if gate.op is GateType.OR:
            candidates = []
            for child in children:
                if isinstance(child, str):
                    candidates.append((events | {child}, rest))
                else:
                    candidates.append((events, rest | {child}))
        else:
            new_events = events | {c for c in children if isinstance(c, str)}
            new_gates = rest | {c for c in children if not isinstance(c, str)}
            candidates = [(new_events, new_gates)]

        for row in candidates:
            if max_order is not None and len(row[0]) > max_order:
                truncated = True
                continue
            if row in seen:
                continue
            seen.add(row)
            stack.append(row)
        if len(stack) + len(finished) > cap:
            raise Exploded(cap)

    return finished, truncated


def absorb(sets: Iterable[FrozenSet[str]]) -> List[FrozenSet[str]]:
    """Drops every set that is a superset of another; canonical order (size, members)."""
    unique = {frozenset(s) for s in sets}
    universe = sorted(set().union(*unique)) if unique else []
    bit = {e: 1 << i for i, e in enumerate(universe)}

    def mask(s: FrozenSet[str]) -> int:
        m = 0
        for e in s:
            m |= bit[e]
        return m

    ordered = sorted(unique, key=lambda s: (len(s), sorted(s)))
    kept: List[Tuple[int, FrozenSet[str]]] = []
    for s in ordered:
        m = mask(s)
        if any(k & ~m == 0 for k, _ in kept):
            continue
        kept.append((m, s))
    return [s for _, s in kept]


def minimal_cutsets(
    expr: FailureExpr,
    max_order: Optional[int] = None,
    max_sets: Optional[int] = None,
    workers: Optional[int] = None,
) -> CutSetCollection:
    if max_order is not None and max_order < 1:
        raise ValueError("max_order must be a positive integer")
    cap = max_sets or settings.MAX_SETS
    workers = workers or settings.WORKERS
    top = expr.top
    if workers > 1 and isinstance(top, Gate) and top.op is GateType.OR:
        # Each OR branch gets its own gate table, so workers share nothing mutable.
        branches = list(top.children)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda b: _expand(b, _GateTable(b), max_order, cap), branches))
        raw: Set[FrozenSet[str]] = set().union(*(r[0] for r in results))
        truncated = any(r[1] for r in results)
    else:
        raw, truncated = _expand(top, _GateTable(top), max_order, cap)

    cuts = absorb(raw)
    if truncated:
        logger.warning(f"⚠️ Cutsets above order {max_order} dropped; risk from this collection is a lower bound")
    logger.info(f"✅ {len(cuts)} minimal cutset(s) from {len(raw)} expanded row(s)")
    return CutSetCollection(cutsets=tuple(cuts), events=expr.events, truncated=truncated, max_order=max_order)
