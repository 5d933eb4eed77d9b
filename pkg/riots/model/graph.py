"""
System graph: components with functional-dependency edges, the suppliers that
provide them and the owners that group suppliers. Built graphs are frozen and
safe to share between analyses.
"""
from __future__ import annotations

import logging
import re
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

import networkx as nx
from pydantic import BaseModel, ConfigDict

from riots.core.errors import (
    DanglingReference,
    DuplicateId,
    NotFlat,
    RecursiveDecomposition,
    RiskOutOfRange,
)
from riots.model.schemas import (
    ID_SEPARATOR,
    ComponentRecord,
    GraphDocument,
    OwnerRecord,
    SupplierRecord,
    WhatIfPatch,
    validate_model,
)
from riots.pipeline.guardrails.graph_policy import GraphGuard

logger = logging.getLogger(__name__)

_QUOTED_ID = re.compile(r"'([^']+)'")


class GateType(str, Enum):
    AND = "and"
    OR = "or"


class EventKind(str, Enum):
    COMPONENT_DIRECT = "component_direct"
    SUPPLIER_COMPROMISE = "supplier_compromise"
    OWNER_COMPROMISE = "owner_compromise"


class Component(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    gate: GateType = GateType.OR
    depends_on: Tuple[str, ...] = ()
    supplier: str
    direct_risk: float
    sub_system: Optional["SystemGraph"] = None

    @property
    def is_leaf(self) -> bool:
        return not self.depends_on


class Supplier(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    owner: Optional[str] = None
    direct_risk: float
    trust: Optional[float] = None
    specified: Optional[FrozenSet[str]] = None
    actual: Optional[FrozenSet[str]] = None


class Owner(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    direct_risk: float


class BasicEvent(BaseModel):
    """An atomic compromise with its probability. event_id is the node id."""
    model_config = ConfigDict(frozen=True)

    event_id: str
    kind: EventKind
    probability: float


class SystemGraph(BaseModel):
    model_config = ConfigDict(frozen=True)

    components: Dict[str, Component]
    suppliers: Dict[str, Supplier]
    owners: Dict[str, Owner] = {}
    root: str
    integrator: Optional[str] = None
    integrator_risk: float = 0.0
    warnings: Tuple[str, ...] = ()
    validated: bool = False

    @property
    def is_flat(self) -> bool:
        return all(c.sub_system is None for c in self.components.values())

    def node_ids(self) -> List[str]:
        return sorted([*self.components, *self.suppliers, *self.owners])

    def dependency_graph(self) -> nx.DiGraph:
        """Edge c -> d for every d in c.depends_on."""
        g = nx.DiGraph()
        g.add_nodes_from(sorted(self.components))
        for cid in sorted(self.components):
            for dep in self.components[cid].depends_on:
                g.add_edge(cid, dep)
        return g

    def topological_order(self) -> List[str]:
        """Dependencies before dependents, lexicographic among ready nodes."""
        return list(nx.lexicographical_topological_sort(self.dependency_graph().reverse(copy=True)))

    def unreachable(self) -> List[str]:
        g = self.dependency_graph()
        reached = nx.descendants(g, self.root) | {self.root}
        return sorted(set(self.components) - reached)


Component.model_rebuild()


# --- 1. BUILD ---

def build_graph(document: Union[GraphDocument, Mapping[str, Any]]) -> SystemGraph:
    """Materializes a validated SystemGraph from a parsed document (or a raw mapping)."""
    doc = document if isinstance(document, GraphDocument) else validate_model(GraphDocument, document)
    return _build(doc, chain=())


def _build(doc: GraphDocument, chain: Tuple[Tuple[int, str], ...]) -> SystemGraph:
    if any(key == id(doc) for key, _ in chain):
        raise RecursiveDecomposition([name for _, name in chain] + [doc.root])

    GraphGuard.check_document(doc)

    suppliers = {rec.id: _supplier_from_record(rec) for rec in sorted(doc.suppliers, key=lambda r: r.id)}
    owners = {rec.id: Owner(id=rec.id, direct_risk=rec.risk) for rec in sorted(doc.owners, key=lambda r: r.id)}

    components: Dict[str, Component] = {}
    for rec in sorted(doc.components, key=lambda r: r.id):
        sub_graph = None
        if isinstance(rec.sub_system, str):
            raise DanglingReference(
                f"Sub-system '{rec.sub_system}' of component '{rec.id}' is not loaded; "
                f"read the document with parse_document to resolve file references"
            )
        if rec.sub_system is not None:
            sub_graph = _build(rec.sub_system, chain + ((id(doc), doc.root),))
        components[rec.id] = Component(
            id=rec.id,
            gate=GateType(rec.gate),
            depends_on=tuple(rec.depends_on),
            supplier=rec.supplier,
            direct_risk=rec.risk,
            sub_system=sub_graph,
        )

    graph = SystemGraph(
        components=components,
        suppliers=suppliers,
        owners=owners,
        root=doc.root,
        integrator=doc.integrator,
        integrator_risk=doc.integrator_risk,
    )
    warnings = GraphGuard.check_structure(graph)
    return graph.model_copy(update={"warnings": tuple(warnings), "validated": True})


def _supplier_from_record(rec: SupplierRecord) -> Supplier:
    from riots.pipeline.trust import jaccard_trust

    trust = rec.trust
    specified = actual = None
    if rec.specified is not None:
        specified, actual = frozenset(rec.specified), frozenset(rec.actual or ())
        trust = jaccard_trust(specified, actual)
    return Supplier(
        id=rec.id, owner=rec.owner, direct_risk=rec.risk,
        trust=trust, specified=specified, actual=actual,
    )


def to_document(graph: SystemGraph) -> GraphDocument:
    """Serializes a graph back into the document format."""
    flattened = graph.is_flat and any(ID_SEPARATOR in node_id for node_id in graph.node_ids())
    components = [
        ComponentRecord(
            id=c.id,
            gate=c.gate.value,
            depends_on=list(c.depends_on),
            supplier=c.supplier,
            risk=c.direct_risk,
            sub_system=to_document(c.sub_system) if c.sub_system is not None else None,
        )
        for c in graph.components.values()
    ]
    suppliers = []
    for s in graph.suppliers.values():
        if s.specified is not None:
            suppliers.append(SupplierRecord(
                id=s.id, owner=s.owner, risk=s.direct_risk,
                specified=sorted(s.specified), actual=sorted(s.actual or ()),
            ))
        else:
            suppliers.append(SupplierRecord(id=s.id, owner=s.owner, risk=s.direct_risk, trust=s.trust))
    owners = [OwnerRecord(id=o.id, risk=o.direct_risk) for o in graph.owners.values()]
    return GraphDocument(
        riots_version=1,
        root=graph.root,
        integrator=graph.integrator,
        integrator_risk=graph.integrator_risk,
        flattened=flattened,
        components=components,
        suppliers=suppliers,
        owners=owners,
    )


# --- 2. FLATTEN ---

def _prefixed(warning: str, prefix: str) -> str:
    """Re-homes the quoted node ids of a sub-system warning under its composite."""
    return _QUOTED_ID.sub(lambda m: f"'{prefix}{m.group(1)}'", warning)


def flatten(graph: SystemGraph) -> SystemGraph:
    """
    Replaces every composite component by the contents of its sub-system.
    Inner ids get the '<composite>.' prefix, the inner root takes the composite's
    place in all edges and is supplied by the sub-system's integrator.
    """
    return _flatten(graph, chain=())


def _flatten(graph: SystemGraph, chain: Tuple[Tuple[int, str], ...]) -> SystemGraph:
    if graph.is_flat:
        return graph
    if any(key == id(graph) for key, _ in chain):
        raise RecursiveDecomposition([name for _, name in chain] + [graph.root])

    components = {cid: c for cid, c in graph.components.items() if c.sub_system is None}
    suppliers = dict(graph.suppliers)
    owners = dict(graph.owners)
    warnings = list(graph.warnings)
    local: List[str] = []
    replaced: Dict[str, str] = {}
    superseded: List[str] = []
    orphaned_owners: List[str] = []

    for cid in sorted(graph.components):
        composite = graph.components[cid]
        if composite.sub_system is None:
            continue
        inner = _flatten(composite.sub_system, chain + ((id(graph), graph.root),))
        if inner.integrator is None:
            raise DanglingReference(f"Sub-system of '{cid}' declares no integrator to act as its supplier")
        integrator = inner.integrator
        if integrator in components or integrator in owners or integrator in graph.components:
            raise DuplicateId(f"Integrator '{integrator}' of '{cid}' collides with a component or owner id")

        prefix = f"{cid}{ID_SEPARATOR}"
        warnings.extend(_prefixed(w, prefix) for w in inner.warnings)
        inner_root = inner.components[inner.root]
        still_supplied = {c.supplier for c in inner.components.values() if c.id != inner.root}

        for ic in inner.components.values():
            is_root = ic.id == inner.root
            components[prefix + ic.id] = Component(
                id=prefix + ic.id,
                gate=ic.gate,
                depends_on=tuple(prefix + d for d in ic.depends_on),
                supplier=integrator if is_root else prefix + ic.supplier,
                direct_risk=(
                    1.0 - (1.0 - composite.direct_risk) * (1.0 - inner_root.direct_risk)
                    if is_root else ic.direct_risk
                ),
            )
        for s in inner.suppliers.values():
            if s.id not in still_supplied:
                local.append(f"supplier '{prefix + s.id}' dropped: it only supplied the replaced root of '{cid}'")
                if s.owner:
                    orphaned_owners.append(prefix + s.owner)
                continue
            suppliers[prefix + s.id] = s.model_copy(update={
                "id": prefix + s.id,
                "owner": prefix + s.owner if s.owner else None,
            })
        for o in inner.owners.values():
            owners[prefix + o.id] = o.model_copy(update={"id": prefix + o.id})

        if integrator not in suppliers:
            suppliers[integrator] = Supplier(id=integrator, direct_risk=inner.integrator_risk)
        if composite.supplier != integrator:
            superseded.append(composite.supplier)
            logger.info(f"🔄 '{cid}': declared supplier '{composite.supplier}' superseded by integrator '{integrator}'")
        replaced[cid] = prefix + inner.root

    for cid, c in list(components.items()):
        if any(d in replaced for d in c.depends_on):
            components[cid] = c.model_copy(update={
                "depends_on": tuple(replaced.get(d, d) for d in c.depends_on)
            })

    in_use = {c.supplier for c in components.values()}
    for sid in sorted(set(superseded)):
        if sid not in in_use and sid in suppliers:
            if suppliers[sid].owner:
                orphaned_owners.append(suppliers[sid].owner)
            del suppliers[sid]
            local.append(f"supplier '{sid}' dropped: superseded by an integrator")

    owned = {s.owner for s in suppliers.values() if s.owner}
    for oid in sorted(set(orphaned_owners)):
        if oid not in owned and oid in owners:
            del owners[oid]
            local.append(f"owner '{oid}' dropped: none of its suppliers remain")

    for w in local:
        logger.warning(f"⚠️ {w}")
    warnings.extend(local)

    return SystemGraph(
        components=dict(sorted(components.items())),
        suppliers=dict(sorted(suppliers.items())),
        owners=dict(sorted(owners.items())),
        root=replaced.get(graph.root, graph.root),
        integrator=graph.integrator,
        integrator_risk=graph.integrator_risk,
        warnings=tuple(warnings),
        validated=graph.validated,
    )


# --- 3. EVENTS & PATCHES ---

def basic_events(graph: SystemGraph) -> List[BasicEvent]:
    """One event per component, supplier and owner, ordered by (kind, id)."""
    if not graph.is_flat:
        raise NotFlat("basic_events needs a flat graph; call flatten first")
    events = [BasicEvent(event_id=c.id, kind=EventKind.COMPONENT_DIRECT, probability=c.direct_risk)
              for c in graph.components.values()]
    events += [BasicEvent(event_id=s.id, kind=EventKind.SUPPLIER_COMPROMISE, probability=s.direct_risk)
               for s in graph.suppliers.values()]
    events += [BasicEvent(event_id=o.id, kind=EventKind.OWNER_COMPROMISE, probability=o.direct_risk)
               for o in graph.owners.values()]
    return sorted(events, key=lambda e: (e.kind.value, e.event_id))


def apply_patch(graph: SystemGraph, patch: Optional[WhatIfPatch]) -> SystemGraph:
    """Returns a copy of the graph with what-if risk and trust overrides applied."""
    if patch is None or patch.is_empty:
        return graph

    components = dict(graph.components)
    suppliers = dict(graph.suppliers)
    owners = dict(graph.owners)

    for node_id, value in sorted(patch.risks.items()):
        if not 0.0 <= value <= 1.0:
            raise RiskOutOfRange(f"Override for '{node_id}' must lie in [0, 1], got {value}")
        if node_id in components:
            components[node_id] = components[node_id].model_copy(update={"direct_risk": value})
        elif node_id in suppliers:
            suppliers[node_id] = suppliers[node_id].model_copy(update={"direct_risk": value})
        elif node_id in owners:
            owners[node_id] = owners[node_id].model_copy(update={"direct_risk": value})
        else:
            raise DanglingReference(f"Patch names unknown node '{node_id}'")

    for node_id, value in sorted(patch.trusts.items()):
        if not 0.0 <= value <= 1.0:
            raise RiskOutOfRange(f"Trust override for '{node_id}' must lie in [0, 1], got {value}")
        if node_id not in suppliers:
            raise DanglingReference(f"Trust override names unknown supplier '{node_id}'")
        suppliers[node_id] = suppliers[node_id].model_copy(
            update={"trust": value, "specified": None, "actual": None}
        )

    logger.info(f"🔄 Applied patch: {len(patch.risks)} risk, {len(patch.trusts)} trust override(s)")
    return graph.model_copy(update={"components": components, "suppliers": suppliers, "owners": owners})
