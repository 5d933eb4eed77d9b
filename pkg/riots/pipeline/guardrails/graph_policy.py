# riots/pipeline/guardrails/graph_policy.py
import logging
from collections import Counter
from typing import TYPE_CHECKING, List

import networkx as nx

from riots.core.errors import (
    ConflictingTrust,
    CyclicDependency,
    DanglingReference,
    DuplicateId,
    MissingRoot,
    RiskOutOfRange,
    UnsupportedFeature,
)
from riots.model.schemas import GraphDocument

if TYPE_CHECKING:
    from riots.model.graph import SystemGraph

logger = logging.getLogger(__name__)


class GraphGuard:
    """
    Rule set every system graph passes before analysis.
    1. Ids are unique across components, suppliers and owners.
    2. Only one level of ownership.
    3. Probabilities lie in [0, 1].
    4. A supplier states trust as a number or as function sets, never both.
    5. Every reference resolves and the root exists.
    6. Dependencies form a DAG; unreachable components are warned about.
    """

    @staticmethod
    def check_document(doc: GraphDocument) -> None:
        # --- RULE 1: UNIQUE IDS ---
        ids = [c.id for c in doc.components] + [s.id for s in doc.suppliers] + [o.id for o in doc.owners]
        dupes = sorted(i for i, n in Counter(ids).items() if n > 1)
        if dupes:
            raise DuplicateId(f"Ids used more than once: {', '.join(dupes)}")
        component_ids = {c.id for c in doc.components}
        owner_ids = {o.id for o in doc.owners}
        if doc.integrator and (doc.integrator in component_ids or doc.integrator in owner_ids):
            raise DuplicateId(f"Integrator '{doc.integrator}' reuses a component or owner id")

        # --- RULE 2: SINGLE OWNERSHIP LEVEL ---
        for owner in doc.owners:
            if owner.owner is not None:
                raise UnsupportedFeature(
                    f"Owner '{owner.id}' declares its own owner '{owner.owner}'; nested ownership is not supported"
                )

        # --- RULE 3: RANGES ---
        GraphGuard._check_range("integrator_risk", doc.integrator_risk)
        for rec in doc.components:
            GraphGuard._check_range(f"component '{rec.id}' risk", rec.risk)
        for rec in doc.suppliers:
            GraphGuard._check_range(f"supplier '{rec.id}' risk", rec.risk)
            if rec.trust is not None:
                GraphGuard._check_range(f"supplier '{rec.id}' trust", rec.trust)
        for rec in doc.owners:
            GraphGuard._check_range(f"owner '{rec.id}' risk", rec.risk)

        # --- RULE 4: ONE SOURCE OF TRUST ---
        for rec in doc.suppliers:
            if rec.trust is not None and (rec.specified is not None or rec.actual is not None):
                raise ConflictingTrust(
                    f"Supplier '{rec.id}' gives both a trust value and specified/actual function sets"
                )

        # --- RULE 5: REFERENCES ---
        supplier_ids = {s.id for s in doc.suppliers}
        for rec in doc.components:
            if rec.supplier not in supplier_ids:
                raise DanglingReference(f"Component '{rec.id}' names unknown supplier '{rec.supplier}'")
            seen = set()
            for dep in rec.depends_on:
                if dep == rec.id:
                    raise CyclicDependency([rec.id])
                if dep in seen:
                    raise DuplicateId(f"Component '{rec.id}' lists dependency '{dep}' twice")
                seen.add(dep)
                if dep not in component_ids:
                    raise DanglingReference(f"Component '{rec.id}' depends on unknown component '{dep}'")
        for rec in doc.suppliers:
            if rec.owner is not None and rec.owner not in owner_ids:
                raise DanglingReference(f"Supplier '{rec.id}' names unknown owner '{rec.owner}'")
        if doc.root not in component_ids:
            raise MissingRoot(f"Root '{doc.root}' is not a component of the document")

    @staticmethod
    def check_structure(graph: "SystemGraph") -> List[str]:
        """Raises on cycles; returns reachability warnings."""
        g = graph.dependency_graph()

        # --- RULE 6: ACYCLIC ---
        if not nx.is_directed_acyclic_graph(g):
            edges = nx.find_cycle(g)
            raise CyclicDependency([u for u, _ in edges])

        warnings = []
        for cid in graph.unreachable():
            warnings.append(f"component '{cid}' is not reachable from root '{graph.root}'")
            logger.warning(f"⚠️ Component '{cid}' is not reachable from root '{graph.root}'")
        return warnings

    @staticmethod
    def _check_range(label: str, value: float) -> None:
        if not 0.0 <= value <= 1.0:
            raise RiskOutOfRange(f"{label} must lie in [0, 1], got {value}")
