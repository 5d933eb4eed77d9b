import random
from typing import Dict, FrozenSet, List, Sequence, Set

import numpy as np
import pytest

from riots.core.config import FIXTURE_DIR
from riots.model.graph import SystemGraph, build_graph, flatten
from riots.pipeline.cutsets import FailureExpr, compile_failure_logic
from riots.services.document_cache import document_cache
from riots.services.document_loader import parse_document

CORPUS_SIZE = 200
CORPUS_SEED = 20240517


@pytest.fixture(autouse=True)
def _fresh_document_cache():
    document_cache.clear()
    yield
    document_cache.clear()


@pytest.fixture
def av_path():
    return FIXTURE_DIR / "autonomous_vehicle.json"


@pytest.fixture
def gateway_path():
    return FIXTURE_DIR / "gateway_vehicle.json"


@pytest.fixture
def av_doc(av_path):
    return parse_document(av_path)


@pytest.fixture
def three_level_doc():
    """
    top -> box (sub-system integrated by acme) -> chip (sub-system integrated by acme2).
    The innermost level has an unreachable component and an owned supplier that
    only supplies its root.
    """
    chip = {
        "riots_version": 1,
        "root": "cpu",
        "integrator": "acme2",
        "components": [
            {"id": "cpu", "gate": "and", "depends_on": ["alu", "fpu"], "supplier": "fab", "risk": 0.01},
            {"id": "alu", "gate": "or", "supplier": "w", "risk": 0.01},
            {"id": "fpu", "gate": "or", "supplier": "w", "risk": 0.01},
            {"id": "rom", "gate": "or", "supplier": "w", "risk": 0.01},
        ],
        "suppliers": [{"id": "fab", "owner": "of", "risk": 0.02}, {"id": "w", "risk": 0.02}],
        "owners": [{"id": "of", "risk": 0.02}],
    }
    box = {
        "riots_version": 1,
        "root": "board",
        "integrator": "acme",
        "components": [
            {"id": "board", "gate": "or", "depends_on": ["chip"], "supplier": "v", "risk": 0.01},
            {"id": "chip", "gate": "or", "supplier": "acme2", "risk": 0.005, "sub_system": chip},
        ],
        "suppliers": [{"id": "v", "risk": 0.01}, {"id": "acme2", "risk": 0.03}],
    }
    return {
        "riots_version": 1,
        "root": "top",
        "components": [
            {"id": "top", "gate": "or", "depends_on": ["box"], "supplier": "s", "risk": 0.01},
            {"id": "box", "gate": "or", "supplier": "acme", "risk": 0.01, "sub_system": box},
        ],
        "suppliers": [{"id": "s", "risk": 0.01}, {"id": "acme", "risk": 0.02}],
    }


# --- RANDOM GRAPHS ---

def random_document(rng: random.Random) -> dict:
    """
    Flat graph document with at most 14 basic events: 2-6 components with mixed
    gates, 10-40% of components sharing a supplier and 0-2 owner groups.
    """
    n_comp = rng.randint(2, 6)
    comps = [f"c{i}" for i in range(n_comp)]

    share = rng.uniform(0.10, 0.40)
    n_sup = max(1, n_comp - max(1, round(share * n_comp)))
    sups = [f"s{i}" for i in range(n_sup)]
    supplier_of = {c: sups[i] if i < n_sup else rng.choice(sups) for i, c in enumerate(comps)}

    n_own = rng.randint(0, 2)
    owners = [f"o{i}" for i in range(n_own)]

    deps: Dict[str, List[str]] = {c: [] for c in comps}
    for j in range(1, n_comp):
        parent = comps[rng.randrange(j)]
        deps[parent].append(comps[j])
    for i in range(n_comp):
        for j in range(i + 1, n_comp):
            if comps[j] not in deps[comps[i]] and rng.random() < 0.25:
                deps[comps[i]].append(comps[j])

    def risk() -> float:
        return round(rng.uniform(0.0, 0.5), 4)

    return {
        "riots_version": 1,
        "root": comps[0],
        "components": [
            {
                "id": c,
                "gate": rng.choice(["and", "or"]),
                "depends_on": sorted(deps[c]),
                "supplier": supplier_of[c],
                "risk": risk(),
            }
            for c in comps
        ],
        "suppliers": [
            {"id": s, "risk": risk(), **({"owner": rng.choice(owners)} if owners and rng.random() < 0.6 else {})}
            for s in sups
        ],
        "owners": [{"id": o, "risk": risk()} for o in owners],
    }


class Instance:
    def __init__(self, document: dict):
        self.document = document
        self.graph: SystemGraph = flatten(build_graph(document))
        self.expr: FailureExpr = compile_failure_logic(self.graph)
        self.risks = {e.event_id: e.probability for e in self.expr.events.values()}


@pytest.fixture(scope="session")
def random_corpus() -> List[Instance]:
    rng = random.Random(CORPUS_SEED)
    return [Instance(random_document(rng)) for _ in range(CORPUS_SIZE)]


# --- BRUTE FORCE ORACLES ---
# Evaluated straight from the graph, not from the compiled expression.

def failing_states(graph: SystemGraph, order: Sequence[str]) -> np.ndarray:
    """Failure indicator per state; bit k of the state index is event order[k]."""
    n = len(order)
    states = np.arange(1 << n, dtype=np.int64)
    col = {e: ((states >> k) & 1).astype(bool) for k, e in enumerate(order)}

    fail: Dict[str, np.ndarray] = {}
    for cid in graph.topological_order():
        c = graph.components[cid]
        s = graph.suppliers[c.supplier]
        out = col[cid] | col[s.id]
        if s.owner:
            out = out | col[s.owner]
        if c.depends_on:
            parts = [fail[d] for d in c.depends_on]
            reducer = np.logical_and if c.gate.value == "and" else np.logical_or
            out = out | reducer.reduce(parts)
        fail[cid] = out
    return fail[graph.root]


def brute_force_cutsets(graph: SystemGraph, order: Sequence[str]) -> Set[FrozenSet[str]]:
    n = len(order)
    failing = failing_states(graph, order)
    states = np.arange(1 << n, dtype=np.int64)
    minimal = failing.copy()
    for k in range(n):
        has = (states >> k) & 1 == 1
        minimal &= ~(has & failing[states ^ (1 << k)])
    return {
        frozenset(order[k] for k in range(n) if (int(idx) >> k) & 1)
        for idx in np.flatnonzero(minimal)
    }


def brute_force_risk(graph: SystemGraph, order: Sequence[str], r: Dict[str, float]) -> float:
    n = len(order)
    failing = failing_states(graph, order)
    states = np.arange(1 << n, dtype=np.int64)
    weight = np.ones(1 << n)
    for k, e in enumerate(order):
        on = ((states >> k) & 1).astype(bool)
        weight *= np.where(on, r[e], 1.0 - r[e])
    return float(weight[failing].sum())
