import pytest

from riots.core.errors import Exploded, NotFlat, NotValidated, UnknownEvent
from riots.model.graph import BasicEvent, EventKind, GateType, build_graph, flatten
from riots.pipeline.cutsets import (
    FailureExpr,
    Gate,
    Leaf,
    absorb,
    compile_failure_logic,
    is_cut,
    make_gate,
    minimal_cutsets,
)
from riots.tests.conftest import brute_force_cutsets


def expr_of(top, *names):
    events = {n: BasicEvent(event_id=n, kind=EventKind.COMPONENT_DIRECT, probability=0.1) for n in names}
    return FailureExpr(top=top, events=events)


def AND(*children):
    return make_gate(GateType.AND, children)


def OR(*children):
    return make_gate(GateType.OR, children)


def sets(*groups):
    return {frozenset(g) for g in groups}


@pytest.fixture
def shared_supplier():
    s = Leaf("s")
    return expr_of(AND(OR(Leaf("a_d"), s), OR(Leaf("b_d"), s)), "a_d", "b_d", "s")


# --- compile_failure_logic ---

def _two_leaf_doc(gate):
    return {
        "riots_version": 1,
        "root": "root",
        "components": [
            {"id": "root", "gate": gate, "depends_on": ["a", "b"], "supplier": "s_root", "risk": 0.01},
            {"id": "a", "gate": "or", "supplier": "s", "risk": 0.1},
            {"id": "b", "gate": "or", "supplier": "s", "risk": 0.1},
        ],
        "suppliers": [{"id": "s_root", "risk": 0.01}, {"id": "s", "risk": 0.05}],
    }


def test_leaf_component_compiles_to_direct_or_supplier():
    g = build_graph({
        "riots_version": 1, "root": "a",
        "components": [{"id": "a", "gate": "or", "supplier": "s", "risk": 0.1}],
        "suppliers": [{"id": "s", "risk": 0.1}],
    })
    expr = compile_failure_logic(g)
    assert expr.to_dict() == {"or": ["a", "s"]}


def test_shared_supplier_is_one_event():
    expr = compile_failure_logic(build_graph(_two_leaf_doc("and")))
    assert expr.referenced_events() == ["a", "b", "root", "s", "s_root"]
    assert expr.evaluate({"s"})
    assert not expr.evaluate({"a"})
    assert expr.evaluate({"a", "b"})


def test_owner_joins_each_supplied_component():
    doc = _two_leaf_doc("and")
    doc["suppliers"][1]["owner"] = "o"
    doc["owners"] = [{"id": "o", "risk": 0.01}]
    cuts = minimal_cutsets(compile_failure_logic(build_graph(doc)))
    assert frozenset({"o"}) in set(cuts)


def test_compile_requires_validated_flat_graph(gateway_path):
    from riots.services.document_loader import parse_document

    nested = build_graph(parse_document(gateway_path))
    with pytest.raises(NotFlat):
        compile_failure_logic(nested)
    with pytest.raises(NotValidated):
        compile_failure_logic(flatten(nested).model_copy(update={"validated": False}))


def test_fixture_single_points_of_failure(av_doc):
    cuts = minimal_cutsets(compile_failure_logic(build_graph(av_doc)))
    assert len(cuts) == 47
    assert cuts.singletons() == sorted([
        "av", "brake_act", "localization", "o2", "perception", "s_av", "s_brake_act",
        "s_localization", "s_perception", "s_steering_act", "steering_act",
    ])
    assert not any("s_v2i" in c and len(c) < 3 for c in cuts)


# --- minimal_cutsets ---

def test_or_gives_singletons():
    assert set(minimal_cutsets(expr_of(OR(Leaf("a"), Leaf("b")), "a", "b"))) == sets({"a"}, {"b"})


def test_and_of_ors_without_sharing():
    expr = expr_of(AND(OR(Leaf("a_d"), Leaf("s_a")), OR(Leaf("b_d"), Leaf("s_b"))), "a_d", "s_a", "b_d", "s_b")
    assert set(minimal_cutsets(expr)) == sets({"a_d", "b_d"}, {"a_d", "s_b"}, {"s_a", "b_d"}, {"s_a", "s_b"})


def test_shared_supplier_absorbs_supersets(shared_supplier):
    cuts = minimal_cutsets(shared_supplier)
    assert set(cuts) == sets({"s"}, {"a_d", "b_d"})
    assert cuts.as_sorted_lists() == [["s"], ["a_d", "b_d"]]


def test_max_order_truncates(shared_supplier):
    cuts = minimal_cutsets(shared_supplier, max_order=1)
    assert set(cuts) == sets({"s"})
    assert cuts.truncated
    assert not minimal_cutsets(shared_supplier, max_order=2).truncated


def test_max_order_must_be_positive(shared_supplier):
    with pytest.raises(ValueError):
        minimal_cutsets(shared_supplier, max_order=0)


def test_explosion_cap():
    leaves = [Leaf(f"e{i}") for i in range(16)]
    wide = AND(*[OR(leaves[2 * i], leaves[2 * i + 1]) for i in range(8)])
    expr = expr_of(wide, *[l.event_id for l in leaves])
    with pytest.raises(Exploded) as info:
        minimal_cutsets(expr, max_sets=50)
    assert info.value.cap == 50
    assert len(minimal_cutsets(expr)) == 256


def test_absorb_keeps_antichain():
    result = absorb([frozenset("ab"), frozenset("a"), frozenset("abc"), frozenset("bc"), frozenset("a")])
    assert result == [frozenset("a"), frozenset("bc")]


def test_make_gate_collapses():
    a = Leaf("a")
    assert make_gate(GateType.OR, [a]) is a
    nested = OR(OR(a, Leaf("b")), Leaf("c"))
    assert isinstance(nested, Gate) and len(nested.children) == 3


# --- is_cut ---

def test_is_cut(shared_supplier):
    assert is_cut(expr_of(OR(Leaf("a"), Leaf("b")), "a", "b"), {"a"})
    assert not is_cut(expr_of(AND(Leaf("a"), Leaf("b")), "a", "b"), {"a"})
    assert is_cut(shared_supplier, {"s"})
    with pytest.raises(UnknownEvent):
        is_cut(shared_supplier, {"zz"})


# --- oracle ---

def test_random_graphs_match_brute_force(random_corpus):
    for inst in random_corpus:
        order = sorted(inst.expr.events)
        assert len(order) <= 14
        cuts = minimal_cutsets(inst.expr)
        assert set(cuts) == brute_force_cutsets(inst.graph, order), inst.document


def test_cutsets_are_sound_minimal_antichains(random_corpus):
    for inst in random_corpus[:60]:
        cuts = list(minimal_cutsets(inst.expr))
        for cut in cuts:
            assert cut
            assert is_cut(inst.expr, cut)
            for e in cut:
                assert not is_cut(inst.expr, cut - {e})
        for a in cuts:
            for b in cuts:
                assert a is b or not a <= b


def test_parallel_expansion_is_deterministic(random_corpus, av_doc):
    exprs = [inst.expr for inst in random_corpus[:40]]
    exprs.append(compile_failure_logic(build_graph(av_doc)))
    for expr in exprs:
        serial = minimal_cutsets(expr, workers=1)
        parallel = minimal_cutsets(expr, workers=4)
        assert serial.cutsets == parallel.cutsets
