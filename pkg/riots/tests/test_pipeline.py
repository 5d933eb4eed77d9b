import json

import pytest

from riots.core.errors import CyclicDependency, DocumentSyntaxError, Exploded, IoError, TooLarge
from riots.model.schemas import GraphDocument, PipelineOptions, WhatIfPatch, validate_model
from riots.pipeline.orchestrator import Orchestrator
from riots.services.document_loader import parse_document
from riots.services.emitter import IMPORTANCE_COLUMNS, render_csv, render_json, render_table


@pytest.fixture
def baseline(av_doc):
    return Orchestrator().run_pipeline(av_doc)


def _risk(av_doc, **risks):
    return Orchestrator().run_pipeline(av_doc, WhatIfPatch(risks=risks)).risk.system_risk


# --- reconstructed case study ---

def test_baseline_is_low(baseline):
    assert all(e["direct_risk"] <= 0.03 for e in baseline.events_payload())
    assert baseline.risk.backend == "mincut"
    assert baseline.risk.risk_exact is None
    assert 0.0 < baseline.risk.system_risk < 0.10


def test_raising_o2_multiplies_risk(av_doc, baseline):
    assert _risk(av_doc, o2=0.25) >= 4 * baseline.risk.system_risk


def test_raising_o1_barely_moves_risk(av_doc, baseline):
    base = baseline.risk.system_risk
    moved = _risk(av_doc, o1=0.25)
    assert moved > base
    assert (moved - base) / base <= 0.01


def test_single_points_of_failure_outrank_high_risk_redundant_supplier(baseline):
    report = baseline.report
    singletons = baseline.cuts.singletons()
    v2i = report.row("s_v2i")
    for e in singletons:
        row = report.row(e)
        assert row.bi_rank < v2i.bi_rank
        assert row.ip_rank < v2i.ip_rank
    assert v2i.risk == max(row.risk for row in report.rows)


def test_exact_backend_on_fixture_agrees(av_doc):
    opts = PipelineOptions(backend="exact", exact_limit=25)
    bundle = Orchestrator(opts).run_pipeline(av_doc, until="risk")
    assert bundle.risk.backend == "exact"
    assert bundle.risk.risk_exact <= bundle.risk.risk_mincut
    assert bundle.risk.risk_exact == pytest.approx(bundle.risk.risk_mincut, rel=1e-3)


# --- stages, trust, errors ---

def test_until_stops_early(av_doc):
    bundle = Orchestrator().run_pipeline(av_doc, until="cutsets")
    assert bundle.cuts is not None
    assert bundle.risk is None and bundle.report is None
    with pytest.raises(ValueError):
        Orchestrator().run_pipeline(av_doc, until="parse")


def test_two_level_fixture(gateway_path):
    bundle = Orchestrator().run_pipeline(parse_document(gateway_path))
    assert bundle.risk.backend == "exact"
    # chip_co trust 0.8 raises both CAN controllers
    assert bundle.assignment["gateway.can_a"] == pytest.approx(1 - 0.99 * 0.8)
    assert frozenset({"holding"}) in set(bundle.cuts)
    assert frozenset({"tier1_net"}) in set(bundle.cuts)
    assert any("ecu_vendor" in w for w in bundle.warnings)


def test_trust_override_in_patch(gateway_path):
    doc = parse_document(gateway_path)
    base = Orchestrator().run_pipeline(doc)
    trusted = Orchestrator().run_pipeline(doc, WhatIfPatch(trusts={"gateway.chip_co": 1.0}))
    assert trusted.assignment["gateway.can_a"] == 0.01
    assert trusted.risk.system_risk < base.risk.system_risk


def test_errors_carry_their_stage(av_doc):
    cyclic = av_doc.model_copy(update={"components": [
        c.model_copy(update={"depends_on": ["av"]}) if c.id == "gps" else c for c in av_doc.components
    ]})
    with pytest.raises(CyclicDependency) as info:
        Orchestrator().run_pipeline(cyclic)
    assert info.value.stage == "build"
    assert str(info.value).startswith("[build]")

    with pytest.raises(Exploded) as info:
        Orchestrator(PipelineOptions(max_sets=5)).run_pipeline(av_doc)
    assert info.value.stage == "cutsets"

    with pytest.raises(TooLarge) as info:
        Orchestrator(PipelineOptions(backend="exact")).run_pipeline(av_doc)
    assert info.value.stage == "risk"


def test_max_order_marks_lower_bound(av_doc):
    bundle = Orchestrator(PipelineOptions(max_order=2)).run_pipeline(av_doc)
    assert bundle.cuts.truncated
    assert len(bundle.cuts) == 11
    assert bundle.risk.lower_bound
    assert bundle.report.lower_bound


# --- emission ---

def test_json_round_trip(baseline):
    payload = json.loads(render_json(baseline))
    assert payload == baseline.to_payload()
    assert payload["patch"] == {"risks": {}, "trusts": {}}
    assert payload["cutsets"]["count"] == 47
    assert len(payload["importance"]["rows"]) == 25


def test_csv_header(baseline):
    text = render_csv(baseline)
    assert text.splitlines()[0] == ",".join(IMPORTANCE_COLUMNS)
    assert text.splitlines()[0] == "event_id,kind,risk,bi,ip,bi_rank,ip_rank"
    assert len(text.splitlines()) == 26


def test_cutset_csv(baseline):
    lines = render_csv(baseline, "cutsets").splitlines()
    assert lines[0] == "order,events,probability_product"
    assert lines[1].startswith("1,av,")
    assert len(lines) == 48


def test_empty_collection_emits_zero_risk(baseline):
    from riots.pipeline.cutsets import CutSetCollection
    from riots.pipeline.orchestrator import RiskSummary
    from riots.pipeline.risk import ImportanceReport

    empty = CutSetCollection(cutsets=(), events={})
    baseline.cuts = empty
    baseline.risk = RiskSummary(backend="mincut", system_risk=0.0, risk_mincut=0.0, risk_exact=None, lower_bound=False)
    baseline.report = ImportanceReport(system_risk=0.0, backend="mincut")

    payload = json.loads(render_json(baseline))
    assert payload["risk"]["system_risk"] == 0.0
    assert payload["importance"]["rows"] == []
    assert render_csv(baseline).strip() == "event_id,kind,risk,bi,ip,bi_rank,ip_rank"
    assert "(no rows)" in render_table(baseline)


def test_table_mentions_backend_and_patch(av_doc):
    bundle = Orchestrator().run_pipeline(av_doc, WhatIfPatch(risks={"o2": 0.25}))
    text = render_table(bundle)
    assert "mincut backend" in text
    assert "Patch: o2=0.25" in text
    assert "Minimal cutsets" in text


def test_inner_level_warnings_reach_the_bundle(three_level_doc):
    bundle = Orchestrator().run_pipeline(validate_model(GraphDocument, three_level_doc))
    assert "component 'box.chip.rom' is not reachable from root 'box.chip.cpu'" in bundle.warnings
    assert "supplier 'box.chip.fab' dropped: it only supplied the replaced root of 'box.chip'" in bundle.warnings
    assert "box.chip.of" not in {row.event_id for row in bundle.report.rows}
    assert len(bundle.warnings) == len(set(bundle.warnings))


def test_parse_errors_carry_the_parse_stage(tmp_path):
    with pytest.raises(IoError) as info:
        Orchestrator().load(tmp_path / "nope.json")
    assert info.value.stage == "parse"

    broken = tmp_path / "broken.json"
    broken.write_text("{\n  \"root\": ", encoding="utf-8")
    with pytest.raises(DocumentSyntaxError) as info:
        Orchestrator().load(broken)
    assert str(info.value).startswith("[parse]")


def test_load_returns_the_parsed_document(gateway_path):
    doc = Orchestrator().load(gateway_path)
    assert doc == parse_document(gateway_path)
