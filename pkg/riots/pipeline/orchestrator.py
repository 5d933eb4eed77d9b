import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np

from riots.core.errors import RiotsException
from riots.model.graph import SystemGraph, apply_patch, basic_events, build_graph, flatten, to_document
from riots.model.schemas import GraphDocument, PipelineOptions, WhatIfPatch
from riots.pipeline.cutsets import CutSetCollection, FailureExpr, compile_failure_logic, minimal_cutsets
from riots.pipeline.risk import (
    ImportanceReport,
    RiskAssignment,
    cut_probability,
    importance_report,
    make_evaluator,
    system_risk_exact,
    system_risk_mincut,
)
from riots.pipeline.trust import effective_risk_assignment
from riots.services.document_loader import parse_document

logger = logging.getLogger(__name__)

Section = Literal["validate", "flatten", "cutsets", "risk", "importance", "report"]

STAGES = ("build", "flatten", "patch", "trust", "compile", "cutsets", "risk", "importance")


@dataclass
class RiskSummary:
    backend: str
    system_risk: float
    risk_mincut: float
    risk_exact: Optional[float]
    lower_bound: bool


@dataclass
class AnalysisBundle:
    """Every artifact a pipeline run produced, up to the stage it was asked to stop at."""
    document: GraphDocument
    patch: WhatIfPatch
    options: PipelineOptions
    graph: Optional[SystemGraph] = None
    flat: Optional[SystemGraph] = None
    patched: Optional[SystemGraph] = None
    assignment: Optional[RiskAssignment] = None
    expr: Optional[FailureExpr] = None
    cuts: Optional[CutSetCollection] = None
    risk: Optional[RiskSummary] = None
    report: Optional[ImportanceReport] = None
    warnings: List[str] = field(default_factory=list)

    # --- payload sections ---

    def events_payload(self) -> List[Dict[str, Any]]:
        if self.patched is None or self.assignment is None:
            return []
        return [
            {
                "event_id": e.event_id,
                "kind": e.kind.value,
                "direct_risk": e.probability,
                "risk": self.assignment[e.event_id],
            }
            for e in basic_events(self.patched)
        ]

    def cutsets_payload(self) -> Dict[str, Any]:
        cuts = self.cuts
        if cuts is None:
            return {}
        return {
            "count": len(cuts),
            "truncated": cuts.truncated,
            "max_order": cuts.max_order,
            "sets": [
                {
                    "order": len(cut),
                    "events": sorted(cut),
                    "probability_product": cut_probability(cut, self.assignment),
                }
                for cut in cuts.cutsets
            ],
        }

    def risk_payload(self) -> Dict[str, Any]:
        if self.risk is None:
            return {}
        return {
            "backend": self.risk.backend,
            "system_risk": self.risk.system_risk,
            "risk_mincut": self.risk.risk_mincut,
            "risk_exact": self.risk.risk_exact,
            "lower_bound": self.risk.lower_bound,
        }

    def importance_payload(self) -> Dict[str, Any]:
        if self.report is None:
            return {}
        return {
            "backend": self.report.backend,
            "floor": self.report.floor,
            "system_risk": self.report.system_risk,
            "lower_bound": self.report.lower_bound,
            "rows": [row.model_dump() for row in self.report.rows],
        }

    def to_payload(self, section: Section = "report") -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "root": self.document.root,
            "patch": self.patch.model_dump(),
            "warnings": list(self.warnings),
        }
        if section == "validate":
            graph = self.flat or self.graph
            payload.update({
                "valid": True,
                "components": len(graph.components) if graph else 0,
                "suppliers": len(graph.suppliers) if graph else 0,
                "owners": len(graph.owners) if graph else 0,
                "events": len(self.expr.events) if self.expr else 0,
            })
        elif section == "flatten":
            payload["document"] = to_document(self.flat).model_dump(mode="json", exclude_none=True)
        elif section == "cutsets":
            payload["cutsets"] = self.cutsets_payload()
        elif section == "risk":
            payload["risk"] = self.risk_payload()
        elif section == "importance":
            payload["risk"] = self.risk_payload()
            payload["importance"] = self.importance_payload()
        else:
            payload.update({
                "events": self.events_payload(),
                "cutsets": self.cutsets_payload(),
                "risk": self.risk_payload(),
                "importance": self.importance_payload(),
            })
        return _json_safe(payload)


def _json_safe(obj):
    """Plain JSON types only; non-finite floats become null."""
    if obj is None:
        return None
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    if isinstance(obj, float):
        return None if (math.isnan(obj) or math.isinf(obj)) else obj
    if isinstance(obj, (int, bool, str)):
        return obj
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [_json_safe(v) for v in obj]
        return sorted(items) if isinstance(obj, (set, frozenset)) else items
    return str(obj)


class Orchestrator:
    """
    Runs the analysis.
    Flow: (Parse) -> Build -> Flatten -> Patch -> Trust -> Compile -> Cutsets -> Risk -> Importance
    """

    def __init__(self, options: Optional[PipelineOptions] = None):
        self.options = options or PipelineOptions()

    @contextmanager
    def _stage(self, name: str):
        started = time.perf_counter()
        try:
            yield
        except RiotsException as e:
            if e.stage is None:
                e.stage = name
            logger.error(f"❌ Stage '{name}' failed: {e.message}")
            raise
        logger.debug(f"Stage '{name}' done in {time.perf_counter() - started:.3f}s")

    def load(self, path: Union[str, Path], lenient: bool = False) -> GraphDocument:
        """Parses a document file inside the tagged 'parse' stage."""
        with self._stage("parse"):
            return parse_document(path, lenient=lenient)

    def run_pipeline(
        self,
        doc: GraphDocument,
        patch: Optional[WhatIfPatch] = None,
        until: str = "importance",
    ) -> AnalysisBundle:
        if until not in STAGES:
            raise ValueError(f"unknown stage '{until}', expected one of {', '.join(STAGES)}")
        stop = STAGES.index(until)
        opts = self.options
        bundle = AnalysisBundle(document=doc, patch=patch or WhatIfPatch(), options=opts)

        # 1. Build & validate
        with self._stage("build"):
            bundle.graph = build_graph(doc)
            bundle.warnings.extend(bundle.graph.warnings)
        if stop < STAGES.index("flatten"):
            return bundle

        # 2. Flatten sub-systems
        with self._stage("flatten"):
            bundle.flat = flatten(bundle.graph)
            bundle.warnings.extend(w for w in bundle.flat.warnings if w not in bundle.warnings)
        if stop < STAGES.index("patch"):
            return bundle

        # 3. What-if overrides
        with self._stage("patch"):
            bundle.patched = apply_patch(bundle.flat, bundle.patch)

        # 4. Trust
        with self._stage("trust"):
            bundle.assignment = effective_risk_assignment(bundle.patched)
        if stop < STAGES.index("compile"):
            return bundle

        # 5. Failure logic
        with self._stage("compile"):
            bundle.expr = compile_failure_logic(bundle.patched)
        if stop < STAGES.index("cutsets"):
            return bundle

        # 6. Minimal cutsets
        with self._stage("cutsets"):
            bundle.cuts = minimal_cutsets(
                bundle.expr, max_order=opts.max_order, max_sets=opts.max_sets, workers=opts.workers
            )
        if stop < STAGES.index("risk"):
            return bundle

        # 7. System risk
        with self._stage("risk"):
            evaluator = make_evaluator(bundle.expr, bundle.cuts, opts.backend, opts.exact_limit)
            risk_mincut = system_risk_mincut(bundle.cuts, bundle.assignment)
            risk_exact = None
            if len(bundle.expr.events) <= opts.exact_limit:
                risk_exact = system_risk_exact(bundle.expr, bundle.assignment, opts.exact_limit)
            system_risk = risk_exact if evaluator.backend == "exact" else risk_mincut
            bundle.risk = RiskSummary(
                backend=evaluator.backend,
                system_risk=system_risk,
                risk_mincut=risk_mincut,
                risk_exact=risk_exact,
                lower_bound=evaluator.backend == "mincut" and bundle.cuts.truncated,
            )
        if stop < STAGES.index("importance"):
            return bundle

        # 8. Importance
        with self._stage("importance"):
            bundle.report = importance_report(
                bundle.expr, bundle.cuts, bundle.assignment,
                floor=opts.floor, backend=opts.backend,
                exact_limit=opts.exact_limit, workers=opts.workers,
            )

        logger.info(
            f"✅ Pipeline finished: R = {bundle.risk.system_risk:.6g} ({bundle.risk.backend}), "
            f"{len(bundle.cuts)} cutset(s)"
        )
        return bundle
