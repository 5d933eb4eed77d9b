# riots/services/emitter.py
import json
import logging
import sys
from typing import Any, Dict, List, Literal, Optional

import pandas as pd

from riots.core.errors import IoError
from riots.pipeline.orchestrator import AnalysisBundle, Section

logger = logging.getLogger(__name__)

Format = Literal["table", "json", "csv"]

IMPORTANCE_COLUMNS = ["event_id", "kind", "risk", "bi", "ip", "bi_rank", "ip_rank"]
CUTSET_COLUMNS = ["order", "events", "probability_product"]
RISK_COLUMNS = ["backend", "system_risk", "risk_mincut", "risk_exact", "lower_bound"]
NODE_COLUMNS = ["node_id", "kind", "risk", "gate", "depends_on", "provider"]
VALIDATE_COLUMNS = ["valid", "components", "suppliers", "owners", "events", "warnings"]


# --- 1. FRAMES ---

def importance_frame(bundle: AnalysisBundle) -> pd.DataFrame:
    rows = bundle.importance_payload().get("rows", [])
    return pd.DataFrame(rows, columns=IMPORTANCE_COLUMNS)


def cutset_frame(bundle: AnalysisBundle) -> pd.DataFrame:
    sets = bundle.cutsets_payload().get("sets", [])
    rows = [
        {"order": s["order"], "events": " ".join(s["events"]), "probability_product": s["probability_product"]}
        for s in sets
    ]
    return pd.DataFrame(rows, columns=CUTSET_COLUMNS)


def risk_frame(bundle: AnalysisBundle) -> pd.DataFrame:
    risk = bundle.risk_payload()
    return pd.DataFrame([risk] if risk else [], columns=RISK_COLUMNS)


def node_frame(bundle: AnalysisBundle) -> pd.DataFrame:
    graph = bundle.flat
    rows: List[Dict[str, Any]] = []
    if graph is not None:
        for c in graph.components.values():
            rows.append({
                "node_id": c.id, "kind": "component", "risk": c.direct_risk,
                "gate": c.gate.value if c.depends_on else "",
                "depends_on": " ".join(c.depends_on), "provider": c.supplier,
            })
        for s in graph.suppliers.values():
            rows.append({
                "node_id": s.id, "kind": "supplier", "risk": s.direct_risk,
                "gate": "", "depends_on": "", "provider": s.owner or "",
            })
        for o in graph.owners.values():
            rows.append({
                "node_id": o.id, "kind": "owner", "risk": o.direct_risk,
                "gate": "", "depends_on": "", "provider": "",
            })
    return pd.DataFrame(rows, columns=NODE_COLUMNS)


def validate_frame(bundle: AnalysisBundle) -> pd.DataFrame:
    payload = bundle.to_payload("validate")
    row = {col: payload[col] for col in VALIDATE_COLUMNS if col != "warnings"}
    row["warnings"] = len(payload["warnings"])
    return pd.DataFrame([row], columns=VALIDATE_COLUMNS)


# --- 2. RENDERING ---

def render_json(bundle: AnalysisBundle, section: Section = "report") -> str:
    return json.dumps(bundle.to_payload(section), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_csv(bundle: AnalysisBundle, section: Section = "report") -> str:
    frame = {
        "validate": validate_frame,
        "flatten": node_frame,
        "cutsets": cutset_frame,
        "risk": risk_frame,
    }.get(section, importance_frame)(bundle)
    return frame.to_csv(index=False, lineterminator="\n")


def _table(frame: pd.DataFrame) -> str:
    if frame.empty:
        return "(no rows)"
    return frame.to_string(index=False)


def render_table(bundle: AnalysisBundle, section: Section = "report") -> str:
    blocks: List[str] = []
    if section == "validate":
        payload = bundle.to_payload("validate")
        blocks.append(
            f"OK: {payload['components']} component(s), {payload['suppliers']} supplier(s), "
            f"{payload['owners']} owner(s), {payload['events']} basic event(s)"
        )
    elif section == "flatten":
        blocks.append(_table(node_frame(bundle)))
    else:
        if section in ("risk", "importance", "report") and bundle.risk is not None:
            risk = bundle.risk
            line = f"System risk: {risk.system_risk:.6f} ({risk.backend} backend)"
            if risk.lower_bound:
                line += " [lower bound: cutsets truncated]"
            if risk.risk_exact is not None and risk.backend == "mincut":
                line += f", exact {risk.risk_exact:.6f}"
            elif risk.backend == "exact":
                line += f", min-cut bound {risk.risk_mincut:.6f}"
            blocks.append(line)
        if not bundle.patch.is_empty:
            overrides = [f"{k}={v}" for k, v in sorted(bundle.patch.risks.items())]
            overrides += [f"trust:{k}={v}" for k, v in sorted(bundle.patch.trusts.items())]
            blocks.append("Patch: " + ", ".join(overrides))
        if section in ("importance", "report"):
            blocks.append("Importance\n" + _table(importance_frame(bundle)))
        if section in ("cutsets", "report"):
            blocks.append("Minimal cutsets\n" + _table(cutset_frame(bundle)))

    for warning in bundle.warnings:
        blocks.append(f"warning: {warning}")
    return "\n\n".join(blocks) + "\n"


RENDERERS = {"json": render_json, "csv": render_csv, "table": render_table}


def emit(bundle: AnalysisBundle, fmt: Format = "table", destination: Optional[str] = "-", section: Section = "report") -> None:
    """Writes the bundle to stdout ('-' or None) or to a file."""
    if fmt not in RENDERERS:
        raise ValueError(f"unknown format '{fmt}'")
    text = RENDERERS[fmt](bundle, section)

    if destination in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise IoError(f"Cannot write '{destination}': {e.strerror or e}")
    logger.info(f"✅ Wrote {fmt} {section} to '{destination}'")
