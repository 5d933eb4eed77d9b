# riots/services/document_loader.py
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Type, Union

from pydantic import BaseModel

from riots.core.errors import DocumentSyntaxError, IoError, RecursiveDecomposition
from riots.model.schemas import ComponentRecord, GraphDocument, OwnerRecord, SupplierRecord, validate_model
from riots.services.document_cache import Stamps, document_cache

logger = logging.getLogger(__name__)

_RECORD_LISTS: Dict[str, Type[BaseModel]] = {
    "components": ComponentRecord,
    "suppliers": SupplierRecord,
    "owners": OwnerRecord,
}


def parse_document(path: Union[str, Path], lenient: bool = False) -> GraphDocument:
    """
    Reads, schema-validates and resolves a graph document.
    Sub-system paths are read relative to the file that names them and replaced
    by the parsed documents. In lenient mode unknown fields are dropped with a
    warning instead of rejected.
    """
    _, doc = _parse(Path(path), lenient, chain=())
    return doc


def _parse(path: Path, lenient: bool, chain: Tuple[Path, ...]) -> Tuple[Stamps, GraphDocument]:
    resolved = path.resolve()
    if resolved in chain:
        raise RecursiveDecomposition([p.name for p in chain] + [resolved.name])

    cached = document_cache.get(resolved, lenient)
    if cached is not None:
        return cached

    # 1. Read
    try:
        mtime = resolved.stat().st_mtime_ns
        text = resolved.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"Cannot read '{path}': {e.strerror or e}")

    # 2. Decode
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentSyntaxError(f"Malformed JSON in '{path}': {e.msg}", e.lineno, e.colno)

    # 3. Validate
    if lenient:
        ignored: List[str] = []
        payload = _strip_unknown(payload, GraphDocument, "", ignored)
        for warning in ignored:
            logger.warning(f"⚠️ {path.name}: {warning}")
    doc = validate_model(GraphDocument, payload, what=f"document '{path.name}'")

    # 4. Resolve sub-system files
    stamps: List[Tuple[Path, int]] = [(resolved, mtime)]
    doc = _resolve_sub_systems(doc, resolved, lenient, chain + (resolved,), stamps)

    result = (tuple(stamps), doc)
    document_cache.set(resolved, lenient, result[0], doc)
    logger.info(f"✅ Parsed '{path.name}': {len(doc.components)} component(s)")
    return result


def _resolve_sub_systems(
    doc: GraphDocument, source: Path, lenient: bool, chain: Tuple[Path, ...], stamps: List[Tuple[Path, int]]
) -> GraphDocument:
    records = []
    changed = False
    for rec in doc.components:
        sub = rec.sub_system
        if isinstance(sub, str):
            sub_stamps, sub_doc = _parse(source.parent / sub, lenient, chain)
            stamps.extend(sub_stamps)
            rec = rec.model_copy(update={"sub_system": sub_doc})
            changed = True
        elif isinstance(sub, GraphDocument):
            resolved_sub = _resolve_sub_systems(sub, source, lenient, chain, stamps)
            if resolved_sub is not sub:
                rec = rec.model_copy(update={"sub_system": resolved_sub})
                changed = True
        records.append(rec)
    return doc.model_copy(update={"components": records}) if changed else doc


def _strip_unknown(payload: Any, model: Type[BaseModel], path: str, ignored: List[str]) -> Any:
    if not isinstance(payload, dict):
        return payload
    known = set(model.model_fields)
    cleaned = {}
    for key, value in payload.items():
        if key not in known:
            ignored.append(f"unknown field '{path}{key}' ignored")
            continue
        cleaned[key] = value

    if model is GraphDocument:
        for key, record_model in _RECORD_LISTS.items():
            items = cleaned.get(key)
            if isinstance(items, list):
                cleaned[key] = [
                    _strip_unknown(item, record_model, f"{path}{key}[{i}].", ignored)
                    for i, item in enumerate(items)
                ]
    elif model is ComponentRecord and isinstance(cleaned.get("sub_system"), dict):
        cleaned["sub_system"] = _strip_unknown(cleaned["sub_system"], GraphDocument, f"{path}sub_system.", ignored)
    return cleaned
