from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from riots.core.errors import SchemaViolation

ID_SEPARATOR = "."


# 1. Records of the on-disk graph document (riots_version 1)
class ComponentRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1, description="Component id, unique across the whole document")
    gate: Literal["and", "or"] = Field(..., description="How dependency failures combine; ignored for leaves")
    depends_on: List[str] = Field(default_factory=list, description="Components this one needs to function")
    supplier: str = Field(..., min_length=1)
    risk: float = Field(..., ge=0.0, le=1.0, description="Probability of a successful direct attack")
    sub_system: Optional[Union[str, "GraphDocument"]] = Field(
        None, description="Relative path to, or inline copy of, the document this component decomposes into"
    )


class SupplierRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    owner: Optional[str] = None
    risk: float = Field(..., ge=0.0, le=1.0)
    trust: Optional[float] = Field(None, ge=0.0, le=1.0)
    specified: Optional[List[str]] = Field(None, description="Functions the supplier states the product implements")
    actual: Optional[List[str]] = Field(None, description="Functions the product actually implements")

    @model_validator(mode="after")
    def _check_function_lists(self) -> "SupplierRecord":
        if (self.specified is None) != (self.actual is None):
            raise ValueError("'specified' and 'actual' must be given together")
        for name in ("specified", "actual"):
            values = getattr(self, name)
            if values is not None and len(set(values)) != len(values):
                raise ValueError(f"'{name}' lists a function more than once")
        return self


class OwnerRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., min_length=1)
    risk: float = Field(..., ge=0.0, le=1.0)
    # Reserved for owner-of-owner chains; rejected when the graph is built.
    owner: Optional[str] = None


class GraphDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    riots_version: Literal[1]
    root: str = Field(..., min_length=1)
    integrator: Optional[str] = Field(None, min_length=1, description="Entity composing this system (u)")
    integrator_risk: float = Field(0.0, ge=0.0, le=1.0)
    flattened: bool = False
    notes: Optional[str] = None
    components: List[ComponentRecord] = Field(..., min_length=1)
    suppliers: List[SupplierRecord] = Field(default_factory=list)
    owners: List[OwnerRecord] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_id_charset(self) -> "GraphDocument":
        # Dotted ids are produced by flatten and only accepted back when flagged.
        if self.flattened:
            composites = sorted(c.id for c in self.components if c.sub_system is not None)
            if composites:
                raise ValueError(f"a flattened document cannot decompose components: {', '.join(composites)}")
            return self
        ids = [c.id for c in self.components] + [s.id for s in self.suppliers] + [o.id for o in self.owners]
        if self.integrator:
            ids.append(self.integrator)
        dotted = sorted(i for i in ids if ID_SEPARATOR in i)
        if dotted:
            raise ValueError(f"ids may not contain '{ID_SEPARATOR}': {', '.join(dotted)}")
        return self


ComponentRecord.model_rebuild()


# 2. What-if overrides
class WhatIfPatch(BaseModel):
    model_config = ConfigDict(extra="forbid")

    risks: Dict[str, float] = Field(default_factory=dict, description="node id -> new direct risk")
    trusts: Dict[str, float] = Field(default_factory=dict, description="supplier id -> new trust")

    @model_validator(mode="after")
    def _check_ranges(self) -> "WhatIfPatch":
        for table in (self.risks, self.trusts):
            for node_id, value in table.items():
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"override for '{node_id}' must lie in [0, 1], got {value}")
        return self

    @property
    def is_empty(self) -> bool:
        return not self.risks and not self.trusts

    @classmethod
    def from_assignments(cls, assignments: Sequence[str]) -> "WhatIfPatch":
        """Parses CLI overrides: 'o2=0.25' sets a risk, 'trust:s_v2i=0.8' a supplier trust."""
        risks: Dict[str, float] = {}
        trusts: Dict[str, float] = {}
        for raw in assignments:
            key, sep, value = raw.partition("=")
            key = key.strip()
            if not sep or not key:
                raise SchemaViolation(f"Malformed override '{raw}', expected <id>=<value>")
            try:
                number = float(value)
            except ValueError:
                raise SchemaViolation(f"Override '{raw}' has a non-numeric value")
            if key.startswith("trust:"):
                trusts[key[len("trust:"):]] = number
            else:
                risks[key] = number
        return validate_model(cls, {"risks": risks, "trusts": trusts}, what="patch")


# 3. Pipeline knobs
class PipelineOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    backend: Literal["auto", "exact", "mincut"] = "auto"
    max_order: Optional[int] = Field(None, ge=1)
    floor: float = Field(0.0, ge=0.0, le=1.0, description="Pragmatic minimal risk used by Improvement Potential")
    exact_limit: int = Field(24, ge=1)
    max_sets: int = Field(1_000_000, ge=1)
    workers: int = Field(1, ge=1)


def _format_loc(loc: Sequence[Any], payload: Any) -> str:
    path = ""
    node = payload
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
            if isinstance(node, list) and part < len(node):
                node = node[part]
                if isinstance(node, dict) and "id" in node:
                    path += f"(id={node['id']!r})"
            else:
                node = None
        else:
            path += f".{part}" if path else str(part)
            node = node.get(part) if isinstance(node, dict) else None
    return path or "<document>"


def validate_model(model: type, payload: Any, what: str = "document"):
    """Validates a payload and turns pydantic errors into a SchemaViolation naming each field."""
    try:
        return model.model_validate(payload)
    except ValidationError as exc:
        errors = [f"{_format_loc(err['loc'], payload)}: {err['msg']}" for err in exc.errors()]
        raise SchemaViolation(f"Invalid {what}: " + "; ".join(errors), errors=errors)
