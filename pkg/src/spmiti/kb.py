"""Protection knowledge base: abstract/concrete protections, precedence, factors."""
from __future__ import annotations

import enum
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

import jsonschema

from .errors import ValidationError
from .index import IndexConfig
from .jsonio import read_json
from .vocab import ARTIFACT_KINDS, METRICS, OVERHEAD_TYPES

KB_VERSION = 1


class Relation(enum.Enum):
    ALLOWED = "allowed"
    REQUIRED = "required"
    FORBIDDEN = "forbidden"
    ENCOURAGED = "encouraged"
    DISCOURAGED = "discouraged"


@dataclass(frozen=True)
class AbstractProtection:
    id: str
    name: str
    applicable_kinds: frozenset[str]
    enforced_requirements: frozenset[str]


@dataclass(frozen=True)
class OverheadCoeffs:
    base: float = 0.0
    per_instruction: float = 0.0


@dataclass(frozen=True)
class ConcreteProtection:
    id: str
    asp_id: str
    config_label: str = ""
    # metric -> (multiplier, offset)
    metric_deltas: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    overhead_coeffs: Mapping[str, OverheadCoeffs] = field(default_factory=dict)
    # attack step id -> zeta
    mitigation: Mapping[str, float] = field(default_factory=dict)
    online: bool = False


@dataclass(frozen=True)
class AttackStep:
    id: str
    name: str
    # artifact kind -> base success probability
    base_prob: Mapping[str, float]


@dataclass(frozen=True, eq=False)
class KnowledgeBase:
    asps: Mapping[str, AbstractProtection]
    cps: Mapping[str, ConcreteProtection]
    # only non-default ordered pairs are stored; everything else is ALLOWED
    precedence_matrix: Mapping[tuple[str, str], Relation]
    # (step id, first cp, second cp) -> omega
    synergy: Mapping[tuple[str, str, str], float]
    attack_steps: Mapping[str, AttackStep]
    measure_config: IndexConfig = field(default_factory=IndexConfig)

    def relation(self, before_asp: str, after_asp: str) -> Relation:
        return self.precedence_matrix.get((before_asp, after_asp), Relation.ALLOWED)

    def asp_of(self, cp_id: str) -> AbstractProtection:
        return self.asps[self.cps[cp_id].asp_id]

    def __post_init__(self):
        req: dict[str, set[str]] = {}
        for (before, after), rel in self.precedence_matrix.items():
            if rel is Relation.REQUIRED:
                req.setdefault(after, set()).add(before)
        object.__setattr__(self, "_required", {k: frozenset(v) for k, v in req.items()})

    def required_predecessors(self, asp_id: str) -> frozenset[str]:
        """ASPs that must already be deployed on an artifact before ``asp_id``."""
        return self._required.get(asp_id, frozenset())


def enforces(asp: AbstractProtection, requirement: str) -> bool:
    return requirement in asp.enforced_requirements


def compatible(asp: AbstractProtection, artifact) -> bool:
    return artifact.kind in asp.applicable_kinds


def precedence(kb: KnowledgeBase, first_cp: str, second_cp: str) -> Relation:
    """Relation between two concrete protections, delegated to their ASPs."""
    return kb.relation(kb.cps[first_cp].asp_id, kb.cps[second_cp].asp_id)


_NUM = {"type": "number"}
_ID = {"type": "string", "minLength": 1}

KB_SCHEMA = {
    "type": "object",
    "required": ["kb_version", "asps", "cps"],
    "properties": {
        "kb_version": {"const": KB_VERSION},
        "asps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kinds", "requirements"],
                "properties": {
                    "id": _ID,
                    "name": {"type": "string"},
                    "kinds": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"enum": list(ARTIFACT_KINDS)},
                    },
                    "requirements": {"type": "array", "items": _ID},
                    "at_most_once": {"type": "boolean"},
                },
            },
        },
        "cps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "asp"],
                "properties": {
                    "id": _ID,
                    "asp": _ID,
                    "config": {"type": "string"},
                    "online": {"type": "boolean"},
                    "metric_deltas": {
                        "type": "object",
                        "propertyNames": {"enum": list(METRICS)},
                        "additionalProperties": {
                            "type": "object",
                            "properties": {"multiplier": _NUM, "offset": _NUM},
                            "additionalProperties": False,
                        },
                    },
                    "overheads": {
                        "type": "object",
                        "propertyNames": {"enum": list(OVERHEAD_TYPES)},
                        "additionalProperties": {
                            "type": "object",
                            "properties": {"base": _NUM, "per_instruction": _NUM},
                            "additionalProperties": False,
                        },
                    },
                    "mitigation": {"type": "object", "additionalProperties": _NUM},
                },
            },
        },
        "precedence": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["before", "after", "rel"],
                "properties": {
                    "before": _ID,
                    "after": _ID,
                    "rel": {"enum": [r.value for r in Relation]},
                },
            },
        },
        "synergy": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["step", "first", "second", "omega"],
                "properties": {
                    "step": _ID,
                    "first": _ID,
                    "second": _ID,
                    "omega": _NUM,
                },
            },
        },
        "attack_steps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "base_prob"],
                "properties": {
                    "id": _ID,
                    "name": {"type": "string"},
                    "base_prob": {
                        "oneOf": [
                            _NUM,
                            {
                                "type": "object",
                                "propertyNames": {"enum": list(ARTIFACT_KINDS)},
                                "additionalProperties": _NUM,
                            },
                        ]
                    },
                },
            },
        },
        "measure_config": {"type": "object"},
    },
}


def _fail(msg: str):
    raise ValidationError(msg)


def _unique(items, what):
    seen = set()
    for item in items:
        if item["id"] in seen:
            _fail(f"duplicate {what} id {item['id']!r}")
        seen.add(item["id"])


def kb_from_dict(data: dict) -> KnowledgeBase:
    """Build and validate a knowledge base from its decoded JSON document."""
    try:
        jsonschema.validate(data, KB_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"schema violation at {where}: {exc.message}") from None

    _unique(data["asps"], "ASP")
    _unique(data["cps"], "CP")
    _unique(data.get("attack_steps", []), "attack step")

    steps = {}
    for raw in data.get("attack_steps", []):
        bp = raw["base_prob"]
        probs = {k: float(bp) for k in ARTIFACT_KINDS} if not isinstance(bp, dict) else {
            k: float(v) for k, v in bp.items()
        }
        for kind, p in probs.items():
            if not (0.0 < p <= 1.0):
                _fail(f"attack step {raw['id']!r}: base probability for {kind} must lie in (0, 1], got {p}")
        steps[raw["id"]] = AttackStep(raw["id"], raw.get("name", raw["id"]), MappingProxyType(probs))

    asps = {}
    matrix: dict[tuple[str, str], Relation] = {}
    for raw in data["asps"]:
        asps[raw["id"]] = AbstractProtection(
            id=raw["id"],
            name=raw.get("name", raw["id"]),
            applicable_kinds=frozenset(raw["kinds"]),
            enforced_requirements=frozenset(raw["requirements"]),
        )
        if raw.get("at_most_once"):
            matrix[(raw["id"], raw["id"])] = Relation.FORBIDDEN

    cps = {}
    for raw in data["cps"]:
        if raw["asp"] not in asps:
            _fail(f"CP {raw['id']!r} references unknown ASP {raw['asp']!r}")
        deltas = {}
        for metric, d in raw.get("metric_deltas", {}).items():
            mult, off = float(d.get("multiplier", 1.0)), float(d.get("offset", 0.0))
            if not math.isfinite(mult) or mult < 0 or not math.isfinite(off):
                _fail(f"CP {raw['id']!r}: metric delta for {metric} must have a finite multiplier >= 0")
            deltas[metric] = (mult, off)
        overheads = {
            kind: OverheadCoeffs(float(c.get("base", 0.0)), float(c.get("per_instruction", 0.0)))
            for kind, c in raw.get("overheads", {}).items()
        }
        mitigation = {}
        for step_id, zeta in raw.get("mitigation", {}).items():
            if step_id not in steps:
                _fail(f"CP {raw['id']!r}: mitigation references unknown attack step {step_id!r}")
            if not (0.0 <= zeta <= 1.0):
                _fail(f"CP {raw['id']!r}: mitigation factor for {step_id!r} must lie in [0, 1], got {zeta}")
            mitigation[step_id] = float(zeta)
        cps[raw["id"]] = ConcreteProtection(
            id=raw["id"],
            asp_id=raw["asp"],
            config_label=raw.get("config", ""),
            metric_deltas=MappingProxyType(deltas),
            overhead_coeffs=MappingProxyType(overheads),
            mitigation=MappingProxyType(mitigation),
            online=bool(raw.get("online", False)),
        )

    for raw in data.get("precedence", []):
        pair = (raw["before"], raw["after"])
        for asp in pair:
            if asp not in asps:
                _fail(f"precedence entry references unknown ASP {asp!r}")
        rel = Relation(raw["rel"])
        if pair in matrix and matrix[pair] is not rel:
            _fail(f"conflicting precedence relations for {pair[0]!r} -> {pair[1]!r}: "
                  f"{matrix[pair].value} and {rel.value}")
        if rel is not Relation.ALLOWED:
            matrix[pair] = rel

    synergy = {}
    for raw in data.get("synergy", []):
        step_id, first, second, omega = raw["step"], raw["first"], raw["second"], float(raw["omega"])
        if step_id not in steps:
            _fail(f"synergy entry references unknown attack step {step_id!r}")
        for cp in (first, second):
            if cp not in cps:
                _fail(f"synergy entry references unknown CP {cp!r}")
        if omega < 0 or not math.isfinite(omega):
            _fail(f"synergy factor must be a finite value >= 0, got {omega}")
        rel = matrix.get((cps[first].asp_id, cps[second].asp_id), Relation.ALLOWED)
        if (omega > 1 and rel is not Relation.DISCOURAGED) or (
            omega < 1 and rel is not Relation.ENCOURAGED
        ):
            _fail(f"synergy/precedence mismatch: omega={omega} on {first!r} -> {second!r} "
                  f"for step {step_id!r}, but the ASP pair is {rel.value}")
        synergy[(step_id, first, second)] = omega

    try:
        measure_config = IndexConfig.from_dict(data.get("measure_config", {}))
    except ValueError as exc:
        raise ValidationError(f"measure_config: {exc}") from None

    return KnowledgeBase(
        asps=MappingProxyType(asps),
        cps=MappingProxyType(cps),
        precedence_matrix=MappingProxyType(matrix),
        synergy=MappingProxyType(synergy),
        attack_steps=MappingProxyType(steps),
        measure_config=measure_config,
    )


def load_kb(path) -> KnowledgeBase:
    return kb_from_dict(read_json(path))
