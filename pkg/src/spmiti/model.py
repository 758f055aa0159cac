"""Application model: artifacts, protection objectives, attack paths, thresholds."""
from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

import jsonschema

from .errors import ValidationError
from .jsonio import read_json
from .vocab import (
    ARTIFACT_KINDS,
    CODE,
    CYCLOMATIC,
    DATUM,
    INSTRUCTION_SHARES,
    METRICS,
    OVERHEAD_TYPES,
)

logger = logging.getLogger(__name__)

MODEL_VERSION = 1
GLOBAL_SCOPE = "global"


@dataclass(frozen=True)
class MetricVector:
    halstead: float = 0.0
    cyclomatic: float = 0.0
    instructions: float = 0.0
    remote_instructions: float = 0.0
    local_instructions: float = 0.0
    guarded_instructions: float = 0.0

    def get(self, metric: str) -> float:
        return getattr(self, metric)

    def as_dict(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}


@dataclass(frozen=True)
class Artifact:
    id: str
    kind: str
    file: str = ""
    line_range: tuple[int, int] = (0, 0)
    depends_on: frozenset[str] = frozenset()
    vanilla_metrics: MetricVector = field(default_factory=MetricVector)
    unattacked: bool = False


@dataclass(frozen=True)
class ProtectionObjective:
    requirement: str
    artifact_id: str
    weight: float = 1.0


@dataclass(frozen=True)
class AttackPath:
    id: str
    target_asset: str
    requirement: str
    steps: tuple[tuple[str, str], ...]  # (step id, artifact id)


@dataclass(frozen=True)
class ConcreteAttackPath:
    """Unit-effort investments in the steps of an attack path.

    ``efforts`` lists ``(step_index, n)`` entries; repeated indices add up, so
    ``((0, 2), (1, 1))`` and ``((0, 1), (0, 1), (1, 1))`` describe the same
    concrete path.
    """

    id: str
    path_id: str
    efforts: tuple[tuple[int, int], ...]

    def units_per_step(self) -> dict[int, int]:
        units: dict[int, int] = {}
        for index, n in self.efforts:
            units[index] = units.get(index, 0) + n
        return units


@dataclass(frozen=True, eq=False)
class ApplicationModel:
    artifacts: Mapping[str, Artifact]
    pos: tuple[ProtectionObjective, ...]
    attack_paths: Mapping[str, AttackPath]
    concrete_paths: tuple[ConcreteAttackPath, ...]
    # scope ("global" or a CCS id) -> overhead type -> theta
    overhead_thresholds: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    # raw extras carried by fixtures: candidate solutions, scripted trees
    extras: Mapping[str, object] = field(default_factory=dict)

    @property
    def assets(self) -> tuple[str, ...]:
        """Artifacts that appear in at least one protection objective, sorted."""
        return tuple(sorted({po.artifact_id for po in self.pos}))

    def artifact(self, artifact_id: str) -> Artifact:
        return self.artifacts[artifact_id]

    def paths_against(self, asset_id: str) -> list[AttackPath]:
        return [p for p in self.attack_paths.values() if p.target_asset == asset_id]

    def joint(self, first: str, second: str) -> bool:
        return joint(self.artifacts[first], self.artifacts[second], self)


def _overlap(a: Artifact, b: Artifact) -> bool:
    if a.file != b.file:
        return False
    return a.line_range[0] <= b.line_range[1] and b.line_range[0] <= a.line_range[1]


def joint(a: Artifact, b: Artifact, model: ApplicationModel | None = None) -> bool:
    """Whether two artifacts share at least one source element.

    Besides plain range intersection inside one file, a datum is joint with
    every artifact listed in (or range-overlapping an entry of) its
    ``depends_on`` closure. Resolving overlap through ``depends_on`` needs
    ``model``; without it only the ids are compared.
    """
    if a.id == b.id or _overlap(a, b):
        return True
    for datum, other in ((a, b), (b, a)):
        if datum.kind != DATUM or not datum.depends_on:
            continue
        if other.id in datum.depends_on:
            return True
        if model is not None and any(
            _overlap(model.artifacts[dep], other) for dep in datum.depends_on
        ):
            return True
    return False


_NUM = {"type": "number"}
_ID = {"type": "string", "minLength": 1}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["model_version", "artifacts", "protection_objectives"],
    "properties": {
        "model_version": {"const": MODEL_VERSION},
        "artifacts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind"],
                "properties": {
                    "id": _ID,
                    "kind": {"enum": list(ARTIFACT_KINDS)},
                    "file": {"type": "string"},
                    "lines": {
                        "type": "array",
                        "items": {"type": "integer"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                    "depends_on": {"type": "array", "items": _ID},
                    "vanilla_metrics": {
                        "type": "object",
                        "propertyNames": {"enum": list(METRICS)},
                        "additionalProperties": {"type": "number", "minimum": 0},
                    },
                    "unattacked": {"type": "boolean"},
                },
            },
        },
        "protection_objectives": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["requirement", "artifact"],
                "properties": {
                    "requirement": _ID,
                    "artifact": _ID,
                    "weight": {"type": "number", "minimum": 0},
                },
            },
        },
        "attack_paths": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "target", "requirement", "steps"],
                "properties": {
                    "id": _ID,
                    "target": _ID,
                    "requirement": _ID,
                    "steps": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["step", "artifact"],
                            "properties": {"step": _ID, "artifact": _ID},
                        },
                    },
                    "efforts": {
                        "type": "array",
                        "items": {
                            "type": "array",
                            "items": {"type": "integer", "minimum": 1},
                        },
                    },
                },
            },
        },
        "overhead_thresholds": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "propertyNames": {"enum": list(OVERHEAD_TYPES)},
                "additionalProperties": {
                    "anyOf": [_NUM, {"type": "null"}, {"const": "inf"}]
                },
            },
        },
    },
}


def _fail(msg: str):
    raise ValidationError(msg)


def _check_nesting(artifacts: Mapping[str, Artifact]) -> None:
    by_file: dict[str, list[Artifact]] = {}
    for art in artifacts.values():
        if art.kind == CODE:
            by_file.setdefault(art.file, []).append(art)
    for file, arts in by_file.items():
        arts.sort(key=lambda a: (a.line_range[0], -a.line_range[1], a.id))
        for i, a in enumerate(arts):
            for b in arts[i + 1:]:
                if b.line_range[0] > a.line_range[1]:
                    break
                # b starts inside a: it must end inside a as well
                if b.line_range[1] > a.line_range[1]:
                    _fail(f"ranges must nest or be disjoint: {a.id!r} {a.line_range} and "
                          f"{b.id!r} {b.line_range} in {file!r}")


def model_from_dict(data: dict, kb=None) -> ApplicationModel:
    """Build and validate an application model.

    When ``kb`` is given, attack-step ids are also checked against its catalog.
    """
    try:
        jsonschema.validate(data, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"schema violation at {where}: {exc.message}") from None

    artifacts: dict[str, Artifact] = {}
    for raw in data["artifacts"]:
        if raw["id"] in artifacts:
            _fail(f"duplicate artifact id {raw['id']!r}")
        start, end = raw.get("lines", (0, 0))
        if start > end:
            _fail(f"artifact {raw['id']!r}: line range start {start} > end {end}")
        vm = MetricVector(**{k: float(v) for k, v in raw.get("vanilla_metrics", {}).items()})
        for share in INSTRUCTION_SHARES:
            if vm.get(share) != 0:
                _fail(f"artifact {raw['id']!r}: vanilla {share} must be 0")
        if raw["kind"] == CODE and vm.get(CYCLOMATIC) < 1:
            _fail(f"artifact {raw['id']!r}: code artifacts need cyclomatic >= 1")
        if raw["kind"] == DATUM and vm.get(CYCLOMATIC) != 0:
            _fail(f"artifact {raw['id']!r}: datum artifacts have cyclomatic 0")
        artifacts[raw["id"]] = Artifact(
            id=raw["id"],
            kind=raw["kind"],
            file=raw.get("file", ""),
            line_range=(int(start), int(end)),
            depends_on=frozenset(raw.get("depends_on", ())),
            vanilla_metrics=vm,
            unattacked=bool(raw.get("unattacked", False)),
        )
    for art in artifacts.values():
        for dep in art.depends_on:
            if dep not in artifacts:
                _fail(f"artifact {art.id!r}: depends_on references unknown artifact {dep!r}")
    _check_nesting(artifacts)

    pos = []
    seen_pos = set()
    for raw in data["protection_objectives"]:
        if raw["artifact"] not in artifacts:
            _fail(f"protection objective references unknown artifact {raw['artifact']!r}")
        po = ProtectionObjective(raw["requirement"], raw["artifact"], float(raw.get("weight", 1.0)))
        if (po.requirement, po.artifact_id) in seen_pos:
            _fail(f"duplicate protection objective ({po.requirement}, {po.artifact_id})")
        seen_pos.add((po.requirement, po.artifact_id))
        pos.append(po)

    paths: dict[str, AttackPath] = {}
    concrete: list[ConcreteAttackPath] = []
    for raw in data.get("attack_paths", []):
        if raw["id"] in paths:
            _fail(f"duplicate attack path id {raw['id']!r}")
        if raw["target"] not in artifacts:
            _fail(f"attack path {raw['id']!r} targets unknown artifact {raw['target']!r}")
        steps = []
        for st in raw["steps"]:
            if st["artifact"] not in artifacts:
                _fail(f"attack path {raw['id']!r} references unknown artifact {st['artifact']!r}")
            if kb is not None and st["step"] not in kb.attack_steps:
                _fail(f"attack path {raw['id']!r} references unknown attack step {st['step']!r}")
            steps.append((st["step"], st["artifact"]))
        path = AttackPath(raw["id"], raw["target"], raw["requirement"], tuple(steps))
        paths[path.id] = path
        profiles = raw.get("efforts") or [[1] * len(steps)]
        for k, units in enumerate(profiles):
            if len(units) != len(steps):
                _fail(f"attack path {raw['id']!r}: effort profile {k} has {len(units)} "
                      f"entries for {len(steps)} steps")
            cid = path.id if len(profiles) == 1 else f"{path.id}#{k}"
            concrete.append(ConcreteAttackPath(cid, path.id, tuple(enumerate(units))))

    thresholds: dict[str, dict[str, float]] = {}
    for scope, per_type in data.get("overhead_thresholds", {}).items():
        values = {}
        for kind, value in per_type.items():
            theta = math.inf if value is None or value == "inf" else float(value)
            if theta < 1:
                _fail(f"overhead threshold {kind} for {scope!r} is {theta}; thresholds must be >= 1")
            values[kind] = theta
        thresholds[scope] = MappingProxyType(values)

    model = ApplicationModel(
        artifacts=MappingProxyType(artifacts),
        pos=tuple(pos),
        attack_paths=MappingProxyType(paths),
        concrete_paths=tuple(concrete),
        overhead_thresholds=MappingProxyType(thresholds),
        extras=MappingProxyType({
            k: v for k, v in data.items() if k in ("candidate_solutions", "scripted_tree")
        }),
    )
    targeted = {p.target_asset for p in paths.values()}
    for asset in model.assets:
        if asset not in targeted and not artifacts[asset].unattacked:
            logger.warning("asset %r has no attack path; it keeps its base measures", asset)
    return model


def load_model(path, kb=None) -> ApplicationModel:
    return model_from_dict(read_json(path), kb)
