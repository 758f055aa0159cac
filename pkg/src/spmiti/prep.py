"""Preparatory stage: compatible deployments per objective and code correlation sets."""
from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from statistics import fmean

from .errors import ConfigError, SplitError
from .kb import KnowledgeBase, compatible, enforces
from .model import GLOBAL_SCOPE, ApplicationModel, AttackPath, ProtectionObjective, joint
from .solution import DeployedProtection, Solution
from .vocab import OVERHEAD_TYPES

__all__ = [
    "CodeCorrelationSet",
    "DeployedProtection",
    "art",
    "ccs_stats",
    "compatible_dsps",
    "compute_ccs",
    "footprint",
    "format_ccs_row",
    "split_solution",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CodeCorrelationSet:
    id: str
    assets: tuple[str, ...]
    closure: frozenset[str]
    thresholds: Mapping[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "assets": list(self.assets),
            "closure": sorted(self.closure),
            "thresholds": {k: (None if math.isinf(v) else v) for k, v in self.thresholds.items()},
        }


def compatible_dsps(po: ProtectionObjective, model: ApplicationModel, kb: KnowledgeBase,
                    counter: Counter | None = None) -> frozenset[DeployedProtection]:
    """Every CP that fits the PO's artifact kind and enforces its requirement, deployed there."""
    artifact = model.artifacts[po.artifact_id]
    out = set()
    for cp in kb.cps.values():
        if counter is not None:
            counter["cp_checks"] += 1
        asp = kb.asps[cp.asp_id]
        if compatible(asp, artifact) and enforces(asp, po.requirement):
            out.add(DeployedProtection(cp.id, artifact.id))
    if not out:
        logger.warning("unprotectable PO (%s, %s): no compatible CP", po.requirement, po.artifact_id)
    return frozenset(out)


def art(asset, attack_paths: Iterable[AttackPath]) -> frozenset[str]:
    """Artifacts touched by any step of any attack path against ``asset``."""
    asset_id = getattr(asset, "id", asset)
    return frozenset(
        art_id
        for path in attack_paths
        if path.target_asset == asset_id
        for _, art_id in path.steps
    )


def footprint(asset_id: str, model: ApplicationModel) -> frozenset[str]:
    """The asset itself plus everything its attack paths touch."""
    return art(asset_id, model.attack_paths.values()) | {asset_id}


class _DisjointSet:
    def __init__(self, items: Iterable[str]):
        self.parent = {x: x for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller id as the representative so roots are stable
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _sets_joint(first: frozenset[str], second: frozenset[str], model: ApplicationModel) -> bool:
    if first & second:
        return True
    arts = model.artifacts
    return any(joint(arts[x], arts[y], model) for x in sorted(first) for y in sorted(second))


def compute_ccs(model: ApplicationModel, kb: KnowledgeBase | None = None,
                counter: Counter | None = None) -> list[CodeCorrelationSet]:
    """Partition the assets by transitive jointness of their attack footprints.

    Exactly one jointness test runs per unordered asset pair. CCS ids are the
    smallest asset id of each class, and the list is sorted by id.
    """
    assets = sorted(model.assets)
    prints = {a: footprint(a, model) for a in assets}
    dsu = _DisjointSet(assets)
    for i, a in enumerate(assets):
        for b in assets[i + 1:]:
            if counter is not None:
                counter["pair_tests"] += 1
            if _sets_joint(prints[a], prints[b], model):
                dsu.union(a, b)

    groups: dict[str, list[str]] = {}
    for a in assets:
        groups.setdefault(dsu.find(a), []).append(a)

    ids = {min(members) for members in groups.values()}
    unknown = set(model.overhead_thresholds) - ids - {GLOBAL_SCOPE}
    if unknown:
        raise ConfigError(f"overhead thresholds reference unknown CCS id(s) {sorted(unknown)}; "
                          f"known: {sorted(ids)}")
    default = model.overhead_thresholds.get(GLOBAL_SCOPE, {})

    out = []
    for members in groups.values():
        cid = min(members)
        explicit = model.overhead_thresholds.get(cid, {})
        thresholds = {
            kind: explicit.get(kind, default.get(kind, math.inf)) for kind in OVERHEAD_TYPES
        }
        closure = frozenset().union(*(prints[a] for a in members))
        out.append(CodeCorrelationSet(cid, tuple(sorted(members)), closure, thresholds))
    out.sort(key=lambda c: c.id)
    return out


def split_solution(s: Solution, ccs_list: Iterable[CodeCorrelationSet]) -> dict[str, Solution]:
    """Order-preserving partition of a solution across CCS closures."""
    ccs_list = list(ccs_list)
    owner = {}
    for ccs in ccs_list:
        for art_id in ccs.closure:
            owner[art_id] = ccs.id
    parts: dict[str, list[DeployedProtection]] = {c.id: [] for c in ccs_list}
    for dsp in s:
        cid = owner.get(dsp.artifact_id)
        if cid is None:
            raise SplitError(f"{dsp} is deployed on an artifact outside every CCS closure")
        parts[cid].append(dsp)
    return {cid: Solution(tuple(dsps)) for cid, dsps in parts.items()}


def ccs_stats(ccs_list: list[CodeCorrelationSet]) -> dict[str, float]:
    sizes = [len(c.assets) for c in ccs_list]
    if not sizes:
        return {"count": 0, "min_size": 0, "max_size": 0, "mean_size": 0.0}
    return {
        "count": len(sizes),
        "min_size": min(sizes),
        "max_size": max(sizes),
        "mean_size": round(fmean(sizes), 2),
    }


def format_ccs_row(name: str, po_count: int, ccs_list: list[CodeCorrelationSet]) -> str:
    """One line in the layout ``name  POs  #CCS  min-max  mean``."""
    st = ccs_stats(ccs_list)
    return (f"{name}\t{po_count}\t{st['count']}\t{st['min_size']}–{st['max_size']}"
            f"\t{st['mean_size']:.2f}")
