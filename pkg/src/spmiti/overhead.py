"""Linear overhead estimates and per-CCS threshold checks."""
from __future__ import annotations

import math
from collections.abc import Iterable

from .errors import UnknownOverheadType
from .model import Artifact
from .vocab import INSTRUCTIONS, ONLINE_OVERHEADS, OVERHEAD_TYPES


def dsp_overhead(kind: str, cp, artifact: Artifact) -> float:
    """Percentage points one deployed CP adds to overhead ``kind``."""
    if kind in ONLINE_OVERHEADS and not cp.online:
        return 0.0
    coeffs = cp.overhead_coeffs.get(kind)
    if coeffs is None:
        return 0.0
    return coeffs.base + coeffs.per_instruction * artifact.vanilla_metrics.get(INSTRUCTIONS)


def overhead(kind: str, s, arts: Iterable[Artifact], kb) -> float:
    """Estimated ratio of overhead ``kind`` after and before applying ``s`` on ``arts``."""
    if kind not in OVERHEAD_TYPES:
        raise UnknownOverheadType(kind)
    by_id = {a.id: a for a in arts}
    parts = [
        dsp_overhead(kind, kb.cps[d.cp_id], by_id[d.artifact_id])
        for d in s
        if d.artifact_id in by_id
    ]
    return 1.0 + math.fsum(parts) / 100.0


def overheads(s, arts: Iterable[Artifact], kb) -> dict[str, float]:
    arts = list(arts)
    return {kind: overhead(kind, s, arts, kb) for kind in OVERHEAD_TYPES}


def within_thresholds(s, ccs, kb, model) -> bool:
    """Whether every overhead of ``s`` over the CCS closure stays within its threshold."""
    arts = [model.artifacts[a] for a in ccs.closure]
    for kind, theta in ccs.thresholds.items():
        if math.isinf(theta):
            continue
        if overhead(kind, s, arts, kb) > theta:
            return False
    return True
