"""Predicted post-protection metrics and potency."""
from __future__ import annotations

import warnings

from .errors import DegenerateVanillaWarning, UnknownMetric
from .model import Artifact, MetricVector
from .vocab import INSTRUCTION_SHARES, INSTRUCTIONS, METRICS


def _check(metric: str) -> None:
    if metric not in METRICS:
        raise UnknownMetric(metric)


def predict_vector(s, artifact: Artifact, kb) -> MetricVector:
    """Fold every CP deployed on ``artifact`` over its vanilla metric vector.

    Each CP maps ``value -> value * multiplier + offset`` per metric, in
    deployment order. Values are clamped at 0 and the instruction shares are
    capped at the predicted instruction count after every step.
    """
    cps = s.on(artifact.id)
    if not cps:
        return artifact.vanilla_metrics
    values = artifact.vanilla_metrics.as_dict()
    for cp_id in cps:
        for metric, (mult, offset) in kb.cps[cp_id].metric_deltas.items():
            values[metric] = max(values[metric] * mult + offset, 0.0)
        for share in INSTRUCTION_SHARES:
            values[share] = min(values[share], values[INSTRUCTIONS])
    return MetricVector(**values)


def predict_metric(metric: str, s, artifact: Artifact, kb) -> float:
    _check(metric)
    return predict_vector(s, artifact, kb).get(metric)


def ratio_minus_one(predicted: float, vanilla: float, what: str = "", warn: bool = True) -> float:
    if vanilla == 0:
        if warn:
            warnings.warn(f"vanilla {what or 'metric'} is 0; potency taken as 0",
                          DegenerateVanillaWarning, stacklevel=3)
        return 0.0
    return predicted / vanilla - 1.0


def potency(metric: str, artifact: Artifact, s, kb) -> float:
    """Relative growth of ``metric`` on ``artifact`` under solution ``s``."""
    _check(metric)
    return ratio_minus_one(
        predict_metric(metric, s, artifact, kb),
        artifact.vanilla_metrics.get(metric),
        f"{metric} of {artifact.id}",
    )
