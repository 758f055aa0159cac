"""Attack likelihood, the four security measures, and the protection index of a state.

Sign convention of the index: 0 is the unprotected baseline, positive values
mean the solution still mitigates the attacks, negative values mean at least
one measure was driven below its breach floor.
"""
from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import TYPE_CHECKING

from .errors import UnknownStep
from .metrics import predict_vector, ratio_minus_one
from .solution import VANILLA, Solution
from .vocab import (
    CC,
    CT,
    CYCLOMATIC,
    DEFAULT_REQUIREMENT_MEASURES,
    GUARDED_INSTRUCTIONS,
    HALSTEAD,
    INSTRUCTIONS,
    LOCAL_INSTRUCTIONS,
    MEASURES,
    REMOTE_INSTRUCTIONS,
    TA,
    TD,
)

if TYPE_CHECKING:
    from .kb import KnowledgeBase
    from .model import ApplicationModel, Artifact, ConcreteAttackPath


def _per_measure(value, default: float, name: str) -> dict[str, float]:
    if value is None:
        return {m: default for m in MEASURES}
    if isinstance(value, Mapping):
        unknown = set(value) - set(MEASURES)
        if unknown:
            raise ValueError(f"{name}: unknown measure(s) {sorted(unknown)}")
        return {m: float(value.get(m, default)) for m in MEASURES}
    return {m: float(value) for m in MEASURES}


@dataclass(frozen=True)
class IndexConfig:
    """Weights, breach penalties and breach floors per measure, plus attacker expertise."""

    tau: Mapping[str, float] = field(default_factory=lambda: {m: 1.0 for m in MEASURES})
    rho: Mapping[str, float] = field(default_factory=lambda: {m: 1000.0 for m in MEASURES})
    epsilon: Mapping[str, float] = field(default_factory=lambda: {m: 0.05 for m in MEASURES})
    expertise: float = 1.0
    requirement_measures: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_REQUIREMENT_MEASURES)
    )
    check_rho_scale: bool = True

    def __post_init__(self):
        for name in ("tau", "rho", "epsilon"):
            table = getattr(self, name)
            for m in MEASURES:
                v = table.get(m)
                if v is None or not math.isfinite(v) or v < 0:
                    raise ValueError(f"{name}[{m}] must be a finite value >= 0, got {v}")
        if self.check_rho_scale:
            for m in MEASURES:
                if self.rho[m] < 10 * self.tau[m]:
                    raise ValueError(
                        f"rho[{m}]={self.rho[m]} is below 10 x tau[{m}]={self.tau[m]}; "
                        "set check_rho_scale to false to allow it"
                    )
        if not math.isfinite(self.expertise) or self.expertise <= 0:
            raise ValueError(f"expertise must be a finite value > 0, got {self.expertise}")
        for req, ms in self.requirement_measures.items():
            bad = set(ms) - set(MEASURES)
            if bad:
                raise ValueError(f"requirement {req!r} maps to unknown measure(s) {sorted(bad)}")

    @classmethod
    def from_dict(cls, data: Mapping) -> IndexConfig:
        known = {"tau", "rho", "epsilon", "expertise", "requirement_measures", "check_rho_scale"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown key(s) {sorted(extra)}")
        req = dict(DEFAULT_REQUIREMENT_MEASURES)
        for r, ms in data.get("requirement_measures", {}).items():
            req[r] = tuple(ms)
        return cls(
            tau=_per_measure(data.get("tau"), 1.0, "tau"),
            rho=_per_measure(data.get("rho"), 1000.0, "rho"),
            epsilon=_per_measure(data.get("epsilon"), 0.05, "epsilon"),
            expertise=float(data.get("expertise", 1.0)),
            requirement_measures=req,
            check_rho_scale=bool(data.get("check_rho_scale", True)),
        )

    def measures_for(self, requirement: str) -> tuple[str, ...]:
        """Measures that count toward a requirement; unknown requirements use all four."""
        return tuple(self.requirement_measures.get(requirement, MEASURES))


@dataclass(frozen=True)
class State:
    """A solution together with the concrete attack paths invested so far."""

    solution: Solution = VANILLA
    paths: tuple[ConcreteAttackPath, ...] = ()

    def extend(self, *paths: ConcreteAttackPath) -> State:
        return State(self.solution, self.paths + tuple(paths))


def step_success_prob(step_id: str, artifact: Artifact, n: int, kb: KnowledgeBase,
                      expertise: float = 1.0) -> float:
    """Success probability of ``n`` unit efforts on one step: 1 - (1 - p)^n."""
    if n < 1:
        raise ValueError(f"effort units must be >= 1, got {n}")
    step = kb.attack_steps.get(step_id)
    if step is None:
        raise UnknownStep(step_id)
    base = step.base_prob.get(artifact.kind)
    if base is None:
        raise UnknownStep(f"{step_id} has no base probability for {artifact.kind} artifacts")
    p = min(base * expertise, 1.0)
    if p == 1.0:
        return 1.0
    return 1.0 - (1.0 - p) ** n


def mitigation(artifact_id: str, s: Solution, step_id: str, kb: KnowledgeBase) -> float:
    """Product of the mitigation factors of the CPs on the artifact and their pairwise synergies."""
    cps = s.on(artifact_id)
    mu = 1.0
    for cp in cps:
        mu *= kb.cps[cp].mitigation.get(step_id, 1.0)
    if kb.synergy:
        for i, first in enumerate(cps):
            for second in cps[i + 1:]:
                mu *= kb.synergy.get((step_id, first, second), 1.0)
    return mu


def likelihood(s: Solution, cpath: ConcreteAttackPath, model: ApplicationModel,
               kb: KnowledgeBase, expertise: float | None = None) -> float:
    """Probability that the concrete attack path succeeds against ``s``."""
    if expertise is None:
        expertise = kb.measure_config.expertise
    path = model.attack_paths[cpath.path_id]
    lam = 1.0
    for index, n in sorted(cpath.units_per_step().items()):
        step_id, art_id = path.steps[index]
        artifact = model.artifacts[art_id]
        factor = mitigation(art_id, s, step_id, kb) * step_success_prob(
            step_id, artifact, n, kb, expertise
        )
        lam *= min(factor, 1.0)
    return min(max(lam, 0.0), 1.0)


def raw_measures(asset: Artifact, s: Solution, kb: KnowledgeBase, warn: bool = True) -> dict[str, float]:
    """The four unattenuated measures of an asset under ``s``."""
    vanilla = asset.vanilla_metrics
    predicted = predict_vector(s, asset, kb)
    pot = ratio_minus_one(predicted.get(HALSTEAD), vanilla.get(HALSTEAD),
                          f"halstead of {asset.id}", warn)
    pot += ratio_minus_one(predicted.get(CYCLOMATIC), vanilla.get(CYCLOMATIC),
                           f"cyclomatic of {asset.id}", warn and asset.kind == "code")
    ins = predicted.get(INSTRUCTIONS)
    ins0 = vanilla.get(INSTRUCTIONS)
    return {
        CC: max(pot, 0.0),
        CT: predicted.get(REMOTE_INSTRUCTIONS) / ins0 if ins0 > 0 else 0.0,
        TD: predicted.get(GUARDED_INSTRUCTIONS) / ins if ins > 0 else 0.0,
        TA: predicted.get(LOCAL_INSTRUCTIONS) / ins if ins > 0 else 0.0,
    }


def raw_measure(measure_id: str, asset: Artifact, s: Solution, kb: KnowledgeBase) -> float:
    if measure_id not in MEASURES:
        raise KeyError(measure_id)
    return raw_measures(asset, s, kb)[measure_id]


def breach_adjusted(adjusted: float, tau: float, rho: float, epsilon: float) -> float:
    """tau * M' - rho * H(epsilon - M'), with H(0) = 0."""
    return tau * adjusted - (rho if epsilon - adjusted > 0 else 0.0)


def _measure_value(adjusted: float, raw: float, tau: float, rho: float, epsilon: float) -> float:
    # A measure that was 0 before any attack never protected anything, so it
    # cannot be breached; this keeps the vanilla state at exactly 0.
    if raw <= 0:
        return tau * adjusted
    return breach_adjusted(adjusted, tau, rho, epsilon)


class Evaluator:
    """Memoizing protection-index evaluator for one model, KB and configuration.

    ``pos`` restricts the outer sum to a subset of protection objectives.
    ``scope`` maps each asset to a group label; when given, an asset is only
    attenuated by attack paths whose target lies in the same group. Without
    it every path of the state attenuates every asset.
    """

    def __init__(self, model: ApplicationModel, kb: KnowledgeBase, cfg: IndexConfig | None = None,
                 pos: Sequence | None = None, scope: Mapping[str, str] | None = None):
        self.model = model
        self.kb = kb
        self.cfg = cfg or kb.measure_config
        self.pos = tuple(model.pos if pos is None else pos)
        self.scope = None if scope is None else MappingProxyType(dict(scope))
        self._raw: dict[tuple[str, str], dict[str, float]] = {}
        self._lam: dict[tuple[str, str], float] = {}
        self._warned = False

    def raw(self, s: Solution, asset_id: str) -> dict[str, float]:
        key = (s.key, asset_id)
        hit = self._raw.get(key)
        if hit is None:
            hit = raw_measures(self.model.artifacts[asset_id], s, self.kb, warn=not self._warned)
            self._warned = True
            self._raw[key] = hit
        return hit

    def lam(self, s: Solution, cpath: ConcreteAttackPath) -> float:
        key = (s.key, cpath.id)
        hit = self._lam.get(key)
        if hit is None:
            hit = likelihood(s, cpath, self.model, self.kb, self.cfg.expertise)
            self._lam[key] = hit
        return hit

    def _group(self, asset_id: str):
        return None if self.scope is None else self.scope.get(asset_id, asset_id)

    def attenuation(self, state: State, asset_id: str) -> float:
        """Product of (1 - likelihood) over the relevant paths, in path-id order."""
        group = self._group(asset_id)
        factor = 1.0
        for cpath in sorted(state.paths, key=lambda p: p.id):
            if group is not None:
                target = self.model.attack_paths[cpath.path_id].target_asset
                if self._group(target) != group:
                    continue
            factor *= 1.0 - self.lam(state.solution, cpath)
        return factor

    def terms(self, state: State) -> list[tuple[object, str, float, float]]:
        """(PO, measure, adjusted measure, weighted contribution) for every counted measure."""
        out = []
        attenuation: dict[str, float] = {}
        for po in self.pos:
            raw = self.raw(state.solution, po.artifact_id)
            if po.artifact_id not in attenuation:
                attenuation[po.artifact_id] = self.attenuation(state, po.artifact_id)
            att = attenuation[po.artifact_id]
            for m in self.cfg.measures_for(po.requirement):
                adjusted = att * raw[m]
                value = _measure_value(adjusted, raw[m], self.cfg.tau[m], self.cfg.rho[m],
                                       self.cfg.epsilon[m])
                out.append((po, m, adjusted, po.weight * value))
        return out

    def evaluate(self, state: State) -> float:
        return math.fsum(t[3] for t in self.terms(state))


def adjusted_measure(measure_id: str, asset_id: str, state: State, model: ApplicationModel,
                     kb: KnowledgeBase, cfg: IndexConfig | None = None,
                     scope: Mapping[str, str] | None = None) -> float:
    ev = Evaluator(model, kb, cfg, scope=scope)
    return ev.attenuation(state, asset_id) * ev.raw(state.solution, asset_id)[measure_id]


def measure(measure_id: str, asset_id: str, state: State, model: ApplicationModel,
            kb: KnowledgeBase, cfg: IndexConfig | None = None,
            scope: Mapping[str, str] | None = None) -> float:
    cfg = cfg or kb.measure_config
    ev = Evaluator(model, kb, cfg, scope=scope)
    raw = ev.raw(state.solution, asset_id)[measure_id]
    adjusted = ev.attenuation(state, asset_id) * raw
    return _measure_value(adjusted, raw, cfg.tau[measure_id], cfg.rho[measure_id],
                          cfg.epsilon[measure_id])


def sp_index(state: State, model: ApplicationModel, kb: KnowledgeBase,
             cfg: IndexConfig | None = None, scope: Mapping[str, str] | None = None) -> float:
    """Weighted sum over protection objectives of their requirement-relevant measures."""
    return Evaluator(model, kb, cfg, scope=scope).evaluate(state)
