"""Seeded synthetic knowledge bases and application models.

Used by the benchmark harness and by the randomized test corpora. Every
generator takes an explicit ``random.Random`` or seed, so instances are
reproducible across runs and platforms.
"""
from __future__ import annotations

import random

from .kb import KnowledgeBase, kb_from_dict
from .model import ApplicationModel, model_from_dict
from .vocab import CONFIDENTIALITY, INTEGRITY

REQUIREMENTS = (CONFIDENTIALITY, INTEGRITY)


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def random_kb_dict(seed, n_asps: int = 4, cps_per_asp: int = 2, n_steps: int = 3,
                   relations: bool = True, datum: bool = False,
                   base_prob: tuple[float, float] = (0.2, 0.9)) -> dict:
    rng = _rng(seed)
    steps = [{"id": f"k{i}", "base_prob": round(rng.uniform(*base_prob), 3)} for i in range(n_steps)]
    asps, cps, precedence, synergy = [], [], [], []
    for i in range(n_asps):
        reqs = rng.choice([[CONFIDENTIALITY], [INTEGRITY], [CONFIDENTIALITY, INTEGRITY]])
        kinds = ["code", "datum"] if datum and rng.random() < 0.3 else ["code"]
        asps.append({"id": f"P{i}", "kinds": kinds, "requirements": reqs,
                     "at_most_once": rng.random() < 0.5})
        for j in range(cps_per_asp):
            cps.append({
                "id": f"p{i}_{j}",
                "asp": f"P{i}",
                "online": rng.random() < 0.2,
                "metric_deltas": {
                    "halstead": {"multiplier": round(rng.uniform(1.0, 2.0), 3)},
                    "cyclomatic": {"multiplier": round(rng.uniform(1.0, 1.8), 3),
                                   "offset": rng.randint(0, 3)},
                    "instructions": {"multiplier": round(rng.uniform(1.0, 1.5), 3)},
                    "remote_instructions": {"offset": rng.choice([0, 0, 20, 60])},
                    "local_instructions": {"offset": rng.choice([0, 10, 40])},
                    "guarded_instructions": {"offset": rng.choice([0, 0, 30])},
                },
                "overheads": {"client_time": {"base": round(rng.uniform(0.5, 4.0), 2),
                                              "per_instruction": 0.01}},
                "mitigation": {s["id"]: round(rng.uniform(0.3, 1.0), 3)
                               for s in steps if rng.random() < 0.7},
            })
    if relations:
        for a in range(n_asps):
            for b in range(n_asps):
                if a == b:
                    continue
                roll = rng.random()
                if roll < 0.1:
                    precedence.append({"before": f"P{a}", "after": f"P{b}", "rel": "forbidden"})
                elif roll < 0.2:
                    precedence.append({"before": f"P{a}", "after": f"P{b}", "rel": "encouraged"})
                elif roll < 0.3:
                    precedence.append({"before": f"P{a}", "after": f"P{b}", "rel": "discouraged"})
        rel = {(p["before"], p["after"]): p["rel"] for p in precedence}
        for first in cps:
            for second in cps:
                r = rel.get((first["asp"], second["asp"]))
                if r in ("encouraged", "discouraged") and rng.random() < 0.5:
                    step = rng.choice(steps)["id"]
                    omega = rng.uniform(0.7, 0.95) if r == "encouraged" else rng.uniform(1.05, 1.4)
                    synergy.append({"step": step, "first": first["id"], "second": second["id"],
                                    "omega": round(omega, 3)})
    return {
        "kb_version": 1,
        "asps": asps,
        "cps": cps,
        "precedence": precedence,
        "synergy": synergy,
        "attack_steps": steps,
        "measure_config": {"tau": 1.0, "rho": 100.0, "epsilon": 0.02},
    }


def random_kb(seed, **kwargs) -> KnowledgeBase:
    return kb_from_dict(random_kb_dict(seed, **kwargs))


def _code(rng: random.Random, art_id: str, file: str, line: int) -> dict:
    return {
        "id": art_id,
        "kind": "code",
        "file": file,
        "lines": [line, line + 9],
        "vanilla_metrics": {
            "halstead": rng.randint(50, 500),
            "cyclomatic": rng.randint(1, 15),
            "instructions": rng.randint(40, 400),
        },
    }


def clustered_model_dict(seed, kb_dict: dict, clusters: list[tuple[int, int]],
                         max_steps: int = 3, max_units: int = 2, profiles: int = 1,
                         thresholds: dict | None = None) -> dict:
    """A model whose assets form independent clusters.

    ``clusters`` lists ``(asset_count, path_count)`` pairs. Each cluster lives
    in its own file inside an enclosing entry region, and every attack path
    starts on that entry region, so each cluster with at least one path is
    exactly one code correlation set. Paths are assigned to the cluster's
    assets round-robin.
    """
    rng = _rng(seed)
    steps = [s["id"] for s in kb_dict["attack_steps"]]
    artifacts, pos, paths = [], [], []
    for c, (n_assets, n_paths) in enumerate(clusters):
        file = f"cluster{c}.c"
        entry = f"c{c}_entry"
        # the entry region encloses every asset of the cluster
        module = _code(rng, entry, file, 1)
        module["lines"] = [1, 20 * (n_assets + 1)]
        artifacts.append(module)
        assets = []
        for a in range(n_assets):
            aid = f"c{c}_a{a}"
            artifacts.append(_code(rng, aid, file, 20 * (a + 1)))
            if a >= n_paths:
                artifacts[-1]["unattacked"] = True
            assets.append(aid)
            req = rng.choice(REQUIREMENTS)
            pos.append({"requirement": req, "artifact": aid,
                        "weight": round(rng.uniform(0.5, 2.0), 2)})
        for k in range(n_paths):
            target = assets[k % n_assets]
            req = next(p["requirement"] for p in pos if p["artifact"] == target)
            seq = [{"step": rng.choice(steps), "artifact": entry}]
            for _ in range(rng.randint(0, max_steps - 1)):
                seq.append({"step": rng.choice(steps), "artifact": rng.choice([entry, target])})
            path = {"id": f"c{c}_K{k}", "target": target, "requirement": req, "steps": seq}
            if profiles > 1 or max_units > 1:
                path["efforts"] = [[rng.randint(1, max_units) for _ in seq]
                                   for _ in range(profiles)]
            paths.append(path)
    data = {
        "model_version": 1,
        "artifacts": artifacts,
        "protection_objectives": pos,
        "attack_paths": paths,
    }
    if thresholds:
        data["overhead_thresholds"] = thresholds
    return data


def clustered_instance(seed, clusters: list[tuple[int, int]], kb_kwargs: dict | None = None,
                       **model_kwargs) -> tuple[KnowledgeBase, ApplicationModel]:
    rng = _rng(seed)
    kb_dict = random_kb_dict(rng, **(kb_kwargs or {}))
    kb = kb_from_dict(kb_dict)
    model = model_from_dict(clustered_model_dict(rng, kb_dict, clusters, **model_kwargs), kb)
    return kb, model


def bench_instance(seed: int, po_count: int, path_count: int) -> tuple[KnowledgeBase, ApplicationModel]:
    """A single-CCS instance with ``po_count`` POs and ``path_count`` attack paths.

    One asset per PO; all paths start on a shared entry artifact and are
    spread round-robin over the assets, so the two counts vary independently.
    Step probabilities are kept low: with likelier steps a few attacker turns
    breach every protected asset and the vanilla solution wins every cell.
    """
    rng = random.Random(seed)
    kb_dict = random_kb_dict(rng, n_asps=4, cps_per_asp=2, n_steps=3, relations=False,
                             base_prob=(0.02, 0.15))
    model = clustered_model_dict(rng, kb_dict, [(po_count, path_count)], max_steps=2, max_units=1)
    kb = kb_from_dict(kb_dict)
    return kb, model_from_dict(model, kb)
