import logging
import math

import pytest

from conftest import tiny_kb_dict, tiny_model_dict
from spmiti.errors import ValidationError
from spmiti.kb import kb_from_dict
from spmiti.model import Artifact, joint, model_from_dict


def _load(mutate=None):
    d = tiny_model_dict()
    if mutate:
        mutate(d)
    return model_from_dict(d, kb_from_dict(tiny_kb_dict()))


def test_scripted_model(scripted_model):
    assert scripted_model.assets == ("a1", "a2")
    assert [p.id for p in scripted_model.paths_against("a1")] == ["K1"]
    assert [c.id for c in scripted_model.concrete_paths] == ["K1", "K2"]
    assert scripted_model.overhead_thresholds["global"]["client_time"] == 1.5


def test_concrete_ids_and_efforts():
    def two_profiles(d):
        d["attack_paths"][1]["efforts"] = [[1, 1], [2, 3]]

    m = _load(two_profiles)
    ids = [c.id for c in m.concrete_paths]
    assert ids == ["K", "L#0", "L#1"]
    assert m.concrete_paths[2].units_per_step() == {0: 2, 1: 3}
    assert m.concrete_paths[0].units_per_step() == {0: 2}


def test_threshold_infinity_spellings():
    m = _load(lambda d: d.update(overhead_thresholds={"global": {"client_time": "inf",
                                                                 "network": None,
                                                                 "client_mem": 2}}))
    th = m.overhead_thresholds["global"]
    assert math.isinf(th["client_time"]) and math.isinf(th["network"])
    assert th["client_mem"] == 2.0


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda d: d["artifacts"][1].update(lines=[15, 25]), "nest"),
        (lambda d: d["artifacts"][0]["vanilla_metrics"].update(remote_instructions=3), "must be 0"),
        (lambda d: d["artifacts"][0]["vanilla_metrics"].update(cyclomatic=0), "cyclomatic >= 1"),
        (lambda d: d["artifacts"].append({"id": "v", "kind": "datum",
                                          "vanilla_metrics": {"cyclomatic": 1}}), "cyclomatic 0"),
        (lambda d: d["artifacts"][0].update(lines=[30, 10]), "start"),
        (lambda d: d["artifacts"].append(dict(d["artifacts"][0])), "duplicate artifact"),
        (lambda d: d["protection_objectives"].append(dict(d["protection_objectives"][0])),
         "duplicate protection objective"),
        (lambda d: d["protection_objectives"][0].update(artifact="zz"), "unknown artifact"),
        (lambda d: d["attack_paths"][0]["steps"][0].update(step="zz"), "unknown attack step"),
        (lambda d: d["attack_paths"][0].update(target="zz"), "unknown artifact"),
        (lambda d: d["attack_paths"][0].update(efforts=[[1, 1]]), "effort profile"),
        (lambda d: d.update(overhead_thresholds={"global": {"client_time": 0.5}}), ">= 1"),
        (lambda d: d["artifacts"][0].update(depends_on=["ghost"]), "depends_on"),
        (lambda d: d["protection_objectives"][0].update(weight=-1), "schema"),
    ],
)
def test_rejects_bad_models(mutate, fragment):
    with pytest.raises(ValidationError) as err:
        _load(mutate)
    assert fragment in str(err.value)


def test_warns_about_unattacked_assets(caplog):
    def drop_paths(d):
        d["attack_paths"] = d["attack_paths"][:1]

    with caplog.at_level(logging.WARNING, logger="spmiti"):
        _load(drop_paths)
    assert "'b'" in caplog.text

    caplog.clear()

    def flag(d):
        drop_paths(d)
        d["artifacts"][1]["unattacked"] = True

    with caplog.at_level(logging.WARNING, logger="spmiti"):
        _load(flag)
    assert "'b'" not in caplog.text


def test_jointness():
    outer = Artifact("o", "code", "f.c", (1, 100))
    inner = Artifact("i", "code", "f.c", (10, 20))
    other = Artifact("x", "code", "g.c", (10, 20))
    later = Artifact("l", "code", "f.c", (101, 120))
    assert joint(outer, inner)
    assert not joint(inner, other)
    assert not joint(outer, later)
    var = Artifact("v", "datum", depends_on=frozenset({"l"}))
    assert joint(var, later) and joint(later, var)
    assert not joint(var, inner)
