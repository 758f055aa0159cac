import json
from collections import Counter

import pytest

from conftest import KB_PATH, tiny_kb_dict, tiny_model_dict
from spmiti.errors import ConfigError, SplitError
from spmiti.kb import kb_from_dict
from spmiti.model import ProtectionObjective, model_from_dict
from spmiti.prep import (
    DeployedProtection,
    art,
    ccs_stats,
    compatible_dsps,
    compute_ccs,
    footprint,
    format_ccs_row,
    split_solution,
)
from spmiti.solution import Solution


def _model(mutate):
    d = tiny_model_dict()
    mutate(d)
    kb = kb_from_dict(tiny_kb_dict())
    return kb, model_from_dict(d, kb)


def test_compatible_dsps_by_filtering_the_raw_catalog(catalog_kb, scripted_model):
    raw = json.load(open(KB_PATH))
    asps = {a["id"]: a for a in raw["asps"]}
    expected = {
        DeployedProtection(cp["id"], "a1")
        for cp in raw["cps"]
        if "code" in asps[cp["asp"]]["kinds"] and "confidentiality" in asps[cp["asp"]]["requirements"]
    }
    counter = Counter()
    got = compatible_dsps(scripted_model.pos[0], scripted_model, catalog_kb, counter)
    assert got == expected
    assert counter["cp_checks"] == len(raw["cps"])


def test_unprotectable_po_logs(tiny, caplog):
    kb, model = tiny
    po = ProtectionObjective("availability", "a")
    assert compatible_dsps(po, model, kb) == frozenset()
    assert "unprotectable" in caplog.text


def test_footprint_and_art(tiny):
    kb, model = tiny
    assert art("b", model.attack_paths.values()) == {"entry", "b"}
    assert footprint("a", model) == {"a"}
    assert footprint("b", model) == {"b", "entry"}


def test_separate_sets(tiny):
    kb, model = tiny
    counter = Counter()
    ccs = compute_ccs(model, kb, counter)
    assert [c.id for c in ccs] == ["a", "b"]
    assert ccs[1].closure == {"b", "entry"}
    assert counter["pair_tests"] == 1


def test_shared_entry_merges(scripted_model, catalog_kb):
    ccs = compute_ccs(scripted_model, catalog_kb)
    assert len(ccs) == 1
    assert ccs[0].assets == ("a1", "a2")
    assert ccs[0].closure == {"a1", "a2", "main"}
    assert ccs[0].thresholds["client_time"] == 1.5


def test_nested_ranges_merge():
    # path K now also touches a region enclosing b
    def nest(d):
        d["artifacts"].append({"id": "mod", "kind": "code", "file": "f.c", "lines": [25, 45],
                               "vanilla_metrics": {"cyclomatic": 1}})
        d["attack_paths"][0]["steps"].append({"step": "s", "artifact": "mod"})
        d["attack_paths"][0]["efforts"] = [[2, 1]]

    kb, model = _model(nest)
    assert [c.assets for c in compute_ccs(model, kb)] == [("a", "b")]


def test_datum_dependencies_merge():
    def add_datum(d):
        d["artifacts"].append({"id": "key", "kind": "datum", "depends_on": ["a"],
                               "vanilla_metrics": {"halstead": 3}})
        d["protection_objectives"].append({"requirement": "integrity", "artifact": "key"})
        d["attack_paths"].append({"id": "M", "target": "key", "requirement": "integrity",
                                  "steps": [{"step": "t", "artifact": "key"}]})

    kb, model = _model(add_datum)
    assert [c.assets for c in compute_ccs(model, kb)] == [("a", "key"), ("b",)]


def test_threshold_resolution():
    def th(d):
        d["overhead_thresholds"] = {"global": {"client_time": 1.3, "network": 2.0},
                                    "b": {"client_time": 1.1}}

    kb, model = _model(th)
    a, b = compute_ccs(model, kb)
    assert a.thresholds["client_time"] == 1.3
    assert b.thresholds["client_time"] == 1.1
    assert b.thresholds["network"] == 2.0
    assert b.thresholds["client_mem"] == float("inf")


def test_unknown_threshold_scope():
    kb, model = _model(lambda d: d.update(overhead_thresholds={"zz": {"client_time": 1.2}}))
    with pytest.raises(ConfigError):
        compute_ccs(model, kb)


def test_split_solution(tiny):
    kb, model = tiny
    ccs = compute_ccs(model, kb)
    s = Solution.of(("x", "a"), ("c", "b"), ("g", "a"), ("x", "entry"))
    parts = split_solution(s, ccs)
    assert parts["a"] == Solution.of(("x", "a"), ("g", "a"))
    assert parts["b"] == Solution.of(("c", "b"), ("x", "entry"))
    with pytest.raises(SplitError):
        split_solution(Solution.of(("x", "elsewhere")), ccs)


def test_summary_row(tiny):
    kb, model = tiny
    ccs = compute_ccs(model, kb)
    assert ccs_stats(ccs) == {"count": 2, "min_size": 1, "max_size": 1, "mean_size": 1.0}
    assert format_ccs_row("demo", 2, ccs).split("\t") == ["demo", "2", "2", "1–1", "1.00"]
    assert ccs_stats([])["count"] == 0
