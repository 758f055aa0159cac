import dataclasses
import math

import pytest

from spmiti.errors import DegenerateVanillaWarning, UnknownMetric, UnknownOverheadType
from spmiti.metrics import potency, predict_metric, predict_vector, ratio_minus_one
from spmiti.model import Artifact, MetricVector
from spmiti.overhead import dsp_overhead, overhead, overheads, within_thresholds
from spmiti.prep import compute_ccs
from spmiti.solution import VANILLA, Solution


def test_vanilla_prediction_is_identity(tiny):
    kb, model = tiny
    a = model.artifacts["a"]
    assert predict_vector(VANILLA, a, kb) == a.vanilla_metrics
    for metric in ("halstead", "cyclomatic"):
        assert potency(metric, a, VANILLA, kb) == 0.0


def test_fold_in_deployment_order(tiny):
    kb, model = tiny
    a = model.artifacts["a"]
    s = Solution.of(("x", "a"), ("x", "a"))
    assert predict_metric("halstead", s, a, kb) == 400.0
    assert predict_metric("cyclomatic", s, a, kb) == 9.0
    assert potency("halstead", a, s, kb) == 3.0
    # protections on other artifacts leave this one alone
    assert predict_vector(Solution.of(("x", "b")), a, kb) == a.vanilla_metrics


def test_shares_capped_at_instruction_count(tiny):
    kb, model = tiny
    small = dataclasses.replace(model.artifacts["a"], id="a",
                                vanilla_metrics=MetricVector(halstead=5, cyclomatic=1, instructions=10))
    v = predict_vector(Solution.of(("g", "a")), small, kb)
    assert v.remote_instructions == 10.0


def test_unknown_metric(tiny):
    kb, model = tiny
    with pytest.raises(UnknownMetric):
        predict_metric("entropy", VANILLA, model.artifacts["a"], kb)


def test_zero_vanilla_warns():
    with pytest.warns(DegenerateVanillaWarning):
        assert ratio_minus_one(5.0, 0.0, "halstead of v") == 0.0
    assert ratio_minus_one(3.0, 2.0) == 0.5


def test_overhead_sums_percentages(tiny):
    kb, model = tiny
    a = model.artifacts["a"]
    s = Solution.of(("x", "a"), ("g", "a"))
    # x: 10 + 0.1 * 50 points, g: 5 points on client time; g alone adds network
    assert overhead("client_time", s, [a], kb) == pytest.approx(1.20)
    assert overhead("network", s, [a], kb) == pytest.approx(1.20)
    assert overheads(VANILLA, [a], kb) == {k: 1.0 for k in overheads(VANILLA, [a], kb)}
    # artifacts outside the given set do not count
    assert overhead("client_time", s, [model.artifacts["b"]], kb) == 1.0


def test_online_overheads_need_online_cp(tiny):
    kb, model = tiny
    offline = dataclasses.replace(kb.cps["g"], online=False)
    assert dsp_overhead("network", offline, model.artifacts["a"]) == 0.0
    assert dsp_overhead("network", kb.cps["g"], model.artifacts["a"]) == 20.0
    assert dsp_overhead("client_mem", kb.cps["g"], model.artifacts["a"]) == 0.0


def test_unknown_overhead_type(tiny):
    kb, model = tiny
    with pytest.raises(UnknownOverheadType):
        overhead("disk", VANILLA, [], kb)


def test_threshold_check(tiny):
    kb, model = tiny
    ccs = compute_ccs(model, kb)[0]
    s = Solution.of(("x", "a"))
    assert within_thresholds(s, ccs, kb, model)
    tight = dataclasses.replace(ccs, thresholds={**ccs.thresholds, "client_time": 1.1})
    assert not within_thresholds(s, tight, kb, model)
    assert within_thresholds(VANILLA, tight, kb, model)
    exact = dataclasses.replace(ccs, thresholds={**ccs.thresholds, "client_time": 1.15})
    assert within_thresholds(s, exact, kb, model)
    assert math.isinf(ccs.thresholds["network"])


def test_datum_artifact_potency(tiny):
    kb, _ = tiny
    var = Artifact("v", "datum", vanilla_metrics=MetricVector(halstead=0))
    with pytest.warns(DegenerateVanillaWarning):
        assert potency("halstead", var, Solution.of(("c", "v")), kb) == 0.0
