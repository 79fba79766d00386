import json
import math

import numpy as np
import pytest

import rdoe


def test_models_and_presets():
    assert {"case1", "case2", "case3", "case4", "case4-ctm"} <= set(rdoe.models())
    assert rdoe.presets()[0] == "case1"
    cfg = json.loads(rdoe.preset_config("case2"))
    assert cfg["N"] == 4


def test_case1_values():
    y = rdoe.evaluate("case1", [1.0], [1.0])
    assert y[0] == pytest.approx(1.0 - math.exp(-1.0))
    q = rdoe.sensitivity("case1", [1.0], [1.0])
    assert q.shape == (1, 1)
    f = rdoe.fim("case1", [1.0], np.array([[1.0], [1.0]]), [1.0 / 30.0])
    assert f[0, 0] == pytest.approx(1800.0 * math.exp(-2.0))
    assert rdoe.a_criterion(f) == pytest.approx(1.0 / f[0, 0])
    assert rdoe.chi2_quantile(0.05, 2) == pytest.approx(-2.0 * math.log(0.05))


def test_nominal_design_at_reciprocal():
    d = rdoe.design_nominal("case1", [1.5], 2, [1.0 / 30.0])
    assert np.allclose(d["controls"], 1.0 / 1.5, atol=1e-4)


def test_robust_designs():
    scenarios = [[0.5], [1.0], [1.5]]
    mm = rdoe.design_robust("case1", "minmax", scenarios, 2, [1.0 / 30.0])
    sc = rdoe.design_robust("case1", "scenario", scenarios, 2, [1.0 / 30.0])
    ts = rdoe.design_two_stage("case1", scenarios, 2, 1, [1.0 / 30.0])
    assert ts["objective"] <= sc["objective"] * (1 + 1e-9)
    assert mm["controls"].shape == (2, 1)
    assert len(ts["recourse"]) == 3
    with pytest.raises(ValueError):
        rdoe.design_robust("case1", "bayes", scenarios, 2, [1.0 / 30.0])


def test_estimate_noiseless():
    u = np.array([[0.5], [1.0], [2.0], [4.0]])
    y = np.array([rdoe.evaluate("case2", [1.2, 0.8], row) for row in u])
    e = rdoe.estimate("case2", u, y, [1.0 / 30.0], [0.5, 0.5], [1.5, 1.5])
    assert np.allclose(e["p_hat"], [1.2, 0.8], atol=1e-5)
    assert e["half_widths"] is not None


def test_underdetermined_raises():
    with pytest.raises(rdoe.UnderdeterminedData):
        rdoe.estimate("case2", np.array([[1.0]]), np.array([[0.5]]), [0.1], [0.5, 0.5], [1.5, 1.5])


def test_cli_round_trip(tmp_path):
    code, out, err = rdoe.run_cli(["design", "-p", "case1", "-o", str(tmp_path)])
    assert code == 0, err
    design = json.loads((tmp_path / "design.json").read_text())
    assert np.allclose(design["controls"], 1.0, atol=1e-4)
    code, _, err = rdoe.run_cli(["design", "-p", "nope"])
    assert code == 2
    assert err.startswith("error:")
