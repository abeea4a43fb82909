import math

import numpy as np
import pytest

from direct_image_lab.errors import ConfigError, ScenarioError
from direct_image_lab.pipelines import (
    CHECKS,
    build_context,
    parse_section,
    resolve_weight,
    run_scenario,
)
from direct_image_lab.config import CHECK_NAMES
from direct_image_lab.scenarios import ScenarioConfig, load_catalog


def _config(**overrides):
    data = {
        "scenario_id": "fock_small",
        "weight": {"family_id": "fock_scaled"},
        "basis_cutoff": 8,
        "t_grid": [0, 0.5],
        "checks": ["psh", "nakano", "hormander_31"],
    }
    data.update(overrides)
    return ScenarioConfig.from_dict(data)


def test_every_check_is_registered():
    assert set(CHECKS) == set(CHECK_NAMES)


def test_fock_checks_pass():
    report = run_scenario(_config())
    assert report.passed
    assert [r.check for r in report.records] == ["psh", "psh", "nakano", "nakano", "hormander_31", "hormander_31"]
    nakano = [r.value for r in report.records if r.check == "nakano"]
    assert nakano == pytest.approx([1.0, 1 / 1.25 ** 2], rel=1e-8)
    assert report.quadrature[0]["degree"] == 8


def test_runs_are_deterministic():
    assert run_scenario(_config()).to_json() == run_scenario(_config()).to_json()


def test_progress_callback():
    seen = []
    run_scenario(_config(), on_check=seen.append)
    assert seen == ["psh", "nakano", "hormander_31"]


def test_failing_check_is_reported_not_raised():
    cfg = _config(
        weight={"family_id": "quadratic", "params": {"hermitian": [[-1, 0], [0, 1]]}},
        checks=["psh"],
    )
    report = run_scenario(cfg)
    assert not report.passed
    assert report.records[0].value == pytest.approx(-1.0)


def test_module_error_names_scenario_and_check():
    cfg = _config(fiber={"kind": "p1", "l": 4}, weight={"family_id": "fs_family", "params": {"l": 4}},
                  checks=["nakano", "subbundle_24"])
    with pytest.raises(ScenarioError) as info:
        run_scenario(cfg)
    assert info.value.scenario_id == "fock_small"
    assert info.value.check == "subbundle_24"
    assert "[fock_small/subbundle_24]" in str(info.value)


def test_setup_error():
    with pytest.raises(ScenarioError) as info:
        run_scenario(_config(weight={"family_id": "kaehler_ricci"}))
    assert info.value.check == "setup"


def test_empty_check_list():
    report = run_scenario(_config(checks=[]))
    assert report.records == []
    assert report.passed
    assert len(report.quadrature) == 1


@pytest.mark.parametrize("scenario_id", list(load_catalog()))
def test_catalog_scenarios_pass(scenario_id):
    report = run_scenario(load_catalog()[scenario_id])
    failing = [(r.check, r.detail, r.value) for r in report.records if not r.passed]
    assert not failing


def test_extension_product_value():
    report = run_scenario(load_catalog()["extension_product"])
    values = [r.value for r in report.records if r.check == "extension_ratio"]
    assert values[-1] == pytest.approx(math.pi, rel=1e-8)
    assert any(q["domain"].startswith("disk") for q in report.quadrature)


def test_resolve_weight():
    combo = resolve_weight({
        "family_id": "combination",
        "params": {"terms": [[1.0, {"family_id": "mobius_flow", "params": {"l": 4}}],
                             [-1.0, {"family_id": "fs_family", "params": {"l": 4}}]]},
    })
    z = np.array([0.5j])
    expected = 4 * np.log1p(abs(0.5j - 0.2) ** 2) - 4 * np.log1p(0.25)
    np.testing.assert_allclose(combo(0.2, z), expected)
    induced = resolve_weight({
        "family_id": "proj_induced",
        "params": {"metric": {"kind": "conformal", "c": 1.0}, "l": 3},
    })
    np.testing.assert_allclose(induced(0.5, np.array([0.0])), 3 * 0.25)
    with pytest.raises(ConfigError):
        resolve_weight({"family_id": "proj_induced", "params": {"metric": {"kind": "hyperbolic"}, "l": 3}})


def test_parse_section():
    np.testing.assert_array_equal(parse_section(2, 4), [0, 0, 1, 0])
    np.testing.assert_array_equal(parse_section([1, "0.5j"], 3), [1, 0.5j, 0])
    np.testing.assert_array_equal(parse_section(None, 2), [0, 0])
    with pytest.raises(ConfigError):
        parse_section(4, 4)
    with pytest.raises(ConfigError):
        parse_section([1, 2, 3], 2)


def test_context_tuples():
    ctx = build_context(_config(weight={"family_id": "fock_scaled", "params": {"m": 2}}, t_grid=[[0, 0]]))
    assert ctx.m == 2
    assert len(ctx.frame_tuples()) == 3 * 9
    with pytest.raises(ConfigError):
        ctx.tuples({"tuples": [[0]]})
    assert ctx.fixture_value("c2")[0] == pytest.approx(math.pi)
    assert ctx.fixture_value("2.5") == (2.5, None)
    with pytest.raises(ConfigError):
        ctx.fixture_value("no_such_fixture")


def test_path_checks_need_weights():
    cfg = _config(fiber={"kind": "p1", "l": 4}, weight={"family_id": "fs_family", "params": {"l": 4}},
                  checks=["toeplitz_61"])
    with pytest.raises(ScenarioError) as info:
        run_scenario(cfg)
    assert isinstance(info.value.cause, ConfigError)


def _catalog(scenario_id, **overrides):
    data = load_catalog()[scenario_id].to_dict()
    data.update(overrides)
    return ScenarioConfig.from_dict(data)


def test_hormander_tuples_see_the_full_curvature():
    # the connection of fock_general raises the z-degree, so the top monomials need a wider frame
    padded = run_scenario(_catalog("fock_general", checks=["hormander_31"]))
    assert padded.passed
    assert {r.extra["pad"] for r in padded.records} == {2}
    truncated = run_scenario(_catalog("fock_general", checks=["hormander_31"], options={"hormander_31": {"pad": 0}}))
    assert min(r.value for r in truncated.records) < min(r.value for r in padded.records)


def test_degeneracy_residual_is_pinned():
    report = run_scenario(_catalog("fs_positive", checks=["degeneracy_5"]))
    assert report.passed
    pinned = [r for r in report.records if "pinned degeneracy_fs" in r.detail]
    assert len(pinned) == 1
    assert pinned[0].value == pytest.approx(0.3 ** 3 / (2 * (16 - 0.3 ** 4)), rel=5e-3)
    # V = t̄·z·(1+|z|²)/(…) vanishes at t = 0
    assert report.records[0].value <= 1e-9


def test_degeneracy_reference_mismatch_fails():
    wrong = {"degeneracy_5": {"reference": {"t": 0.3, "fixture": 1.2e-3}}}
    report = run_scenario(_catalog("fs_positive", checks=["degeneracy_5"], options=wrong))
    assert [r.passed for r in report.records] == [True, False, True, True]


def test_degeneracy_reference_off_grid():
    off_grid = {"degeneracy_5": {"reference": {"t": 0.5, "fixture": "degeneracy_fs"}}}
    with pytest.raises(ScenarioError) as info:
        run_scenario(_catalog("fs_positive", checks=["degeneracy_5"], options=off_grid))
    assert isinstance(info.value.cause, ConfigError)


def test_expected_values_use_absolute_tolerance():
    # E(3) curvature is 3; an offset of 2e-4 exceeds 1e-4 even though it is below 1e-4·3
    options = {
        "nakano": {"expected": 3.0002, "expected_atol": 1e-4},
        "theorem_71": {"m_list": [1], "expected": {1: 3.0002}},
    }
    report = run_scenario(_catalog("proj_rank2_conformal", checks=["nakano", "theorem_71"], options=options))
    assert not any(r.passed for r in report.records)
    exact = {"nakano": {"expected": 3.0, "expected_atol": 1e-4}, "theorem_71": {"m_list": [1], "expected": {1: 3.0}}}
    report = run_scenario(_catalog("proj_rank2_conformal", checks=["nakano", "theorem_71"], options=exact))
    assert report.passed


def test_extension_ratio_stays_below_two_pi():
    report = run_scenario(load_catalog()["extension_fs"])
    values = [r.value for r in report.records]
    assert all(math.isfinite(v) and 0 < v <= 2 * math.pi for v in values)
    assert report.passed
