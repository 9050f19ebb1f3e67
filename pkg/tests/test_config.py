import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orisvlc import config as cfgmod
from orisvlc.config import ConfigParseError, RunConfig, SchemaViolation


def test_default_config_round_trip_is_byte_stable():
    text = cfgmod.default_config_text()
    assert cfgmod.dumps(cfgmod.loads(text)) == text


def test_default_config_matches_code_defaults():
    assert cfgmod.default_config() == RunConfig()


def test_default_config_has_documented_parameters():
    doc = json.loads(cfgmod.default_config_text())
    assert doc["scene"]["reflectance_wall"] == 0.4 and doc["scene"]["reflectance_oris"] == 0.95
    assert doc["radio"]["subcarriers"] == 512 and doc["radio"]["bandwidth_hz"] == 20e6
    assert doc["radio"]["total_power_w"] == 10.0 and doc["radio"]["noise_psd_w_per_hz"] == 2.5e-20
    assert doc["scene"]["pd"] == {"area_m2": 1e-4, "fov_deg": 40.0, "responsivity_a_per_w": 0.4}
    assert doc["scene"]["half_power_semiangle_deg"] == 80.0
    assert doc["solver"]["epsilon"] == 1e-3


@settings(max_examples=20)
@given(st.sampled_from([(15, 2), (30, 5), (90, 20), (30, 0)]), st.integers(0, 2**31 - 1),
       st.floats(0.05, 1.0), st.sampled_from(["total", "subcarrier"]))
def test_round_trip_of_modified_configs(grid, seed, refl, mode):
    doc = json.loads(cfgmod.default_config_text())
    doc["scene"]["oris_grid"] = list(grid)
    doc["scene"]["reflectance_wall"] = refl
    doc["experiment"]["master_seed"] = seed
    doc["radio"]["noise_bandwidth"] = mode
    text = cfgmod.dumps(cfgmod.from_dict(doc))
    assert cfgmod.dumps(cfgmod.loads(text)) == text


def test_missing_optional_keys_take_defaults():
    cfg = cfgmod.from_dict({"scene": {}, "radio": {}, "solver": {}, "experiment": {}})
    assert cfg == RunConfig()


def test_invalid_json_is_a_parse_error():
    with pytest.raises(ConfigParseError):
        cfgmod.loads("{not json")


@pytest.mark.parametrize("path, value", [
    (("radio", "subcarriers"), "many"),
    (("scene", "oris_grid"), [30]),
    (("solver", "epsilon"), -1.0),
    (("scene", "bogus"), 1),
])
def test_schema_violations(path, value):
    doc = json.loads(cfgmod.default_config_text())
    doc[path[0]][path[1]] = value
    with pytest.raises(SchemaViolation):
        cfgmod.from_dict(doc)


def test_semantic_violation_led_outside_ceiling():
    doc = json.loads(cfgmod.default_config_text())
    doc["scene"]["led_positions_xy"] = [[5.0, 1.0]]
    with pytest.raises(SchemaViolation):
        cfgmod.from_dict(doc)


def test_responsivity_is_shared_with_radio():
    doc = json.loads(cfgmod.default_config_text())
    doc["scene"]["pd"]["responsivity_a_per_w"] = 0.5
    assert cfgmod.from_dict(doc).radio.responsivity == 0.5


def test_campaign_solver_uses_campaign_node_limit():
    cfg = RunConfig()
    assert cfg.campaign_solver().node_limit == cfg.experiment.node_limit
