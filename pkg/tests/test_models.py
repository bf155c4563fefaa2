"""The published config schema in docs/ must track the pydantic models."""

import json
import os

import pytest

from app.models.report import GRID_CASES, QUBIT_CASES, ScenarioConfig, normalize_case_id

SCHEMA_PATH = os.path.join(os.path.dirname(__file__), "..", "docs", "scenario_config.schema.json")


@pytest.fixture(scope="module")
def published():
    with open(SCHEMA_PATH, "r", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture(scope="module")
def generated():
    return ScenarioConfig.model_json_schema()


def test_top_level_fields_match(published, generated):
    assert set(published["properties"]) == set(generated["properties"])
    assert set(published["required"]) == set(generated["required"])
    assert published["additionalProperties"] is False


def test_nested_models_match(published, generated):
    assert set(published["$defs"]) == set(generated["$defs"])
    for name, block in generated["$defs"].items():
        assert set(published["$defs"][name]["properties"]) == set(block["properties"]), name
        assert published["$defs"][name]["additionalProperties"] is False, name
        assert block["additionalProperties"] is False, name


def test_enumerations_match(published, generated):
    assert published["properties"]["system"]["enum"] == generated["properties"]["system"]["enum"]
    assert published["properties"]["output_format"]["enum"] == generated["properties"]["output_format"]["enum"]
    kinds = generated["$defs"]["WavepacketSpec"]["properties"]["kind"]["enum"]
    assert published["$defs"]["WavepacketSpec"]["properties"]["kind"]["enum"] == kinds


def test_case_ids_documented(published):
    described = published["properties"]["case_id"]["description"]
    for case in set(GRID_CASES) | set(QUBIT_CASES):
        assert f" {case}" in described, case
    assert normalize_case_id(" b′ ") == "b'"
