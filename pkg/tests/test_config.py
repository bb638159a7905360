"""Tests for the tunable-constants container."""

import pytest

from editsketch.config import DEFAULTS, Constants, load_constants, save_constants
from editsketch.errors import ParameterError


def test_defaults_validate():
    DEFAULTS.validate()


def test_json_round_trip(tmp_path):
    path = tmp_path / "consts.json"
    save_constants(DEFAULTS, path)
    assert load_constants(path) == DEFAULTS


def test_load_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"c_q": 5, "warp_factor": 9}')
    with pytest.raises(ParameterError):
        load_constants(path)


def test_partial_override_keeps_other_defaults(tmp_path):
    path = tmp_path / "partial.json"
    path.write_text('{"c_q": 7}')
    got = load_constants(path)
    assert got.c_q == 7
    assert got.c_L == DEFAULTS.c_L


def test_invalid_values_rejected():
    with pytest.raises(ParameterError):
        Constants(c_q=-1).validate()
    with pytest.raises(ParameterError):
        Constants(b1_floor=48).validate()
    with pytest.raises(ParameterError):
        Constants(b1_floor=512, b1_cap=256).validate()
