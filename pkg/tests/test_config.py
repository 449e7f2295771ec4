from __future__ import annotations

import math

import pytest

from tracklite.config import CLASSES, FilterConfig, PipelineConfig, check_class
from tracklite.errors import ValidationError


def test_defaults_validate():
    assert PipelineConfig().validate() == PipelineConfig()


def test_class_names():
    assert CLASSES == ("car", "pedestrian", "cyclist")
    with pytest.raises(ValueError):
        check_class("truck")


@pytest.mark.parametrize(
    "data",
    [
        {"nope": {}},
        {"tracker": 3},
        {"tracker": {"deletion_threshold": 2.5}},
        {"tracker": {"deletion_threshold": "five"}},
        {"tracker": {"deletion_threshold": math.inf}},
        {"tracker": {"mode": "hybrid"}},
        {"tracker": {"mode": 1}},
        {"ground": {"enabled": 1}},
        {"filter": {"q_diag": 0.1}},
        {"filter": {"q_diag": [0.1, 0.1]}},
        {"filter": {"r_diag": [0.1, 0.1, 0.1, 25.0, math.nan]}},
        {"filter": {"init_var_velocity": 0.0}},
        {"cluster": {"tolerance": "wide"}},
        {"roi": {"forward_max": -1.0}},
        {"select": {"expected_extent": {"car": -4.5}}},
        {"gate": {"car_margin": 0.0}},
    ],
)
def test_rejects_bad_values(data):
    with pytest.raises(ValidationError):
        PipelineConfig.from_dict(data)


def test_partial_tables_merge():
    cfg = PipelineConfig.from_dict({"select": {"expected_extent": {"car": 5.0}}, "cluster": {"min_points": 3}})
    assert cfg.select.expected_extent == {"car": 5.0, "pedestrian": 0.8, "cyclist": 1.8}
    assert cfg.cluster.min_points == 3 and cfg.cluster.tolerance == 0.5


def test_integer_accepted_for_float():
    assert PipelineConfig.from_dict({"cluster": {"tolerance": 1}}).cluster.tolerance == 1.0


def test_dict_round_trip():
    cfg = PipelineConfig.from_dict({"filter": {"q_diag": [0.01] * 7}, "tracker": {"mode": "raw"}})
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg


def test_filter_tuples_normalised():
    assert FilterConfig(q_diag=[1, 2, 3, 4, 5, 6, 7]).q_diag == (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)
