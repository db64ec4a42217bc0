import pytest

from funcreg_lab import synthgen as sg
from funcreg_lab.expconfig import (ConfigError, ExperimentConfig, config_hash,
                                   desk_profile, paper_profile, parse_config,
                                   serialize_config, validate_config)


def test_empty_file_gives_paper_defaults():
    cfg = parse_config("")
    assert cfg.world_kind == sg.KIND_AUTO_ENCODER
    assert cfg.d == 100
    assert cfg.r == 30
    assert cfg.unlabeled == 10_000
    assert cfg.labeled_sweep == (10_000,)
    assert cfg.test == 1_000
    assert cfg.runs == 10


def test_parse_and_round_trip():
    text = """
# example configuration
[world]
kind = masked
d = 41
r = 10
zero_mean = true

[data]
unlabeled = 2000
labeled_sweep = 100, 500
test = 200

[sweep]
axis = labeled_size
runs = 3
seed = 11

[train]
lr_grid = 1e-4, 1e-3
momentum = 0.8
tau = none

[output]
dir = results
"""
    cfg = parse_config(text)
    assert cfg.world_kind == sg.KIND_MASKED
    assert cfg.d == 41 and cfg.r == 10 and cfg.zero_mean
    assert cfg.labeled_sweep == (100, 500)
    assert cfg.lr_grid == (1e-4, 1e-3)
    assert cfg.tau is None
    assert cfg.out_dir == "results"
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


def test_unknown_key_reports_line_number():
    with pytest.raises(ConfigError) as err:
        parse_config("[world]\nbogus = 3\n")
    assert "line 2" in str(err.value)
    assert "bogus" in str(err.value)


def test_unknown_section_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config("[nonsense]\n")
    assert "line 1" in str(err.value)


def test_type_mismatch_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config("[world]\nd = fifty\n")
    assert "line 2" in str(err.value)


def test_setting_outside_section_rejected():
    with pytest.raises(ConfigError):
        parse_config("d = 50\n")
    with pytest.raises(ConfigError):
        parse_config("[world]\njust words\n")


def test_constraint_violation_r_too_large():
    with pytest.raises(ConfigError) as err:
        parse_config("[world]\nd = 100\nr = 60\n")
    assert "r < d/2" in str(err.value)
    assert "line 3" in str(err.value)


def test_masked_constraint():
    with pytest.raises(ConfigError) as err:
        parse_config("[world]\nkind = masked\nd = 21\nr = 10\n")
    assert "r < (d-1)/2" in str(err.value)


def test_sweep_values_validated_against_world():
    with pytest.raises(ConfigError):
        parse_config("[world]\nd = 100\nr = 30\n"
                     "[sweep]\naxis = d\nvalues = 50, 80\n")
    cfg = parse_config("[world]\nd = 100\nr = 30\n"
                       "[sweep]\naxis = d\nvalues = 70, 80\n")
    assert cfg.sweep_values == (70, 80)


def test_axis_none_requires_single_labeled_size():
    with pytest.raises(ConfigError):
        validate_config(ExperimentConfig(labeled_sweep=(10, 20)))


def test_profiles_are_valid():
    for kind in (sg.KIND_AUTO_ENCODER, sg.KIND_MASKED):
        desk = desk_profile(kind)
        assert desk.d == 50 and desk.r == 15 and desk.runs == 5
        assert desk.labeled_sweep == (100, 500, 2000, 5000)
        paper = paper_profile(kind)
        assert paper.d == 100 and paper.r == 30
        assert paper.unlabeled == 10_000
        # profile text parses back to itself
        assert parse_config(serialize_config(desk)) == desk
