from __future__ import annotations

import math

import pytest

from cli.config import (
    DEFAULT_N_VALUES,
    PRESETS,
    RunConfig,
    dump_config_text,
    load_config,
    parse_config_text,
    parse_overrides,
)
from core.entities import Mechanism
from core.errors import ConfigurationError


def test_presets_hold_caption_values() -> None:
    assert PRESETS["fig2"] == {
        "f0": 1.0e5,
        "f_lambda": 100.0,
        "temperature": 10.0,
        "mass": 2.3e-16,
        "n_pulses": 100,
        "t_min": 0.0,
        "t_max": 5.0e-4,
        "n_points": 5001,
    }
    assert PRESETS["fig3"] == {
        "f0": 1.0e5,
        "f_lambda": 100.0,
        "quality_factor": 1.0e9,
        "qubit_t1": 7.0e-3,
        "qubit_t2": 1.0e-4,
        "mass": 2.3e-16,
        "temperature": 300.0,
        "temperatures": [1.0, 300.0],
        "n_pulses": 126,
    }


@pytest.mark.parametrize("preset", ["fig2", "fig3"])
def test_round_trip_is_identity(preset: str) -> None:
    config = load_config(preset=preset, overrides=["mechanisms=Q,T1", "out=result.csv"])
    again = RunConfig.parse_obj(parse_config_text(dump_config_text(config)))
    assert again == config


def test_units_are_converted() -> None:
    values = parse_config_text(
        """
        # oscillator
        f0 = 100 kHz
        t_max = 500 us   # fifty periods
        mass = 0.23 fg
        temperatures = 1 K, 300 mK
        """
    )
    assert values["f0"] == 1.0e5
    assert values["t_max"] == pytest.approx(5.0e-4)
    assert values["mass"] == pytest.approx(2.3e-16)
    assert values["temperatures"] == pytest.approx([1.0, 0.3])


@pytest.mark.parametrize(
    "text",
    ["f0 = 1 parsec", "colour = blue", "f0 100 kHz", "f0 = many Hz", "= 3"],
)
def test_bad_text_is_a_configuration_error(text: str) -> None:
    with pytest.raises(ConfigurationError):
        parse_config_text(text)


def test_single_grid_point_is_rejected() -> None:
    with pytest.raises(ValueError):
        load_config(preset="fig2", overrides=["n_points=1"])


def test_physical_invariants_are_checked_at_parse_time() -> None:
    with pytest.raises(ValueError):
        load_config(preset="fig2", overrides=["f_lambda=2e5"])
    with pytest.raises(ValueError):
        load_config(preset="fig2", overrides=["readout_contrast=0"])


def test_precedence_preset_file_overrides_flags(tmp_path) -> None:
    path = tmp_path / "run.conf"
    path.write_text("n_pulses = 40\nseed = 3\nn_points = 11\n", encoding="utf-8")
    config = load_config(preset="fig2", path=path, overrides=["seed=5"], flags={"seed": 7, "out": None})
    assert config.n_pulses == 40
    assert config.n_points == 11
    assert config.seed == 7
    assert config.out is None
    assert config.f0 == 1.0e5


def test_default_time_window_covers_one_sequence() -> None:
    config = load_config(preset="fig3")
    assert config.t_max == pytest.approx(126 / 2.0e5)
    assert config.sweep_temperatures() == [1.0, 300.0]
    assert config.system_spec(1.0).temperature == 1.0
    assert config.system_spec().quality_factor == 1.0e9


def test_mechanisms_are_normalised() -> None:
    config = load_config(preset="fig2", overrides=["mechanisms = q, t2"])
    assert config.mechanisms == (Mechanism.T2, Mechanism.Q)
    assert load_config(preset="fig2", overrides=["mechanisms="]).mechanism_set() == frozenset()
    assert parse_overrides(["mechanisms=T1"]) == {"mechanisms": ["T1"]}


def test_workers_default_from_environment(monkeypatch) -> None:
    monkeypatch.setenv("COMBSENSE_WORKERS", "3")
    assert load_config(preset="fig2").workers == 3


def test_unknown_preset() -> None:
    with pytest.raises(ConfigurationError):
        load_config(preset="fig9")


def test_default_pulse_grid() -> None:
    assert DEFAULT_N_VALUES[0] == 2
    assert 256 in DEFAULT_N_VALUES
    assert 258 not in DEFAULT_N_VALUES
    assert DEFAULT_N_VALUES[-1] == 2048
    assert all(n % 2 == 0 for n in DEFAULT_N_VALUES)
    assert math.isinf(load_config(preset="fig2").quality_factor)
