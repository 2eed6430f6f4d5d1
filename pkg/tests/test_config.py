import math

import pytest

from llosim.config import env_overrides, load_config, schedule_from, spectrum_from
from llosim.controllers import Feedback, HffMoving
from llosim.errors import ConfigurationError

BASE = """
[spectrum]
exponent = 1.0
f_low = 0.01
f_cut = 100.0

[schedule]
n_cycles = 4
cycle_time = 1.0
duty_factor = 0.5

[[controllers]]
kind = "feedback"

[[controllers]]
kind = "hff_moving"
n = 2
coeff_mode = "mmse"

[ensemble]
size = 10
seed = 3
"""


def write(tmp_path, text):
    p = tmp_path / "run.toml"
    p.write_text(text)
    return p


def test_load_basic(tmp_path):
    cfg = load_config(write(tmp_path, BASE), workers=1)
    assert cfg.spectrum.omega_low == pytest.approx(2 * math.pi * 0.01)
    assert cfg.controllers == (Feedback(), HffMoving(2, coeff_mode="mmse"))
    assert cfg.seed == 3 and cfg.ensemble_size == 10
    assert len(cfg.schedule().windows) == 4
    assert len(cfg.digest) == 64


def test_explicit_arguments_win(tmp_path):
    cfg = load_config(write(tmp_path, BASE), seed="7", out="elsewhere", workers="2", fmt="json")
    assert cfg.seed == 7 and cfg.workers == 2
    assert cfg.output.format == "json" and str(cfg.output.directory) == "elsewhere"


def test_env_overrides():
    env = {"LLOSIM_SEED": "9", "LLOSIM_FORMAT": "json", "LLOSIM_OUT": "", "OTHER": "x"}
    assert env_overrides(env) == {"seed": "9", "format": "json"}


def test_seed_required(tmp_path):
    with pytest.raises(ConfigurationError) as exc:
        load_config(write(tmp_path, BASE.replace("seed = 3", "")))
    assert exc.value.field == "ensemble.seed"


@pytest.mark.parametrize(
    "old,new,field",
    [
        ("duty_factor = 0.5", "duty_factor = 1.5", "schedule.duty_factor"),
        ("f_cut = 100.0", "f_cut = 0.001", "spectrum"),
        ("exponent = 1.0", 'exponent = "one"', "spectrum.exponent"),
        ('coeff_mode = "mmse"', 'coeff_mode = "best"', "controller.coeff_mode"),
        ("size = 10", "size = 0", "ensemble.size"),
    ],
)
def test_validation_names_field(tmp_path, old, new, field):
    with pytest.raises(ConfigurationError) as exc:
        load_config(write(tmp_path, BASE.replace(old, new)))
    assert exc.value.field == field


def test_bad_format_and_workers(tmp_path):
    p = write(tmp_path, BASE)
    with pytest.raises(ConfigurationError):
        load_config(p, fmt="xml")
    with pytest.raises(ConfigurationError):
        load_config(p, workers="0")
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.toml")
    with pytest.raises(ConfigurationError):
        load_config(write(tmp_path, "[spectrum"))


def test_spur_comb_fraction():
    s = spectrum_from(
        {"exponent": 1.0, "f_low": 0.01, "f_cut": 100.0, "comb": {"f_start": 1.15, "f_step": 0.15, "count": 10, "fraction": 3.0}}
    )
    assert len(s.spurs) == 10
    assert s.spurs[0].omega == pytest.approx(2 * math.pi * 1.15)


def test_schedule_ramsey_form():
    s = schedule_from({"n_cycles": 2, "ramsey": [0.8, 0.2], "dead_time": 1.0})
    assert len(s.windows) == 4
    assert s.correction_times[0] == pytest.approx(2.0)
