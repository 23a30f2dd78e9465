import glob
import os

import pytest

from ringlink.errors import ConfigurationError
from ringlink.readout import NOISY_ENVIRONMENT_OFFSET_DB
from ringlink.scenario import Grid, Scenario, load_scenario, parse_grid


def test_parse_grid_forms():
    assert parse_grid("0.10:0.20:0.01") == tuple(round(0.10 + 0.01 * i, 12) for i in range(11))
    assert parse_grid("-30:60:30") == (-30.0, 0.0, 30.0, 60.0)
    assert parse_grid("-30, 0, 30") == (-30.0, 0.0, 30.0)
    with pytest.raises(ConfigurationError):
        parse_grid("1:2")
    with pytest.raises(ConfigurationError):
        parse_grid("1:2:0")


def test_default_grid():
    g = Grid()
    assert len(g.distances_m) == 11 and g.distances_m[-1] == 0.2
    assert g.powers_dbm == (-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0)


def test_every_shipped_scenario_validates(scenario_dir):
    paths = glob.glob(os.path.join(scenario_dir, "*.cfg"))
    assert len(paths) >= 6
    for path in paths:
        sc = load_scenario(path).validate()
        assert sc.seed is not None


def test_noisy_profile_raises_floor():
    sc = Scenario(noise_profile="noisy_environment")
    assert sc.effective_bridge.floor_db == sc.bridge.floor_db + NOISY_ENVIRONMENT_OFFSET_DB


def test_seed_is_mandatory():
    with pytest.raises(ConfigurationError, match="seed"):
        Scenario().require_seed()
    assert Scenario(seed=3).require_seed() == 3
    assert Scenario(seed=3).require_seed(9) == 9
    with pytest.raises(ConfigurationError):
        Scenario().require_seed(-1)


def _write(tmp_path, text, name="s.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_coarse_sweep_rejected_before_simulation(tmp_path):
    sc = load_scenario(_write(tmp_path, "[scenario]\nseed = 1\n[sweep]\nn_points = 21\n"))
    with pytest.raises(ConfigurationError, match="spacing"):
        sc.validate()


def test_unknown_keys_and_sections(tmp_path):
    with pytest.raises(ConfigurationError, match="unknown keys"):
        load_scenario(_write(tmp_path, "[scenario]\nseeed = 1\n"))
    with pytest.raises(ConfigurationError, match="unknown section"):
        load_scenario(_write(tmp_path, "[extras]\na = 1\n"))


def test_bad_values(tmp_path):
    with pytest.raises(ConfigurationError):
        load_scenario(_write(tmp_path, "[sweep]\nn_points = many\n"))
    with pytest.raises(ConfigurationError):
        load_scenario(_write(tmp_path, "[geometry]\ndistance_m = 0\n"))
    with pytest.raises(ConfigurationError):
        load_scenario(tmp_path / "missing.cfg")


def test_problems_listed(tmp_path):
    text = ("[scenario]\nseed = 1\nnoise_profile = loud\nevent_script = nope.ndjson\n"
            "[geometry]\nbend_angle_deg = 90\n[grid]\nangles_deg = -45, 0\n"
            "[bridge]\nz_ref_real = 60\n")
    problems = load_scenario(_write(tmp_path, text)).problems()
    joined = " | ".join(problems)
    for fragment in ("noise_profile", "bend_angle 90", "grid angle -45", "unbalanced", "not found"):
        assert fragment in joined


def test_relative_paths_resolve_against_file(tmp_path):
    (tmp_path / "ev.ndjson").write_text('{"t": 0, "kind": "press"}\n')
    (tmp_path / "cal.cfg").write_text("k_tilted = 0.004\n")
    sc = load_scenario(_write(tmp_path, "[scenario]\nseed = 1\nevent_script = ev.ndjson\ncalibration = cal.cfg\n"))
    assert sc.event_script == tmp_path / "ev.ndjson"
    assert sc.calibration.k_tilted == 0.004
    sc.validate()


def test_system_overrides(nominal):
    s = nominal.system(ring_frequency=27.32e6, input_power_dbm=0.0, noise_std_db=2.0)
    assert s.ring.resonant_frequency == pytest.approx(27.32e6)
    assert s.bridge.input_power_dbm == 0.0
    assert s.sweep.noise_std_db == 2.0
