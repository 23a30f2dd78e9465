import json
from dataclasses import replace

import pytest

from ringlink import experiments as ex
from ringlink.errors import ConfigurationError, OutOfCalibrationError
from ringlink.ring import InputEvent, MouseSymbol
from ringlink.scenario import Grid, load_scenario


def test_grid_shapes(nominal):
    assert len(ex.snr_grid("distance", nominal)) == 11 * 4 + 11
    assert len(ex.snr_grid("angle", nominal)) == 8
    assert len(ex.snr_grid("power", nominal)) == 9
    assert len(ex.snr_grid("symbol", nominal)) == 6
    with pytest.raises(ConfigurationError):
        ex.snr_grid("humidity", nominal)


def test_sweep_is_deterministic(nominal):
    a = ex.run_snr_sweep("power", nominal)
    b = ex.run_snr_sweep("power", nominal)
    assert a == b
    c = ex.run_snr_sweep("power", replace(nominal, seed=12))
    assert [r["snr"] for r in a] != [r["snr"] for r in c]


def test_out_of_envelope_grid_lists_points(nominal):
    bad = replace(nominal, grid=Grid(angles_deg=(0.0, 75.0, 90.0)))
    with pytest.raises(ConfigurationError, match="grid angle 75"):
        ex.run_snr_sweep("angle", bad)


def test_envelope_checked_per_point(nominal):
    # a grid that only the per-point check can see: tilt beyond the calibrated range
    sc = replace(nominal, geometry=replace(nominal.geometry, ring_tilt=25.0))
    with pytest.raises((ConfigurationError, OutOfCalibrationError), match="ring_tilt 25"):
        ex.run_snr_sweep("angle", sc)


def test_symbol_axis_rows(nominal):
    rows = ex.run_snr_sweep("symbol", nominal)
    assert [r["series"] for r in rows] == [s.value for s in MouseSymbol]
    assert all(r["snr"] > 15 for r in rows)


def test_round_trip_noiseless_is_perfect(nominal):
    rep = ex.round_trip_accuracy(nominal, 600, seed=2, noise_std_db=0.0)
    assert rep.accuracy == 1.0
    assert rep.confusion.shape == (6, 7)
    assert rep.n == 600


def test_accuracy_report_dict(nominal):
    d = ex.round_trip_accuracy(nominal, 100, seed=2).to_dict()
    assert d["decoded_labels"][-1] == "rejected"
    assert set(d["per_label_accuracy"]) == {s.value for s in MouseSymbol}
    json.dumps(d)


def test_random_script_holds_drawn_symbols():
    events = ex.random_event_script(300, seed=4)
    times = [e.t for e in events]
    assert times == sorted(times)
    kinds = {e.kind for e in events}
    assert kinds <= {"scroll", "press", "release"}


def test_pipeline_noiseless_all_symbols(scenario_dir):
    sc = load_scenario(f"{scenario_dir}/noiseless.cfg")
    res = ex.run_pipeline(sc)
    assert res.report.accuracy == 1.0
    decoded = {s for s in res.decoded if s is not None}
    assert decoded == set(MouseSymbol)


def test_pipeline_deterministic(scenario_dir):
    sc = load_scenario(f"{scenario_dir}/nominal.cfg")
    a, b = ex.run_pipeline(sc), ex.run_pipeline(sc)
    assert [e.to_json() for e in a.events] == [e.to_json() for e in b.events]
    assert [x.to_json() for x in a.actions] == [x.to_json() for x in b.actions]


def test_pipeline_standby_frames_are_rejected(scenario_dir):
    sc = load_scenario(f"{scenario_dir}/standby_wake.cfg")
    res = ex.run_pipeline(sc, noise_std_db=0.0)
    assert res.extra["standby_frames"] > 0
    assert res.report.accuracy == 1.0
    assert "standby" in res.sent


def test_pipeline_diagonal_alternates(nominal):
    events = [InputEvent(0.0, "scroll", 1, 1), InputEvent(0.5, "release")]
    res = ex.run_pipeline(nominal, events=events, tail_s=0.0, noise_std_db=0.0)
    seen = res.decoded[:10]
    assert seen == [MouseSymbol.SCROLL_UP, MouseSymbol.SCROLL_RIGHT] * 5


def test_pipeline_needs_events(nominal):
    with pytest.raises(ConfigurationError, match="event_script"):
        ex.run_pipeline(nominal)


def test_pipeline_nominal_random_symbols(nominal):
    res = ex.run_pipeline(nominal, events=ex.random_event_script(2000, 8))
    assert res.report.accuracy >= 0.99


def test_power_report():
    rep = ex.run_power_report()
    assert len(rep.table3) == 3
    for c in rep.cross_check.values():
        assert c["relative_difference"] < 0.02
