"""Experiment harness: SNR parameter sweeps, end-to-end pipeline replay,
round-trip decoding accuracy and the power report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .channel import LinkGeometry, check_envelope, coupling_coefficient
from .decoder import DecodedEvent, HostAction, classify_frequencies, detect_peaks_batch, stream_from_symbols
from .errors import ConfigurationError, OutOfCalibrationError
from .power import (
    BatteryModel,
    DutyCycle,
    PowerProfile,
    discharge_runtime,
    duty_load_series,
    lifespan,
    table2_rows,
    table3_rows,
)
from .readout import (
    calibrate_noise_std,
    clean_response_db,
    equalization_db,
    measure_snr,
    noise_stream,
)
from .ring import (
    CARRIERS,
    STANDBY_FREQUENCY,
    SYMBOLS,
    InputEvent,
    MouseSymbol,
    RingSimulator,
    held_states,
    load_event_script,
)
from .scenario import Scenario

AXES = ("distance", "angle", "power", "symbol")
SNR_COLUMNS = ("axis", "series", "distance_m", "bend_angle_deg", "ring_tilt_deg", "input_power_dbm",
               "ring_frequency_hz", "coupling_k", "snr", "mean_with_db", "mean_without_db", "std_without_db")
LABELS = tuple(s.value for s in SYMBOLS)

_PIPELINE_STREAM = 3
_ROUND_TRIP_STREAM = 4


@dataclass(frozen=True)
class GridPoint:
    series: str
    geometry: LinkGeometry
    input_power_dbm: float
    ring_frequency: float


def snr_grid(axis: str, scenario: Scenario) -> list[GridPoint]:
    """Grid points for one sweep axis.

    ``distance``: every grid angle with the scenario's ring tilt, plus a
    straight ring at the scenario angle. ``angle``: tilted and straight
    rings over the grid angles at the scenario distance. ``power`` and
    ``symbol`` hold the scenario geometry fixed.
    """
    g, grid, cal = scenario.geometry, scenario.grid, scenario.calibration
    p0, f0 = scenario.bridge.input_power_dbm, scenario.ring_frequency
    tilted = g.ring_tilt if g.ring_tilt > 0 else cal.tilted_tilt_deg
    if axis == "distance":
        pts = [GridPoint(f"tilted_{a:g}deg", LinkGeometry(d, a, tilted), p0, f0)
               for a in grid.angles_deg for d in grid.distances_m]
        pts += [GridPoint(f"straight_{g.bend_angle:g}deg", LinkGeometry(d, g.bend_angle, 0.0), p0, f0)
                for d in grid.distances_m]
        return pts
    if axis == "angle":
        return [GridPoint(name, LinkGeometry(g.distance, a, tilt), p0, f0)
                for name, tilt in (("tilted", tilted), ("straight", 0.0)) for a in grid.angles_deg]
    if axis == "power":
        return [GridPoint("power", g, p, f0) for p in grid.powers_dbm]
    if axis == "symbol":
        return [GridPoint(s.value, g, p0, CARRIERS[s]) for s in SYMBOLS]
    raise ConfigurationError(f"axis must be one of {AXES}, got {axis!r}")


def run_snr_sweep(axis: str, scenario: Scenario, seed: int | None = None) -> list[dict]:
    """One SNR row per grid point, each from ``scenario.snr_frames`` frames per population.

    Every grid point is checked against the calibration envelope before
    any simulation; offending points are listed in the error.
    """
    scenario.validate()
    seed = scenario.require_seed(seed)
    points = snr_grid(axis, scenario)
    bad = []
    for p in points:
        problems = check_envelope(p.geometry, scenario.calibration)
        if problems:
            bad.append(f"({p.geometry.distance} m, {p.geometry.bend_angle} deg): {'; '.join(problems)}")
    if bad:
        raise OutOfCalibrationError("grid points outside calibration envelope: " + " | ".join(bad))
    rows = []
    for p in points:
        system = scenario.system(p.ring_frequency, p.geometry, p.input_power_dbm)
        r = measure_snr(system, seed, scenario.snr_frames)
        rows.append({
            "axis": axis, "series": p.series,
            "distance_m": p.geometry.distance, "bend_angle_deg": p.geometry.bend_angle,
            "ring_tilt_deg": p.geometry.ring_tilt, "input_power_dbm": p.input_power_dbm,
            "ring_frequency_hz": p.ring_frequency,
            "coupling_k": coupling_coefficient(p.geometry, scenario.calibration),
            "snr": r.snr, "mean_with_db": r.mean_with_ring, "mean_without_db": r.mean_without_ring,
            "std_without_db": r.std_without_ring,
        })
    return rows


def tilt_gap(scenario: Scenario, seed: int | None = None) -> float:
    """Tilted minus straight SNR at the scenario's geometry, via the angle sweep."""
    rows = run_snr_sweep("angle", replace(scenario, grid=replace(scenario.grid,
                                                                 angles_deg=(scenario.geometry.bend_angle,))),
                         seed)
    by = {r["series"]: r["snr"] for r in rows}
    return by["tilted"] - by["straight"]


# --- decoding accuracy -----------------------------------------------------


@dataclass
class AccuracyReport:
    """Confusion counts, rows = sent label, columns = decoded label.

    ``expected[i]`` is the column that counts as correct for row ``i``.
    """

    row_labels: tuple
    col_labels: tuple
    confusion: np.ndarray
    expected: np.ndarray

    @property
    def n(self) -> int:
        return int(self.confusion.sum())

    @property
    def correct(self) -> int:
        return int(self.confusion[np.arange(len(self.row_labels)), self.expected].sum())

    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else float("nan")

    def per_label(self) -> dict:
        out = {}
        for i, lab in enumerate(self.row_labels):
            tot = int(self.confusion[i].sum())
            out[lab] = float(self.confusion[i, self.expected[i]] / tot) if tot else None
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n, "correct": self.correct, "accuracy": self.accuracy,
            "sent_labels": list(self.row_labels), "decoded_labels": list(self.col_labels),
            "confusion": self.confusion.tolist(), "per_label_accuracy": self.per_label(),
        }


def confusion_matrix(sent: np.ndarray, decoded: np.ndarray, n_rows: int, n_symbols: int) -> np.ndarray:
    """``decoded`` uses -1 for rejected; it lands in the extra last column."""
    d = np.where(np.asarray(decoded) < 0, n_symbols, decoded)
    m = np.zeros((n_rows, n_symbols + 1), dtype=np.int64)
    np.add.at(m, (np.asarray(sent), d), 1)
    return m


def _symbol_report(sent, decoded, with_standby: bool = False) -> AccuracyReport:
    k = len(SYMBOLS)
    rows = LABELS + (("standby",) if with_standby else ())
    expected = np.array(list(range(k)) + ([k] if with_standby else []))
    return AccuracyReport(rows, LABELS + ("rejected",), confusion_matrix(sent, decoded, len(rows), k), expected)


def _symbol_responses(scenario: Scenario, noise_std_db: float | None = None):
    sys0 = scenario.system(noise_std_db=noise_std_db)
    resp = np.stack([clean_response_db(scenario.system(CARRIERS[s])) for s in SYMBOLS])
    eq = equalization_db(sys0) if scenario.equalize else None
    return sys0, resp, eq


def round_trip_accuracy(scenario: Scenario, n_symbols: int, seed: int, noise_std_db: float | None = None,
                        chunk: int = 2000) -> AccuracyReport:
    """Send ``n_symbols`` uniformly random symbols through sweep and decoder."""
    sys0, resp, eq = _symbol_responses(scenario, noise_std_db)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _ROUND_TRIP_STREAM]))
    sent = rng.integers(0, len(SYMBOLS), n_symbols)
    m = sys0.sweep.n_points
    freqs = sys0.sweep.frequencies
    decoded = np.empty(n_symbols, dtype=np.int64)
    sigma = sys0.noise_std_db
    for a in range(0, n_symbols, chunk):
        idx = sent[a:a + chunk]
        p = resp[idx] + sigma * rng.standard_normal((idx.size, m))
        peak_f, _, _ = detect_peaks_batch(p, freqs, scenario.decoder, eq)
        decoded[a:a + chunk] = classify_frequencies(peak_f, scenario.decoder.carriers, scenario.decoder.guard_hz)
    return _symbol_report(sent, decoded)


def calibrated_noise(scenario: Scenario, target_snr: float) -> float:
    """Noise spread giving ``target_snr`` at the scenario's nominal geometry."""
    return calibrate_noise_std(scenario.system(), target_snr)


# --- full pipeline ---------------------------------------------------------


def random_event_script(n_symbols: int, seed: int, period: float = 0.05, t0: float = 0.0) -> list[InputEvent]:
    """A script that holds one random symbol per ``period`` seconds.

    Scrolls that follow a press are preceded by a release at the same
    instant, so every slot carries exactly the drawn symbol.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 5]))
    draws = rng.integers(0, len(SYMBOLS), n_symbols)
    dirs = {MouseSymbol.SCROLL_UP: (0, 1), MouseSymbol.SCROLL_DOWN: (0, -1),
            MouseSymbol.SCROLL_LEFT: (-1, 0), MouseSymbol.SCROLL_RIGHT: (1, 0)}
    events, pressed = [], False
    for i, k in enumerate(draws):
        t = round(t0 + i * period, 9)
        s = SYMBOLS[k]
        if s is MouseSymbol.NONE:
            events.append(InputEvent(t, "release"))
            pressed = False
        elif s is MouseSymbol.PRESS:
            events.append(InputEvent(t, "press"))
            pressed = True
        else:
            if pressed:
                events.append(InputEvent(t, "release"))
                pressed = False
            events.append(InputEvent(t, "scroll", *dirs[s]))
    return events


@dataclass
class PipelineResult:
    timestamps: np.ndarray
    sent: list  # symbol label per frame, "standby" while the ring is in STANDBY
    decoded: list  # MouseSymbol or None per frame
    events: list[DecodedEvent]
    actions: list[HostAction]
    report: AccuracyReport
    extra: dict = field(default_factory=dict)


def ring_schedule(events: Sequence[InputEvent], frame_times: np.ndarray) -> list[MouseSymbol | None]:
    """Symbol on the ring coil at each reader frame time (``None`` in STANDBY)."""
    sim = RingSimulator()
    states = list(held_states(events))
    out, j = [], 0
    for t in frame_times:
        while j < len(states) and states[j][0] <= t + 1e-12:
            sim.apply(*states[j])
            j += 1
        out.append(sim.resonance_at(max(float(t), sim.state.last_step_time)))
    return out


def run_pipeline(scenario: Scenario, seed: int | None = None, events: Sequence[InputEvent] | None = None,
                 tail_s: float = 1.0, noise_std_db: float | None = None) -> PipelineResult:
    """Replay an event script through ring, channel, readout and decoder.

    The expected label of a frame is the ring's symbol; STANDBY frames
    resonate at the out-of-band standby frequency and are correct when
    the decoder rejects them.
    """
    scenario.validate()
    seed = scenario.require_seed(seed)
    if events is None:
        if scenario.event_script is None:
            raise ConfigurationError("scenario has no event_script and no events were given")
        events = load_event_script(scenario.event_script)
    events = list(events)
    dt = 1.0 / scenario.sweep.frame_rate
    t_end = (events[-1].t if events else 0.0) + tail_s
    n = int(math.floor(t_end / dt + 1e-9)) + 1
    times = np.round(np.arange(n) * dt, 9)
    on_coil = ring_schedule(events, times)

    sys0 = scenario.system(noise_std_db=noise_std_db)
    freqs = sys0.sweep.frequencies
    keys = [s if s is not None else "standby" for s in on_coil]
    clean = {"standby": clean_response_db(scenario.system(STANDBY_FREQUENCY))}
    for s in SYMBOLS:
        clean[s] = clean_response_db(scenario.system(CARRIERS[s]))
    noise = noise_stream(seed, _PIPELINE_STREAM, n, freqs.size)
    p = np.stack([clean[k] for k in keys]) + sys0.noise_std_db * noise
    eq = equalization_db(sys0) if scenario.equalize else None
    peak_f, height, _ = detect_peaks_batch(p, freqs, scenario.decoder, eq)
    ks = classify_frequencies(peak_f, scenario.decoder.carriers, scenario.decoder.guard_hz)
    decoded = [SYMBOLS[k] if k >= 0 else None for k in ks]
    stream = stream_from_symbols(times.tolist(), decoded, height / scenario.decoder.threshold_db,
                                 scenario.decoder.debounce_frames)

    standby_row = len(SYMBOLS)
    sent_idx = np.array([SYMBOLS.index(s) if s is not None else standby_row for s in on_coil])
    report = _symbol_report(sent_idx, ks, with_standby=True)
    standby = sent_idx == standby_row
    sent = [s.value if s is not None else "standby" for s in on_coil]
    return PipelineResult(times, sent, decoded, stream.events, stream.actions, report,
                          {"standby_frames": int(standby.sum()), "frames": n})


# --- power -----------------------------------------------------------------


@dataclass
class PowerReport:
    table2: list
    table3: list
    capacities: tuple
    duties: tuple
    cross_check: dict


def run_power_report(capacities: Sequence[float] = (20.0, 27.0), duties: Sequence[float] = (24.0, 8.0, 4.0),
                     profile: PowerProfile = PowerProfile(), battery: BatteryModel = BatteryModel()) -> PowerReport:
    """Component table, lifespan table and a closed-form vs discharge cross-check."""
    t3 = table3_rows(capacities, duties, profile, battery)
    checks = {}
    for c in capacities:
        b = replace(battery, capacity_mah=c)
        closed = lifespan(b, DutyCycle(24.0), profile)
        sim = discharge_runtime(b, duty_load_series(profile, DutyCycle(24.0), dt_h=1.0), dt_h=1.0)
        rel = abs(sim - closed) / closed if closed else 0.0
        checks[f"{c:g}"] = {"closed_form_h": closed, "discharge_h": sim, "relative_difference": rel}
    return PowerReport(table2_rows(profile), t3, tuple(capacities), tuple(duties), checks)
