"""Scenario files: one INI-style text file per experiment.

Sections and keys (all optional except where noted)::

    [scenario]  name, seed, noise_profile (nominal | noisy_environment),
                event_script, ring_frequency_hz, snr_frames, calibration
    [geometry]  distance_m, bend_angle_deg, ring_tilt_deg
    [sweep]     f_start_hz, f_stop_hz, n_points, frame_rate_fps, noise_std_db
    [bridge]    input_power_dbm, r_amp, floor_db, saturation_power_dbm,
                z_ref_real, z_ref_imag, balance_frequency_hz
    [grid]      distances_m, angles_deg, powers_dbm
                (comma lists or start:stop:step ranges, stop inclusive)
    [decoder]   threshold_db, method, guard_hz, debounce_frames, equalize
    [power]     capacities_mah, duties_h

Relative paths resolve against the scenario file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import (
    DEFAULT_CALIBRATION,
    Calibration,
    LinkGeometry,
    check_envelope,
    coupling_from_geometry,
    load_calibration,
)
from .circuit import ring_coil, wrist_coil
from .decoder import DecoderConfig
from .errors import ConfigurationError, OutOfCalibrationError
from .readout import NOISY_ENVIRONMENT_OFFSET_DB, BridgeConfig, LinkSystem, SweepConfig, check_balance
from .ring import CARRIERS, validate_carrier_plan

NOISE_PROFILES = ("nominal", "noisy_environment")


def parse_grid(text: str) -> tuple[float, ...]:
    """``"a, b, c"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigurationError(f"bad range {text!r}; expected start:stop:step")
        start, stop, step = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(round(start + i * step, 12)) for i in range(n))
    return tuple(float(p) for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class Grid:
    distances_m: tuple = parse_grid("0.10:0.20:0.01")
    angles_deg: tuple = (-30.0, 0.0, 30.0, 60.0)
    powers_dbm: tuple = parse_grid("-30:10:5")


@dataclass(frozen=True)
class Scenario:
    name: str = "nominal"
    geometry: LinkGeometry = LinkGeometry(0.14, 30.0, 20.0)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    bridge: BridgeConfig = field(default_factory=BridgeConfig)
    noise_profile: str = "nominal"
    event_script: Path | None = None
    seed: int | None = None
    ring_frequency: float = 28.0e6
    snr_frames: int = 100
    calibration: Calibration = DEFAULT_CALIBRATION
    grid: Grid = field(default_factory=Grid)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    equalize: bool = True
    capacities_mah: tuple = (20.0, 27.0)
    duties_h: tuple = (24.0, 8.0, 4.0)

    @property
    def effective_bridge(self) -> BridgeConfig:
        if self.noise_profile == "noisy_environment":
            return replace(self.bridge, floor_db=self.bridge.floor_db + NOISY_ENVIRONMENT_OFFSET_DB)
        return self.bridge

    def system(self, ring_frequency: float | None = None, geometry: LinkGeometry | None = None,
               input_power_dbm: float | None = None, noise_std_db: float | None = None) -> LinkSystem:
        geom = geometry or self.geometry
        bridge = self.effective_bridge
        if input_power_dbm is not None:
            bridge = replace(bridge, input_power_dbm=input_power_dbm)
        sweep = self.sweep if noise_std_db is None else replace(self.sweep, noise_std_db=noise_std_db)
        ring = ring_coil(self.ring_frequency if ring_frequency is None else ring_frequency)
        wrist = wrist_coil()
        link = coupling_from_geometry(geom, self.calibration, ring.inductance, wrist.inductance)
        return LinkSystem(ring, wrist, link, bridge, sweep)

    def require_seed(self, override: int | None = None) -> int:
        seed = override if override is not None else self.seed
        if seed is None:
            raise ConfigurationError("a seed is required (scenario [scenario] seed or --seed)")
        if seed < 0 or seed >= 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        return int(seed)

    def problems(self) -> list[str]:
        """Everything wrong with the scenario, empty when it is usable."""
        out = []
        if self.noise_profile not in NOISE_PROFILES:
            out.append(f"noise_profile must be one of {NOISE_PROFILES}")
        out.extend(check_envelope(self.geometry, self.calibration))
        try:
            validate_carrier_plan(CARRIERS, self.sweep.f_start, self.sweep.f_stop, self.sweep.step)
        except ConfigurationError as exc:
            out.append(str(exc))
        if not self.sweep.f_start <= self.ring_frequency <= self.sweep.f_stop:
            out.append(f"ring_frequency_hz {self.ring_frequency} outside the sweep band")
        try:
            check_balance(self.bridge, wrist_coil())
        except ConfigurationError as exc:
            out.append(str(exc))
        for a in self.grid.angles_deg:
            if not self.calibration.angle_min_deg <= a <= self.calibration.angle_max_deg:
                out.append(f"grid angle {a} deg outside calibration envelope")
        for d in self.grid.distances_m:
            if d <= 0:
                out.append(f"grid distance {d} m must be positive")
        if self.event_script is not None and not Path(self.event_script).exists():
            out.append(f"event script {self.event_script} not found")
        if self.snr_frames < 2:
            out.append("snr_frames must be at least 2")
        return out

    def validate(self) -> Scenario:
        problems = self.problems()
        if problems:
            raise ConfigurationError("; ".join(problems))
        return self


_KNOWN = {
    "scenario": {"name", "seed", "noise_profile", "event_script", "ring_frequency_hz", "snr_frames",
                 "calibration"},
    "geometry": {"distance_m", "bend_angle_deg", "ring_tilt_deg"},
    "sweep": {"f_start_hz", "f_stop_hz", "n_points", "frame_rate_fps", "noise_std_db"},
    "bridge": {"input_power_dbm", "r_amp", "floor_db", "saturation_power_dbm", "z_ref_real", "z_ref_imag",
               "balance_frequency_hz"},
    "grid": {"distances_m", "angles_deg", "powers_dbm"},
    "decoder": {"threshold_db", "method", "guard_hz", "debounce_frames", "equalize"},
    "power": {"capacities_mah", "duties_h"},
}


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with path.open() as fp:
            parser.read_file(fp)
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigurationError(f"{path}: unknown section [{section}]")
        unknown = set(parser[section]) - _KNOWN[section]
        if unknown:
            raise ConfigurationError(f"{path}: unknown keys in [{section}]: {sorted(unknown)}")
    try:
        return _build(parser, path.parent)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{path}: {exc}") from exc


def _build(p: configparser.ConfigParser, base: Path) -> Scenario:
    def get(section, key, conv=float, default=None):
        if p.has_option(section, key):
            return conv(p.get(section, key))
        return default

    d = Scenario()
    calib_path = get("scenario", "calibration", str)
    calib = load_calibration(base / calib_path) if calib_path else DEFAULT_CALIBRATION
    g = d.geometry
    try:
        geometry = LinkGeometry(get("geometry", "distance_m", default=g.distance),
                                get("geometry", "bend_angle_deg", default=g.bend_angle),
                                get("geometry", "ring_tilt_deg", default=g.ring_tilt))
    except OutOfCalibrationError as exc:
        raise ConfigurationError(str(exc)) from exc
    s = d.sweep
    sweep = SweepConfig(get("sweep", "f_start_hz", default=s.f_start),
                        get("sweep", "f_stop_hz", default=s.f_stop),
                        get("sweep", "n_points", int, s.n_points),
                        get("sweep", "frame_rate_fps", default=s.frame_rate),
                        get("sweep", "noise_std_db", default=s.noise_std_db))
    b = d.bridge
    bridge = BridgeConfig(
        z_ref=complex(get("bridge", "z_ref_real", default=b.z_ref.real),
                      get("bridge", "z_ref_imag", default=b.z_ref.imag)),
        r_amp=get("bridge", "r_amp", default=b.r_amp),
        input_power_dbm=get("bridge", "input_power_dbm", default=b.input_power_dbm),
        saturation_power_dbm=get("bridge", "saturation_power_dbm", default=b.saturation_power_dbm),
        floor_db=get("bridge", "floor_db", default=b.floor_db),
        balance_frequency=get("bridge", "balance_frequency_hz", default=b.balance_frequency),
    )
    gr = d.grid
    grid = Grid(get("grid", "distances_m", parse_grid, gr.distances_m),
                get("grid", "angles_deg", parse_grid, gr.angles_deg),
                get("grid", "powers_dbm", parse_grid, gr.powers_dbm))
    dc = d.decoder
    decoder = DecoderConfig(threshold_db=get("decoder", "threshold_db", default=dc.threshold_db),
                            method=get("decoder", "method", str, dc.method),
                            guard_hz=get("decoder", "guard_hz", default=dc.guard_hz),
                            debounce_frames=get("decoder", "debounce_frames", int, dc.debounce_frames))
    equalize = p.getboolean("decoder", "equalize", fallback=True)
    script = get("scenario", "event_script", str)
    seed = get("scenario", "seed", int)
    return Scenario(
        name=get("scenario", "name", str, d.name),
        geometry=geometry,
        sweep=sweep,
        bridge=bridge,
        noise_profile=get("scenario", "noise_profile", str, d.noise_profile),
        event_script=(base / script) if script else None,
        seed=seed,
        ring_frequency=get("scenario", "ring_frequency_hz", default=d.ring_frequency),
        snr_frames=get("scenario", "snr_frames", int, d.snr_frames),
        calibration=calib,
        grid=grid,
        decoder=decoder,
        equalize=equalize,
        capacities_mah=get("power", "capacities_mah", parse_grid, d.capacities_mah),
        duties_h=get("power", "duties_h", parse_grid, d.duties_h),
    )
