"""Balanced-bridge readout and synthetic VNA sweeps.

The bridge compares the wristband coil against a reference arm. The reference
arm replicates the coil, so with no ring nearby the output sits at the
instrument floor at every frequency. A coupled ring adds a reflected
impedance and the output rises around the ring's resonance.

Output levels are ``P_out = 20 log10 |V_out|`` in dB re 1 V. The instrument
floor is added in power before taking the log, and measurement noise is
additive Gaussian in dB, i.i.d. per sweep point and per frame.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .channel import NO_LINK, InductiveLink
from .circuit import TWO_PI, WRIST_RESISTANCE, ResonantCoil, coil_impedance
from .errors import ConfigurationError, ContractViolation, DegenerateNoiseError, SingularLoadError

REFERENCE_IMPEDANCE = 50.0  # ohm, the instrument's port impedance
DEFAULT_INPUT_POWER_DBM = -7.0
DEFAULT_SATURATION_DBM = 5.0
DEFAULT_FLOOR_DB = -80.0
# Amplifier factor placing the nominal ring peak 36 dB above the floor.
DEFAULT_R_AMP = 223.0
# Noise giving SNR ~27 in the nominal scenario (36 dB / 27).
NOMINAL_NOISE_STD_DB = 1.333
NOISY_ENVIRONMENT_OFFSET_DB = 20.0
SNR_FRAMES = 100

_WITH_RING_STREAM = 1
_WITHOUT_RING_STREAM = 2


def dbm_to_vrms(power_dbm: float, impedance: float = REFERENCE_IMPEDANCE) -> float:
    return math.sqrt(10.0 ** (power_dbm / 10.0) * 1e-3 * impedance)


def gain_compression(input_power_dbm: float, saturation_power_dbm: float = DEFAULT_SATURATION_DBM,
                     slope: float = 1.0) -> float:
    """Amplitude multiplier of the bridge amplifier.

    Unity up to the saturation knee; above it the gain drops by ``slope`` dB
    per dB of extra drive, so with the default slope the output stops growing.
    """
    excess = max(0.0, input_power_dbm - saturation_power_dbm)
    return 10.0 ** (-slope * excess / 20.0)


def noise_inflation(input_power_dbm: float, saturation_power_dbm: float = DEFAULT_SATURATION_DBM,
                    slope: float = 1.0) -> float:
    """Multiplier on the dB noise spread once the amplifier is driven past the knee."""
    excess = max(0.0, input_power_dbm - saturation_power_dbm)
    return 10.0 ** (slope * excess / 20.0)


@dataclass(frozen=True)
class BridgeConfig:
    z_ref: complex = complex(WRIST_RESISTANCE, 0.0)
    r_amp: float = DEFAULT_R_AMP
    input_power_dbm: float = DEFAULT_INPUT_POWER_DBM
    saturation_power_dbm: float = DEFAULT_SATURATION_DBM
    floor_db: float = DEFAULT_FLOOR_DB
    balance_frequency: float = 27.0e6
    compression_slope: float = 1.0
    noise_slope: float = 1.0
    reference_impedance: float = REFERENCE_IMPEDANCE

    def __post_init__(self):
        if self.r_amp <= 0:
            raise ConfigurationError("r_amp must be positive")
        if self.balance_frequency <= 0:
            raise ConfigurationError("balance_frequency must be positive")
        if abs(self.z_ref) == 0:
            raise ConfigurationError("z_ref must be non-zero")

    @property
    def v_in(self) -> float:
        return dbm_to_vrms(self.input_power_dbm, self.reference_impedance)

    @property
    def floor_v(self) -> float:
        return 10.0 ** (self.floor_db / 20.0)

    @property
    def gain(self) -> float:
        return self.r_amp * gain_compression(self.input_power_dbm, self.saturation_power_dbm,
                                             self.compression_slope)

    def reference_offset(self, wrist: ResonantCoil) -> complex:
        """Fixed difference between the reference arm and the coil (zero when balanced)."""
        return self.z_ref - coil_impedance(wrist, TWO_PI * self.balance_frequency)

    def reference_impedance_at(self, wrist: ResonantCoil, omega):
        return coil_impedance(wrist, omega) + self.reference_offset(wrist)


def check_balance(bridge: BridgeConfig, wrist: ResonantCoil, rtol: float = 1e-3) -> None:
    z_coil = coil_impedance(wrist, TWO_PI * bridge.balance_frequency)
    if abs(bridge.z_ref - z_coil) > rtol * abs(z_coil):
        raise ConfigurationError(
            f"bridge unbalanced: z_ref={bridge.z_ref:.4g} vs coil {z_coil:.4g} at "
            f"{bridge.balance_frequency / 1e6:.3f} MHz"
        )


def bridge_output(bridge: BridgeConfig, z_load, omega, z_ref=None):
    """Bridge output voltage, -R_amp (V_in/Z_load - V_in/Z_ref).

    ``z_ref`` overrides the bridge's constant reference (e.g. the replica
    arm evaluated at ``omega``).
    """
    if np.any(np.asarray(omega) <= 0):
        raise ContractViolation("angular frequency must be positive")
    z_load = np.asarray(z_load, dtype=complex)
    if np.any(z_load == 0):
        raise SingularLoadError("load impedance is zero")
    # same division routine on both arms, so identical impedances cancel exactly
    z_ref = np.asarray(bridge.z_ref if z_ref is None else z_ref, dtype=complex)
    v = -bridge.gain * (bridge.v_in / z_load - bridge.v_in / z_ref)
    return complex(v) if np.ndim(v) == 0 else v


def small_signal_output(bridge: BridgeConfig, delta_z, z_ref=None):
    """Linearised bridge output R_amp * dZ / Z_ref^2 * V_in."""
    z_ref = bridge.z_ref if z_ref is None else z_ref
    v = bridge.gain * np.asarray(delta_z) / np.asarray(z_ref) ** 2 * bridge.v_in
    return complex(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class SweepConfig:
    f_start: float = 27.0e6
    f_stop: float = 28.5e6
    n_points: int = 101
    frame_rate: float = 20.0
    noise_std_db: float = NOMINAL_NOISE_STD_DB

    def __post_init__(self):
        if self.n_points < 2:
            raise ConfigurationError("n_points must be at least 2")
        if not self.f_stop > self.f_start > 0:
            raise ConfigurationError("need 0 < f_start < f_stop")
        if self.frame_rate <= 0:
            raise ConfigurationError("frame_rate must be positive")
        if self.noise_std_db < 0:
            raise ConfigurationError("noise_std_db must be non-negative")

    @property
    def frequencies(self) -> np.ndarray:
        return np.linspace(self.f_start, self.f_stop, self.n_points)

    @property
    def step(self) -> float:
        return (self.f_stop - self.f_start) / (self.n_points - 1)


@dataclass(frozen=True)
class SpectrumFrame:
    frequencies: np.ndarray
    p_out_db: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        p = np.asarray(self.p_out_db, dtype=float)
        if f.ndim != 1 or f.shape != p.shape:
            raise ContractViolation(f"frame arrays differ in shape: {f.shape} vs {p.shape}")
        if f.size < 2 or np.any(np.diff(f) <= 0):
            raise ContractViolation("frame frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "p_out_db", p)

    def __eq__(self, other):
        if not isinstance(other, SpectrumFrame):
            return NotImplemented
        return (self.timestamp == other.timestamp
                and np.array_equal(self.frequencies, other.frequencies)
                and np.array_equal(self.p_out_db, other.p_out_db))

    __hash__ = None


@dataclass(frozen=True)
class LinkSystem:
    """Everything needed to synthesise a sweep: both coils, their coupling,
    the bridge and the sweep settings. ``ring=None`` means no ring present."""

    ring: ResonantCoil | None
    wrist: ResonantCoil
    link: InductiveLink = NO_LINK
    bridge: BridgeConfig = field(default_factory=BridgeConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def without_ring(self) -> LinkSystem:
        return replace(self, ring=None, link=NO_LINK)

    @property
    def noise_std_db(self) -> float:
        b = self.bridge
        return self.sweep.noise_std_db * noise_inflation(b.input_power_dbm, b.saturation_power_dbm,
                                                         b.noise_slope)


def clean_response_db(system: LinkSystem, freqs: np.ndarray | None = None) -> np.ndarray:
    """Noise-free bridge output in dB over the sweep grid."""
    f = system.sweep.frequencies if freqs is None else np.asarray(freqs, dtype=float)
    w, b = system.wrist, system.bridge
    if system.ring is None:
        ring_l, ring_r, ring_c, mutual = 1.0, 1.0, 1.0, 0.0
    else:
        r = system.ring
        ring_l, ring_r, ring_c, mutual = r.inductance, r.resistance, r.capacitance, system.link.mutual_inductance
    return kernels.bridge_response_db(
        f, ring_l, ring_r, ring_c, w.inductance, w.resistance, w.capacitance, mutual,
        b.reference_offset(w), b.gain, b.v_in, b.floor_v,
    )


def equalization_db(system: LinkSystem, freqs: np.ndarray | None = None) -> np.ndarray:
    """Frequency-dependent bridge gain for a small reflected impedance,
    -40 log10 |Z_ref|, shifted so its maximum is 0 dB.

    The reader knows its own coil, so a decoder may subtract this tilt before
    locating the ring's peak.
    """
    f = system.sweep.frequencies if freqs is None else np.asarray(freqs, dtype=float)
    g = -40.0 * np.log10(np.abs(system.bridge.reference_impedance_at(system.wrist, TWO_PI * f)))
    return g - g.max()


def noise_stream(seed: int, stream: int, n_frames: int, n_points: int) -> np.ndarray:
    """Standard-normal draws for one population, keyed by (seed, stream).

    Grid points share streams, so comparisons across a parameter sweep use
    common random numbers and parallel evaluation cannot change results.
    """
    if seed < 0:
        raise ContractViolation("seed must be a non-negative integer")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(stream)]))
    return rng.standard_normal((n_frames, n_points))


def sweep_batch(system: LinkSystem, unit_noise: np.ndarray) -> np.ndarray:
    """Noisy frames (rows) from pre-drawn standard-normal noise."""
    return clean_response_db(system)[None, :] + system.noise_std_db * unit_noise


def sweep(system: LinkSystem, rng_seed: int, timestamp: float = 0.0) -> SpectrumFrame:
    """One noisy sweep; bit-identical for identical (system, seed, timestamp)."""
    if rng_seed < 0:
        raise ContractViolation("seed must be a non-negative integer")
    rng = np.random.default_rng(rng_seed)
    p = clean_response_db(system) + system.noise_std_db * rng.standard_normal(system.sweep.n_points)
    return SpectrumFrame(system.sweep.frequencies, p, timestamp)


@dataclass(frozen=True)
class SnrResult:
    snr: float
    mean_with_ring: float
    mean_without_ring: float
    std_without_ring: float
    n_samples: int
    frequency: float = float("nan")


def snr_from_samples(with_ring, without_ring, frequency: float = float("nan")) -> SnrResult:
    """(mean with ring - mean without) / std without, sample std (ddof=1)."""
    a = np.asarray(with_ring, dtype=float)
    b = np.asarray(without_ring, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ContractViolation("need at least two samples in each population")
    std = float(np.std(b, ddof=1))
    if std == 0.0:
        raise DegenerateNoiseError("without-ring samples have zero spread; SNR undefined")
    mw, mo = float(a.mean()), float(b.mean())
    return SnrResult((mw - mo) / std, mw, mo, std, int(a.size), frequency)


def compute_snr(frames_with_ring: Sequence[SpectrumFrame], frames_without: Sequence[SpectrumFrame],
                at_frequency: float) -> SnrResult:
    if len(frames_with_ring) < 2 or len(frames_without) < 2:
        raise ContractViolation("need at least two frames in each population")
    freqs = frames_with_ring[0].frequencies
    if not freqs[0] <= at_frequency <= freqs[-1]:
        raise ContractViolation(f"{at_frequency} Hz outside the swept band")
    for fr in (*frames_with_ring, *frames_without):
        if not np.array_equal(fr.frequencies, freqs):
            raise ContractViolation("frames use different frequency grids")
    i = int(np.argmin(np.abs(freqs - at_frequency)))
    return snr_from_samples([fr.p_out_db[i] for fr in frames_with_ring],
                            [fr.p_out_db[i] for fr in frames_without], float(freqs[i]))


def measure_snr(system: LinkSystem, seed: int, n_frames: int = SNR_FRAMES,
                at_frequency: float | None = None) -> SnrResult:
    """Monte-Carlo SNR at the ring's resonance (or ``at_frequency``)."""
    if system.ring is None:
        raise ContractViolation("measure_snr needs a ring")
    f = system.sweep.frequencies
    target = system.ring.resonant_frequency if at_frequency is None else at_frequency
    i = int(np.argmin(np.abs(f - target)))
    m = system.sweep.n_points
    with_ring = sweep_batch(system, noise_stream(seed, _WITH_RING_STREAM, n_frames, m))
    without = sweep_batch(system.without_ring(), noise_stream(seed, _WITHOUT_RING_STREAM, n_frames, m))
    return snr_from_samples(with_ring[:, i], without[:, i], float(f[i]))


def peak_height_db(system: LinkSystem, at_frequency: float | None = None) -> float:
    """Noise-free rise of the output above the no-ring floor at the ring's bin."""
    f = system.sweep.frequencies
    target = system.ring.resonant_frequency if at_frequency is None else at_frequency
    i = int(np.argmin(np.abs(f - target)))
    return float(clean_response_db(system)[i] - clean_response_db(system.without_ring())[i])


def calibrate_noise_std(system: LinkSystem, target_snr: float) -> float:
    """Noise spread (dB) that makes the expected SNR of ``system`` equal ``target_snr``.

    Accounts for any compression-driven noise inflation in ``system``.
    """
    if target_snr <= 0:
        raise ContractViolation("target SNR must be positive")
    inflation = system.noise_std_db / system.sweep.noise_std_db if system.sweep.noise_std_db else 1.0
    return peak_height_db(system) / target_snr / inflation


def calibrate_r_amp(system: LinkSystem, target_height_db: float) -> float:
    """Amplifier factor placing the ring peak ``target_height_db`` above the floor."""
    floor_sq = system.bridge.floor_v ** 2
    unit = replace(system, bridge=replace(system.bridge, r_amp=1.0))
    f = system.sweep.frequencies
    i = int(np.argmin(np.abs(f - system.ring.resonant_frequency)))
    v_sq_unit = 10.0 ** (clean_response_db(unit)[i] / 10.0) - floor_sq
    needed = floor_sq * (10.0 ** (target_height_db / 10.0) - 1.0)
    return math.sqrt(needed / v_sq_unit)


# --- frame serialisation ---------------------------------------------------

CSV_HEADER = ("timestamp_s", "freq_hz", "p_out_db")


def write_frames_csv(frames: Iterable[SpectrumFrame], fp) -> None:
    """One row per sweep point, frames concatenated in order."""
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for fr in frames:
        for f, p in zip(fr.frequencies, fr.p_out_db):
            w.writerow((repr(float(fr.timestamp)), repr(float(f)), repr(float(p))))


def read_frames_csv(fp) -> list[SpectrumFrame]:
    reader = csv.reader(fp)
    header = tuple(next(reader, ()))
    if header != CSV_HEADER:
        raise ContractViolation(f"unexpected CSV header {header!r}")
    frames: list[SpectrumFrame] = []
    current_t, fs, ps = None, [], []
    for row in reader:
        if not row:
            continue
        t, f, p = (float(x) for x in row)
        if current_t is not None and (t != current_t or (fs and f <= fs[-1])):
            frames.append(SpectrumFrame(np.array(fs), np.array(ps), current_t))
            fs, ps = [], []
        current_t = t
        fs.append(f)
        ps.append(p)
    if fs:
        frames.append(SpectrumFrame(np.array(fs), np.array(ps), current_t))
    return frames


def write_frames_ndjson(frames: Iterable[SpectrumFrame], fp) -> None:
    """One JSON object per line: timestamp_s, freq_hz list, p_out_db list."""
    for fr in frames:
        fp.write(json.dumps({
            "timestamp_s": float(fr.timestamp),
            "freq_hz": fr.frequencies.tolist(),
            "p_out_db": fr.p_out_db.tolist(),
        }) + "\n")


def read_frames_ndjson(fp) -> list[SpectrumFrame]:
    frames = []
    for line in fp:
        line = line.strip()
        if line:
            obj = json.loads(line)
            frames.append(SpectrumFrame(np.array(obj["freq_hz"], dtype=float),
                                        np.array(obj["p_out_db"], dtype=float),
                                        float(obj["timestamp_s"])))
    return frames


def save_frames(frames: Iterable[SpectrumFrame], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fp:
        if path.suffix == ".csv":
            write_frames_csv(frames, fp)
        else:
            write_frames_ndjson(frames, fp)


def load_frames(path: str | Path) -> list[SpectrumFrame]:
    path = Path(path)
    with path.open(newline="") as fp:
        return read_frames_csv(fp) if path.suffix == ".csv" else read_frames_ndjson(fp)


def frames_to_string(frames: Iterable[SpectrumFrame], fmt: str = "csv") -> str:
    buf = io.StringIO()
    (write_frames_csv if fmt == "csv" else write_frames_ndjson)(frames, buf)
    return buf.getvalue()
