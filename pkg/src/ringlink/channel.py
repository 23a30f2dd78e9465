"""Geometry to coupling coefficient.

The coupling model is a small-coil dipole approximation: k falls as the cube
of distance and with the cosine of the misalignment between the finger bend
and the ring coil's tilt. Two measured anchors (tilted and straight ring at
the reference pose) fix the scale; everything between them is a modelling
choice and lives in a calibration file rather than in code.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from .circuit import RING_INDUCTANCE, WRIST_INDUCTANCE, ResonantCoil, peak_delta_z
from .errors import ConfigurationError, OutOfCalibrationError


@dataclass(frozen=True)
class Calibration:
    distance_ref_m: float = 0.14
    angle_ref_deg: float = 30.0
    k_tilted: float = 0.0039
    k_straight: float = 0.0031
    cos_floor: float = 0.2
    tilted_tilt_deg: float = 20.0
    angle_min_deg: float = -30.0
    angle_max_deg: float = 60.0

    def __post_init__(self):
        if self.distance_ref_m <= 0:
            raise ConfigurationError("distance_ref_m must be positive")
        if not (0 <= self.k_straight < 1 and 0 <= self.k_tilted < 1):
            raise ConfigurationError("anchor coupling coefficients must lie in [0, 1)")
        if not 0 < self.cos_floor <= 1:
            raise ConfigurationError("cos_floor must lie in (0, 1]")
        if self.tilted_tilt_deg <= 0:
            raise ConfigurationError("tilted_tilt_deg must be positive")
        if self.angle_min_deg >= self.angle_max_deg:
            raise ConfigurationError("empty bend-angle envelope")


def _parse_calibration(text: str, source: str) -> Calibration:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string("[calibration]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    section = parser["calibration"]
    known = {f.name for f in fields(Calibration)}
    unknown = set(section) - known
    if unknown:
        raise ConfigurationError(f"{source}: unknown calibration keys {sorted(unknown)}")
    try:
        values = {key: float(section[key]) for key in section}
    except ValueError as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    return Calibration(**values)


def load_calibration(path: str | Path | None = None) -> Calibration:
    """Read a flat ``key = value`` calibration file; ``None`` loads the
    packaged default."""
    if path is None:
        text = resources.files("ringlink").joinpath("data/calibration.cfg").read_text()
        return _parse_calibration(text, "calibration.cfg")
    path = Path(path)
    return _parse_calibration(path.read_text(), str(path))


def dump_calibration(calib: Calibration) -> str:
    return "".join(f"{f.name} = {getattr(calib, f.name)!r}\n" for f in fields(calib))


DEFAULT_CALIBRATION = Calibration()


@dataclass(frozen=True)
class LinkGeometry:
    distance: float
    bend_angle: float
    ring_tilt: float = 20.0

    def __post_init__(self):
        if not (math.isfinite(self.distance) and self.distance > 0):
            raise OutOfCalibrationError(f"distance must be positive, got {self.distance!r}")


@dataclass(frozen=True)
class InductiveLink:
    coupling_k: float
    mutual_inductance: float

    @classmethod
    def from_k(cls, k: float, ring_l: float = RING_INDUCTANCE, wrist_l: float = WRIST_INDUCTANCE) -> InductiveLink:
        if not 0 <= k < 1:
            raise OutOfCalibrationError(f"coupling coefficient {k!r} outside [0, 1)")
        return cls(k, k * math.sqrt(ring_l * wrist_l))


NO_LINK = InductiveLink(0.0, 0.0)


def _misalignment(calib: Calibration, bend: float, tilt: float) -> float:
    return max(math.cos(math.radians(bend - tilt)), calib.cos_floor)


def check_envelope(geom: LinkGeometry, calib: Calibration = DEFAULT_CALIBRATION) -> list[str]:
    """Return human-readable reasons ``geom`` is outside the calibration."""
    problems = []
    if not calib.angle_min_deg <= geom.bend_angle <= calib.angle_max_deg:
        problems.append(
            f"bend_angle {geom.bend_angle} deg outside [{calib.angle_min_deg}, {calib.angle_max_deg}]"
        )
    if not 0 <= geom.ring_tilt <= calib.tilted_tilt_deg:
        problems.append(f"ring_tilt {geom.ring_tilt} deg outside [0, {calib.tilted_tilt_deg}]")
    return problems


def coupling_coefficient(geom: LinkGeometry, calib: Calibration = DEFAULT_CALIBRATION) -> float:
    problems = check_envelope(geom, calib)
    if problems:
        raise OutOfCalibrationError("; ".join(problems))
    # anchor k for this tilt, linear between the straight and tilted rings
    frac = geom.ring_tilt / calib.tilted_tilt_deg
    k_anchor = calib.k_straight + frac * (calib.k_tilted - calib.k_straight)
    norm = _misalignment(calib, calib.angle_ref_deg, geom.ring_tilt)
    k = (
        k_anchor
        * (calib.distance_ref_m / geom.distance) ** 3
        * _misalignment(calib, geom.bend_angle, geom.ring_tilt)
        / norm
    )
    if not 0 <= k < 1:
        raise OutOfCalibrationError(f"distance {geom.distance} m gives unphysical k = {k:.3g}")
    return k


def coupling_from_geometry(
    geom: LinkGeometry,
    calib: Calibration = DEFAULT_CALIBRATION,
    ring_l: float = RING_INDUCTANCE,
    wrist_l: float = WRIST_INDUCTANCE,
) -> InductiveLink:
    return InductiveLink.from_k(coupling_coefficient(geom, calib), ring_l, wrist_l)


def link_budget(link: InductiveLink, ring: ResonantCoil, wrist: ResonantCoil) -> float:
    """Peak reflected impedance (ohms) the ring produces at its resonance."""
    expected = link.coupling_k * math.sqrt(ring.inductance * wrist.inductance)
    if not math.isclose(link.mutual_inductance, expected, rel_tol=1e-12, abs_tol=1e-18):
        raise ConfigurationError("link was built for different coil inductances")
    return peak_delta_z(ring, link.mutual_inductance)
