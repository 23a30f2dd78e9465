"""Lumped series-RLC coils and the coupled two-coil impedance.

Impedances are plain Python ``complex`` values (or complex numpy arrays when
``omega`` is an array). Angular frequencies are in rad/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation

TWO_PI = 2.0 * math.pi

RING_INDUCTANCE = 2.6e-6
RING_RESISTANCE = 3.5
WRIST_INDUCTANCE = 4.2e-6
WRIST_RESISTANCE = 49.0
WRIST_RESONANCE = 27.0e6


@dataclass(frozen=True)
class ResonantCoil:
    """One coil reduced to an inductance, a series resistance and an
    effective series capacitance."""

    inductance: float
    resistance: float
    capacitance: float
    label: str = "ring"

    def __post_init__(self):
        for name in ("inductance", "resistance", "capacitance"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{self.label} coil {name} must be positive, got {value!r}")

    @classmethod
    def tuned(cls, inductance: float, resistance: float, frequency: float, label: str = "ring") -> ResonantCoil:
        """Build a coil whose capacitance puts its resonance at ``frequency``."""
        return cls(inductance, resistance, capacitance_for_frequency(inductance, frequency), label)

    @property
    def resonant_frequency(self) -> float:
        return resonant_frequency(self)

    @property
    def resonant_omega(self) -> float:
        return 1.0 / math.sqrt(self.inductance * self.capacitance)

    @property
    def bandwidth(self) -> float:
        """Half-power (-3 dB) bandwidth in Hz, R / (2 pi L)."""
        return self.resistance / (TWO_PI * self.inductance)

    def impedance(self, omega):
        return coil_impedance(self, omega)


def ring_coil(frequency: float) -> ResonantCoil:
    return ResonantCoil.tuned(RING_INDUCTANCE, RING_RESISTANCE, frequency, "ring")


def wrist_coil(frequency: float = WRIST_RESONANCE) -> ResonantCoil:
    return ResonantCoil.tuned(WRIST_INDUCTANCE, WRIST_RESISTANCE, frequency, "wristband")


def _check_omega(omega):
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ContractViolation("angular frequency must be finite and positive")
    return w


def coil_impedance(coil: ResonantCoil, omega):
    """Series RLC impedance R + j(wL - 1/(wC))."""
    w = _check_omega(omega)
    z = coil.resistance + 1j * (w * coil.inductance - 1.0 / (w * coil.capacitance))
    return complex(z) if np.ndim(z) == 0 else z


def resonant_frequency(coil: ResonantCoil) -> float:
    return 1.0 / (TWO_PI * math.sqrt(coil.inductance * coil.capacitance))


def capacitance_for_frequency(inductance: float, frequency: float) -> float:
    if not (inductance > 0 and frequency > 0):
        raise ContractViolation("inductance and frequency must be positive")
    return 1.0 / ((TWO_PI * frequency) ** 2 * inductance)


def mutual_inductance(k: float, l1: float, l2: float) -> float:
    return k * math.sqrt(l1 * l2)


def delta_z_wrist(ring: ResonantCoil, mutual: float, omega):
    """Impedance reflected into the wristband coil by a coupled ring,
    (wM)^2 / Z_ring(w)."""
    if mutual < 0:
        raise ContractViolation("mutual inductance must be non-negative")
    w = _check_omega(omega)
    dz = (w * mutual) ** 2 / coil_impedance(ring, w)
    return complex(dz) if np.ndim(dz) == 0 else dz


def peak_delta_z(ring: ResonantCoil, mutual: float) -> float:
    """Reflected impedance at the ring's own resonance, (w0 M)^2 / R_ring."""
    return (ring.resonant_omega * mutual) ** 2 / ring.resistance


def load_impedance(wrist: ResonantCoil, ring: ResonantCoil | None, mutual: float, omega):
    """Input impedance seen at the wristband terminals."""
    z = coil_impedance(wrist, omega)
    if ring is None or mutual == 0:
        return z
    return z + delta_z_wrist(ring, mutual, omega)
