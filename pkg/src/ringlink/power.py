"""Ring power budget, duty-cycled battery lifespan and discharge runtime."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError, ContractViolation

# Standby power quoted in the running text (4.2 V x 8.4 uA); the component
# table's measured total is 25 uW and is what the lifespan table follows.
TEXT_STANDBY_UW = 35.0


@dataclass(frozen=True)
class PowerProfile:
    components: dict = field(default_factory=lambda: {
        "MCU": (1.8, 252.0),
        "Mouse sensor module": (7.9, 7.9),
        "Digital voltage divider": (1.8, 36.0),
        "Power management": (0.63, 0.63),
    })
    measured_standby_uw: float = 25.0
    measured_active_uw: float = 449.0
    measured_at_v: float = 4.2

    def __post_init__(self):
        if self.measured_standby_uw < 0 or self.measured_active_uw <= 0:
            raise ConfigurationError("measured powers must be positive")
        st, ac = self.estimated_totals
        if self.measured_standby_uw < st or self.measured_active_uw < ac:
            raise ConfigurationError("measured totals fall below the sum of their components")

    @property
    def estimated_totals(self) -> tuple[float, float]:
        """Per-component sums (standby, active) in uW."""
        standby = sum(s for s, _ in self.components.values())
        active = sum(a for _, a in self.components.values())
        return standby, active

    @property
    def standby_ratio(self) -> float:
        return self.measured_standby_uw / self.measured_active_uw


@dataclass(frozen=True)
class DutyCycle:
    active_hours_per_day: float

    def __post_init__(self):
        if not 0 < self.active_hours_per_day <= 24:
            raise ContractViolation("active hours per day must lie in (0, 24]")

    @property
    def active_fraction(self) -> float:
        return self.active_hours_per_day / 24.0


@dataclass(frozen=True)
class BatteryModel:
    """LiPo cell with a reference lifespan measured in continuous ACTIVE use.

    ``derating`` is the usable fraction of nameplate capacity; the default
    is what the measured reference lifespan implies at 449 uW / 4.2 V. The
    voltage curve is piecewise linear in depth of discharge of the usable
    capacity.
    """

    capacity_mah: float = 20.0
    full_voltage: float = 4.2
    cutoff_voltage: float = 3.7
    reference_lifespan_h: float = 167.0
    reference_capacity_mah: float = 20.0
    derating: float = 0.893
    dod_knots: tuple = (0.0, 0.05, 0.85, 0.95, 1.0, 1.05)
    voltage_knots: tuple = (4.2, 4.1, 3.85, 3.78, 3.70, 3.30)

    def __post_init__(self):
        if self.capacity_mah < 0:
            raise ConfigurationError("capacity must be non-negative")
        if not self.cutoff_voltage < self.full_voltage:
            raise ConfigurationError("cutoff voltage must be below full voltage")
        if len(self.dod_knots) != len(self.voltage_knots) or np.any(np.diff(self.dod_knots) <= 0):
            raise ConfigurationError("voltage curve knots must be increasing and paired")
        if np.any(np.diff(self.voltage_knots) > 0):
            raise ConfigurationError("voltage must not rise with depth of discharge")
        if self.voltage_knots[0] != self.full_voltage:
            raise ConfigurationError("voltage curve must start at full voltage")
        if self.voltage_knots[-1] > self.cutoff_voltage:
            raise ConfigurationError("voltage curve never reaches the cutoff")

    @property
    def usable_mah(self) -> float:
        return self.capacity_mah * self.derating

    def voltage(self, dod):
        return np.interp(dod, self.dod_knots, self.voltage_knots)

    @property
    def cutoff_dod(self) -> float:
        """Depth of discharge where the curve first falls to the cutoff."""
        d = np.asarray(self.dod_knots)
        v = np.asarray(self.voltage_knots)
        j = int(np.argmax(v <= self.cutoff_voltage))
        if j == 0:
            return 0.0
        return float(d[j - 1] + (v[j - 1] - self.cutoff_voltage) / (v[j - 1] - v[j]) * (d[j] - d[j - 1]))


def lifespan(battery: BatteryModel, duty: DutyCycle, profile: PowerProfile = PowerProfile()) -> float:
    """Hours of use on one charge at ``duty`` ACTIVE hours per day.

    Scales the measured continuous-ACTIVE lifespan by capacity and by the
    ratio of ACTIVE power to the duty-weighted mean power.
    """
    a = duty.active_fraction
    mean_rel = a + (1.0 - a) * profile.standby_ratio
    return battery.reference_lifespan_h * (battery.capacity_mah / battery.reference_capacity_mah) / mean_rel


def average_current(profile: PowerProfile, voltage: float, duty: DutyCycle | float,
                    standby_uw: float | None = None) -> float:
    """Duty-weighted mean current in uA. ``duty`` may be an active fraction in [0, 1]."""
    if voltage <= 0:
        raise ContractViolation("voltage must be positive")
    a = duty.active_fraction if isinstance(duty, DutyCycle) else float(duty)
    if not 0 <= a <= 1:
        raise ContractViolation("active fraction must lie in [0, 1]")
    ps = profile.measured_standby_uw if standby_uw is None else standby_uw
    return (a * profile.measured_active_uw + (1.0 - a) * ps) / voltage


def duty_load_series(profile: PowerProfile, duty: DutyCycle, dt_h: float = 0.25) -> np.ndarray:
    """One day of load (uW) sampled every ``dt_h`` hours, ACTIVE first."""
    n = int(round(24.0 / dt_h))
    if not math.isclose(n * dt_h, 24.0):
        raise ContractViolation("dt_h must divide a day")
    t = np.arange(n) * dt_h
    return np.where(t < duty.active_hours_per_day, profile.measured_active_uw, profile.measured_standby_uw)


def discharge_runtime(battery: BatteryModel, load_uw: Sequence[float], dt_h: float = 1.0) -> float:
    """Hours until the cell drops below cutoff; ``inf`` if the load never drains it.

    ``load_uw`` is sampled every ``dt_h`` hours and repeats cyclically. Power
    converts to current at the full-charge voltage, the same convention
    as the power budget measurements.
    """
    load = np.ascontiguousarray(np.asarray(load_uw, dtype=float))
    if load.ndim != 1 or load.size == 0:
        raise ContractViolation("load series must be a non-empty 1-D sequence")
    if np.any(load < 0) or not np.all(np.isfinite(load)):
        raise ContractViolation("load must be finite and non-negative")
    if dt_h <= 0:
        raise ContractViolation("dt_h must be positive")
    target = battery.usable_mah * battery.cutoff_dod
    return float(kernels.discharge_hours(load, float(dt_h), battery.full_voltage, target))


def discharge_trace(battery: BatteryModel, load_uw: Sequence[float], dt_h: float = 1.0,
                    t_max_h: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Time (h) and terminal voltage samples until cutoff, for plotting."""
    load = np.asarray(load_uw, dtype=float)
    runtime = discharge_runtime(battery, load, dt_h)
    horizon = t_max_h if t_max_h is not None else (runtime * 1.05 if math.isfinite(runtime) else 24.0 * 30)
    n = int(math.ceil(horizon / dt_h))
    reps = int(math.ceil(n / load.size))
    drawn = np.tile(load, reps)[:n] / battery.full_voltage * dt_h / 1000.0
    q = np.concatenate(([0.0], np.cumsum(drawn)))
    t = np.arange(n + 1) * dt_h
    dod = q / battery.usable_mah if battery.usable_mah > 0 else np.full_like(q, np.inf)
    return t, battery.voltage(np.minimum(dod, battery.dod_knots[-1]))


# --- table reproductions ---------------------------------------------------

TABLE2_HEADER = ("component", "standby_uw", "active_uw")
TABLE3_HEADER = ("active_hours_per_day", "lifespan_20mah_h", "lifespan_27mah_h")


def table2_rows(profile: PowerProfile = PowerProfile()) -> list[tuple]:
    rows = [(name, s, a) for name, (s, a) in profile.components.items()]
    st, ac = profile.estimated_totals
    rows.append(("Estimated total", round(st, 2), round(ac, 2)))
    rows.append((f"Measured total@{profile.measured_at_v:g} V", profile.measured_standby_uw,
                 profile.measured_active_uw))
    return rows


def table3_rows(capacities: Sequence[float] = (20.0, 27.0), duties: Sequence[float] = (24.0, 8.0, 4.0),
                profile: PowerProfile = PowerProfile(), battery: BatteryModel = BatteryModel()) -> list[tuple]:
    rows = []
    for h in duties:
        cells = [lifespan(replace(battery, capacity_mah=c), DutyCycle(h), profile)
                 for c in capacities]
        rows.append((h, *cells))
    return rows


def table3_header(capacities: Sequence[float]) -> tuple:
    return ("active_hours_per_day", *(f"lifespan_{c:g}mah_h" for c in capacities))


def write_table(fp, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{round(v, 2):g}" if isinstance(v, float) else v for v in row])
