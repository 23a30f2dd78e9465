"""Ring-side encoder.

Mouse inputs map onto six resonant frequencies. The ring reaches each one by
biasing a varactor that sits in parallel with one capacitor of the coil's
distributed capacitor chain. A small ACTIVE/STANDBY state machine decides
when the ring is streaming.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .circuit import RING_INDUCTANCE, capacitance_for_frequency
from .errors import ConfigurationError, ScriptParseError, TimeRegressionError


class MouseSymbol(Enum):
    NONE = "none"
    SCROLL_DOWN = "scroll_down"
    SCROLL_UP = "scroll_up"
    SCROLL_LEFT = "scroll_left"
    SCROLL_RIGHT = "scroll_right"
    PRESS = "press"

    @property
    def carrier(self) -> float:
        return CARRIERS[self]


CARRIERS: dict[MouseSymbol, float] = {
    MouseSymbol.NONE: 27.32e6,
    MouseSymbol.SCROLL_DOWN: 27.46e6,
    MouseSymbol.SCROLL_UP: 27.60e6,
    MouseSymbol.SCROLL_LEFT: 27.83e6,
    MouseSymbol.SCROLL_RIGHT: 28.23e6,
    MouseSymbol.PRESS: 28.47e6,
}

SYMBOLS = tuple(MouseSymbol)

# Resonance with the voltage divider off (ring in STANDBY).
STANDBY_FREQUENCY = 27.0e6


def validate_carrier_plan(carriers: dict[MouseSymbol, float], f_start: float, f_stop: float,
                          step: float) -> None:
    """Reject carrier tables that a sweep with ``step`` cannot separate."""
    freqs = sorted(carriers.values())
    if len(set(freqs)) != len(freqs):
        raise ConfigurationError("carrier frequencies must be distinct")
    outside = [f for f in freqs if not f_start <= f <= f_stop]
    if outside:
        raise ConfigurationError(f"carriers outside sweep band: {outside}")
    spacing = min(b - a for a, b in zip(freqs, freqs[1:]))
    if not spacing > 2 * step:
        raise ConfigurationError(
            f"minimum carrier spacing {spacing / 1e3:.1f} kHz is not above twice the "
            f"sweep step ({step / 1e3:.1f} kHz)"
        )


# --- varactor tuning -------------------------------------------------------


@dataclass(frozen=True)
class VaractorMap:
    """Ring capacitor network: a fixed series capacitance feeding a shunt
    capacitance that the varactor parallels.

    ``series_c`` and ``shunt_c`` are solved so the varactor's two capacitance
    limits land exactly on the lowest and highest carriers. The control
    voltage is a linear stand-in between the limits (``c_max`` at 0 V).
    """

    ring_inductance: float
    series_c: float
    shunt_c: float
    c_min: float = 27e-12
    c_max: float = 69e-12
    v_max: float = 1.8

    @classmethod
    def solve(cls, ring_inductance: float = RING_INDUCTANCE,
              carriers: dict[MouseSymbol, float] = CARRIERS,
              c_min: float = 27e-12, c_max: float = 69e-12, v_max: float = 1.8) -> VaractorMap:
        ce_lo = capacitance_for_frequency(ring_inductance, min(carriers.values()))
        ce_hi = capacitance_for_frequency(ring_inductance, max(carriers.values()))
        d = 1.0 / ce_hi - 1.0 / ce_lo
        if d <= 0:
            raise ConfigurationError("carrier table spans no frequency range")
        s = c_min + c_max
        disc = s * s - 4.0 * (c_min * c_max - (c_max - c_min) / d)
        shunt = (-s + math.sqrt(disc)) / 2.0
        if shunt < 0:
            raise ConfigurationError("carrier span exceeds what the varactor range can tune")
        inv_series = 1.0 / ce_lo - 1.0 / (shunt + c_max)
        if inv_series <= 0:
            raise ConfigurationError("no positive series capacitance reaches the carriers")
        return cls(ring_inductance, 1.0 / inv_series, shunt, c_min, c_max, v_max)

    def effective_capacitance(self, varactor_c: float) -> float:
        return 1.0 / (1.0 / self.series_c + 1.0 / (self.shunt_c + varactor_c))

    def varactor_for(self, effective_c: float) -> float:
        inv = 1.0 / effective_c - 1.0 / self.series_c
        if inv <= 0:
            raise ConfigurationError(f"effective capacitance {effective_c:.4g} F is unreachable")
        cv = 1.0 / inv - self.shunt_c
        tol = 1e-9 * self.c_max
        if not self.c_min - tol <= cv <= self.c_max + tol:
            raise ConfigurationError(
                f"needs varactor {cv * 1e12:.2f} pF, outside {self.c_min * 1e12:.0f}-{self.c_max * 1e12:.0f} pF"
            )
        return min(max(cv, self.c_min), self.c_max)

    def voltage_for(self, varactor_c: float) -> float:
        return self.v_max * (self.c_max - varactor_c) / (self.c_max - self.c_min)


@dataclass(frozen=True)
class RingTuning:
    symbol: MouseSymbol
    frequency: float
    capacitance: float
    varactor_capacitance: float
    control_voltage: float


_DEFAULT_VARACTOR: VaractorMap | None = None


def symbol_to_ring_tuning(symbol: MouseSymbol, ring_inductance: float = RING_INDUCTANCE,
                          varactor: VaractorMap | None = None) -> RingTuning:
    """Effective ring capacitance (and varactor setting) for ``symbol``'s carrier."""
    global _DEFAULT_VARACTOR
    if varactor is None:
        if ring_inductance == RING_INDUCTANCE:
            if _DEFAULT_VARACTOR is None:
                _DEFAULT_VARACTOR = VaractorMap.solve()
            varactor = _DEFAULT_VARACTOR
        else:
            varactor = VaractorMap.solve(ring_inductance)
    f = CARRIERS[symbol]
    c = capacitance_for_frequency(ring_inductance, f)
    cv = varactor.varactor_for(c)
    return RingTuning(symbol, f, c, cv, varactor.voltage_for(cv))


# --- encoding --------------------------------------------------------------


@dataclass(frozen=True)
class ScrollEvent:
    """Physical input state: scroll direction (+x right, +y up) and press."""

    dx: int = 0
    dy: int = 0
    pressed: bool = False

    def __post_init__(self):
        if self.dx not in (-1, 0, 1) or self.dy not in (-1, 0, 1):
            raise ValueError(f"scroll components must be -1, 0 or +1, got ({self.dx}, {self.dy})")

    @property
    def idle(self) -> bool:
        return not self.pressed and self.dx == 0 and self.dy == 0


IDLE = ScrollEvent()

_VERTICAL = {1: MouseSymbol.SCROLL_UP, -1: MouseSymbol.SCROLL_DOWN}
_HORIZONTAL = {1: MouseSymbol.SCROLL_RIGHT, -1: MouseSymbol.SCROLL_LEFT}


def encode(event: ScrollEvent | None) -> list[MouseSymbol]:
    """Symbols the ring cycles through while ``event`` is held.

    Press takes precedence over any simultaneous scroll. A diagonal scroll
    becomes a [vertical, horizontal] pair that the ring alternates.
    """
    if event is None or event.idle:
        return [MouseSymbol.NONE]
    if event.pressed:
        return [MouseSymbol.PRESS]
    out = []
    if event.dy:
        out.append(_VERTICAL[event.dy])
    if event.dx:
        out.append(_HORIZONTAL[event.dx])
    return out


def encode_burst(event: ScrollEvent, n_frames: int) -> list[MouseSymbol]:
    """Per-frame symbols for ``n_frames`` consecutive emissions of a held input."""
    cycle = encode(event)
    return [cycle[i % len(cycle)] for i in range(n_frames)]


# --- duty-cycle state machine ----------------------------------------------


class Mode(Enum):
    ACTIVE = "active"
    STANDBY = "standby"


ACTIVE_CLOCK_HZ = 524e3
STANDBY_CLOCK_HZ = 32e3


@dataclass(frozen=True)
class RingState:
    mode: Mode = Mode.STANDBY
    last_input_time: float = -math.inf
    last_step_time: float = -math.inf
    active_since: float = math.nan
    frames_emitted: int = 0
    frame_rate_active: float = 200.0
    standby_timeout: float = 30.0
    wake_period: float = 0.01

    @property
    def clock_hz(self) -> float:
        return ACTIVE_CLOCK_HZ if self.mode is Mode.ACTIVE else STANDBY_CLOCK_HZ

    def frame_time(self, n: int) -> float:
        return self.active_since + n / self.frame_rate_active


def fsm_step(state: RingState, input_present: bool, now: float) -> tuple[RingState, tuple[float, ...]]:
    """Advance the duty-cycle machine to ``now``.

    ``input_present`` means the mouse module reported a change at ``now``.
    Returns the new state and the timestamps of ACTIVE frames emitted since
    the previous step. ACTIVE drops to STANDBY once ``standby_timeout``
    seconds pass without input; frames stop at that instant.
    """
    if now < state.last_step_time:
        raise TimeRegressionError(f"step at t={now} after t={state.last_step_time}")
    if state.mode is Mode.STANDBY:
        if not input_present:
            return replace(state, last_step_time=now), ()
        state = replace(state, mode=Mode.ACTIVE, last_input_time=now, active_since=now, frames_emitted=0)
    elif input_present:
        state = replace(state, last_input_time=now)

    deadline = state.last_input_time + state.standby_timeout
    timed_out = now >= deadline
    emitted = []
    n = state.frames_emitted
    while True:
        t = state.frame_time(n)
        if (t >= deadline) if timed_out else (t > now):
            break
        emitted.append(t)
        n += 1
    if timed_out:
        state = replace(state, mode=Mode.STANDBY, active_since=math.nan, frames_emitted=0)
    else:
        state = replace(state, frames_emitted=n)
    return replace(state, last_step_time=now), tuple(emitted)


@dataclass(frozen=True)
class Emission:
    t: float
    symbol: MouseSymbol


class RingSimulator:
    """Drives the state machine from held inputs and queues symbol frames.

    Single owner; not safe to share between threads while stepping. Each
    symbol of a diagonal pair is held for ``alternation_dwell`` seconds so a
    slower reader still sees both halves.
    """

    def __init__(self, state: RingState | None = None, alternation_dwell: float = 0.05):
        self.state = state or RingState()
        self.alternation_dwell = alternation_dwell
        self.held = IDLE
        self.held_since = 0.0
        self.queue: deque[Emission] = deque()
        self._last = Emission(-math.inf, MouseSymbol.NONE)

    def _wake_time(self, t: float) -> float:
        if self.state.mode is Mode.ACTIVE:
            return t
        period = self.state.wake_period
        return math.ceil(t / period - 1e-9) * period

    def _symbol_at(self, t: float) -> MouseSymbol:
        cycle = encode(self.held)
        k = int(math.floor((t - self.held_since) / self.alternation_dwell + 1e-9))
        return cycle[k % len(cycle)]

    def _step(self, input_present: bool, t: float) -> None:
        self.state, times = fsm_step(self.state, input_present, t)
        for ft in times:
            self.queue.append(Emission(ft, self._symbol_at(ft)))

    def apply(self, t: float, held: ScrollEvent) -> None:
        t = max(self._wake_time(t), self.state.last_step_time)
        self._step(False, t)
        self.held = held
        self.held_since = t
        # a frame due at exactly t already sees the new input
        while self.queue and self.queue[-1].t >= t:
            self.queue.pop()
        if self._last.t >= t:
            self._last = Emission(-math.inf, MouseSymbol.NONE)
        for ft in self._reemit(t):
            self.queue.append(Emission(ft, self._symbol_at(ft)))
        self._step(True, t)

    def _reemit(self, t: float) -> list[float]:
        s = self.state
        if s.mode is not Mode.ACTIVE or s.frames_emitted == 0:
            return []
        out = []
        n = s.frames_emitted - 1
        while n >= 0 and s.frame_time(n) >= t:
            out.append(s.frame_time(n))
            n -= 1
        return out[::-1]

    def advance(self, t: float) -> None:
        self._step(False, t)

    def drain(self) -> list[Emission]:
        out = list(self.queue)
        self.queue.clear()
        if out:
            self._last = out[-1]
        return out

    def resonance_at(self, t: float) -> MouseSymbol | None:
        """Symbol currently on the coil at ``t`` (``None`` in STANDBY)."""
        self.advance(t)
        self.drain()
        if self.state.mode is Mode.STANDBY:
            return None
        return self._last.symbol


# --- event scripts ---------------------------------------------------------

EVENT_KINDS = ("scroll", "press", "release")


@dataclass(frozen=True)
class InputEvent:
    t: float
    kind: str
    dx: int = 0
    dy: int = 0


def parse_event_script(lines: Iterable[str]) -> list[InputEvent]:
    """Parse NDJSON lines ``{"t": s, "kind": ..., "dx": int, "dy": int}``."""
    events = []
    last_t = -math.inf
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScriptParseError(lineno, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise ScriptParseError(lineno, "expected a JSON object")
        try:
            t = float(obj["t"])
            kind = obj["kind"]
        except KeyError as exc:
            raise ScriptParseError(lineno, f"missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ScriptParseError(lineno, "t must be a number") from exc
        if kind not in EVENT_KINDS:
            raise ScriptParseError(lineno, f"kind must be one of {EVENT_KINDS}, got {kind!r}")
        dx, dy = obj.get("dx", 0), obj.get("dy", 0)
        if not all(isinstance(v, int) and not isinstance(v, bool) and v in (-1, 0, 1) for v in (dx, dy)):
            raise ScriptParseError(lineno, "dx and dy must be integers in {-1, 0, 1}")
        if kind == "scroll" and dx == 0 and dy == 0:
            raise ScriptParseError(lineno, "scroll needs a non-zero dx or dy")
        if not math.isfinite(t) or t < 0:
            raise ScriptParseError(lineno, "t must be finite and non-negative")
        if t < last_t:
            raise ScriptParseError(lineno, f"t={t} goes backwards (previous {last_t})")
        last_t = t
        events.append(InputEvent(t, kind, dx, dy))
    return events


def load_event_script(path: str | Path) -> list[InputEvent]:
    with Path(path).open() as fp:
        return parse_event_script(fp)


def dump_event_script(events: Iterable[InputEvent]) -> str:
    return "".join(json.dumps({"t": e.t, "kind": e.kind, "dx": e.dx, "dy": e.dy}) + "\n" for e in events)


def held_states(events: Iterable[InputEvent]) -> Iterator[tuple[float, ScrollEvent]]:
    """Fold events into the held input state after each one.

    ``scroll`` replaces the scroll direction, ``press`` latches the button,
    ``release`` returns to idle.
    """
    held = IDLE
    for e in events:
        if e.kind == "scroll":
            held = ScrollEvent(e.dx, e.dy, held.pressed)
        elif e.kind == "press":
            held = ScrollEvent(held.dx, held.dy, True)
        else:
            held = IDLE
        yield e.t, held
