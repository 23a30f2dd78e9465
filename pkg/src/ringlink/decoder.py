"""Wristband-side decoding: find the ring's peak in a sweep, map it to the
nearest carrier, and turn the per-frame symbols into host mouse actions.

Two peak locators are available:

``matched`` (default)
    Slides the ring's resonance lineshape, ``-10 log10(1 + (2 df / B)^2)`` in
    dB with ``B`` the ring's half-power bandwidth, across the whole band. Each
    sweep bin is tried as the centre. The best least-squares fit (free dB
    offset) wins. The whole lobe contributes, not just the tallest bin.
``argmax``
    Tallest local maximum. Cheap, but a single noisy bin can move it.

Either way a detection is reported only when the peak rises at least
``threshold_db`` above the frame's median.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .circuit import RING_INDUCTANCE, RING_RESISTANCE, TWO_PI
from .errors import ContractViolation
from .readout import SpectrumFrame
from .ring import CARRIERS, SYMBOLS, MouseSymbol

DEFAULT_LINEWIDTH = RING_RESISTANCE / (TWO_PI * RING_INDUCTANCE)
METHODS = ("matched", "argmax")


@dataclass(frozen=True)
class DecoderConfig:
    threshold_db: float = 6.0
    method: str = "matched"
    linewidth_hz: float = DEFAULT_LINEWIDTH
    guard_hz: float = 70e3
    debounce_frames: int = 1
    refine: bool = False
    carriers: dict = field(default_factory=lambda: dict(CARRIERS))

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.debounce_frames < 1:
            raise ValueError("debounce_frames must be >= 1")
        if self.linewidth_hz <= 0 or self.guard_hz <= 0:
            raise ValueError("linewidth_hz and guard_hz must be positive")


@dataclass(frozen=True)
class PeakDetection:
    peak_frequency: float
    peak_height_db: float
    baseline_db: float
    prominence_threshold: float
    index: int = -1


@dataclass(frozen=True)
class DecodedEvent:
    symbol: MouseSymbol
    confidence: float
    frame_timestamp: float

    def to_json(self) -> str:
        return json.dumps({"t": self.frame_timestamp, "symbol": self.symbol.value,
                           "confidence": self.confidence})


@dataclass(frozen=True)
class HostAction:
    t: float
    action: str
    dx: int = 0
    dy: int = 0

    def to_json(self) -> str:
        return json.dumps({"t": self.t, "action": self.action, "dx": self.dx, "dy": self.dy})


@lru_cache(maxsize=16)
def _templates(freq_key: bytes, linewidth: float):
    freqs = np.frombuffer(freq_key)
    x = 2.0 * (freqs[None, :] - freqs[:, None]) / linewidth
    t = -10.0 * np.log10(1.0 + x * x)
    prominence = t.max(axis=1) - np.median(t, axis=1)
    tc = t - t.mean(axis=1, keepdims=True)
    half_energy = 0.5 * np.einsum("ij,ij->i", tc, tc)
    return np.ascontiguousarray(tc), half_energy, prominence


def _parabolic_offset(y0: float, y1: float, y2: float) -> float:
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (y0 - y2) / denom, -0.5, 0.5))


def detect_peaks_batch(p_db: np.ndarray, freqs: np.ndarray, config: DecoderConfig = DecoderConfig(),
                       equalization_db: np.ndarray | None = None):
    """Locate peaks in many frames at once.

    Returns ``(peak_freq, height_db, baseline_db)``; ``peak_freq`` is NaN where
    no peak clears the threshold.
    """
    p = np.ascontiguousarray(np.atleast_2d(np.asarray(p_db, dtype=float)))
    f = np.asarray(freqs, dtype=float)
    if p.shape[1] != f.size:
        raise ContractViolation(f"frame length {p.shape[1]} does not match {f.size} frequencies")
    eq = np.zeros(f.size) if equalization_db is None else np.asarray(equalization_db, dtype=float)
    if eq.shape != f.shape:
        raise ContractViolation("equalization length does not match frequencies")
    if config.method == "matched":
        tc, half, prom = _templates(f.tobytes(), float(config.linewidth_hz))
        idx, height, baseline = kernels.matched_peaks(p, eq, tc, half, prom)
    else:
        idx, height, baseline = kernels.argmax_peaks(p, eq)
    ok = (idx >= 0) & (height >= config.threshold_db)
    peak_f = np.where(ok, f[np.clip(idx, 0, f.size - 1)], np.nan)
    if config.refine:
        step = np.diff(f)
        for r in np.flatnonzero(ok):
            i = int(idx[r])
            if 0 < i < f.size - 1:
                y = _local_scores(p[r] - eq, i, f, config)
                peak_f[r] = f[i] + _parabolic_offset(*y) * step[min(i, step.size - 1)]
    return peak_f, height, baseline


def _local_scores(x: np.ndarray, i: int, freqs: np.ndarray, config: DecoderConfig):
    if config.method == "argmax":
        return x[i - 1], x[i], x[i + 1]
    tc, half, _ = _templates(freqs.tobytes(), float(config.linewidth_hz))
    xc = x - x.mean()
    return tuple(float(tc[j] @ xc - half[j]) for j in (i - 1, i, i + 1))


def detect_peak(frame: SpectrumFrame, threshold_db: float = 6.0, *, config: DecoderConfig | None = None,
                equalization_db: np.ndarray | None = None) -> PeakDetection | None:
    """Strongest ring peak in ``frame`` or ``None`` when nothing clears the threshold."""
    if not isinstance(frame, SpectrumFrame):
        raise ContractViolation("detect_peak expects a SpectrumFrame")
    if config is None:
        config = DecoderConfig(threshold_db=threshold_db)
    peak_f, height, baseline = detect_peaks_batch(frame.p_out_db[None, :], frame.frequencies, config,
                                                  equalization_db)
    if np.isnan(peak_f[0]):
        return None
    i = int(np.argmin(np.abs(frame.frequencies - peak_f[0])))
    return PeakDetection(float(peak_f[0]), float(height[0]), float(baseline[0]), config.threshold_db, i)


def _carrier_arrays(carriers: dict) -> tuple[np.ndarray, list[MouseSymbol]]:
    items = sorted(carriers.items(), key=lambda kv: kv[1])
    return np.array([v for _, v in items]), [k for k, _ in items]


def classify_frequencies(peak_freqs: np.ndarray, carriers: dict = CARRIERS, guard_hz: float = 70e3,
                         tie_hz: float = 1.0) -> np.ndarray:
    """Vectorised nearest-carrier lookup; returns indices into ``SYMBOLS``
    with -1 for rejected (no peak, outside the guard, or a tie)."""
    cf, syms = _carrier_arrays(carriers)
    pf = np.asarray(peak_freqs, dtype=float)
    d = np.abs(pf[:, None] - cf[None, :])
    order = np.argsort(np.where(np.isnan(d), np.inf, d), axis=1)
    rows = np.arange(pf.size)
    d0 = d[rows, order[:, 0]]
    d1 = d[rows, order[:, 1]] if cf.size > 1 else np.full(pf.size, np.inf)
    ok = ~np.isnan(pf) & (d0 <= guard_hz) & (d1 - d0 >= tie_hz)
    sym_index = np.array([SYMBOLS.index(s) for s in syms])
    return np.where(ok, sym_index[order[:, 0]], -1)


def classify(peak: PeakDetection, carriers: dict = CARRIERS, guard_hz: float = 70e3,
             timestamp: float = 0.0) -> DecodedEvent | None:
    """Nearest carrier within ``guard_hz``; exact midpoints are rejected."""
    k = int(classify_frequencies(np.array([peak.peak_frequency]), carriers, guard_hz)[0])
    if k < 0:
        return None
    confidence = peak.peak_height_db / peak.prominence_threshold if peak.prominence_threshold else np.inf
    return DecodedEvent(SYMBOLS[k], float(confidence), timestamp)


_SCROLL_DELTA = {
    MouseSymbol.SCROLL_UP: (0, 1),
    MouseSymbol.SCROLL_DOWN: (0, -1),
    MouseSymbol.SCROLL_LEFT: (-1, 0),
    MouseSymbol.SCROLL_RIGHT: (1, 0),
}


class ActionSynthesizer:
    """Debounces per-frame symbols into host actions.

    A symbol takes effect after ``debounce_frames`` consecutive frames. Each
    frame spent in a scroll symbol yields one unit of scroll. Entering PRESS
    yields ``press`` and leaving it yields ``release``. Frames with no
    decoded symbol leave the state unchanged.
    """

    def __init__(self, debounce_frames: int = 1):
        self.debounce_frames = debounce_frames
        self.current = MouseSymbol.NONE
        self._candidate: MouseSymbol | None = None
        self._run = 0

    def feed(self, t: float, symbol: MouseSymbol | None) -> list[HostAction]:
        if symbol is None:
            self._candidate, self._run = None, 0
            return []
        out = []
        if symbol == self.current:
            self._candidate, self._run = None, 0
        else:
            if symbol == self._candidate:
                self._run += 1
            else:
                self._candidate, self._run = symbol, 1
            if self._run < self.debounce_frames:
                return out
            if self.current == MouseSymbol.PRESS:
                out.append(HostAction(t, "release"))
            if symbol == MouseSymbol.PRESS:
                out.append(HostAction(t, "press"))
            self.current = symbol
            self._candidate, self._run = None, 0
        if self.current in _SCROLL_DELTA:
            dx, dy = _SCROLL_DELTA[self.current]
            out.append(HostAction(t, "scroll", dx, dy))
        return out


@dataclass
class StreamResult:
    events: list[DecodedEvent]
    actions: list[HostAction]
    symbols: list[MouseSymbol | None]


def event_stream(frames: Sequence[SpectrumFrame], config: DecoderConfig = DecoderConfig(),
                 equalization_db: np.ndarray | None = None) -> StreamResult:
    """Decode an ordered frame sequence into events and host actions."""
    if not frames:
        return StreamResult([], [], [])
    ts = [fr.timestamp for fr in frames]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ContractViolation("frames must be ordered by timestamp")
    freqs = frames[0].frequencies
    p = np.stack([fr.p_out_db for fr in frames])
    peak_f, height, _ = detect_peaks_batch(p, freqs, config, equalization_db)
    ks = classify_frequencies(peak_f, config.carriers, config.guard_hz)
    return stream_from_symbols(ts, [SYMBOLS[k] if k >= 0 else None for k in ks],
                               height / config.threshold_db, config.debounce_frames)


def stream_from_symbols(timestamps: Sequence[float], symbols: Sequence[MouseSymbol | None],
                        confidences: Iterable[float] | None = None, debounce_frames: int = 1) -> StreamResult:
    conf = list(confidences) if confidences is not None else [1.0] * len(symbols)
    synth = ActionSynthesizer(debounce_frames)
    events, actions = [], []
    for t, s, c in zip(timestamps, symbols, conf):
        if s is not None:
            events.append(DecodedEvent(s, float(c), float(t)))
        actions.extend(synth.feed(float(t), s))
    return StreamResult(events, actions, list(symbols))


def write_ndjson(items: Iterable, fp) -> None:
    for item in items:
        fp.write(item.to_json() + "\n")
