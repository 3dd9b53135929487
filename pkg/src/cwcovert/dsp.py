"""Audio side: keyed-sine synthesis, PCM16 WAV, and run extraction."""

from __future__ import annotations

import math
import os
import wave
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
from scipy import signal
from scipy.ndimage import maximum_filter1d

from .errors import ConfigInvalid, EmptySignal, NoSignal, TooShort, UnsupportedFormat
from .morse import MorseDecode, Run, decode_runs

PathLike = Union[str, os.PathLike]

PERIODOGRAM_SIZE = 8192
PCM16_SCALE = 32767.0


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise EmptySignal("audio buffer must be a non-empty mono signal")
        if self.sample_rate <= 0:
            raise ConfigInvalid("sample rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class SynthesisConfig:
    coding_frequency: float = 900.0
    sample_rate: int = 8000
    amplitude: float = 0.8
    ramp: float = 0.005
    # silence before the first and after the last element
    padding: float = 0.25

    def __post_init__(self):
        if not 0 < self.coding_frequency < self.sample_rate / 2:
            raise ConfigInvalid("coding frequency must be below Nyquist")
        if self.sample_rate < 4 * self.coding_frequency:
            raise ConfigInvalid("sample rate must be at least 4x the coding frequency")
        if not 0 < self.amplitude <= 1:
            raise ConfigInvalid("amplitude must be in (0, 1]")
        if self.ramp < 0 or self.padding < self.ramp:
            raise ConfigInvalid("ramp must be non-negative and fit inside the padding")


@dataclass(frozen=True)
class DetectorConfig:
    """Sliding-window detector settings.

    ``threshold_factor`` places the on threshold as a fraction of the
    on-state envelope level; ``hysteresis`` is the off/on threshold ratio.
    """

    window_cycles: int = 1
    threshold_factor: float = 0.5
    hysteresis: float = 0.8
    band_fraction: float = 0.05
    filter: bool = True
    # minimum on/off envelope level ratio before anything counts as signal
    min_contrast: float = 1.5

    def __post_init__(self):
        if int(self.window_cycles) != self.window_cycles or self.window_cycles < 1:
            raise ConfigInvalid("window_cycles must be a positive integer")
        if not 0 < self.threshold_factor < 1:
            raise ConfigInvalid("threshold_factor must be in (0, 1)")
        if not 0 < self.hysteresis <= 1:
            raise ConfigInvalid("hysteresis must be in (0, 1]")
        if not 0 < self.band_fraction < 0.5:
            raise ConfigInvalid("band_fraction must be in (0, 0.5)")


NOISY = DetectorConfig(window_cycles=3)


# ---------------------------------------------------------------------------
# synthesis


def _boundaries(timeline: Iterable, config: SynthesisConfig) -> list[tuple[int, int]]:
    """Sample indices [start, stop) of each on segment, measured at half amplitude."""
    fs = config.sample_rate
    t = config.padding
    spans = []
    for seg in timeline:
        if seg.duration <= 0:
            raise ConfigInvalid("segment durations must be positive")
        if seg.on:
            spans.append((int(round(t * fs)), int(round((t + seg.duration) * fs))))
        t += seg.duration
    spans.append((-1, int(round((t + config.padding) * fs))))
    return spans


def keying_envelope(timeline: Iterable, config: SynthesisConfig = SynthesisConfig()) -> np.ndarray:
    """Unit-height on/off envelope with raised-cosine edges.

    Each edge is centred on the segment boundary, so the envelope crosses
    one half exactly there.
    """
    spans = _boundaries(timeline, config)
    total = spans.pop()[1]
    if not spans:
        raise EmptySignal("timeline has no on segments")
    env = np.zeros(total)
    ramp = config.ramp * config.sample_rate
    pad = int(math.ceil(ramp / 2)) + 1
    for start, stop in spans:
        lo, hi = max(start - pad, 0), min(stop + pad, total)
        n = np.arange(lo, hi) + 0.5
        if ramp > 0:
            rise = np.clip((n - start) / ramp + 0.5, 0.0, 1.0)
            fall = np.clip((stop - n) / ramp + 0.5, 0.0, 1.0)
            shape = 0.5 * (1 - np.cos(np.pi * np.minimum(rise, fall)))
        else:
            shape = ((n > start) & (n < stop)).astype(float)
        env[lo:hi] = np.maximum(env[lo:hi], shape)
    return env


def synthesize(timeline: Iterable, config: SynthesisConfig = SynthesisConfig()) -> AudioBuffer:
    """Render on/off segments as a keyed sine at the coding frequency.

    ``timeline`` is any iterable of objects with ``on`` and ``duration``
    attributes (a KeyedTimeline or a list of Run).
    """
    env = keying_envelope(list(timeline), config)
    n = np.arange(env.size)
    tone = np.sin(2 * np.pi * config.coding_frequency * n / config.sample_rate)
    return AudioBuffer(config.amplitude * env * tone, config.sample_rate)


# ---------------------------------------------------------------------------
# WAV


def write_wav(buffer: AudioBuffer, path: PathLike) -> None:
    pcm = np.clip(np.round(buffer.samples * PCM16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(os.fspath(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(buffer.sample_rate))
        wf.writeframes(pcm.tobytes())


def read_wav(path: PathLike) -> AudioBuffer:
    """Read a mono PCM16 WAV file into floats in [-1, 1]."""
    try:
        wf = wave.open(os.fspath(path), "rb")
    except (wave.Error, EOFError) as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from None
    with wf:
        if wf.getnchannels() != 1:
            raise UnsupportedFormat(f"{path}: {wf.getnchannels()} channels, only mono is supported")
        if wf.getsampwidth() != 2:
            raise UnsupportedFormat(f"{path}: {8 * wf.getsampwidth()}-bit samples, only PCM16 is supported")
        rate = wf.getframerate()
        frames = wf.readframes(wf.getnframes())
    pcm = np.frombuffer(frames, dtype="<i2")
    return AudioBuffer(pcm / PCM16_SCALE, rate)


# ---------------------------------------------------------------------------
# analysis


def dominant_frequency(buffer: AudioBuffer, nfft: int = PERIODOGRAM_SIZE) -> float:
    """Peak bin of an averaged periodogram over non-overlapping frames."""
    x = buffer.samples
    frames = x.size // nfft
    if frames < 1:
        raise TooShort(f"need at least {nfft} samples for a periodogram, got {x.size}")
    blocks = x[: frames * nfft].reshape(frames, nfft)
    window = np.hanning(nfft)
    power = (np.abs(np.fft.rfft(blocks * window, axis=1)) ** 2).mean(axis=0)
    power[0] = 0.0
    return float(np.argmax(power) * buffer.sample_rate / nfft)


def band_edges(center: float, fraction: float) -> tuple[float, float]:
    return center * (1 - fraction), center * (1 + fraction)


def _bandpass_sos(center: float, fraction: float, sample_rate: int, order: int = 2) -> np.ndarray:
    if not 0 < fraction < 0.5:
        raise ConfigInvalid("band fraction must be in (0, 0.5)")
    lo, hi = band_edges(center, fraction)
    if not 0 < lo < hi < sample_rate / 2:
        raise ConfigInvalid(f"band {lo:.1f}-{hi:.1f} Hz does not fit below Nyquist")
    return signal.butter(order, [lo, hi], btype="bandpass", fs=sample_rate, output="sos")


def bandpass(buffer: AudioBuffer, center: float, fraction: float = 0.05) -> AudioBuffer:
    """Zero-phase Butterworth bandpass over center*(1 -/+ fraction)."""
    sos = _bandpass_sos(center, fraction, buffer.sample_rate)
    return AudioBuffer(signal.sosfiltfilt(sos, buffer.samples), buffer.sample_rate)


def _window_samples(sample_rate: int, center: float, cycles: int) -> int:
    w = max(1, int(round(cycles * sample_rate / center)))
    return w if w % 2 else w + 1


def _two_level(values: np.ndarray) -> tuple[float, float]:
    """Low and high cluster means of envelope values (two-means)."""
    lo, hi = np.percentile(values, [1, 99.9])
    for _ in range(50):
        split = (lo + hi) / 2
        low, high = values[values < split], values[values >= split]
        if low.size == 0 or high.size == 0:
            break
        new = (float(low.mean()), float(high.mean()))
        if new == (lo, hi):
            break
        lo, hi = new
    return float(lo), float(hi)


def envelope(buffer: AudioBuffer, center: float, window_cycles: int = 1) -> np.ndarray:
    """Sliding maximum of the rectified signal over ``window_cycles`` carrier cycles."""
    w = _window_samples(buffer.sample_rate, center, window_cycles)
    return maximum_filter1d(np.abs(buffer.samples), size=w, mode="constant", cval=0.0)


def _latch(mark: np.ndarray) -> np.ndarray:
    """Hold the last decided state (1/0) through undecided samples (-1)."""
    idx = np.where(mark >= 0, np.arange(mark.size), 0)
    np.maximum.accumulate(idx, out=idx)
    state = mark[idx]
    state[state < 0] = 0
    return state


def extract_runs(buffer: AudioBuffer, center: float, config: DetectorConfig = DetectorConfig()) -> list[Run]:
    """Recover on/off runs from a (filtered) keyed carrier.

    A sample is on when any rectified sample within the centred window
    exceeds the on threshold, and stays on until every sample in the window
    falls below ``hysteresis`` times it.  The latch runs both ways in time,
    so rising and falling edges are both measured at the on threshold.  The window widens each on-run by
    a fixed amount (window length less half a carrier period); that amount
    is moved from each on-run to its neighbouring off-runs.
    """
    fs = buffer.sample_rate
    env = envelope(buffer, center, config.window_cycles)
    if not np.any(env > 0):
        raise NoSignal("buffer is silent")
    step = max(1, env.size // 200_000)
    low, high = _two_level(env[::step])
    if high <= 0 or high < config.min_contrast * max(low, 1e-12):
        raise NoSignal("no keyed carrier above the noise floor")
    # the median ignores ramp samples that drag the cluster mean below the flat top
    on_level = float(np.median(env[env >= (low + high) / 2]))
    t_on = max(config.threshold_factor * on_level, (low + on_level) / 2 if low > config.threshold_factor * on_level else 0.0)
    t_off = config.hysteresis * t_on

    mark = np.where(env > t_on, 1, np.where(env < t_off, 0, -1))
    # A one-way Schmitt trigger delays both edges of a slow ramp.  Running it
    # in both directions and keeping the overlap puts both edges at t_on.
    state = _latch(mark) & _latch(mark[::-1])[::-1]
    if not state.any():
        raise NoSignal("no window exceeds the threshold")

    edges = np.flatnonzero(np.diff(state)) + 1
    bounds = np.concatenate(([0], edges, [state.size]))
    lengths = np.diff(bounds).astype(float)
    states = state[bounds[:-1]].astype(bool)

    w = _window_samples(fs, center, config.window_cycles)
    spread = max(0.0, (w - 1) - fs / center / 2)
    for i in np.flatnonzero(states):
        cut = min(spread, lengths[i] - 1)
        lengths[i] -= cut
        neighbours = [j for j in (i - 1, i + 1) if 0 <= j < lengths.size]
        for j in neighbours:
            lengths[j] += cut / len(neighbours)
    return [Run(bool(s), float(n / fs)) for s, n in zip(states, lengths)]


@dataclass(frozen=True)
class Diagnostics:
    samples: int
    sample_rate: int
    signal_average: float
    frequency: float
    band: tuple[float, float]
    tolerance: float
    window_cycles: int


@dataclass(frozen=True)
class PipelineResult:
    text: str
    decode: MorseDecode
    diagnostics: Diagnostics
    runs: list[Run] = field(repr=False, default_factory=list)

    @property
    def on_durations(self) -> tuple[float, ...]:
        return self.decode.on_durations


def decode_pipeline(
    buffer: AudioBuffer,
    detector: DetectorConfig = DetectorConfig(),
    tolerance: float = 0.3,
    frequency: Optional[float] = None,
    unit_hint: Optional[float] = None,
) -> PipelineResult:
    """Dominant frequency, bandpass, run extraction, then Morse classification."""
    if frequency is None:
        try:
            frequency = dominant_frequency(buffer)
        except TooShort:
            raise NoSignal("buffer too short to find a carrier") from None
    if frequency <= 0:
        raise NoSignal("no dominant frequency")
    band = band_edges(frequency, detector.band_fraction)
    filtered = bandpass(buffer, frequency, detector.band_fraction) if detector.filter else buffer
    runs = extract_runs(filtered, frequency, detector)
    decode = decode_runs(runs, unit_hint=unit_hint, tolerance=tolerance)
    diag = Diagnostics(
        samples=len(buffer),
        sample_rate=buffer.sample_rate,
        signal_average=float(np.mean(np.abs(buffer.samples))),
        frequency=frequency,
        band=band,
        tolerance=tolerance,
        window_cycles=detector.window_cycles,
    )
    return PipelineResult(decode.text, decode, diag, runs)
