"""Channel impairments and a Monte-Carlo harness for the full link."""

from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy import signal

from .covert import covert_text_to_symbols, demodulate_symbols, modulate, symbols_to_text
from .dsp import (
    AudioBuffer,
    DetectorConfig,
    SynthesisConfig,
    _bandpass_sos,
    _two_level,
    decode_pipeline,
    dominant_frequency,
    envelope,
    extract_runs,
    synthesize,
)
from .errors import CovertChannelError, ConfigInvalid, NoEndOfMessage
from .keying import GaussianStream, KeyingStatistics
from .morse import normalize, text_to_elements


@dataclass(frozen=True)
class ImpairmentSpec:
    """What the simulated path does to the audio.

    Every field is optional; an empty spec passes audio through untouched.
    """

    snr_db: Optional[float] = None
    jitter_ms: Optional[float] = None
    resample_hz: Optional[float] = None
    fade_depth: Optional[float] = None
    fade_period: float = 5.0
    # detection band used for SNR calibration; defaults to the dominant frequency
    center_hz: Optional[float] = None
    band_fraction: float = 0.05

    def __post_init__(self):
        if self.jitter_ms is not None and self.jitter_ms < 0:
            raise ConfigInvalid("jitter_ms must be non-negative")
        if self.resample_hz is not None and self.resample_hz <= 0:
            raise ConfigInvalid("resample_hz must be positive")
        if self.fade_depth is not None and not 0 <= self.fade_depth < 1:
            raise ConfigInvalid("fade_depth must be in [0, 1)")
        if self.fade_period <= 0:
            raise ConfigInvalid("fade_period must be positive")
        if not 0 < self.band_fraction < 0.5:
            raise ConfigInvalid("band_fraction must be in (0, 0.5)")

    @property
    def is_clean(self) -> bool:
        return not (self.snr_db is not None or self.jitter_ms or self.resample_hz or self.fade_depth)


def _inband(x: np.ndarray, center: float, fraction: float, fs: int) -> np.ndarray:
    return signal.sosfiltfilt(_bandpass_sos(center, fraction, fs), x)


def keyed_power(x: np.ndarray, center: float, fraction: float, fs: int) -> float:
    """In-band power of a keyed carrier while it is keyed on."""
    y = _inband(x, center, fraction, fs)
    env = envelope(AudioBuffer(y, fs), center)
    low, high = _two_level(env)
    on = env >= 0.5 * high
    return float(np.mean(y[on] ** 2))


def measure_inband_snr(clean: AudioBuffer, impaired: AudioBuffer, center: float, fraction: float = 0.05) -> float:
    fs = clean.sample_rate
    noise = _inband(impaired.samples - clean.samples, center, fraction, fs)
    return 10 * math.log10(keyed_power(clean.samples, center, fraction, fs) / np.mean(noise**2))


def _time_warp(x: np.ndarray, fs: int, center: float, jitter: float, rng: np.random.Generator) -> np.ndarray:
    """Move every keying edge by an independent uniform offset in [-jitter, jitter].

    The carrier is taken to complex baseband, the baseband is warped
    piecewise-linearly between edges and remodulated, so the tone frequency
    inside each element is unchanged.
    """
    runs = extract_runs(AudioBuffer(x, fs), center, DetectorConfig(filter=False))
    edges = np.cumsum([r.duration for r in runs])[:-1]
    if edges.size == 0 or jitter == 0:
        return x.copy()
    total = x.size / fs
    knots = np.concatenate(([0.0], edges, [total]))
    spacing = np.minimum(np.diff(knots)[:-1], np.diff(knots)[1:])
    shift = rng.uniform(-jitter, jitter, size=edges.size)
    shift = np.clip(shift, -0.45 * spacing, 0.45 * spacing)
    moved = np.concatenate(([0.0], edges + shift, [total]))

    t = np.arange(x.size) / fs
    carrier = np.exp(2j * np.pi * center * t)
    baseband = signal.hilbert(x) * np.conj(carrier)
    source = np.interp(t, moved, knots) * fs
    warped = np.interp(source, np.arange(x.size), baseband.real) + 1j * np.interp(source, np.arange(x.size), baseband.imag)
    return np.real(warped * carrier)


def _resample_round_trip(x: np.ndarray, fs: int, rate: float) -> np.ndarray:
    t = np.arange(x.size) / fs
    t_mid = np.arange(int(math.floor(x.size / fs * rate))) / rate
    mid = np.interp(t_mid, t, x)
    return np.interp(t, t_mid, mid)


def apply_impairments(buffer: AudioBuffer, spec: ImpairmentSpec, noise_seed: int = 0) -> AudioBuffer:
    """Pass audio through the simulated path: edge jitter, resampling, fading, then AWGN.

    Noise is white across the whole band and scaled so that the keyed-on
    signal power over noise power, both measured inside the detection band,
    equals ``snr_db``.  Deterministic for a given ``noise_seed``.
    """
    fs = buffer.sample_rate
    x = buffer.samples.copy()
    if spec.is_clean:
        return AudioBuffer(x, fs)
    center = spec.center_hz if spec.center_hz is not None else dominant_frequency(buffer)
    jitter_rng, noise_rng = np.random.default_rng(noise_seed).spawn(2)

    if spec.jitter_ms:
        x = _time_warp(x, fs, center, spec.jitter_ms / 1000.0, jitter_rng)
    if spec.resample_hz:
        x = _resample_round_trip(x, fs, spec.resample_hz)
    if spec.fade_depth:
        t = np.arange(x.size) / fs
        x = x * (1 - spec.fade_depth * 0.5 * (1 - np.cos(2 * np.pi * t / spec.fade_period)))
    if spec.snr_db is not None:
        p_signal = keyed_power(x, center, spec.band_fraction, fs)
        noise = noise_rng.standard_normal(x.size)
        p_noise = float(np.mean(_inband(noise, center, spec.band_fraction, fs) ** 2))
        x = x + noise * math.sqrt(p_signal / (p_noise * 10 ** (spec.snr_db / 10)))
    return AudioBuffer(x, fs)


@dataclass(frozen=True)
class TrialReport:
    trials: int
    overt_exact: int
    covert_exact: int
    covert_symbol_error_rate: float
    mean_abs_duration_error: float

    def __post_init__(self):
        if not (0 <= self.overt_exact <= self.trials and 0 <= self.covert_exact <= self.trials):
            raise ValueError("counts must lie in [0, trials]")


def _symbol_errors(sent, got) -> int:
    # positions the receiver never reached count as errors; extras do not
    errors = sum(a is not b for a, b in zip(sent, got))
    return errors + max(0, len(sent) - len(got))


def run_trials(
    carrier_text: str,
    covert_text: str,
    stats: KeyingStatistics,
    key: Union[str, bytes],
    spec: ImpairmentSpec,
    n_trials: int,
    base_seed: int = 0,
    detector: DetectorConfig = DetectorConfig(),
    tolerance: float = 0.3,
    synthesis: SynthesisConfig = SynthesisConfig(),
    gap_jitter: bool = True,
) -> TrialReport:
    """Run the full link ``n_trials`` times and count exact recoveries.

    Each trial draws its gap jitter and channel noise from
    ``base_seed + trial``.  Decode failures count as misses.
    """
    carrier = text_to_elements(carrier_text)
    symbols = covert_text_to_symbols(covert_text)
    want_overt, want_covert = normalize(carrier_text), normalize(covert_text)
    overt_ok = covert_ok = 0
    symbol_errors = 0
    duration_errors: list[float] = []
    for trial in range(n_trials):
        seed = base_seed + trial
        timeline = modulate(carrier, symbols, stats, GaussianStream.from_key(key), gap_jitter, np.random.default_rng(seed))
        audio = apply_impairments(synthesize(timeline, synthesis), spec, seed)
        try:
            result = decode_pipeline(audio, detector, tolerance=tolerance)
        except CovertChannelError:
            symbol_errors += len(symbols)
            continue
        overt_ok += result.text == want_overt
        measured = result.decode.on_durations
        if len(measured) == len(timeline.on_durations):
            duration_errors.append(float(np.mean(np.abs(np.subtract(measured, timeline.on_durations)))))
        got = demodulate_symbols(measured, result.decode.elements, stats, key)
        symbol_errors += _symbol_errors(symbols, got)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NoEndOfMessage)
            covert_ok += symbols_to_text(got) == want_covert
    return TrialReport(
        trials=n_trials,
        overt_exact=overt_ok,
        covert_exact=covert_ok,
        covert_symbol_error_rate=symbol_errors / (len(symbols) * n_trials) if n_trials else 0.0,
        mean_abs_duration_error=float(np.mean(duration_errors)) if duration_errors else float("nan"),
    )


SWEEP_COLUMNS = ("snr_db", "jitter_ms", "trials", "overt_exact", "covert_exact", "symbol_error_rate")


@dataclass(frozen=True)
class SweepRow:
    snr_db: Optional[float]
    jitter_ms: Optional[float]
    trials: int
    overt_exact: int
    covert_exact: int
    symbol_error_rate: float


def sweep(
    carrier_text: str,
    covert_text: str,
    stats: KeyingStatistics,
    key: Union[str, bytes],
    snr_values: Sequence[Optional[float]] = (None,),
    jitter_values: Sequence[Optional[float]] = (None,),
    n_trials: int = 10,
    base_seed: int = 0,
    detector: DetectorConfig = DetectorConfig(),
    tolerance: float = 0.3,
    base_spec: ImpairmentSpec = ImpairmentSpec(),
) -> list[SweepRow]:
    rows = []
    for snr in snr_values:
        for jitter in jitter_values:
            spec = ImpairmentSpec(
                snr_db=snr,
                jitter_ms=jitter,
                resample_hz=base_spec.resample_hz,
                fade_depth=base_spec.fade_depth,
                fade_period=base_spec.fade_period,
                center_hz=base_spec.center_hz,
                band_fraction=base_spec.band_fraction,
            )
            report = run_trials(carrier_text, covert_text, stats, key, spec, n_trials, base_seed, detector, tolerance)
            rows.append(SweepRow(snr, jitter, report.trials, report.overt_exact, report.covert_exact, report.covert_symbol_error_rate))
    return rows


def sweep_records(rows: Iterable[SweepRow]) -> list[dict[str, str]]:
    """Rows as CSV-ready strings; unset impairments become empty fields."""
    out = []
    for row in rows:
        out.append({
            "snr_db": "" if row.snr_db is None else f"{row.snr_db:g}",
            "jitter_ms": "" if row.jitter_ms is None else f"{row.jitter_ms:g}",
            "trials": str(row.trials),
            "overt_exact": str(row.overt_exact),
            "covert_exact": str(row.covert_exact),
            "symbol_error_rate": f"{row.symbol_error_rate:.6f}",
        })
    return out


def write_sweep_csv(rows: Iterable[SweepRow], path: Union[str, os.PathLike]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(sweep_records(rows))
