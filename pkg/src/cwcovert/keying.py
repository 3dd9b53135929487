"""Sender keying profile and the keyed Gaussian stream.

Both ends of the channel replay the same stream: the key is hashed to a
64-bit seed (FNV-1a), the seed drives SplitMix64, and pairs of uniforms
become standard normal deviates through Box-Muller (cosine branch only).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np

from .errors import EmptyKey, InsufficientSamples, InvalidValue, MissingField, ParseError
from .morse import Element

if TYPE_CHECKING:
    from .dsp import AudioBuffer, DetectorConfig

_MASK64 = 0xFFFFFFFFFFFFFFFF
FNV_OFFSET_BASIS = 14695981039346656037
FNV_PRIME = 1099511628211
# Stream increment fixed by the channel protocol.  It is one bit away from
# the usual SplitMix64 constant 0x9E3779B97F4A7C15; both ends must use this one.
STREAM_INCREMENT = 0x9E3779B97F4B7C15


@dataclass(frozen=True)
class KeyingStatistics:
    """Per-class element duration statistics, in seconds."""

    dot_mean: float
    dot_std: float
    dash_mean: float
    dash_std: float

    def __post_init__(self):
        for name in ("dot_mean", "dot_std", "dash_mean", "dash_std"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")
        # classes must stay apart even at the largest covert offset
        if not self.dot_mean + 4 * self.dot_std < self.dash_mean - 4 * self.dash_std:
            raise ValueError("dot and dash duration ranges overlap")

    def mean(self, elem: Element) -> float:
        return self.dot_mean if elem is Element.DOT else self.dash_mean

    def std(self, elem: Element) -> float:
        return self.dot_std if elem is Element.DOT else self.dash_std


REFERENCE_STATS = KeyingStatistics(0.060, 0.010, 0.180, 0.010)


def _key_bytes(key: Union[str, bytes]) -> bytes:
    return key.encode("utf-8") if isinstance(key, str) else bytes(key)


def derive_seed(key: Union[str, bytes]) -> int:
    """64-bit FNV-1a digest of the key bytes (str keys are UTF-8 encoded)."""
    data = _key_bytes(key)
    if not data:
        raise EmptyKey("key must not be empty")
    h = FNV_OFFSET_BASIS
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


class GaussianStream:
    """Deterministic standard-normal stream.

    Not thread safe; one owner at a time.
    """

    increment = STREAM_INCREMENT

    def __init__(self, seed: int):
        self.state = seed & _MASK64
        self.uniforms_drawn = 0
        self.draws = 0

    @classmethod
    def from_key(cls, key: Union[str, bytes]) -> "GaussianStream":
        return cls(derive_seed(key))

    def next_uint64(self) -> int:
        self.state = (self.state + self.increment) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        self.uniforms_drawn += 1
        return (self.next_uint64() >> 11) * (1.0 / (1 << 53))

    def next_gaussian(self) -> float:
        u1 = self.next_uniform()
        while u1 == 0.0:
            u1 = self.next_uniform()
        u2 = self.next_uniform()
        self.draws += 1
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def wrap(x: float, sigma: float) -> float:
    """Fold ``x`` into [-sigma, sigma) with period 2*sigma."""
    period = 2 * sigma
    return ((x + sigma) % period + period) % period - sigma


def base_duration(stream: GaussianStream, elem: Element, stats: KeyingStatistics) -> float:
    """Draw the keyed duration for one carrier element.

    The raw normal draw is wrapped back to within one standard deviation of
    the class mean.
    """
    mu, sigma = stats.mean(elem), stats.std(elem)
    raw = mu + sigma * stream.next_gaussian()
    return mu + wrap(raw - mu, sigma)


# ---------------------------------------------------------------------------
# stats file

STATS_FIELDS = ("dot_mean_ms", "dot_std_ms", "dash_mean_ms", "dash_std_ms")


def format_stats(stats: KeyingStatistics) -> str:
    lines = ["# keying statistics, milliseconds"]
    for name in STATS_FIELDS:
        lines.append(f"{name} = {getattr(stats, name[:-3]) * 1000.0!r}")
    return "\n".join(lines) + "\n"


def parse_stats(text: str) -> KeyingStatistics:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not name:
            raise ParseError(lineno, raw)
        if name not in STATS_FIELDS:
            raise ParseError(lineno, raw)
        try:
            number = float(value)
        except ValueError:
            raise InvalidValue(name, value) from None
        if not (math.isfinite(number) and number > 0):
            raise InvalidValue(name, value)
        values[name] = number
    for name in STATS_FIELDS:
        if name not in values:
            raise MissingField(name)
    try:
        return KeyingStatistics(*(values[name] / 1000.0 for name in STATS_FIELDS))
    except ValueError as exc:
        raise InvalidValue("stats", str(exc)) from None


def read_stats(path: Union[str, os.PathLike]) -> KeyingStatistics:
    with open(path, encoding="utf-8") as fh:
        return parse_stats(fh.read())


def write_stats(stats: KeyingStatistics, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_stats(stats))


# ---------------------------------------------------------------------------
# training period

MIN_TRAINING_SAMPLES = 20
MIN_STD = 1e-6


def stats_from_durations(elements, durations, min_samples: int = MIN_TRAINING_SAMPLES) -> KeyingStatistics:
    """Sample mean and standard deviation (ddof=1) per element class."""
    elements = list(elements)
    durations = np.asarray(durations, dtype=float)
    out = []
    for elem, name in ((Element.DOT, "dot"), (Element.DASH, "dash")):
        sel = durations[[e is elem for e in elements]] if len(elements) else np.empty(0)
        if len(sel) < min_samples:
            raise InsufficientSamples(name, len(sel), min_samples)
        out += [float(sel.mean()), float(sel.std(ddof=1))]
    dot_mean, dot_std, dash_mean, dash_std = out
    # perfectly regular keying measures as zero spread; keep stds positive
    dot_std, dash_std = max(dot_std, MIN_STD), max(dash_std, MIN_STD)
    return KeyingStatistics(dot_mean, dot_std, dash_mean, dash_std)


def derive_stats(audio: "AudioBuffer", detector: "DetectorConfig | None" = None, tolerance: float = 0.3) -> KeyingStatistics:
    """Learn a sender's keying statistics from an unmodulated recording."""
    from .dsp import DetectorConfig, decode_pipeline

    result = decode_pipeline(audio, detector or DetectorConfig(), tolerance=tolerance)
    return stats_from_durations(result.decode.elements, result.decode.on_durations)
