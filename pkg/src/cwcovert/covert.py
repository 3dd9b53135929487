"""Covert codec: hidden Morse carried on carrier element durations.

Every carrier element gets a keyed base duration; the transmitter adds a
multiple of that element class's standard deviation to it.  The receiver
regenerates the base durations from the shared key and reads the multiple
back from the measured duration.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import InsufficientCarrier, NoEndOfMessage, StatsMismatch
from .keying import GaussianStream, KeyingStatistics, base_duration
from .morse import REVERSE_TABLE, UNKNOWN_LETTER, Element, EncodedText, Run, element_timing, normalize, text_to_elements


class ChannelSymbol(enum.Enum):
    """Covert symbols; the value is the offset in standard deviations."""

    COVERT_DASH = -1
    LETTER_GAP = 0
    COVERT_DOT = 1
    WORD_GAP = 2
    END_OF_MESSAGE = 3

    @property
    def offset(self) -> int:
        return self.value


_OFFSETS = np.array([s.value for s in ChannelSymbol], dtype=float)


@dataclass(frozen=True)
class Segment:
    on: bool
    duration: float
    element: Optional[Element] = None
    symbol: Optional[ChannelSymbol] = None


@dataclass(frozen=True)
class KeyedTimeline:
    segments: tuple[Segment, ...]

    def __iter__(self):
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def runs(self) -> list[Run]:
        return [Run(s.on, s.duration) for s in self.segments]

    @property
    def on_segments(self) -> list[Segment]:
        return [s for s in self.segments if s.on]

    @property
    def on_durations(self) -> list[float]:
        return [s.duration for s in self.segments if s.on]

    @property
    def elements(self) -> list[Element]:
        return [s.element for s in self.segments if s.on]

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.segments)


def _encoded(carrier: Union[str, EncodedText]) -> EncodedText:
    return carrier if isinstance(carrier, EncodedText) else text_to_elements(carrier)


def covert_text_to_symbols(text: str) -> list[ChannelSymbol]:
    encoded = text_to_elements(text)
    symbols: list[ChannelSymbol] = []
    for wi, word in enumerate(encoded.words):
        for letter in word:
            symbols += [ChannelSymbol.COVERT_DOT if e is Element.DOT else ChannelSymbol.COVERT_DASH for e in letter]
            symbols.append(ChannelSymbol.LETTER_GAP)
        if wi < len(encoded.words) - 1:
            symbols[-1] = ChannelSymbol.WORD_GAP
    symbols.append(ChannelSymbol.END_OF_MESSAGE)
    return symbols


def capacity(carrier_text: str) -> int:
    """Number of carrier elements, i.e. covert symbols the carrier can hold."""
    return text_to_elements(carrier_text).element_count


def required(covert_text: str) -> int:
    return len(covert_text_to_symbols(covert_text))


def _build(
    carrier: EncodedText,
    stats: KeyingStatistics,
    element_duration,
    gap_jitter: bool,
    rng: Optional[np.random.Generator],
) -> KeyedTimeline:
    unit = stats.dot_mean
    sigma = stats.dot_std
    if gap_jitter and rng is None:
        rng = np.random.default_rng()
    segments = []
    for i, (elem, gap) in enumerate(element_timing(carrier)):
        duration, symbol = element_duration(i, elem)
        segments.append(Segment(True, duration, elem, symbol))
        if gap is None:
            continue
        gap_len = gap.units * unit
        if gap_jitter:
            # clipped so gap classes stay separable
            gap_len += float(np.clip(rng.normal(0.0, sigma), -3 * sigma, 3 * sigma))
        segments.append(Segment(False, gap_len))
    return KeyedTimeline(tuple(segments))


def modulate(
    carrier: Union[str, EncodedText],
    symbols: Sequence[ChannelSymbol],
    stats: KeyingStatistics,
    stream: GaussianStream,
    gap_jitter: bool = True,
    rng: Optional[np.random.Generator] = None,
) -> KeyedTimeline:
    """Key the carrier with the covert symbols on top of keyed base durations.

    Element ``i`` lasts ``base_i + offset(symbol_i) * sigma_class``; elements
    past the end of the symbol list keep their base duration.  Gaps are the
    nominal 1/3/7 units (unit = mean dot length), plus Gaussian jitter from
    ``rng`` when ``gap_jitter`` is set.  The jitter does not touch the keyed
    stream.
    """
    carrier = _encoded(carrier)
    available = carrier.element_count
    if len(symbols) > available:
        raise InsufficientCarrier(len(symbols), available)

    def element_duration(i, elem):
        base = base_duration(stream, elem, stats)
        if i < len(symbols):
            return base + symbols[i].offset * stats.std(elem), symbols[i]
        return base, None

    return _build(carrier, stats, element_duration, gap_jitter, rng)


def keyed_carrier(
    carrier: Union[str, EncodedText],
    stats: KeyingStatistics,
    stream: GaussianStream,
    gap_jitter: bool = True,
    rng: Optional[np.random.Generator] = None,
) -> KeyedTimeline:
    """Unmodulated carrier: every element at its keyed base duration."""
    return modulate(carrier, (), stats, stream, gap_jitter, rng)


def human_timeline(
    carrier: Union[str, EncodedText],
    stats: KeyingStatistics,
    rng: np.random.Generator,
    gap_jitter: bool = True,
) -> KeyedTimeline:
    """Plain keying with normally distributed element lengths and no key.

    This is what a training-period recording looks like; durations are not
    wrapped, so the sample statistics converge to ``stats``.
    """
    carrier = _encoded(carrier)

    def element_duration(i, elem):
        d = rng.normal(stats.mean(elem), stats.std(elem))
        return max(d, 0.25 * stats.mean(elem)), None

    return _build(carrier, stats, element_duration, gap_jitter, rng)


def classify_offset(normalized_delta: float) -> ChannelSymbol:
    """Nearest symbol offset, with out-of-range deltas clamped."""
    return ChannelSymbol(int(_OFFSETS[np.argmin(np.abs(_OFFSETS - normalized_delta))]))


def demodulate_symbols(
    measured_on_durations: Sequence[float],
    carrier_elements: Sequence[Element],
    stats: KeyingStatistics,
    key: Union[str, bytes, GaussianStream],
    expected_count: Optional[int] = None,
) -> list[ChannelSymbol]:
    """Recover the raw symbol stream (up to and including the EOM marker)."""
    if len(measured_on_durations) != len(carrier_elements):
        raise ValueError("one measured duration per carrier element is required")
    if expected_count is not None and expected_count != len(carrier_elements):
        raise StatsMismatch(expected_count, len(carrier_elements))
    stream = key if isinstance(key, GaussianStream) else GaussianStream.from_key(key)
    symbols = []
    for measured, elem in zip(measured_on_durations, carrier_elements):
        base = base_duration(stream, elem, stats)
        symbol = classify_offset((measured - base) / stats.std(elem))
        symbols.append(symbol)
        if symbol is ChannelSymbol.END_OF_MESSAGE:
            break
    return symbols


def symbols_to_text(symbols: Iterable[ChannelSymbol]) -> str:
    """Assemble covert symbols into text; stops at END_OF_MESSAGE.

    Warns with NoEndOfMessage when the marker never appears.
    """
    out: list[str] = []
    letter: list[Element] = []

    def flush() -> None:
        if letter:
            out.append(REVERSE_TABLE.get(tuple(letter), UNKNOWN_LETTER))
            letter.clear()

    for symbol in symbols:
        if symbol is ChannelSymbol.COVERT_DOT:
            letter.append(Element.DOT)
        elif symbol is ChannelSymbol.COVERT_DASH:
            letter.append(Element.DASH)
        elif symbol is ChannelSymbol.LETTER_GAP:
            flush()
        elif symbol is ChannelSymbol.WORD_GAP:
            flush()
            if out and out[-1] != " ":
                out.append(" ")
        else:
            flush()
            return normalize("".join(out))
    flush()
    warnings.warn("covert stream ended without an end-of-message marker", NoEndOfMessage, stacklevel=2)
    return normalize("".join(out))


def demodulate(
    measured_on_durations: Sequence[float],
    carrier_elements: Sequence[Element],
    stats: KeyingStatistics,
    key: Union[str, bytes, GaussianStream],
    expected_count: Optional[int] = None,
) -> str:
    """Recover the covert text from measured carrier element durations.

    ``carrier_elements`` is the receiver's own decode of the carrier.  The
    deviation of each element from its regenerated base duration, in units
    of its class standard deviation, is snapped to the nearest of
    -1, 0, +1, +2, +3.  Decoding stops at the end-of-message marker.
    """
    symbols = demodulate_symbols(measured_on_durations, carrier_elements, stats, key, expected_count)
    return symbols_to_text(symbols)
