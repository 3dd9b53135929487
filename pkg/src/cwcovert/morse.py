"""Morse alphabet, text/element conversion and run-length classification.

Timing follows the usual unit ratios: dot 1, dash 3, gap inside a letter 1,
gap between letters 3, gap between words 7.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import AmbiguousUnit, NoSignal, UnsupportedCharacter


class Element(enum.Enum):
    DOT = 1
    DASH = 3

    @property
    def units(self) -> int:
        return self.value

    @property
    def glyph(self) -> str:
        return "." if self is Element.DOT else "-"


class GapKind(enum.Enum):
    INTRA_SYMBOL = 1
    INTER_SYMBOL = 3
    INTER_WORD = 7

    @property
    def units(self) -> int:
        return self.value


_CHART = {
    "a": ".-", "b": "-...", "c": "-.-.", "d": "-..", "e": ".", "f": "..-.",
    "g": "--.", "h": "....", "i": "..", "j": ".---", "k": "-.-", "l": ".-..",
    "m": "--", "n": "-.", "o": "---", "p": ".--.", "q": "--.-", "r": ".-.",
    "s": "...", "t": "-", "u": "..-", "v": "...-", "w": ".--", "x": "-..-",
    "y": "-.--", "z": "--..",
    "0": "-----", "1": ".----", "2": "..---", "3": "...--", "4": "....-",
    "5": ".....", "6": "-....", "7": "--...", "8": "---..", "9": "----.",
    ".": ".-.-.-", ",": "--..--", "?": "..--..", "/": "-..-.", "=": "-...-",
    "'": ".----.",
}


def _parse_glyphs(code: str) -> tuple[Element, ...]:
    return tuple(Element.DOT if c == "." else Element.DASH for c in code)


SYMBOL_TABLE: dict[str, tuple[Element, ...]] = {ch: _parse_glyphs(code) for ch, code in _CHART.items()}
REVERSE_TABLE: dict[tuple[Element, ...], str] = {v: k for k, v in SYMBOL_TABLE.items()}

#: Placeholder emitted for element patterns that are not in the table.
UNKNOWN_LETTER = "*"


class Run(NamedTuple):
    on: bool
    duration: float


def normalize(text: str) -> str:
    """Lower-case and collapse whitespace runs to single spaces."""
    return " ".join(text.lower().split())


@dataclass(frozen=True)
class EncodedText:
    """A message as words of letters of elements."""

    words: tuple[tuple[tuple[Element, ...], ...], ...]

    @property
    def letters(self) -> list[tuple[Element, ...]]:
        return [letter for word in self.words for letter in word]

    @property
    def elements(self) -> list[Element]:
        return [e for letter in self.letters for e in letter]

    @property
    def element_count(self) -> int:
        return sum(len(letter) for letter in self.letters)

    def __len__(self) -> int:
        return self.element_count


def text_to_elements(text: str) -> EncodedText:
    """Encode ``text`` (case-insensitive) into Morse elements.

    Raises UnsupportedCharacter for anything outside the table; whitespace
    separates words.
    """
    words = []
    current: list[tuple[Element, ...]] = []
    for pos, ch in enumerate(text):
        if ch.isspace():
            if current:
                words.append(tuple(current))
                current = []
            continue
        code = SYMBOL_TABLE.get(ch.lower())
        if code is None:
            raise UnsupportedCharacter(pos, ch)
        current.append(code)
    if current:
        words.append(tuple(current))
    return EncodedText(tuple(words))


def element_timing(encoded: EncodedText) -> list[tuple[Element, GapKind | None]]:
    """Pair each element with the gap that follows it (None after the last)."""
    out: list[tuple[Element, GapKind | None]] = []
    for wi, word in enumerate(encoded.words):
        for li, letter in enumerate(word):
            for ei, elem in enumerate(letter):
                if ei < len(letter) - 1:
                    gap = GapKind.INTRA_SYMBOL
                elif li < len(word) - 1:
                    gap = GapKind.INTER_SYMBOL
                elif wi < len(encoded.words) - 1:
                    gap = GapKind.INTER_WORD
                else:
                    gap = None
                out.append((elem, gap))
    return out


def elements_to_nominal_runs(encoded: EncodedText, unit: float) -> list[Run]:
    if unit <= 0:
        raise ValueError("unit must be positive")
    runs = []
    for elem, gap in element_timing(encoded):
        runs.append(Run(True, elem.units * unit))
        if gap is not None:
            runs.append(Run(False, gap.units * unit))
    return runs


def validate_runs(runs: Sequence[Run]) -> None:
    for i, run in enumerate(runs):
        if not run.duration > 0:
            raise ValueError(f"run {i} has non-positive duration {run.duration}")
        if i and run.on == runs[i - 1].on:
            raise ValueError(f"runs {i - 1} and {i} do not alternate")


def _trim(runs: list[Run]) -> list[Run]:
    lo, hi = 0, len(runs)
    while lo < hi and not runs[lo].on:
        lo += 1
    while hi > lo and not runs[hi - 1].on:
        hi -= 1
    return runs[lo:hi]


def merge_glitches(runs: Iterable[Run], min_duration: float) -> list[Run]:
    """Absorb runs shorter than ``min_duration`` into their neighbours.

    The shortest offending run is merged first, so the result does not
    depend on scan direction.  Applying it twice gives the same result as
    applying it once.
    """
    runs = list(runs)
    while len(runs) > 1:
        idx = min(range(len(runs)), key=lambda i: runs[i].duration)
        glitch = runs[idx]
        if glitch.duration >= min_duration:
            break
        if idx == 0:
            runs[0:2] = [Run(runs[1].on, runs[1].duration + glitch.duration)]
        elif idx == len(runs) - 1:
            runs[-2:] = [Run(runs[-2].on, runs[-2].duration + glitch.duration)]
        else:
            prev, nxt = runs[idx - 1], runs[idx + 1]
            runs[idx - 1:idx + 2] = [Run(prev.on, prev.duration + glitch.duration + nxt.duration)]
    return runs


def estimate_unit(on_durations: Sequence[float], min_separation: float = 1.5) -> float:
    """Dot length from a two-means split of on-run durations.

    Clusters are seeded at the minimum and maximum and iterated to a fixed
    point; the unit is the mean of the short cluster.
    """
    if not len(on_durations):
        raise NoSignal("no on-runs to estimate a unit from")
    values = sorted(on_durations)
    lo, hi = values[0], values[-1]
    short: list[float] = values
    for _ in range(100):
        split = (lo + hi) / 2
        short = [v for v in values if v < split]
        long = [v for v in values if v >= split]
        if not short or not long:
            break
        new_lo, new_hi = sum(short) / len(short), sum(long) / len(long)
        if new_lo == lo and new_hi == hi:
            break
        lo, hi = new_lo, new_hi
    if lo <= 0 or hi / lo < min_separation:
        raise AmbiguousUnit(f"on-run clusters at {lo:.4g} and {hi:.4g} are not separated")
    return lo


@dataclass(frozen=True)
class MorseDecode:
    """Result of classifying a run sequence."""

    text: str
    elements: tuple[Element, ...]
    on_durations: tuple[float, ...]
    unit: float


def decode_runs(runs: Iterable[Run], unit_hint: float | None = None, tolerance: float = 0.3) -> MorseDecode:
    if not 0 < tolerance < 0.5:
        raise ValueError("tolerance must be in (0, 0.5)")
    runs = _trim(list(runs))
    if not runs:
        raise NoSignal("no on-runs")
    if unit_hint is not None:
        if unit_hint <= 0:
            raise ValueError("unit_hint must be positive")
        unit = unit_hint
        runs = _trim(merge_glitches(runs, tolerance * unit))
    else:
        unit = estimate_unit([r.duration for r in runs if r.on])
        for _ in range(10):
            merged = _trim(merge_glitches(runs, tolerance * unit))
            new_unit = estimate_unit([r.duration for r in merged if r.on])
            runs_changed = merged != runs
            runs = merged
            if new_unit == unit and not runs_changed:
                break
            unit = new_unit
    if not runs:
        raise NoSignal("only glitches found")

    words: list[str] = []
    word: list[str] = []
    letter: list[Element] = []
    elements: list[Element] = []
    durations: list[float] = []

    def flush_letter() -> None:
        if letter:
            word.append(REVERSE_TABLE.get(tuple(letter), UNKNOWN_LETTER))
            letter.clear()

    for run in runs:
        if run.on:
            elem = Element.DOT if run.duration < 2 * unit else Element.DASH
            letter.append(elem)
            elements.append(elem)
            durations.append(run.duration)
        elif run.duration >= 5 * unit:
            flush_letter()
            words.append("".join(word))
            word = []
        elif run.duration >= 2 * unit:
            flush_letter()
    flush_letter()
    if word:
        words.append("".join(word))
    return MorseDecode(" ".join(words), tuple(elements), tuple(durations), unit)


def classify_runs(runs: Iterable[Run], unit_hint: float | None = None, tolerance: float = 0.3) -> str:
    """Decode alternating on/off runs to text.

    On-runs shorter than two units are dots.  Off-runs under two units sit
    inside a letter, under five separate letters, otherwise words.  Runs
    shorter than ``tolerance`` units are glitches and are merged away first.
    Without ``unit_hint`` the unit is estimated from the on-runs.
    """
    return decode_runs(runs, unit_hint, tolerance).text
