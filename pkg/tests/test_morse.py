import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwcovert.errors import AmbiguousUnit, NoSignal, UnsupportedCharacter
from cwcovert.morse import (
    SYMBOL_TABLE,
    Element,
    Run,
    classify_runs,
    decode_runs,
    elements_to_nominal_runs,
    estimate_unit,
    merge_glitches,
    normalize,
    text_to_elements,
    validate_runs,
)

from conftest import CARRIER

D, H = Element.DOT, Element.DASH
ALPHABET = sorted(SYMBOL_TABLE)


def glyphs(elements):
    return "".join(e.glyph for e in elements)


def test_table_matches_itu_chart(chart):
    assert {k: glyphs(v) for k, v in SYMBOL_TABLE.items()} == chart


def test_table_is_injective():
    assert len(set(SYMBOL_TABLE.values())) == len(SYMBOL_TABLE)


def test_letter_a():
    assert text_to_elements("a").elements == [D, H]


def test_empty_text():
    enc = text_to_elements("")
    assert enc.elements == [] and enc.element_count == 0 and enc.words == ()


def test_cq(chart):
    enc = text_to_elements("cq")
    assert glyphs(enc.elements) == chart["c"] + chart["q"]
    assert enc.element_count == 8
    assert len(enc.words) == 1


def test_case_insensitive():
    assert text_to_elements("CQ") == text_to_elements("cq")


def test_unsupported_character_reports_position():
    with pytest.raises(UnsupportedCharacter) as info:
        text_to_elements("ab!c")
    assert info.value.position == 2 and info.value.char == "!"


def test_word_boundaries():
    enc = text_to_elements("  ab   c ")
    assert [len(w) for w in enc.words] == [2, 1]


def test_nominal_runs_single_dot():
    assert elements_to_nominal_runs(text_to_elements("e"), 0.060) == [Run(True, 0.060)]


def test_nominal_runs_ab():
    runs = elements_to_nominal_runs(text_to_elements("ab"), 0.060)
    offs = [r.duration for r in runs if not r.on]
    assert offs == pytest.approx([0.060, 0.180, 0.060, 0.060, 0.060])
    assert [r.duration for r in runs if r.on] == pytest.approx([0.060, 0.180, 0.180, 0.060, 0.060, 0.060])
    validate_runs(runs)


def test_nominal_runs_rejects_bad_unit():
    with pytest.raises(ValueError):
        elements_to_nominal_runs(text_to_elements("e"), 0)


def test_classify_letter_a():
    runs = [Run(True, 0.060), Run(False, 0.060), Run(True, 0.180)]
    assert classify_runs(runs, unit_hint=0.060) == "a"
    assert classify_runs(runs) == "a"


def test_classify_cq_carrier_nominal():
    runs = elements_to_nominal_runs(text_to_elements(CARRIER), 0.060)
    assert classify_runs(runs) == normalize(CARRIER)


def test_glitch_inside_dash_is_merged():
    runs = elements_to_nominal_runs(text_to_elements("cq"), 0.060)
    # split the first dash: 87.5 ms on, 5 ms off, 87.5 ms on
    glitched = [Run(True, 0.0875), Run(False, 0.005), Run(True, 0.0875)] + runs[1:]
    assert classify_runs(glitched, tolerance=0.3) == classify_runs(runs, tolerance=0.3) == "cq"


def test_on_spike_in_gap_is_merged():
    runs = elements_to_nominal_runs(text_to_elements("et"), 0.060)
    # on-spike in the middle of the letter gap
    glitched = [runs[0], Run(False, 0.087), Run(True, 0.006), Run(False, 0.087), runs[2]]
    assert classify_runs(glitched) == "et"


def test_merge_glitches_at_edges():
    runs = [Run(True, 0.002), Run(False, 0.1), Run(True, 0.06), Run(False, 0.001)]
    merged = merge_glitches(runs, 0.018)
    assert [r.on for r in merged] == [False, True]
    assert [r.duration for r in merged] == pytest.approx([0.102, 0.061])


def test_tolerance_range():
    runs = [Run(True, 0.06)]
    for bad in (0, 0.5, -0.1):
        with pytest.raises(ValueError):
            classify_runs(runs, unit_hint=0.06, tolerance=bad)


def test_no_signal():
    with pytest.raises(NoSignal):
        classify_runs([Run(False, 1.0)])
    with pytest.raises(NoSignal):
        classify_runs([])


def test_ambiguous_unit():
    runs = elements_to_nominal_runs(text_to_elements("e ee"), 0.060)
    with pytest.raises(AmbiguousUnit):
        classify_runs(runs)
    assert classify_runs(runs, unit_hint=0.060) == "e ee"


def test_estimate_unit_two_clusters():
    assert estimate_unit([0.05, 0.06, 0.07, 0.17, 0.18, 0.19]) == pytest.approx(0.06)


def test_unknown_pattern_placeholder():
    # six dots is not in the table
    runs = []
    for _ in range(6):
        runs += [Run(True, 0.06), Run(False, 0.06)]
    runs = runs[:-1] + [Run(False, 0.18), Run(True, 0.18)]
    assert decode_runs(runs).text == "*t"


def test_decode_reports_elements_and_durations():
    runs = elements_to_nominal_runs(text_to_elements("an"), 0.05)
    dec = decode_runs(runs)
    assert dec.elements == (D, H, H, D)
    assert dec.on_durations == pytest.approx((0.05, 0.15, 0.15, 0.05))
    assert dec.unit == pytest.approx(0.05)


def test_round_trip_1000_random_words():
    rng = random.Random(1234)
    for _ in range(1000):
        word = "".join(rng.choice(ALPHABET) for _ in range(rng.randint(1, 8)))
        runs = elements_to_nominal_runs(text_to_elements(word), 0.060)
        assert classify_runs(runs, unit_hint=0.060) == word


texts = st.lists(st.text(alphabet=ALPHABET, min_size=1, max_size=6), min_size=1, max_size=5).map(" ".join)


@settings(max_examples=200, deadline=None)
@given(text=texts, unit=st.floats(0.020, 0.200), tolerance=st.floats(0.01, 0.49))
def test_round_trip_property(text, unit, tolerance):
    runs = elements_to_nominal_runs(text_to_elements(text), unit)
    assert classify_runs(runs, unit_hint=unit, tolerance=tolerance) == normalize(text)


@settings(max_examples=100, deadline=None)
@given(text=texts, k=st.floats(0.01, 100.0), seed=st.integers(0, 2**32 - 1))
def test_scale_invariance(text, k, seed):
    rng = random.Random(seed)
    runs = [Run(r.on, r.duration * rng.uniform(0.8, 1.2)) for r in elements_to_nominal_runs(text_to_elements(text), 0.06)]
    scaled = [Run(r.on, r.duration * k) for r in runs]
    assert classify_runs(scaled, unit_hint=0.06 * k) == classify_runs(runs, unit_hint=0.06)


@settings(max_examples=200, deadline=None)
@given(
    durations=st.lists(st.floats(0.001, 0.5), min_size=1, max_size=40),
    first_on=st.booleans(),
    threshold=st.floats(0.001, 0.2),
)
def test_merge_is_idempotent(durations, first_on, threshold):
    runs = [Run(first_on ^ bool(i % 2), d) for i, d in enumerate(durations)]
    once = merge_glitches(runs, threshold)
    assert merge_glitches(once, threshold) == once
    validate_runs(once)
    assert sum(r.duration for r in once) == pytest.approx(sum(durations))
