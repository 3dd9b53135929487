import wave

import numpy as np
import pytest
from scipy.signal import hilbert

from cwcovert.covert import covert_text_to_symbols, modulate
from cwcovert.dsp import (
    NOISY,
    AudioBuffer,
    DetectorConfig,
    SynthesisConfig,
    band_edges,
    bandpass,
    decode_pipeline,
    dominant_frequency,
    extract_runs,
    keying_envelope,
    read_wav,
    synthesize,
    write_wav,
)
from cwcovert.errors import ConfigInvalid, EmptySignal, NoSignal, TooShort, UnsupportedFormat
from cwcovert.keying import GaussianStream
from cwcovert.morse import Run, elements_to_nominal_runs, normalize, text_to_elements

from conftest import CARRIER, COVERT, KEY

FS = 8000
SAMPLE = 1 / FS


def tone(freq, seconds, amplitude=0.8, fs=FS):
    n = np.arange(int(seconds * fs))
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq * n / fs), fs)


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def on_runs(runs):
    return [r.duration for r in runs if r.on]


def test_dot_spans_480_samples():
    audio = synthesize([Run(True, 0.060)])
    env = np.abs(hilbert(audio.samples)) / SynthesisConfig().amplitude
    assert abs(int(np.sum(env > 0.5)) - 480) <= 1
    assert abs(int(np.sum(keying_envelope([Run(True, 0.060)]) > 0.5)) - 480) <= 1


def test_padding_and_length():
    cfg = SynthesisConfig()
    audio = synthesize([Run(True, 0.06), Run(False, 0.06), Run(True, 0.18)], cfg)
    assert len(audio) == round((0.30 + 2 * cfg.padding) * FS)
    assert np.max(np.abs(audio.samples)) <= cfg.amplitude + 1e-12


def test_carrier_buffer_length(sender_stats):
    timeline = modulate(CARRIER, covert_text_to_symbols(COVERT), sender_stats, GaussianStream.from_key(KEY), rng=np.random.default_rng(0))
    audio = synthesize(timeline)
    expected = (timeline.total_duration + 2 * SynthesisConfig().padding) * FS
    assert abs(len(audio) - expected) <= 1


def test_empty_timeline():
    with pytest.raises(EmptySignal):
        synthesize([])
    with pytest.raises(EmptySignal):
        synthesize([Run(False, 0.5)])


def test_invalid_synthesis_config():
    with pytest.raises(ConfigInvalid):
        SynthesisConfig(coding_frequency=5000)
    with pytest.raises(ConfigInvalid):
        SynthesisConfig(sample_rate=2000)


def test_wav_round_trip(tmp_path):
    audio = tone(900, 1.0)
    write_wav(audio, tmp_path / "t.wav")
    back = read_wav(tmp_path / "t.wav")
    assert back.sample_rate == FS and len(back) == len(audio)
    assert np.max(np.abs(back.samples - audio.samples)) <= 2**-15


def test_wav_header_rate(tmp_path):
    write_wav(tone(900, 0.1), tmp_path / "t.wav")
    raw = (tmp_path / "t.wav").read_bytes()
    assert raw[:4] == b"RIFF" and raw[8:12] == b"WAVE"
    assert int.from_bytes(raw[24:28], "little") == 8000
    assert int.from_bytes(raw[34:36], "little") == 16


def test_stereo_rejected(tmp_path):
    with wave.open(str(tmp_path / "s.wav"), "wb") as wf:
        wf.setnchannels(2)
        wf.setsampwidth(2)
        wf.setframerate(FS)
        wf.writeframes(np.zeros(200, dtype="<i2").tobytes())
    with pytest.raises(UnsupportedFormat):
        read_wav(tmp_path / "s.wav")


def test_not_a_wav(tmp_path):
    (tmp_path / "x.wav").write_bytes(b"hello")
    with pytest.raises(UnsupportedFormat):
        read_wav(tmp_path / "x.wav")


def test_dominant_frequency_pure_tone():
    assert dominant_frequency(tone(900, 2.0)) == pytest.approx(899.9, abs=1.0)


def test_dominant_frequency_keyed_message(sender_stats):
    timeline = modulate(CARRIER, covert_text_to_symbols(COVERT), sender_stats, GaussianStream.from_key(KEY), rng=np.random.default_rng(0))
    assert dominant_frequency(synthesize(timeline)) == pytest.approx(900, abs=2)


def test_dominant_frequency_in_noise():
    clean = tone(900, 2.0)
    sigma = 0.8 / np.sqrt(2)  # noise power equal to the tone power
    for seed in range(100):
        noise = np.random.default_rng(seed).normal(0, sigma, len(clean))
        f = dominant_frequency(AudioBuffer(clean.samples + noise, FS))
        assert abs(f - 900) <= 2, seed


def test_dominant_frequency_too_short():
    with pytest.raises(TooShort):
        dominant_frequency(tone(900, 0.5))


def test_band_edges():
    lo, hi = band_edges(898, 0.05)
    assert (round(lo), round(hi)) == (853, 943)


def test_bandpass_passes_in_band_tone():
    x = tone(900, 2.0)
    y = bandpass(x, 900, 0.05)
    core = slice(FS // 2, -FS // 2)
    loss_db = 20 * np.log10(rms(x.samples[core]) / rms(y.samples[core]))
    assert loss_db <= 1.0


def test_bandpass_rejects_octave_below():
    x = tone(400, 2.0)
    y = bandpass(x, 900, 0.05)
    core = slice(FS // 2, -FS // 2)
    assert 20 * np.log10(rms(x.samples[core]) / rms(y.samples[core])) >= 40


def test_bandpass_bad_fraction():
    with pytest.raises(ConfigInvalid):
        bandpass(tone(900, 0.2), 900, 0.6)


def test_single_dot_recovered():
    runs = extract_runs(synthesize([Run(True, 0.060)]), 900)
    (dot,) = on_runs(runs)
    assert dot == pytest.approx(0.060, abs=2.2e-3)


def test_timing_fidelity_per_run():
    rng = np.random.default_rng(8)
    durations = rng.uniform(0.03, 0.3, 41)
    timeline = [Run(i % 2 == 0, float(d)) for i, d in enumerate(durations)]
    runs = extract_runs(synthesize(timeline), 900)
    assert len(runs) == len(timeline) + 2  # leading and trailing silence
    window = 1 / 900
    for got, sent in zip(runs[1:-1], timeline):
        assert got.on == sent.on
        assert abs(got.duration - sent.duration) <= window + SAMPLE


def test_silence_has_no_signal():
    with pytest.raises(NoSignal):
        extract_runs(AudioBuffer(np.zeros(4000), FS), 900)


def test_bandpass_is_zero_phase():
    timeline = elements_to_nominal_runs(text_to_elements("paris"), 0.06)
    audio = synthesize(timeline)
    raw = extract_runs(audio, 900, DetectorConfig(filter=False))
    filtered = extract_runs(bandpass(audio, 900, 0.05), 900, DetectorConfig(filter=False))

    def midpoints(runs):
        t = np.cumsum([0.0] + [r.duration for r in runs])
        return np.array([(t[i] + t[i + 1]) / 2 for i, r in enumerate(runs) if r.on])

    assert np.max(np.abs(midpoints(raw) - midpoints(filtered))) <= SAMPLE + 1e-12


def test_wider_window_never_splits_runs():
    rng = np.random.default_rng(4)
    timeline = [Run(i % 2 == 0, float(d)) for i, d in enumerate(rng.uniform(0.04, 0.2, 21))]
    audio = bandpass(synthesize(timeline), 900, 0.05)
    counts = [len(extract_runs(audio, 900, DetectorConfig(window_cycles=w))) for w in range(1, 8)]
    assert counts == sorted(counts, reverse=True)


def test_detector_config_validation():
    with pytest.raises(ConfigInvalid):
        DetectorConfig(window_cycles=0)
    with pytest.raises(ConfigInvalid):
        DetectorConfig(hysteresis=1.5)


def test_pipeline_cq_carrier(sender_stats):
    timeline = modulate(CARRIER, covert_text_to_symbols(COVERT), sender_stats, GaussianStream.from_key(KEY), rng=np.random.default_rng(0))
    result = decode_pipeline(synthesize(timeline))
    assert result.text == normalize(CARRIER)
    d = result.diagnostics
    assert d.frequency == pytest.approx(900, abs=2)
    assert d.band == pytest.approx(band_edges(d.frequency, 0.05))
    assert d.signal_average > 0 and d.tolerance == 0.3 and d.samples > 0


def test_pipeline_silence():
    with pytest.raises(NoSignal):
        decode_pipeline(AudioBuffer(np.zeros(int(0.3 * FS)), FS))


def test_pipeline_is_deterministic(tmp_path, sender_stats):
    timeline = modulate("paris paris", covert_text_to_symbols("e"), sender_stats, GaussianStream.from_key(KEY), rng=np.random.default_rng(2))
    write_wav(synthesize(timeline), tmp_path / "p.wav")
    a = decode_pipeline(read_wav(tmp_path / "p.wav"), NOISY)
    b = decode_pipeline(read_wav(tmp_path / "p.wav"), NOISY)
    assert a.on_durations == b.on_durations and a.runs == b.runs
