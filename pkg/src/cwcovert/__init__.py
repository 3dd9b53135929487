"""Covert messages hidden in the element timing of Morse (CW) transmissions."""

__version__ = "0.1.0"

from .covert import (
    ChannelSymbol,
    KeyedTimeline,
    covert_text_to_symbols,
    demodulate,
    keyed_carrier,
    modulate,
)
from .dsp import AudioBuffer, DetectorConfig, SynthesisConfig, decode_pipeline, read_wav, synthesize, write_wav
from .keying import GaussianStream, KeyingStatistics, derive_seed, read_stats, write_stats
from .morse import Element, classify_runs, text_to_elements

__all__ = [
    "AudioBuffer",
    "ChannelSymbol",
    "DetectorConfig",
    "Element",
    "GaussianStream",
    "KeyedTimeline",
    "KeyingStatistics",
    "SynthesisConfig",
    "classify_runs",
    "covert_text_to_symbols",
    "decode_pipeline",
    "demodulate",
    "derive_seed",
    "keyed_carrier",
    "modulate",
    "read_stats",
    "read_wav",
    "synthesize",
    "text_to_elements",
    "write_stats",
    "write_wav",
]
