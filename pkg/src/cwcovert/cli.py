"""Command-line front end.

    cwcovert cwtx -o call.wav -m "cq cq ..." -s statfile -c "covert text" -k secret
    cwcovert cwrx -i call.wav [-c statfile -k secret]
    cwcovert cwtrain -i training.wav -o statfile
    cwcovert cwsim --carrier ... --covert ... --stats statfile --key secret --snr 0 10 20
    cwcovert cwdetect --modulated call.wav --stats statfile --report report.json

Diagnostics go to stderr, decoded messages to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .channel import SWEEP_COLUMNS, ImpairmentSpec, sweep, sweep_records, write_sweep_csv
from .covert import (
    covert_text_to_symbols,
    demodulate,
    human_timeline,
    keyed_carrier,
    modulate,
)
from .detect import detectability_report, split_by_class
from .dsp import DetectorConfig, SynthesisConfig, decode_pipeline, read_wav, synthesize, write_wav
from .errors import (
    AmbiguousUnit,
    CovertChannelError,
    InsufficientCarrier,
    InsufficientSamples,
    NoEndOfMessage,
    NoSignal,
    StatsFileError,
    UnsupportedCharacter,
    UnsupportedFormat,
)
from .keying import GaussianStream, read_stats, stats_from_durations, write_stats
from .morse import text_to_elements

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_IO = 4
EXIT_NO_SIGNAL = 5


class UsageError(Exception):
    pass


def log(msg: str = "") -> None:
    print(msg, file=sys.stderr)


def _detector(args) -> DetectorConfig:
    return DetectorConfig(window_cycles=args.window_cycles)


def _decode(path, args):
    audio = read_wav(path)
    log(f"** Read {len(audio)} samples from {path} with sample frequency {audio.sample_rate} Hz and encoding pcm16")
    result = decode_pipeline(audio, _detector(args), tolerance=args.tolerance, frequency=args.frequency)
    d = result.diagnostics
    log(f"** Signal average: {d.signal_average}")
    log(f"** Using dominant frequency: {d.frequency:.0f} Hz")
    if _detector(args).filter:
        log(f"** Filtering to between {d.band[0]:.0f} and {d.band[1]:.0f} Hz")
    log(f"** Decoding with tolerance: {d.tolerance:.3f}")
    return result


# ---------------------------------------------------------------------------
# subcommands


def cmd_cwtx(args) -> int:
    if not args.message.strip():
        raise UsageError("carrier message (-m) must not be empty")
    if args.covert is not None and not args.key:
        raise UsageError("-c requires -k")
    carrier = text_to_elements(args.message)
    stats = read_stats(args.stats)
    rng = np.random.default_rng(args.seed)
    log(f"** Saving output to {args.output}")
    log(f"** Using coding frequency {args.freq:g} Hz")
    log(f"** Using sampling frequency {args.rate} Hz")
    log(f"** Getting statistics from {args.stats}")
    jitter = not args.no_gap_jitter
    if args.covert is not None:
        timeline = modulate(carrier, covert_text_to_symbols(args.covert), stats, GaussianStream.from_key(args.key), jitter, rng)
    elif args.key:
        timeline = keyed_carrier(carrier, stats, GaussianStream.from_key(args.key), jitter, rng)
    else:
        timeline = human_timeline(carrier, stats, rng, jitter)
    log("** Generating audio")
    audio = synthesize(timeline, SynthesisConfig(coding_frequency=args.freq, sample_rate=args.rate))
    write_wav(audio, args.output)
    log("** Finished.")
    return EXIT_OK


def cmd_cwrx(args) -> int:
    if bool(args.stats) != bool(args.key):
        raise UsageError("-c and -k must be used together")
    stats = None
    if args.stats:
        stats = read_stats(args.stats)
        log(f"** Read statistics for covert demodulation from {args.stats}")
    log()
    result = _decode(args.input, args)
    print(f"Message: {result.text}")
    if stats is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NoEndOfMessage)
            covert = demodulate(result.on_durations, result.decode.elements, stats, args.key)
        print(f"Decoded: {covert}")
        if any(issubclass(w.category, NoEndOfMessage) for w in caught):
            log("** Warning: no end-of-message marker found")
    log("** Finished")
    return EXIT_OK


def cmd_cwtrain(args) -> int:
    result = _decode(args.input, args)
    stats = stats_from_durations(result.decode.elements, result.decode.on_durations)
    write_stats(stats, args.output)
    log(f"** Dots: {stats.dot_mean * 1000:.2f} ms +/- {stats.dot_std * 1000:.2f} ms")
    log(f"** Dashes: {stats.dash_mean * 1000:.2f} ms +/- {stats.dash_std * 1000:.2f} ms")
    log(f"** Wrote statistics to {args.output}")
    return EXIT_OK


def cmd_cwsim(args) -> int:
    stats = read_stats(args.stats)
    need, have = len(covert_text_to_symbols(args.covert)), text_to_elements(args.carrier).element_count
    if need > have:
        raise InsufficientCarrier(need, have)
    base = ImpairmentSpec(resample_hz=args.resample, fade_depth=args.fade, fade_period=args.fade_period)
    rows = sweep(
        args.carrier, args.covert, stats, args.key,
        snr_values=args.snr or [None], jitter_values=args.jitter or [None],
        n_trials=args.trials, base_seed=args.seed, detector=_detector(args),
        tolerance=args.tolerance, base_spec=base,
    )
    print(",".join(SWEEP_COLUMNS))
    for record in sweep_records(rows):
        print(",".join(record[c] for c in SWEEP_COLUMNS))
    if args.csv:
        write_sweep_csv(rows, args.csv)
        log(f"** Wrote {len(rows)} rows to {args.csv}")
    return EXIT_OK


def cmd_cwdetect(args) -> int:
    if args.reference is None and args.stats is None:
        raise UsageError("give --reference or --stats")
    modulated = _decode(args.modulated, args).decode
    durations = split_by_class(modulated.elements, modulated.on_durations)
    reference = None
    if args.reference:
        ref = _decode(args.reference, args).decode
        reference = split_by_class(ref.elements, ref.on_durations)
    stats = read_stats(args.stats) if args.stats else stats_from_durations(ref.elements, ref.on_durations, min_samples=2)
    report = detectability_report(durations, stats, reference, model=args.model)
    print(f"reference: {report.reference}")
    for c in report.classes:
        print(
            f"{c.element}: n={c.count} mean={c.mean * 1000:.3f} ms std={c.std * 1000:.3f} ms "
            f"ks={c.ks_statistic:.4f} (5% critical {c.critical_value:.4f}) outside={c.outside_fraction:.4f}"
        )
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_decoder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-t", "--tolerance", type=float, default=0.3, help="glitch merge threshold in units (default 0.3)")
    p.add_argument("-W", "--window-cycles", type=int, default=1, help="detector window in carrier cycles (3 for noisy input)")
    p.add_argument("-f", "--frequency", type=float, default=None, help="override the detected carrier frequency (Hz)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cwcovert", description="Covert timing channel over Morse code.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cwtx", help="synthesize a keyed carrier, optionally carrying a covert message")
    p.add_argument("-o", "--output", required=True, help="output WAV file")
    p.add_argument("-m", "--message", required=True, help="overt carrier message")
    p.add_argument("-s", "--stats", required=True, help="keying statistics file")
    p.add_argument("-c", "--covert", default=None, help="covert message")
    p.add_argument("-k", "--key", default=None, help="shared key")
    p.add_argument("--freq", type=float, default=900.0, help="coding frequency in Hz (default 900)")
    p.add_argument("--rate", type=int, default=8000, help="sample rate in Hz (default 8000)")
    p.add_argument("--no-gap-jitter", action="store_true", help="use exact nominal gap lengths")
    p.add_argument("--seed", type=int, default=None, help="seed for the non-keyed randomness")
    p.set_defaults(func=cmd_cwtx)

    p = sub.add_parser("cwrx", help="decode the carrier and, with stats and key, the covert message")
    p.add_argument("-i", "--input", required=True, help="input WAV file")
    p.add_argument("-c", "--stats", default=None, help="keying statistics file for covert decoding")
    p.add_argument("-k", "--key", default=None, help="shared key")
    _add_decoder_flags(p)
    p.set_defaults(func=cmd_cwrx)

    p = sub.add_parser("cwtrain", help="derive keying statistics from an unmodulated recording")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True, help="statistics file to write")
    _add_decoder_flags(p)
    p.set_defaults(func=cmd_cwtrain)

    p = sub.add_parser("cwsim", help="Monte-Carlo link simulation over an impaired channel")
    p.add_argument("--carrier", required=True)
    p.add_argument("--covert", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--snr", type=float, nargs="+", default=None, help="in-band SNR(s) in dB")
    p.add_argument("--jitter", type=float, nargs="+", default=None, help="per-edge jitter(s) in ms")
    p.add_argument("--resample", type=float, default=None, help="intermediate sample rate in Hz")
    p.add_argument("--fade", type=float, default=None, help="fade depth in [0, 1)")
    p.add_argument("--fade-period", type=float, default=5.0, help="fade period in seconds")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="write results as CSV")
    _add_decoder_flags(p)
    p.set_defaults(func=cmd_cwsim)

    p = sub.add_parser("cwdetect", help="report the timing footprint of a recording")
    p.add_argument("--modulated", required=True, help="recording under test")
    group = p.add_argument_group("reference (one or both)")
    group.add_argument("--reference", default=None, help="unmodulated reference recording")
    group.add_argument("--stats", default=None, help="keying statistics for the model reference")
    p.add_argument("--model", choices=("wrapped", "normal"), default="wrapped")
    p.add_argument("--report", default=None, help="write the report as JSON")
    _add_decoder_flags(p)
    p.set_defaults(func=cmd_cwdetect)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, UnsupportedCharacter) as exc:
        parser.error(str(exc))
    except InsufficientCarrier as exc:
        log(f"** {exc}")
        return EXIT_CAPACITY
    except (OSError, UnsupportedFormat, StatsFileError) as exc:
        log(f"** {exc}")
        return EXIT_IO
    except (NoSignal, AmbiguousUnit, InsufficientSamples) as exc:
        log(f"** {exc}")
        return EXIT_NO_SIGNAL
    except (CovertChannelError, ValueError) as exc:
        log(f"** {exc}")
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
