"""Command-line interface.

Exit codes: 0 success or accepted word, 1 data/environment error,
2 usage error, 3 utterance rejected.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from . import audio
from .daemon import Listener, load_command_table, open_source
from .endpoint import EndpointParams, extract_word
from .errors import EmptyRegistryError, NotFoundError, TooFewObservationsError, VoiceCommandError
from .features import FeatureParams, extract_features
from .hmm import DEFAULT_REJECTION_THRESHOLD, TrainingConfig, fit_word_model, recognize
from .store import DEFAULT_ROOT, INDEX_NAME, ModelRegistry, load_registry, parse_index, save_model

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_REJECTED = 0, 1, 2, 3
REGISTRY_ENV = "SWAR_REGISTRY"

logger = logging.getLogger("voicecmd")


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--registry", metavar="DIR", default=None,
                   help=f"model registry directory (env {REGISTRY_ENV}, default {DEFAULT_ROOT})")
    p.add_argument("--rate", type=int, default=audio.CAPTURE_RATE, choices=audio.SUPPORTED_RATES,
                   help="capture sample rate in Hz")
    p.add_argument("-v", "--verbose", action="count", default=0)
    ep = p.add_argument_group("endpointing")
    d = EndpointParams()
    ep.add_argument("--ep-frame-ms", type=float, default=d.frame_len_ms)
    ep.add_argument("--ep-shift-ms", type=float, default=d.frame_shift_ms)
    ep.add_argument("--ep-calibration-ms", type=float, default=d.calibration_ms)
    ep.add_argument("--ep-high", type=float, default=d.energy_factor_high,
                    help="upper energy threshold as a multiple of silence energy")
    ep.add_argument("--ep-low", type=float, default=d.energy_factor_low,
                    help="lower energy threshold as a multiple of silence energy")
    ep.add_argument("--ep-zcr", type=float, default=d.zcr_factor,
                    help="ZCR threshold in std-devs above the silence mean")
    ep.add_argument("--ep-min-word-ms", type=float, default=d.min_word_ms)
    ep.add_argument("--ep-max-gap-ms", type=float, default=d.max_gap_ms)
    return p


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="voicecmd", description=__doc__.splitlines()[0])
    parser.add_argument("--registry", metavar="DIR", dest="global_registry", default=None,
                        help="model registry directory for any subcommand")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    t = sub.add_parser("train", parents=[common], help="train a word model from WAV files")
    t.add_argument("--states", "-N", type=int, required=True, help="number of HMM states")
    t.add_argument("--dim", "-D", type=int, required=True, help="feature vector size")
    t.add_argument("--word", "-w", required=True)
    t.add_argument("--iters", type=int, default=10, help="Viterbi re-estimation passes")
    t.add_argument("--epsilon", type=float, default=1e-4, help="relative convergence threshold")
    t.add_argument("--variance-floor", type=float, default=1e-3)
    t.add_argument("--smoothing", type=float, default=0.01, help="transition count smoothing")
    f = FeatureParams()
    t.add_argument("--feat-frame-ms", type=float, default=f.frame_len_ms)
    t.add_argument("--feat-shift-ms", type=float, default=f.frame_shift_ms)
    t.add_argument("--preemphasis", type=float, default=f.preemphasis)
    t.add_argument("--mel-filters", type=int, default=f.n_mel_filters)
    t.add_argument("--fmin", type=float, default=f.fmin_hz)
    t.add_argument("--fmax", type=float, default=None)
    t.add_argument("files", nargs="+", metavar="FILE", type=Path)
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("recognize", parents=[common], help="recognize the word in a WAV file")
    r.add_argument("--scores", action="store_true", help="print every model's per-frame score")
    r.add_argument("--reject-threshold", type=float, default=DEFAULT_REJECTION_THRESHOLD)
    r.add_argument("file", metavar="FILE", type=Path)
    r.set_defaults(func=cmd_recognize)

    li = sub.add_parser("listen", parents=[common], help="run commands for spoken words")
    li.add_argument("--commands", required=True, type=Path, metavar="FILE")
    li.add_argument("--input-source", default="device", metavar="device|file:PATH")
    li.add_argument("--device", default=None)
    li.add_argument("--quit-word", default="quit")
    li.add_argument("--reject-threshold", type=float, default=DEFAULT_REJECTION_THRESHOLD)
    li.set_defaults(func=cmd_listen)

    rec = sub.add_parser("record", parents=[common], help="record a WAV sample")
    rec.add_argument("out", metavar="OUT.wav", type=Path)
    rec.add_argument("--seconds", type=float, default=3.0)
    rec.add_argument("--input-source", default="device", metavar="device|file:PATH")
    rec.add_argument("--device", default=None)
    rec.set_defaults(func=cmd_record)
    return parser


def _registry_dir(args):
    return Path(args.registry or args.global_registry
                or os.environ.get(REGISTRY_ENV) or DEFAULT_ROOT)


def _endpoint_params(args):
    return EndpointParams(
        frame_len_ms=args.ep_frame_ms, frame_shift_ms=args.ep_shift_ms,
        calibration_ms=args.ep_calibration_ms, energy_factor_high=args.ep_high,
        energy_factor_low=args.ep_low, zcr_factor=args.ep_zcr,
        min_word_ms=args.ep_min_word_ms, max_gap_ms=args.ep_max_gap_ms,
    )


def _open_registry(root):
    """Load a registry, treating a missing or empty index as an empty registry."""
    if not root.is_dir():
        raise NotFoundError(f"{root}: registry directory not found")
    index = root / INDEX_NAME
    if not index.exists() or not parse_index(index.read_text(encoding="utf-8"), index):
        raise EmptyRegistryError(f"{root}: registry has no models")
    return load_registry(root)


def cmd_train(args, parser):
    try:
        fparams = FeatureParams.for_dim(
            args.dim, frame_len_ms=args.feat_frame_ms, frame_shift_ms=args.feat_shift_ms,
            preemphasis=args.preemphasis, n_mel_filters=args.mel_filters,
            fmin_hz=args.fmin, fmax_hz=args.fmax,
        )
        config = TrainingConfig(
            n_states=args.states, dim=args.dim, viterbi_iterations=args.iters,
            convergence_epsilon=args.epsilon, variance_floor=args.variance_floor,
            transition_smoothing=args.smoothing,
        )
    except ValueError as exc:
        parser.error(str(exc))
    eparams = _endpoint_params(args)

    sequences = []
    for path in args.files:
        clip = audio.load_wav(path)
        word_clip, seg = extract_word(clip, eparams)
        obs = extract_features(word_clip, fparams)
        start, end = seg.times(clip.sample_rate_hz)
        print(f"{path}: word {start:.3f}-{end:.3f} s, {len(obs)} frames")
        if len(obs) < config.n_states:
            raise TooFewObservationsError(
                f"{path}: {len(obs)} frames is fewer than {config.n_states} states"
            )
        sequences.append(obs)

    hmm, history = fit_word_model(args.word, sequences, config)
    registry = ModelRegistry(_registry_dir(args))
    save_model(hmm, fparams, registry)
    print(f"trained {args.word!r}: N={hmm.n_states} D={hmm.dim}, "
          f"{len(history) - 1} re-estimation passes, log-likelihood {history[-1]:.6f}")
    return EXIT_OK


def cmd_recognize(args, parser):
    registry = _open_registry(_registry_dir(args))
    clip = audio.load_wav(args.file)
    word_clip, _ = extract_word(clip, _endpoint_params(args))
    obs = extract_features(word_clip, registry.feature_params)
    result = recognize(registry, obs, args.reject_threshold)
    print(result.word if result.accepted else "REJECTED")
    if args.scores:
        for word, score in result.per_frame_scores():
            print(f"{word}\t{score:.6f}")
    return EXIT_OK if result.accepted else EXIT_REJECTED


def cmd_listen(args, parser):
    registry = _open_registry(_registry_dir(args))
    commands = load_command_table(args.commands, quit_word=args.quit_word)
    try:
        source = open_source(args.input_source, args.device)
    except ValueError as exc:
        parser.error(str(exc))
    listener = Listener(registry, commands, source, _endpoint_params(args),
                        rejection_threshold=args.reject_threshold)
    try:
        return listener.run()
    except KeyboardInterrupt:
        return EXIT_OK


def _confirm(prompt):
    if not sys.stdin.isatty():
        return True
    return input(prompt).strip().lower() in ("y", "yes")


def cmd_record(args, parser):
    if not 0 < args.seconds <= audio.MAX_RECORD_SECONDS:
        parser.error(f"--seconds must be in (0, {audio.MAX_RECORD_SECONDS:g}]")
    if args.input_source == "device":
        clip = audio.record(args.seconds, args.device, args.rate)
    elif args.input_source.startswith("file:"):
        src = audio.load_wav(args.input_source[len("file:"):])
        clip = src.slice(0, int(args.seconds * src.sample_rate_hz))
    else:
        parser.error(f"unknown input source {args.input_source!r}")
    print(f"captured {clip.duration_s:.2f} s at {clip.sample_rate_hz} Hz")
    if _confirm(f"Save recording to {args.out}? [y/n] "):
        audio.save_wav(clip, args.out)
        print(f"saved {args.out}")
    else:
        print("discarded")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, parser)
    except (VoiceCommandError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
