"""Command-line entry points: serve, prep, train, eval, analyze."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, genmodel, melody, midi, toydata
from .session import PartnerConfig, SessionConfig


def _cmd_prep(args) -> int:
    in_dir = Path(args.in_dir)
    files = sorted(in_dir.glob("**/*.mid")) + sorted(in_dir.glob("**/*.midi"))
    if not files:
        print(f"no MIDI files under {in_dir}", file=sys.stderr)
        return 1
    melodies = []
    ids = []
    skipped = 0
    for path in files:
        try:
            mf = midi.parse_midi(path.read_bytes())
        except midi.MidiError as exc:
            print(f"skipping {path.name}: {exc}", file=sys.stderr)
            skipped += 1
            continue
        spans, dangling = midi.extract_note_spans(mf)
        if dangling:
            print(f"{path.name}: closed {dangling} dangling note-on(s)",
                  file=sys.stderr)
        grid = midi.reduce_monophonic(
            midi.quantize_to_grid(spans, mf.ticks_per_quarter))
        length = max((s.onset_step + s.duration_steps for s in grid), default=0)
        melodies.append((grid, length))
        ids.append(path.name)
    dataset = melody.build_dataset(melodies, bars=args.bars,
                                   rest_threshold_steps=args.rest_threshold,
                                   source_ids=ids)
    melody.save_dataset(dataset, args.out)
    print(f"{len(files) - skipped} file(s) -> {len(dataset.sequences)} "
          f"segment(s) written to {args.out}")
    return 0


def _cmd_train(args) -> int:
    if args.data == "toy":
        dataset = toydata.toy_corpus(n=args.toy_melodies, seed=args.seed)
    else:
        dataset = melody.load_dataset(args.data)
    config = genmodel.ModelConfig(bars=dataset.bars, seed=args.seed)
    state = genmodel.init_model(config)
    result = genmodel.train(state, dataset, epochs=args.epochs,
                            batch_size=args.batch_size,
                            learning_rate=args.learning_rate)
    genmodel.save_checkpoint(result.state, args.out)
    acc = genmodel.reconstruction_accuracy(result.state, dataset.sequences)
    print(f"trained {args.epochs} epoch(s) on {len(dataset.sequences)} "
          f"sequence(s); final loss {result.losses[-1]:.4f}, "
          f"reconstruction accuracy {acc:.3f}; saved to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    state = genmodel.load_checkpoint(args.checkpoint)
    dataset = (toydata.toy_corpus(seed=state.config.seed, bars=state.config.bars)
               if args.data is None else melody.load_dataset(args.data))
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    inputs = dataset.sequences[:args.samples]

    print("temperature sweep (mean output token entropy, nats):")
    for temp in (0.5, 1.0, 1.5):
        entropies = []
        for seq in inputs:
            out = genmodel.respond(state, seq,
                                   genmodel.PartnerParams(temperature=temp,
                                                          similarity=0.9), rng)
            counts = np.bincount(out.codes, minlength=state.config.vocab)
            p = counts[counts > 0] / len(out.codes)
            entropies.append(float(-(p * np.log(p)).sum()))
        print(f"  T={temp:>4}: {np.mean(entropies):.3f}")

    print("similarity sweep (mean normalized edit distance to input):")
    for sim in (0.0, 0.3, 0.9, 1.0):
        dists = []
        for seq in inputs:
            out = genmodel.respond(state, seq,
                                   genmodel.PartnerParams(temperature=1.0,
                                                          similarity=sim), rng)
            dists.append(melody.normalized_edit_distance(seq.codes, out.codes))
        print(f"  s={sim:>4}: {np.mean(dists):.3f}")
    return 0


def _cmd_analyze(args) -> int:
    rows = analysis.load_ratings_csv(args.ratings)
    exclusions = [] if args.no_default_exclusions else None
    measures = args.measures or analysis.analyzed_measures(rows, exclusions)
    for m in measures:
        table = analysis.estimate_effects(rows, m)
        print(analysis.format_effect_table(table))
        print()
    return 0


def _make_responder(args):
    if args.partner == "vae":
        if not args.checkpoint:
            raise SystemExit("--checkpoint is required for the vae partner")
        state = genmodel.load_checkpoint(args.checkpoint)
        params = genmodel.PartnerParams(temperature=args.temperature,
                                        similarity=args.similarity)
        return lambda seq, rng: genmodel.respond(state, seq, params, rng), \
            state.config.bars
    if args.partner == "markov":
        dataset = (melody.load_dataset(args.data) if args.data
                   else toydata.toy_corpus(seed=args.seed, bars=args.bars))
        stats = genmodel.build_markov_stats(dataset, args.order)
        return (lambda seq, rng:
                genmodel.markov_respond(seq, args.order, stats, rng)), args.bars
    return None, args.bars


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    responder, bars = _make_responder(args)
    partner = PartnerConfig(kind=args.partner, bars=bars,
                            temperature=args.temperature if args.partner == "vae" else None,
                            similarity=args.similarity if args.partner == "vae" else None,
                            order=args.order if args.partner == "markov" else None)
    config = SessionConfig(partner=partner, turn_seconds=args.turn_seconds,
                           cycles=args.cycles, tempo_bpm=args.tempo,
                           seed=args.seed)
    app = create_app(config, responder=responder, static_dir=args.static_dir,
                     log_dir=args.log_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duet")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", help="build a token dataset from MIDI files")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bars", type=int, choices=(2, 4), default=2)
    p.add_argument("--rest-threshold", type=int, default=16)
    p.set_defaults(func=_cmd_prep)

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("--data", required=True,
                   help="dataset file, or 'toy' for the built-in corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--toy-melodies", type=int, default=500)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="entropy and similarity sweeps")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("analyze", help="ratings CSV -> condition effect tables")
    p.add_argument("--ratings", required=True)
    p.add_argument("--measures", nargs="*")
    p.add_argument("--no-default-exclusions", action="store_true")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("serve", help="run the session server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--partner", choices=("vae", "markov", "human-relay"),
                   default="vae")
    p.add_argument("--bars", type=int, choices=(2, 4), default=2)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--similarity", type=float, default=0.9)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--turn-seconds", type=float, default=8.0)
    p.add_argument("--cycles", type=int, default=7)
    p.add_argument("--tempo", type=float, default=120.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint")
    p.add_argument("--data", help="dataset for the markov partner")
    p.add_argument("--static-dir", help="UI bundle to serve at /")
    p.add_argument("--log-dir", help="session log directory (or DUET_LOG_DIR)")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
