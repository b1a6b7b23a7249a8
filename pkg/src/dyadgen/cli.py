"""Command-line front end: ``dyadgen {synth,train,train-ae,gen,eval,export}``.

Results go to files under ``--out``; diagnostics go to stderr. Exit codes are
0 on success, 1 for usage errors and 2 for runtime failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

from .data import (
    DyadicPair,
    NormStats,
    load_corpus,
    read_any,
    save_corpus,
    split,
    synth_coupled,
    write_csv_motion,
    write_pair,
)
from .errors import DyadgenError
from .generation import generate
from .metrics import evaluate_suite
from .neural_op import load_model
from .training import read_config, train, train_autoencoder

log = logging.getLogger("dyadgen")

USAGE_ERROR = 1
RUNTIME_ERROR = 2
SPLIT_RATIO = 0.8
_SAMPLE_SUFFIX = re.compile(r"_s\d+$")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _unknown_flags(parser: argparse.ArgumentParser, argv: Sequence[str]) -> list[str]:
    """Flags not understood by the selected subcommand; checked before required options."""
    known = set(parser._option_string_actions)
    sub = None
    for token in argv:
        if not token.startswith("-"):
            sub = parser.subcommands.get(token)
            break
    if sub is not None:
        known |= set(sub._option_string_actions)
    return [t for t in argv if t.startswith("--") and t.split("=", 1)[0] not in known]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dyadgen", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = sub.choices

    p = sub.add_parser("synth", help="write a synthetic dyadic corpus")
    p.add_argument("--task", choices=["coupled-sines"], default="coupled-sines")
    p.add_argument("--n", type=int, required=True, help="number of pairs")
    p.add_argument("--joints", type=int, default=4)
    p.add_argument("--frames", type=int, default=64)
    p.add_argument("--dt", type=float, default=1 / 30)
    p.add_argument("--delay", type=float, default=0.1, help="responder delay in seconds")
    p.add_argument("--noise", type=float, default=0.05, help="responder GRF noise scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    for name, text in (("train", "adversarial training"), ("train-ae", "feature autoencoder training")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="key = value file of TrainConfig fields")
        p.add_argument("--data", type=Path, required=True, help="directory of .pmo2 pairs")
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--resolution", type=int, help="training grid size")

    p = sub.add_parser("gen", help="sample responders for condition motions")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--condition", type=Path, required=True, help=".pmo1/.pmo2 file or a directory of them")
    p.add_argument("--resolution", type=int, help="output frames (default: the condition's)")
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("eval", help="metric suite of a generated corpus against a real one")
    p.add_argument("--real", type=Path, required=True)
    p.add_argument("--gen", type=Path, required=True)
    p.add_argument("--ae", type=Path, required=True)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--sample", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="report file; raw repetitions go to <stem>.reps.tsv")

    p = sub.add_parser("export", help="motion file to CSV for plotting")
    p.add_argument("--motion", type=Path, required=True)
    p.add_argument("--format", choices=["csv"], default="csv")
    p.add_argument("--actor", choices=["a", "b"], default="b", help="which actor of a .pmo2 pair")
    p.add_argument("--out", type=Path, required=True)
    return parser


def _cmd_synth(args) -> None:
    pairs = synth_coupled(
        args.n, joints=args.joints, frames=args.frames, dt=args.dt, delay=args.delay, noise=args.noise, seed=args.seed
    )
    meta = {k: getattr(args, k) for k in ("task", "n", "joints", "frames", "dt", "delay", "noise", "seed")}
    save_corpus(args.out, pairs, meta=meta)
    log.info("wrote %d pairs to %s", len(pairs), args.out)


def _load_split(args):
    config = read_config(args.config, seed=args.seed, epochs=args.epochs, train_resolution=args.resolution)
    names, pairs = load_corpus(args.data)
    labelled = list(zip(names, pairs))
    train_part, heldout = split(labelled, SPLIT_RATIO, config.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    save_corpus(args.out / "heldout", [p for _, p in heldout], names=[n for n, _ in heldout])
    (args.out / "split.json").write_text(
        json.dumps({"train": [n for n, _ in train_part], "heldout": [n for n, _ in heldout]}, indent=1)
    )
    return config, [p for _, p in train_part]


def _cmd_train(args) -> None:
    config, pairs = _load_split(args)
    train(config, pairs, args.out)


def _cmd_train_ae(args) -> None:
    config, pairs = _load_split(args)
    train_autoencoder(config, pairs, args.out)


def _conditions(path: Path):
    files = sorted(path.glob("*.pmo[12]")) if path.is_dir() else [path]
    if not files:
        raise DyadgenError(f"no .pmo1/.pmo2 files in {path}")
    for f in files:
        item = read_any(f)
        yield f.stem, item.actor_a if isinstance(item, DyadicPair) else item


def _cmd_gen(args) -> None:
    generator, meta = load_model(args.checkpoint, expect={"kind": "generator"})
    args.out.mkdir(parents=True, exist_ok=True)
    for i, (stem, cond) in enumerate(_conditions(args.condition)):
        pairs = generate(generator, meta, cond, args.resolution, args.samples, seed=[args.seed, i])
        for k, pair in enumerate(pairs):
            write_pair(args.out / f"{stem}_s{k:03d}.pmo2", pair)
    log.info("wrote samples to %s", args.out)


def _matches(real_names: Sequence[str], gen_names: Sequence[str]) -> list[tuple[int, int]]:
    """``(gen, real)`` index pairs whose file stems agree up to a ``_sNNN`` sample suffix."""
    index = {n: i for i, n in enumerate(real_names)}
    out = []
    for gi, name in enumerate(gen_names):
        key = name if name in index else _SAMPLE_SUFFIX.sub("", name)
        if key in index:
            out.append((gi, index[key]))
    return out


def _cmd_eval(args) -> None:
    ae, meta = load_model(args.ae, expect={"kind": "autoencoder"})
    stats = NormStats.from_dict(meta["norm"]) if "norm" in meta else None
    real_names, real = load_corpus(args.real)
    gen_names, gen = load_corpus(args.gen)
    matches = _matches(real_names, gen_names)
    if not matches:
        log.warning("no generated file matches a real file by name; APE/AVE will be NaN")
    report = evaluate_suite(
        real, gen, ae, stats, matches, reps=args.reps, sample=args.sample, seed=args.seed, grid_size=args.grid
    )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    report.write(args.out)


def _cmd_export(args) -> None:
    item = read_any(args.motion)
    if isinstance(item, DyadicPair):
        item = item.actor_a if args.actor == "a" else item.actor_b
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv_motion(args.out, item)


COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "train-ae": _cmd_train_ae,
    "gen": _cmd_gen,
    "eval": _cmd_eval,
    "export": _cmd_export,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        unknown = _unknown_flags(parser, argv)
        if unknown:
            parser.error(f"unrecognized arguments: {' '.join(unknown)}")
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    try:
        COMMANDS[args.command](args)
    except (DyadgenError, OSError, ValueError) as exc:
        print(f"dyadgen {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
