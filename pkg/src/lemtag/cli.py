"""Command-line entry point: stats, snippetize, train, predict, evaluate.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
malformed inputs), 3 runtime failure.  A config file of key=value lines
can preset any of the shared options; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .conllu import (CorpusFormatError, corpus_stats, read_corpus_file,
                     write_corpus)
from .decode import DecodeConfig, predict_corpus
from .metrics import EvalAlignmentError, evaluate
from .model import CheckpointError, ModelConfig, init_model, load_model
from .snippets import (SnippetConfig, build_vocab, examples_for_corpus,
                       format_example)
from .training import TrainConfig, TrainingDivergedError, train


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_bool(raw):
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_optional_float(raw):
    return None if raw.strip().lower() == "none" else float(raw)


def _parse_optional_int(raw):
    return None if raw.strip().lower() == "none" else int(raw)


_DEFAULTS = {
    "mode": "context_window", "window": 1, "tc": "both", "min_freq": 1,
    "embedding_size": 700, "hidden_units": 500, "layers": 2, "dropout": 0.3,
    "steps": 50000, "checkpoint_every": 1000, "lr": 1.0,
    "lr_halve_start": 25000, "lr_halve_every": 10000, "batch_size": 32,
    "clip_norm": 5.0, "selection_metric": "analysis_accuracy", "seed": 0,
    "beam": 5, "max_length": None, "vote": False, "retain_all": False,
}

_CASTS = {
    "mode": str, "window": int, "tc": str, "min_freq": int,
    "embedding_size": int, "hidden_units": int, "layers": int,
    "dropout": float, "steps": int, "checkpoint_every": int, "lr": float,
    "lr_halve_start": int, "lr_halve_every": int, "batch_size": int,
    "clip_norm": _parse_optional_float, "selection_metric": str, "seed": int,
    "beam": int, "max_length": _parse_optional_int, "vote": _parse_bool,
    "retain_all": _parse_bool,
}


def _read_config_file(path):
    values = {}
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                key, _, raw = line.partition("=")
                key = key.strip()
                if key not in _CASTS:
                    raise UsageError(f"{path}:{lineno}: unknown option {key!r}")
                try:
                    values[key] = _CASTS[key](raw.strip())
                except ValueError as err:
                    raise UsageError(f"{path}:{lineno}: {err}") from None
    except OSError as err:
        raise UsageError(f"cannot read config file: {err}") from None
    return values


def _settings(args):
    """Builtin defaults, overridden by the config file, overridden by flags."""
    values = dict(_DEFAULTS)
    if getattr(args, "config", None):
        values.update(_read_config_file(args.config))
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def _checked(ctor, **kwargs):
    try:
        return ctor(**kwargs)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _snippet_config(s) -> SnippetConfig:
    return _checked(SnippetConfig, mode=s["mode"], window=s["window"], tc_mode=s["tc"])


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


# ---------------------------------------------------------------------------
# subcommands


def run_stats(args):
    corpus = read_corpus_file(args.corpus, mode="gold")
    reference = read_corpus_file(args.reference, mode="gold") if args.reference else None
    stats = corpus_stats(corpus, reference)
    print(f"sentences {stats.sentence_count}")
    print(f"tokens {stats.token_count}")
    print(f"grammeme-form {stats.grammeme_form_ratio:.2f}")
    if stats.oov_rate is not None:
        print(f"oov_rate {stats.oov_rate:.3f}")
    return 0


def run_snippetize(args):
    s = _settings(args)
    snip_cfg = _snippet_config(s)
    mode = "surface_only" if args.surface_only else "gold"
    corpus = read_corpus_file(args.corpus, mode=mode)
    lines = [format_example(e) for e in examples_for_corpus(corpus, snip_cfg)]
    text = "\n".join(lines) + "\n" if lines else ""
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def run_train(args):
    s = _settings(args)
    snip_cfg = _snippet_config(s)
    train_cfg = _checked(
        TrainConfig,
        total_steps=s["steps"], checkpoint_every=s["checkpoint_every"],
        lr_initial=s["lr"], lr_halve_start_step=s["lr_halve_start"],
        lr_halve_every=s["lr_halve_every"], batch_size=s["batch_size"],
        clip_norm=s["clip_norm"], selection_metric=s["selection_metric"],
        rng_seed=s["seed"], checkpoint_dir=args.checkpoint_dir,
        retain_all=s["retain_all"])
    if s["min_freq"] < 1:
        raise UsageError("min_freq must be >= 1")

    train_corpus = read_corpus_file(args.train_corpus, mode="gold")
    dev_corpus = read_corpus_file(args.dev_corpus, mode="gold")
    examples = examples_for_corpus(train_corpus, snip_cfg)
    vocab = build_vocab(examples, min_freq=s["min_freq"])
    model_cfg = _checked(
        ModelConfig,
        source_vocab_size=vocab.source_size, target_vocab_size=vocab.target_size,
        embedding_size=s["embedding_size"], hidden_units=s["hidden_units"],
        layers=s["layers"], dropout_p=s["dropout"], rng_seed=s["seed"])
    model = init_model(model_cfg)
    best_model, report = train(model, examples, dev_corpus, vocab, snip_cfg, train_cfg)

    report_path = os.path.join(args.checkpoint_dir, "train_report.json")
    payload = {
        "selection_metric": report.selection_metric,
        "selected_step": report.selected_step,
        "checkpoints": [
            {"step": r.step, "train_loss": r.train_loss, "dev_metrics": r.dev_metrics}
            for r in report.checkpoints
        ],
    }
    _write_text(report_path, json.dumps(payload, indent=2) + "\n")
    best = next(r for r in report.checkpoints if r.step == report.selected_step)
    print(f"selected step {report.selected_step}")
    for key, value in best.dev_metrics.items():
        print(f"{key} {value:.4f}")
    return 0


def run_predict(args):
    s = _settings(args)
    snip_cfg = _snippet_config(s)
    voting = bool(s["vote"])
    if voting and snip_cfg.mode != "context_window":
        raise UsageError("--vote requires --mode context_window")
    decode_cfg = _checked(DecodeConfig, beam_size=s["beam"], max_length=s["max_length"])
    model, vocab = load_model(args.checkpoint)
    corpus = read_corpus_file(args.corpus, mode="surface_only")
    predicted, flags = predict_corpus(model, corpus, vocab, snip_cfg, decode_cfg, voting)
    _write_text(args.out, write_corpus(predicted))
    if args.flags_out:
        lines = ["\t".join(f or "-" for f in sent) for sent in flags]
        _write_text(args.flags_out, "\n".join(lines) + "\n")
    return 0


def run_evaluate(args):
    pred = read_corpus_file(args.pred, mode="gold")
    gold = read_corpus_file(args.gold, mode="gold")
    reference = read_corpus_file(args.reference, mode="gold") if args.reference else None
    report = evaluate(pred, gold, reference)
    splits = [("overall", report.overall)]
    if report.oov is not None:
        splits.append(("oov", report.oov))
        splits.append(("seen", report.seen))
    names = [name for name, _ in splits]
    print("{:<20}".format("metric") + "".join(f"{n:>12}" for n in names))
    rows = [
        ("tokens", "token_count", "{:d}"),
        ("lemma_accuracy", "lemma_accuracy", "{:.4f}"),
        ("avg_lemma_distance", "avg_lemma_distance", "{:.4f}"),
        ("tag_accuracy", "tag_accuracy", "{:.4f}"),
        ("avg_tag_f1", "avg_tag_f1", "{:.4f}"),
        ("analysis_accuracy", "analysis_accuracy", "{:.4f}"),
    ]
    for label, attr, fmt in rows:
        cells = "".join(f"{fmt.format(getattr(sc, attr)):>12}" for _, sc in splits)
        print(f"{label:<20}" + cells)
    if args.kv:
        for name, sc in splits:
            for _, attr, _ in rows:
                print(f"{name}.{attr}={getattr(sc, attr)}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    shared = _Parser(add_help=False)
    shared.add_argument("--config", help="key=value option file; flags override it")

    snippet_opts = _Parser(add_help=False)
    snippet_opts.add_argument("--mode", choices=("full_sequence", "context_window"))
    snippet_opts.add_argument("--window", type=int, metavar="W")
    snippet_opts.add_argument("--tc", choices=("none", "lemmata", "tags", "both", "surface"))

    parser = _Parser(prog="lemtag",
                     description="Joint lemmatization and morphological tagging.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("stats", parents=[shared], help="corpus statistics")
    p.add_argument("corpus")
    p.add_argument("--reference", help="training corpus for the OOV rate")
    p.set_defaults(func=run_stats)

    p = sub.add_parser("snippetize", parents=[shared, snippet_opts],
                       help="write source/target symbol lines")
    p.add_argument("corpus")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--surface-only", action="store_true",
                   help="input has no gold analyses")
    p.set_defaults(func=run_snippetize)

    p = sub.add_parser("train", parents=[shared, snippet_opts], help="train a model")
    p.add_argument("train_corpus")
    p.add_argument("dev_corpus")
    p.add_argument("--checkpoint-dir", required=True)
    p.add_argument("--min-freq", type=int, dest="min_freq")
    p.add_argument("--embedding-size", type=int, dest="embedding_size")
    p.add_argument("--hidden-units", type=int, dest="hidden_units")
    p.add_argument("--layers", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--checkpoint-every", type=int, dest="checkpoint_every")
    p.add_argument("--lr", type=float)
    p.add_argument("--lr-halve-start", type=int, dest="lr_halve_start")
    p.add_argument("--lr-halve-every", type=int, dest="lr_halve_every")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--clip-norm", type=_parse_optional_float, dest="clip_norm")
    p.add_argument("--selection-metric", dest="selection_metric",
                   choices=("analysis_accuracy", "lemma_accuracy", "tag_accuracy"))
    p.add_argument("--seed", type=int)
    p.add_argument("--retain-all", action="store_true", default=None, dest="retain_all")
    p.set_defaults(func=run_train)

    p = sub.add_parser("predict", parents=[shared, snippet_opts],
                       help="analyze a surface corpus")
    p.add_argument("checkpoint")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--flags-out", dest="flags_out",
                   help="per-token diagnostic flags, one line per sentence")
    p.add_argument("--beam", type=int)
    p.add_argument("--max-length", type=int, dest="max_length")
    p.add_argument("--vote", action="store_true", default=None)
    p.set_defaults(func=run_predict)

    p = sub.add_parser("evaluate", parents=[shared], help="score predictions")
    p.add_argument("pred")
    p.add_argument("gold")
    p.add_argument("--reference", help="training corpus for the OOV split")
    p.add_argument("--kv", action="store_true", help="also print key=value lines")
    p.set_defaults(func=run_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (CorpusFormatError, CheckpointError, EvalAlignmentError,
            FileNotFoundError, IsADirectoryError, NotADirectoryError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (TrainingDivergedError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
