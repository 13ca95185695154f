"""Command-line entry points.

Subcommands cover the full pipeline: gen-kb, gen-corpus, train-sl, train-rl,
eval-tracking, eval-interactive, curves, serve. Relative paths resolve against
$TASKDIAL_DATA_ROOT (default: current directory). Any domain error exits
nonzero with a single-line message.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import Hyperparameters
from .errors import ConfigurationError, TaskdialError
from .kb import generate_kb, load_kb
from .ontology import SlotOntology, load_asset_ontology
from .seeding import capture_state
from .simulator import generate_corpus, load_corpus, save_corpus, split_corpus
from .templates import load_asset_templates, load_template_library
from .training import (
    TrainingHistory,
    emit_learning_curves,
    evaluate_state_tracking,
    evaluate_interactive,
    train_reinforce,
    train_supervised,
)

HYPER_FLAGS = (
    # (flag, attribute, type)
    ("--utterance-hidden", "utterance_hidden", int),
    ("--dialogue-hidden", "dialogue_hidden", int),
    ("--policy-hidden", "policy_hidden", int),
    ("--tracker-hidden", "tracker_hidden", int),
    ("--embedding-dim", "embedding_dim", int),
    ("--learning-rate", "learning_rate", float),
    ("--dropout", "dropout_rate", float),
    ("--batch-size", "batch_size", int),
    ("--epochs", "epochs", int),
    ("--patience", "patience", int),
    ("--rl-learning-rate", "rl_learning_rate", float),
    ("--eval-interval", "eval_interval", int),
    ("--eval-episodes", "eval_episodes", int),
    ("--max-turns", "max_turns", int),
    ("--p-extra", "p_extra", float),
    ("--unsat-fraction", "unsat_fraction", float),
    ("--seed", "seed", int),
)


def data_path(path: str) -> str:
    root = os.environ.get("TASKDIAL_DATA_ROOT", "")
    if root and not os.path.isabs(path):
        return os.path.join(root, path)
    return path


def add_hyper_flags(parser: argparse.ArgumentParser) -> None:
    for flag, attr, typ in HYPER_FLAGS:
        parser.add_argument(flag, dest=attr, type=typ, default=None)


def hyper_from_args(args: argparse.Namespace) -> Hyperparameters:
    hyper = Hyperparameters()
    for _flag, attr, _typ in HYPER_FLAGS:
        value = getattr(args, attr, None)
        if value is not None:
            setattr(hyper, attr, value)
    return hyper


def load_ontology_arg(args: argparse.Namespace) -> SlotOntology:
    if getattr(args, "ontology", None):
        return SlotOntology.load(data_path(args.ontology))
    return load_asset_ontology(args.domain)


def load_templates_arg(args: argparse.Namespace):
    if getattr(args, "templates", None):
        with open(data_path(args.templates)) as fh:
            return load_template_library(fh.read())
    return load_asset_templates(args.domain)


def add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--domain", default="movie", choices=("movie", "restaurant"))
    parser.add_argument("--ontology", help="ontology file overriding the bundled one")
    parser.add_argument("--templates", help="template file overriding the bundled one")


def cmd_gen_kb(args) -> int:
    ontology = load_ontology_arg(args)
    kb = generate_kb(ontology, args.rows, np.random.default_rng(args.seed))
    kb.save(data_path(args.out), ontology)
    print(f"wrote {len(kb)} entities to {args.out}")
    return 0


def cmd_gen_corpus(args) -> int:
    ontology = load_ontology_arg(args)
    library = load_templates_arg(args)
    kb = load_kb(data_path(args.kb), ontology)
    hyper = hyper_from_args(args)
    episodes = generate_corpus(args.episodes, kb, ontology, library, hyper,
                               master_seed=hyper.seed)
    save_corpus(episodes, data_path(args.out))
    n_train, n_dev, n_test = (len(s) for s in split_corpus(episodes))
    success = sum(e.success for e in episodes) / len(episodes)
    print(f"wrote {len(episodes)} episodes ({n_train}/{n_dev}/{n_test} split), "
          f"rule-agent success {success:.3f}")
    return 0


def cmd_train_sl(args) -> int:
    ontology = load_ontology_arg(args)
    hyper = hyper_from_args(args)
    episodes = load_corpus(data_path(args.corpus))
    train, dev, _test = split_corpus(episodes)
    kwargs = {}
    if args.resume:
        ckpt = load_checkpoint(data_path(args.resume))
        hyper = ckpt.hyper
        for _flag, attr, _typ in HYPER_FLAGS:   # explicit flags still win
            value = getattr(args, attr, None)
            if value is not None:
                setattr(hyper, attr, value)
        kwargs = dict(vocab=ckpt.vocab, params=ckpt.params, adam=ckpt.adam,
                      start_epoch=ckpt.meta["epoch"], rng_states=ckpt.rng_states,
                      history=ckpt.history,
                      best=(ckpt.best_params, ckpt.meta["best_joint"],
                            ckpt.meta["best_epoch"]))
    res = train_supervised(train, dev, hyper, ontology,
                           log=lambda m: print(m, flush=True), **kwargs)
    ckpt = Checkpoint(
        params=res.params, hyper=hyper, ontology_hash=ontology.content_hash(),
        vocab=res.vocab, adam=res.adam,
        rng_states={k: capture_state(v) for k, v in res.rng_streams.items()},
        history=res.history,
        meta={"phase": "sl", "epoch": res.epochs_run, "best_joint": res.best_joint,
              "best_epoch": res.best_epoch},
        best_params=res.params)
    save_checkpoint(ckpt, data_path(args.out))
    print(f"best dev joint {res.best_joint:.4f} at epoch {res.best_epoch}; "
          f"saved {args.out}")
    return 0


def cmd_train_rl(args) -> int:
    ontology = load_ontology_arg(args)
    library = load_templates_arg(args)
    ckpt = load_checkpoint(data_path(args.checkpoint))
    if ckpt.ontology_hash != ontology.content_hash():
        raise ConfigurationError("checkpoint was trained with a different ontology")
    hyper = ckpt.hyper
    for _flag, attr, _typ in HYPER_FLAGS:
        value = getattr(args, attr, None)
        if value is not None:
            setattr(hyper, attr, value)
    kb = load_kb(data_path(args.kb), ontology)
    params, history = train_reinforce(
        ckpt.params, hyper, ontology, ckpt.vocab, kb, library, args.mode,
        args.episodes, seed=hyper.seed, template_set=args.template_set,
        log=lambda m: print(m, flush=True))
    out = Checkpoint(params=params, hyper=hyper, ontology_hash=ckpt.ontology_hash,
                     vocab=ckpt.vocab, history=history,
                     meta={"phase": "rl", "mode": args.mode,
                           "episodes": args.episodes})
    save_checkpoint(out, data_path(args.out))
    if args.history_out:
        with open(data_path(args.history_out), "w") as fh:
            json.dump({"label": args.mode, "records": history.records}, fh, indent=1)
    final = history.records[-1]
    print(f"final success {final['success_rate']:.3f}; saved {args.out}")
    return 0


def cmd_import_dstc2(args) -> int:
    from .dstc2 import load_dstc2

    corpus = load_dstc2(data_path(args.root))
    save_corpus(corpus.episodes, data_path(args.out))
    corpus.ontology.save(data_path(args.ontology_out))
    print(f"imported {len(corpus.episodes)} dialogues "
          f"({corpus.transcript_fallbacks} transcript fallbacks); "
          f"ontology -> {args.ontology_out}")
    return 0


def cmd_eval_tracking(args) -> int:
    ontology = load_ontology_arg(args)
    ckpt = load_checkpoint(data_path(args.checkpoint))
    episodes = load_corpus(data_path(args.corpus))
    if args.split != "all":
        train, dev, test = split_corpus(episodes)
        episodes = {"train": train, "dev": dev, "test": test}[args.split]
    report = evaluate_state_tracking(ckpt.params, episodes, ckpt.hyper, ontology,
                                     ckpt.vocab)
    print(json.dumps({
        "split": args.split, "dialogues": report.dialogues, "turns": report.turns,
        "slot_accuracy": report.slot_accuracy, "joint": report.joint_all,
        "slot_accuracy_final": report.slot_accuracy_final,
        "joint_final": report.joint_final, "action_accuracy": report.action_accuracy,
    }, indent=1, sort_keys=True))
    return 0


def cmd_eval_interactive(args) -> int:
    ontology = load_ontology_arg(args)
    library = load_templates_arg(args)
    ckpt = load_checkpoint(data_path(args.checkpoint))
    kb = load_kb(data_path(args.kb), ontology)
    report = evaluate_interactive(ckpt.params, ckpt.hyper, ontology, ckpt.vocab, kb,
                                  library, args.episodes, args.eval_seed,
                                  template_set=args.template_set)
    print(json.dumps({
        "episodes": report.episodes, "success_rate": report.success_rate,
        "avg_turns_successful": report.avg_turns, "avg_return": report.avg_return,
        "template_set": args.template_set,
    }, indent=1, sort_keys=True))
    return 0


def cmd_curves(args) -> int:
    runs = []
    for path in args.history:
        with open(data_path(path)) as fh:
            data = json.load(fh)
        hist = TrainingHistory()
        hist.records = data["records"]
        runs.append((data.get("label", os.path.basename(path)), hist))
    emit_learning_curves(runs, data_path(args.out),
                         plot_path=data_path(args.plot) if args.plot else None)
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_service

    ontology = load_ontology_arg(args)
    library = load_templates_arg(args)
    app = build_service(
        checkpoint_path=data_path(args.checkpoint), kb_path=data_path(args.kb),
        ontology=ontology, library=library, ui_dir=args.ui_dir,
        feedback_log=data_path(args.feedback_log), seed=args.serve_seed)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taskdial",
        description="End-to-end trainable task-oriented dialogue agent")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-kb", help="generate a seeded synthetic knowledge base")
    add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--rows", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=cmd_gen_kb)

    p = sub.add_parser("gen-corpus", help="generate a rule-agent dialogue corpus")
    add_common(p)
    add_hyper_flags(p)
    p.add_argument("--kb", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--episodes", type=int, default=3000)
    p.set_defaults(fn=cmd_gen_corpus)

    p = sub.add_parser("train-sl", help="supervised training on a corpus")
    add_common(p)
    add_hyper_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--resume", help="checkpoint to continue from")
    p.set_defaults(fn=cmd_train_sl)

    p = sub.add_parser("train-rl", help="REINFORCE against the user simulator")
    add_common(p)
    add_hyper_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("end_to_end", "policy_only"),
                   default="end_to_end")
    p.add_argument("--episodes", type=int, default=6000)
    p.add_argument("--template-set", choices=("train", "extended"),
                   default="extended")
    p.add_argument("--history-out", help="write the learning curve records as JSON")
    p.set_defaults(fn=cmd_train_rl)

    p = sub.add_parser("import-dstc2",
                       help="convert a DSTC2-layout directory to the corpus schema")
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ontology-out", required=True)
    p.set_defaults(fn=cmd_import_dstc2)

    p = sub.add_parser("eval-tracking", help="belief tracking accuracy on a corpus")
    add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=("train", "dev", "test", "all"), default="test")
    p.set_defaults(fn=cmd_eval_tracking)

    p = sub.add_parser("eval-interactive", help="greedy dialogue simulations")
    add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--episodes", type=int, default=500)
    p.add_argument("--eval-seed", type=int, default=17)
    p.add_argument("--template-set", choices=("train", "extended"),
                   default="extended")
    p.set_defaults(fn=cmd_eval_interactive)

    p = sub.add_parser("curves", help="merge run histories into a curve table")
    p.add_argument("history", nargs="+", help="history JSON files from train-rl")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="optional rendered figure (requires matplotlib)")
    p.set_defaults(fn=cmd_curves)

    p = sub.add_parser("serve", help="serve the chat API (and UI bundle if present)")
    add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8470)
    p.add_argument("--ui-dir", help="static chat-ui bundle directory")
    p.add_argument("--feedback-log", default="feedback_episodes.jsonl")
    p.add_argument("--serve-seed", type=int, default=1234)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except TaskdialError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
