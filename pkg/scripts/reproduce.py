#!/usr/bin/env python3
"""Full experiment pipeline: KB -> corpus -> SL -> two RL runs -> curve table.

Produces, under --workdir (default ./runs):
    kb.tsv, corpus.jsonl, sl.ckpt, rl_end_to_end.ckpt, rl_policy_only.ckpt,
    history_*.json, curves.csv (and curves.png when matplotlib is installed)

Every stage is seeded; rerunning with the same flags reproduces the artifacts.
"""

import argparse
import json
import os
import subprocess
import sys


def run(args: list[str]) -> None:
    print(f"+ taskdial {' '.join(args)}", flush=True)
    subprocess.run([sys.executable, "-m", "taskdial", *args], check=True)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="runs")
    parser.add_argument("--kb-rows", type=int, default=100)
    parser.add_argument("--episodes", type=int, default=3000)
    parser.add_argument("--rl-episodes", type=int, default=6000)
    parser.add_argument("--epochs", type=int, default=18)
    parser.add_argument("--seed", type=int, default=13)
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()

    os.makedirs(args.workdir, exist_ok=True)
    path = lambda name: os.path.join(args.workdir, name)  # noqa: E731

    run(["gen-kb", "--out", path("kb.tsv"), "--rows", str(args.kb_rows),
         "--seed", "7"])
    run(["gen-corpus", "--kb", path("kb.tsv"), "--out", path("corpus.jsonl"),
         "--episodes", str(args.episodes), "--seed", "101"])
    run(["train-sl", "--corpus", path("corpus.jsonl"), "--out", path("sl.ckpt"),
         "--epochs", str(args.epochs), "--seed", str(args.seed)])
    run(["eval-tracking", "--checkpoint", path("sl.ckpt"),
         "--corpus", path("corpus.jsonl"), "--split", "test"])

    # SL baseline reference point for the curve overlay
    from taskdial.checkpoint import load_checkpoint
    from taskdial.kb import load_kb
    from taskdial.ontology import movie_ontology
    from taskdial.templates import load_asset_templates
    from taskdial.training import evaluate_interactive

    ontology = movie_ontology()
    ckpt = load_checkpoint(path("sl.ckpt"))
    report = evaluate_interactive(ckpt.params, ckpt.hyper, ontology, ckpt.vocab,
                                  load_kb(path("kb.tsv"), ontology),
                                  load_asset_templates("movie"), 500, seed=424242)
    with open(path("history_sl_baseline.json"), "w") as fh:
        json.dump({"label": "sl_baseline",
                   "records": [{"episodes": 0, "success_rate": report.success_rate,
                                "avg_turns": report.avg_turns,
                                "avg_return": report.avg_return}]}, fh, indent=1)
    print(f"SL baseline (extended templates): success {report.success_rate:.3f} "
          f"turns {report.avg_turns}")

    for mode in ("policy_only", "end_to_end"):
        run(["train-rl", "--checkpoint", path("sl.ckpt"), "--kb", path("kb.tsv"),
             "--mode", mode, "--episodes", str(args.rl_episodes),
             "--out", path(f"rl_{mode}.ckpt"),
             "--history-out", path(f"history_{mode}.json"),
             "--seed", str(args.seed)])

    curve_args = ["curves", path("history_sl_baseline.json"),
                  path("history_policy_only.json"), path("history_end_to_end.json"),
                  "--out", path("curves.csv")]
    if args.plot:
        curve_args += ["--plot", path("curves.png")]
    run(curve_args)
    print(f"artifacts in {args.workdir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
