import sys, time
import numpy as np
from taskdial.checkpoint import load_checkpoint
from taskdial.kb import load_kb
from taskdial.ontology import movie_ontology
from taskdial.templates import load_asset_templates
from taskdial.training import train_reinforce

mode, lr, baseline, episodes = (sys.argv[1], float(sys.argv[2]),
                                sys.argv[3] == "baseline", int(sys.argv[4]))
ont = movie_ontology()
ckpt = load_checkpoint(".devruns/sl.ckpt")
kb = load_kb(".devruns/kb.tsv", ont)
lib = load_asset_templates("movie")
hyper = ckpt.hyper
hyper.rl_learning_rate = lr
hyper.rl_baseline = baseline
hyper.eval_interval = 500
hyper.eval_episodes = 300
t0 = time.time()
params, hist = train_reinforce(ckpt.params, hyper, ont, ckpt.vocab, kb, lib,
                               mode, episodes=episodes, seed=31337, eval_seed=424242,
                               log=lambda m: print(f"[{time.time()-t0:6.0f}s] {m}", flush=True))
from taskdial.checkpoint import Checkpoint, save_checkpoint
tag = f"{mode}_{lr:g}_{'bl' if baseline else 'nobl'}"
save_checkpoint(Checkpoint(params=params, hyper=hyper, ontology_hash=ont.content_hash(),
                           vocab=ckpt.vocab, history=hist, meta={"mode": mode}),
                f".devruns/rl_{tag}.ckpt")
print("DONE saved", tag, flush=True)
