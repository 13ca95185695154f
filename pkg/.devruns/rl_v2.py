import sys, time
import numpy as np
from taskdial.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from taskdial.kb import load_kb
from taskdial.ontology import movie_ontology
from taskdial.templates import load_asset_templates
from taskdial.training import train_reinforce, evaluate_interactive

mode, lr, episodes = sys.argv[1], float(sys.argv[2]), int(sys.argv[3])
ont = movie_ontology()
ckpt = load_checkpoint(".devruns/sl_v2.ckpt")
kb = load_kb(".devruns/kb.tsv", ont)
lib = load_asset_templates("movie")
hyper = ckpt.hyper
hyper.rl_learning_rate = lr
hyper.rl_baseline = True
hyper.eval_interval = 1000
hyper.eval_episodes = 300
t0 = time.time()
params, hist = train_reinforce(ckpt.params, hyper, ont, ckpt.vocab, kb, lib,
                               mode, episodes=episodes, seed=31337, eval_seed=424242,
                               log=lambda m: print(f"[{time.time()-t0:6.0f}s] {m}", flush=True))
tag = f"v2_{mode}_{lr:g}"
save_checkpoint(Checkpoint(params=params, hyper=hyper, ontology_hash=ont.content_hash(),
                           vocab=ckpt.vocab, history=hist, meta={"mode": mode}),
                f".devruns/rl_{tag}.ckpt")
rep = evaluate_interactive(params, hyper, ont, ckpt.vocab, kb, lib, 500, 424242)
print(f"FINAL 500-ep eval: success {rep.success_rate:.3f} turns {rep.avg_turns}", flush=True)
print("DONE saved", tag, flush=True)
