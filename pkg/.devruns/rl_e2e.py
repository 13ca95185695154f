import sys, time
import numpy as np
from taskdial.checkpoint import load_checkpoint
from taskdial.kb import load_kb
from taskdial.ontology import movie_ontology
from taskdial.templates import load_asset_templates
from taskdial.training import train_reinforce
from taskdial.config import Hyperparameters

mode = sys.argv[1] if len(sys.argv) > 1 else "end_to_end"
lr = float(sys.argv[2]) if len(sys.argv) > 2 else 3e-4

ont = movie_ontology()
ckpt = load_checkpoint(".devruns/sl.ckpt")
kb = load_kb(".devruns/kb.tsv", ont)
lib = load_asset_templates("movie")
hyper = ckpt.hyper
hyper.rl_learning_rate = lr
hyper.eval_interval = 500
hyper.eval_episodes = 300

t0 = time.time()
params, hist = train_reinforce(ckpt.params, hyper, ont, ckpt.vocab, kb, lib,
                               mode, episodes=6000, seed=31337, eval_seed=424242,
                               log=lambda m: print(f"[{time.time()-t0:6.0f}s] {m}", flush=True))
print("DONE", flush=True)
