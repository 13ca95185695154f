import time
import numpy as np
from taskdial.checkpoint import Checkpoint, save_checkpoint
from taskdial.config import Hyperparameters
from taskdial.kb import generate_kb
from taskdial.ontology import movie_ontology
from taskdial.simulator import generate_corpus, split_corpus
from taskdial.templates import load_asset_templates
from taskdial.training import evaluate_state_tracking, train_supervised

ont = movie_ontology()
kb = generate_kb(ont, 100, np.random.default_rng(7))
lib = load_asset_templates("movie")
hyper = Hyperparameters()
t0 = time.time()
eps = generate_corpus(3000, kb, ont, lib, hyper, master_seed=101)
train, dev, test = split_corpus(eps)
print(f"corpus {len(train)}/{len(dev)}/{len(test)} in {time.time()-t0:.0f}s", flush=True)

def log(msg):
    print(f"[{time.time()-t0:7.0f}s] {msg}", flush=True)

res = train_supervised(train, dev, hyper, ont, log=log)
rep = evaluate_state_tracking(res.params, test, hyper, ont, res.vocab)
print("TEST:", rep.summary(), flush=True)
kb.save("/root/pkg/.devruns/kb.tsv", ont)
ckpt = Checkpoint(params=res.params, hyper=hyper, ontology_hash=ont.content_hash(),
                  vocab=res.vocab, history=res.history, meta={"phase": "sl"})
save_checkpoint(ckpt, "/root/pkg/.devruns/sl.ckpt")
print("saved /root/pkg/.devruns/sl.ckpt", flush=True)
