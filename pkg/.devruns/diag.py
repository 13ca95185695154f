import time
import numpy as np
from taskdial.config import Hyperparameters
from taskdial.kb import generate_kb
from taskdial.ontology import movie_ontology
from taskdial.simulator import generate_corpus, split_corpus
from taskdial.templates import load_asset_templates
from taskdial.training import evaluate_state_tracking, train_supervised

ont = movie_ontology()
kb = generate_kb(ont, 100, np.random.default_rng(7))
lib = load_asset_templates("movie")

for tag, hyper in [("nodrop", Hyperparameters(dropout_rate=0.0, epochs=10)),
                   ("drop05", Hyperparameters(dropout_rate=0.5, epochs=10))]:
    eps = generate_corpus(600, kb, ont, lib, hyper, master_seed=101)
    train, dev, _ = split_corpus(eps)
    t0 = time.time()
    res = train_supervised(train, dev, hyper, ont,
                           log=lambda m: print(f"  {tag} {m}", flush=True))
    rep = evaluate_state_tracking(res.params, dev, hyper, ont, res.vocab)
    print(f"{tag}: {rep.summary()} ({time.time()-t0:.0f}s)", flush=True)
