"""Per-template tracker outcomes for a checkpoint: OK / NONE / WRONG counts."""
import sys
import numpy as np
from collections import Counter
from taskdial.checkpoint import load_checkpoint
from taskdial.kb import load_kb
from taskdial.model import AgentSession
from taskdial.ontology import movie_ontology, NONE_VALUE
from taskdial.simulator import UserGoal
from taskdial.templates import load_asset_templates
from taskdial.seeding import episode_rng

ckpt_path = sys.argv[1]
ont = movie_ontology()
ckpt = load_checkpoint(ckpt_path)
kb = load_kb(".devruns/kb.tsv", ont)
lib = load_asset_templates("movie")

rng = np.random.default_rng(5)
goals = []
for i in range(12):
    row = kb.rows[int(rng.integers(len(kb)))]
    goals.append(UserGoal(values={**row.values, "num_tickets": str(1 + i % 4)}))

summary = {}
for slot in ont.slots:
    key = f"inform_{slot}"
    for template in lib.user_extended.templates[key]:
        tag = "train" if template in lib.user_train.templates[key] else "EXT"
        outcomes = Counter()
        for goal in goals:
            text = template.format(**goal.values)
            session = AgentSession(ckpt.params, ckpt.hyper, ont, ckpt.vocab, kb, lib)
            session.agent_turn("")
            res = session.agent_turn(text)
            got = next(d.argmax_value(ont) for d in res.dists if d.slot == slot)
            outcomes["OK" if got == goal.values[slot]
                     else ("NONE" if got == NONE_VALUE else "WRONG")] += 1
        summary[(slot, template)] = (tag, outcomes)
        print(f"{slot:12s} [{tag:5s}] OK={outcomes['OK']:2d} NONE={outcomes['NONE']:2d} "
              f"WRONG={outcomes['WRONG']:2d}  {template!r}")
ok = sum(c["OK"] for _, c in summary.values())
total = sum(sum(c.values()) for _, c in summary.values())
print(f"\noverall trackability: {ok/total:.3f}")
ext = [(t, c) for (s, tpl), (t, c) in summary.items() if t == "EXT"]
ok_e = sum(c["OK"] for _, c in ext); tot_e = sum(sum(c.values()) for _, c in ext)
print(f"extended-only trackability: {ok_e/tot_e:.3f}")
