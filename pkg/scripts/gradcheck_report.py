#!/usr/bin/env python3
"""Print the finite-difference report for every building block at toy dims."""

import sys

import numpy as np

from taskdial import nn
from taskdial.config import Hyperparameters
from taskdial.kb import KBResult, encode_kb_result
from taskdial.model import ModelForward, encode_prev_action, init_parameters
from taskdial.nn import ParameterSet, Tape, finite_difference_check
from taskdial.ontology import make_ontology
from taskdial.tokens import Vocabulary, tokenize

TOY = Hyperparameters(utterance_hidden=4, dialogue_hidden=6, policy_hidden=5,
                      tracker_hidden=4, embedding_dim=8, dropout_rate=0.0)


def toy_bundle(seed=7):
    ontology = make_ontology(slots=("color", "size"),
                             values={"color": ("red",), "size": ("small", "big")})
    vocab = Vocabulary(id_to_token=list(Vocabulary().id_to_token)
                       + ["red", "big", "small", "want", "i"])
    params = init_parameters(TOY, ontology, vocab, np.random.default_rng(seed))
    return ontology, vocab, params


def check(name, build, params, tolerance=1e-4):
    report = finite_difference_check(build, params, tolerance=tolerance)
    status = "PASS" if report.passed else "FAIL"
    print(f"{name:24s} {status}  worst {report.worst:.3g}  (tol {tolerance:g})")
    return report.passed


def main() -> int:
    ok = True
    rng = np.random.default_rng(0)

    lstm_params = ParameterSet()
    lstm_params.add_group("cell", nn.lstm_group(rng, 3, 2))
    x, h0, c0 = rng.normal(size=3), rng.normal(size=2), rng.normal(size=2)

    def lstm_loss(p):
        tape = Tape()
        h, c = nn.lstm_cell_step(tape, p.leaves(tape, "cell"), tape.const(x),
                                 tape.const(h0), tape.const(c0))
        both = nn.concat_rows(tape, [h, c])
        return tape, nn.sum_all(tape, nn.mul(tape, both, both))

    ok &= check("lstm_cell_step", lstm_loss, lstm_params)

    mlp_params = ParameterSet()
    mlp_params.add_group("mlp", nn.mlp_group(rng, 4, 3, 5))
    v = rng.normal(size=4)

    def mlp_loss(p):
        tape = Tape()
        g = p.leaves(tape, "mlp")
        hid = nn.tanh(tape, nn.affine(tape, g["w1"], tape.const(v), g["b1"]))
        lp = nn.log_softmax(tape, nn.affine(tape, g["w2"], hid, g["b2"]))
        return tape, nn.cross_entropy(tape, lp, 2)

    ok &= check("mlp_softmax_ce", mlp_loss, mlp_params)

    ontology, vocab, params = toy_bundle()
    ids = tokenize("i want red", vocab)
    prev = encode_prev_action(None, ontology)
    kb_enc = encode_kb_result(KBResult((), 1, False))

    def full_turn(p):
        tape = Tape()
        fw = ModelForward(tape, p, TOY, ontology, train=False)
        state = fw.state_update(fw.initial_state(), fw.encode_utterance(ids), prev)
        slot_nodes = fw.slot_logprob_nodes(state.h)
        loss = None
        for i, slot in enumerate(ontology.slots):
            piece = nn.cross_entropy(tape, slot_nodes[slot], i)
            loss = piece if loss is None else nn.add(tape, loss, piece)
        lp = fw.policy_logprob_node(state.h, fw.belief_node(slot_nodes),
                                    tape.const(kb_enc))
        return tape, nn.add(tape, loss, nn.cross_entropy(tape, lp, 1))

    ok &= check("full_turn_composition", full_turn, params)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
