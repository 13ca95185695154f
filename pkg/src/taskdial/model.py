"""Neural dialogue architecture.

A bidirectional utterance-level LSTM encodes each user utterance; a
dialogue-level LSTM carries the continuous dialogue state across turns from
[utterance encoding ; previous-action one-hot]; per-slot single-hidden-layer
MLPs emit candidate-value distributions from that state; the policy MLP maps
[state ; concatenated belief log-probs ; KB-result encoding] to a distribution
over the system-action catalog.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .beliefs import SlotDistribution
from .config import Hyperparameters
from .errors import ConfigurationError, ContractError
from .kb import (
    KB_ENCODING_DIM,
    KBResult,
    KnowledgeBase,
    encode_kb_result,
    execute_query,
    formulate_query,
    pick_offer_entity,
)
from .nn import Node, ParameterSet, Tape
from .ontology import ACT_CONFIRM, ACT_GOODBYE, ACT_NO_MATCH, ACT_OFFER, SlotOntology, SystemAction
from .templates import TemplateLibrary, realize_system_action, requested_count_from
from .tokens import UNK, Vocabulary, tokenize

POLICY_GROUP = "policy"
EMBEDDING_GROUP = "embedding"


def action_encoding_dim(ontology: SlotOntology) -> int:
    # one extra index marks "no previous action" at dialogue start
    return ontology.num_actions + 1


def encode_prev_action(action_id: int | None, ontology: SlotOntology) -> np.ndarray:
    """One-hot over the catalog; None selects the dedicated start index."""
    vec = np.zeros(action_encoding_dim(ontology))
    if action_id is None:
        vec[-1] = 1.0
    else:
        if not (0 <= action_id < ontology.num_actions):
            raise ContractError(f"action id {action_id} outside catalog")
        vec[action_id] = 1.0
    return vec


def decode_action_encoding(vec: np.ndarray, ontology: SlotOntology) -> int | None:
    hot = int(np.argmax(vec))
    return None if hot == ontology.num_actions else hot


def init_parameters(hyper: Hyperparameters, ontology: SlotOntology,
                    vocab: Vocabulary, rng: np.random.Generator) -> ParameterSet:
    """Fresh ParameterSet with one group per architectural block."""
    params = ParameterSet()
    params.add_group(EMBEDDING_GROUP,
                     {"table": nn.uniform_init(rng, hyper.embedding_dim, len(vocab))})
    params.add_group("utterance_fwd",
                     nn.lstm_group(rng, hyper.embedding_dim, hyper.utterance_hidden))
    params.add_group("utterance_bwd",
                     nn.lstm_group(rng, hyper.embedding_dim, hyper.utterance_hidden))
    params.add_group("dialogue",
                     nn.lstm_group(rng, 2 * hyper.utterance_hidden + action_encoding_dim(ontology),
                                   hyper.dialogue_hidden))
    for slot in ontology.slots:
        params.add_group(f"tracker_{slot}",
                         nn.mlp_group(rng, hyper.dialogue_hidden, hyper.tracker_hidden,
                                      len(ontology.candidates[slot])))
    params.add_group(POLICY_GROUP,
                     nn.mlp_group(rng,
                                  hyper.dialogue_hidden + ontology.belief_dim + KB_ENCODING_DIM,
                                  hyper.policy_hidden, ontology.num_actions))
    return params


@dataclass
class DialogueState:
    """Hidden and cell vectors of the dialogue-level LSTM (as tape nodes)."""

    h: Node
    c: Node


@dataclass
class PolicyDistribution:
    probs: np.ndarray
    logprobs: np.ndarray

    def __post_init__(self):
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ContractError("policy distribution is not a simplex point")


def choose_action(pi: PolicyDistribution, mode: str,
                  rng: np.random.Generator | None = None) -> tuple[int, float]:
    """Greedy argmax (lowest index wins ties) or inverse-CDF sampling."""
    if mode == "greedy":
        action = int(np.argmax(pi.probs))
    elif mode == "sample":
        if rng is None:
            raise ConfigurationError("sampling requires a generator")
        cum = np.cumsum(pi.probs)
        action = int(np.searchsorted(cum, rng.random(), side="right"))
        action = min(action, len(pi.probs) - 1)
    else:
        raise ConfigurationError(f"unknown action-choice mode {mode!r}")
    return action, float(pi.logprobs[action])


class ModelForward:
    """Parameters entered on one tape, reused across every turn of a pass.

    ``train=True`` enables dropout (utterance encoding and MLP hidden layers);
    gradient recording is governed solely by the tape.
    """

    def __init__(self, tape: Tape, params: ParameterSet, hyper: Hyperparameters,
                 ontology: SlotOntology, train: bool = False,
                 dropout_rng: np.random.Generator | None = None):
        if train and hyper.dropout_rate > 0 and dropout_rng is None:
            raise ConfigurationError("train-mode forward needs a dropout generator")
        self.tape = tape
        self.hyper = hyper
        self.ontology = ontology
        self.train = train
        self.dropout_rng = dropout_rng
        self.embedding = params.leaves(tape, EMBEDDING_GROUP)["table"]
        self.utt_fwd = nn.lstm_stack_gates(tape, params.leaves(tape, "utterance_fwd"))
        self.utt_bwd = nn.lstm_stack_gates(tape, params.leaves(tape, "utterance_bwd"))
        self.dialogue = nn.lstm_stack_gates(tape, params.leaves(tape, "dialogue"))
        self.trackers = {slot: params.leaves(tape, f"tracker_{slot}")
                         for slot in ontology.slots}
        self.policy = params.leaves(tape, POLICY_GROUP)

    # -- utterance encoder -------------------------------------------------

    def _run_direction(self, stacked, ids: np.ndarray, lengths: np.ndarray) -> Node:
        """Masked LSTM sweep over (K, T) id rows; returns final hidden (H, K)."""
        tape = self.tape
        hidden = self.hyper.utterance_hidden
        k, t_max = ids.shape
        wx, wh, b = stacked
        h = tape.const(np.zeros((hidden, k)))
        c = tape.const(np.zeros((hidden, k)))
        uniform = bool(np.all(lengths == t_max))
        for t in range(t_max):
            x = nn.gather_cols(tape, self.embedding, ids[:, t])
            h_new, c_new = nn.lstm_step_stacked(tape, wx, wh, b, x, h, c)
            if uniform:
                h, c = h_new, c_new
                continue
            alive = (lengths > t).astype(float)
            if np.all(alive == 1.0):
                h, c = h_new, c_new
                continue
            mask = tape.const(np.repeat(alive[None, :], hidden, axis=0))
            keep = tape.const(np.repeat(1.0 - alive[None, :], hidden, axis=0))
            h = nn.add(tape, nn.mul(tape, h_new, mask), nn.mul(tape, h, keep))
            c = nn.add(tape, nn.mul(tape, c_new, mask), nn.mul(tape, c, keep))
        return h

    def _encode_block(self, seqs: list[list[int]]) -> Node:
        lengths = np.array([len(s) for s in seqs], dtype=np.int64)
        t_max = int(lengths.max())
        fwd = np.zeros((len(seqs), t_max), dtype=np.int64)
        bwd = np.zeros((len(seqs), t_max), dtype=np.int64)
        for i, seq in enumerate(seqs):
            fwd[i, :len(seq)] = seq
            bwd[i, :len(seq)] = seq[::-1]
        h_f = self._run_direction(self.utt_fwd, fwd, lengths)
        h_b = self._run_direction(self.utt_bwd, bwd, lengths)
        return nn.concat_rows(self.tape, [h_f, h_b])

    def encode_utterances(self, sequences: list[list[int]]) -> Node:
        """Encode a batch of token-id sequences into a (2*H_u, K) block.

        Each sequence runs through forward and backward LSTMs; the two final
        states are concatenated. Empty sequences encode a single UNK token.
        Long outliers are swept in a separate bucket so one long utterance
        does not stretch the padded length of the whole batch.
        """
        seqs = [seq if seq else [UNK] for seq in sequences]
        lengths = np.array([len(s) for s in seqs], dtype=np.int64)
        cut = max(int(np.median(lengths)) + 4, 8)
        long_idx = np.nonzero(lengths > cut)[0]
        if len(seqs) < 8 or len(long_idx) == 0 or len(long_idx) == len(seqs):
            out = self._encode_block(seqs)
        else:
            short_idx = np.nonzero(lengths <= cut)[0]
            order = np.concatenate([short_idx, long_idx])
            blocks = [self._encode_block([seqs[i] for i in short_idx]),
                      self._encode_block([seqs[i] for i in long_idx])]
            inverse = np.empty(len(seqs), dtype=np.int64)
            inverse[order] = np.arange(len(seqs))
            out = nn.gather_cols(self.tape, nn.concat_cols(self.tape, blocks), inverse)
        return nn.dropout_apply(self.tape, out, self.hyper.dropout_rate,
                                self.train, self.dropout_rng)

    def encode_utterance(self, token_ids: list[int]) -> Node:
        return nn.column(self.tape, self.encode_utterances([token_ids]), 0)

    # -- dialogue state ------------------------------------------------------

    def initial_state(self) -> DialogueState:
        zeros = np.zeros(self.hyper.dialogue_hidden)
        return DialogueState(h=self.tape.const(zeros), c=self.tape.const(zeros.copy()))

    def state_update(self, state: DialogueState, utterance: Node,
                     prev_action: np.ndarray) -> DialogueState:
        """One dialogue-level LSTM step on [utterance encoding ; action one-hot]."""
        if prev_action.shape[0] != action_encoding_dim(self.ontology):
            raise ConfigurationError(
                f"action encoding has dim {prev_action.shape[0]}, "
                f"expected {action_encoding_dim(self.ontology)}")
        x = nn.concat_rows(self.tape, [utterance, self.tape.const(prev_action)])
        wx, wh, b = self.dialogue
        h, c = nn.lstm_step_stacked(self.tape, wx, wh, b, x, state.h, state.c)
        return DialogueState(h=h, c=c)

    # -- heads ---------------------------------------------------------------

    def _mlp(self, group: dict[str, Node], x: Node) -> Node:
        hidden = nn.tanh(self.tape, nn.affine(self.tape, group["w1"], x, group["b1"]))
        hidden = nn.dropout_apply(self.tape, hidden, self.hyper.dropout_rate,
                                  self.train, self.dropout_rng)
        return nn.affine(self.tape, group["w2"], hidden, group["b2"])

    def slot_logprob_nodes(self, state_h: Node) -> dict[str, Node]:
        """Per-slot log-softmax nodes over candidates (vector or per-column)."""
        out = {}
        for slot in self.ontology.slots:
            if slot not in self.trackers:
                raise ConfigurationError(f"no tracker parameters for slot {slot!r}")
            out[slot] = nn.log_softmax(self.tape, self._mlp(self.trackers[slot], state_h))
        return out

    def track(self, state: DialogueState) -> tuple[list[SlotDistribution], dict[str, Node]]:
        nodes = self.slot_logprob_nodes(state.h)
        dists = [SlotDistribution(slot=s, probs=np.exp(nodes[s].value),
                                  logprobs=nodes[s].value.copy())
                 for s in self.ontology.slots]
        return dists, nodes

    def belief_node(self, slot_nodes: dict[str, Node]) -> Node:
        return nn.concat_rows(self.tape, [slot_nodes[s] for s in self.ontology.slots])

    def policy_logprob_node(self, state_h: Node, belief: Node, kb_encoding: Node) -> Node:
        x = nn.concat_rows(self.tape, [state_h, belief, kb_encoding])
        return nn.log_softmax(self.tape, self._mlp(self.policy, x))


# -- single-turn convenience surfaces (fresh non-recording tape each call) ---


def _oneshot(params: ParameterSet, hyper: Hyperparameters, ontology: SlotOntology,
             mode: str, dropout_rng=None) -> ModelForward:
    return ModelForward(Tape(record=False), params, hyper, ontology,
                        train=(mode == "train"), dropout_rng=dropout_rng)


def encode_utterance(token_ids: list[int], params: ParameterSet, hyper: Hyperparameters,
                     ontology: SlotOntology, mode: str = "eval",
                     dropout_rng=None) -> np.ndarray:
    fw = _oneshot(params, hyper, ontology, mode, dropout_rng)
    return fw.encode_utterance(token_ids).value.copy()


def dialogue_state_update(s_prev: tuple[np.ndarray, np.ndarray], utterance: np.ndarray,
                          prev_action: np.ndarray, params: ParameterSet,
                          hyper: Hyperparameters, ontology: SlotOntology
                          ) -> tuple[np.ndarray, np.ndarray]:
    fw = _oneshot(params, hyper, ontology, "eval")
    state = DialogueState(h=fw.tape.const(s_prev[0]), c=fw.tape.const(s_prev[1]))
    new = fw.state_update(state, fw.tape.const(utterance), prev_action)
    return new.h.value.copy(), new.c.value.copy()


def track_slot_distributions(state_h: np.ndarray, ontology: SlotOntology,
                             params: ParameterSet, hyper: Hyperparameters,
                             mode: str = "eval", dropout_rng=None) -> list[SlotDistribution]:
    fw = _oneshot(params, hyper, ontology, mode, dropout_rng)
    dists, _ = fw.track(DialogueState(h=fw.tape.const(state_h),
                                      c=fw.tape.const(np.zeros_like(state_h))))
    return dists


def policy_distribution(state_h: np.ndarray, belief: np.ndarray, kb_encoding: np.ndarray,
                        params: ParameterSet, hyper: Hyperparameters,
                        ontology: SlotOntology, mode: str = "eval",
                        dropout_rng=None) -> PolicyDistribution:
    fw = _oneshot(params, hyper, ontology, mode, dropout_rng)
    node = fw.policy_logprob_node(fw.tape.const(state_h), fw.tape.const(belief),
                                  fw.tape.const(kb_encoding))
    return PolicyDistribution(probs=np.exp(node.value), logprobs=node.value.copy())


# -- per-session orchestration -----------------------------------------------


@dataclass
class AgentTurnResult:
    action: SystemAction                 # what the policy chose (fed back as A_k)
    action_id: int
    realized_action: SystemAction        # what was actually said (offer may coerce)
    text: str
    dists: list[SlotDistribution]
    kb_result: KBResult | None
    offer: object                        # EntityRecord | None
    logprob: float
    logprob_node: Node | None
    forced_goodbye: bool = False


class AgentSession:
    """Turn-by-turn driver around one ModelForward context.

    In eval mode the tape does not record and the pass is pure; with a
    recording tape the per-turn log-prob nodes stay connected for REINFORCE.
    """

    def __init__(self, params: ParameterSet, hyper: Hyperparameters,
                 ontology: SlotOntology, vocab: Vocabulary, kb: KnowledgeBase,
                 templates: TemplateLibrary, mode: str = "greedy",
                 rng: np.random.Generator | None = None, tape: Tape | None = None,
                 train: bool = False, dropout_rng: np.random.Generator | None = None):
        if mode not in ("greedy", "sample"):
            raise ConfigurationError(f"unknown session mode {mode!r}")
        self.mode = mode
        self.rng = rng
        self.vocab = vocab
        self.kb = kb
        self.templates = templates
        self.hyper = hyper
        self.ontology = ontology
        self.fw = ModelForward(tape if tape is not None else Tape(record=False),
                               params, hyper, ontology, train=train,
                               dropout_rng=dropout_rng)
        self.state = self.fw.initial_state()
        self.turn_index = 0
        self.prev_action_id: int | None = None
        self.terminated = False
        self.last_dists: list[SlotDistribution] = []
        self.last_result: KBResult | None = None

    def agent_turn(self, user_text: str) -> AgentTurnResult:
        """tokenize -> encode -> state update -> track -> query -> policy -> realize."""
        ontology = self.ontology
        if self.turn_index >= self.hyper.max_turns:
            self.terminated = True
            goodbye = SystemAction(ACT_GOODBYE)
            text = realize_system_action(goodbye, self.last_dists, None, self.last_result,
                                         self.templates, ontology)
            return AgentTurnResult(
                action=goodbye, action_id=ontology.action_id(goodbye),
                realized_action=goodbye, text=text, dists=self.last_dists,
                kb_result=self.last_result, offer=None, logprob=0.0,
                logprob_node=None, forced_goodbye=True)
        if self.terminated:
            raise ContractError("session already terminated")

        fw = self.fw
        ids = tokenize(user_text, self.vocab)
        utterance = fw.encode_utterance(ids)
        self.state = fw.state_update(self.state, utterance,
                                     encode_prev_action(self.prev_action_id, ontology))
        dists, slot_nodes = fw.track(self.state)
        requested = requested_count_from(dists, ontology)
        query = formulate_query(dists, requested, ontology)
        result = execute_query(self.kb, query, requested)
        kb_enc = fw.tape.const(encode_kb_result(result))
        logprob_node = fw.policy_logprob_node(self.state.h, fw.belief_node(slot_nodes),
                                              kb_enc)
        pi = PolicyDistribution(probs=np.exp(logprob_node.value),
                                logprobs=logprob_node.value.copy())
        action_id, logprob = choose_action(pi, self.mode, self.rng)
        action = ontology.action(action_id)

        offer = None
        realized = action
        if action.act in (ACT_OFFER, ACT_CONFIRM):
            offer = pick_offer_entity(result, self.kb)
            if offer is None:
                realized = SystemAction(ACT_NO_MATCH)
        text = realize_system_action(realized, dists, offer, result, self.templates,
                                     ontology)

        picked = nn.pick(fw.tape, logprob_node, action_id) if fw.tape.record else None
        self.turn_index += 1
        self.prev_action_id = action_id
        self.last_dists = dists
        self.last_result = result
        if action.terminal or self.turn_index >= self.hyper.max_turns:
            self.terminated = True
        return AgentTurnResult(
            action=action, action_id=action_id, realized_action=realized, text=text,
            dists=dists, kb_result=result, offer=offer, logprob=logprob,
            logprob_node=picked)
