"""Supervised and policy-gradient training, plus corpus and interactive evaluation.

The supervised stage minimizes an interpolation of per-slot tracking
cross-entropies and the action-prediction cross-entropy over fully unrolled
dialogues (teacher-forced previous actions and stored KB summaries). The RL
stage runs REINFORCE against the user simulator: actions are sampled from the
softmax policy, each turn's log-probability is weighted by its undiscounted
reward-to-go, and one Adam step is taken per episode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .config import MAX_TURNS, Hyperparameters
from .errors import ConfigurationError, ContractError, DataError
from .kb import KnowledgeBase, encode_kb_result, KBResult
from .model import (
    POLICY_GROUP,
    AgentSession,
    ModelForward,
    encode_prev_action,
    init_parameters,
)
from .nn import AdamState, ParameterSet, Tape, adam_step, clip_global_norm
from .ontology import SlotOntology
from .seeding import (
    STREAM_DROPOUT,
    STREAM_INIT,
    STREAM_SHUFFLE,
    episode_rng,
    stream_rng,
)
from .simulator import Episode, run_episode, sample_goal
from .templates import TemplateLibrary, realize_user_act
from .tokens import Vocabulary, build_vocab, tokenize


# ---------------------------------------------------------------------------
# history


@dataclass
class TrainingHistory:
    """Per-interval records; episode counts strictly increase within a run."""

    records: list[dict] = field(default_factory=list)

    def append(self, record: dict) -> None:
        if "success_rate" in record and not (0.0 <= record["success_rate"] <= 1.0):
            raise ContractError("success_rate outside [0, 1]")
        if record.get("avg_turns") is not None and record["avg_turns"] > MAX_TURNS:
            raise ContractError("avg_turns exceeds the turn cap")
        if self.records and "episodes" in record and "episodes" in self.records[-1]:
            if record["episodes"] <= self.records[-1]["episodes"]:
                raise ContractError("episode counts must strictly increase")
        self.records.append(record)


# ---------------------------------------------------------------------------
# corpus preparation


@dataclass
class PreparedDialogue:
    token_ids: list[list[int]]           # per turn, BOS/EOS wrapped
    prev_actions: np.ndarray             # (K, num_actions + 1) one-hots
    action_targets: np.ndarray           # (K,)
    slot_targets: dict[str, np.ndarray]  # slot -> (K,) candidate indices
    kb_encodings: np.ndarray             # (K, 5)


def prepare_dialogue(episode: Episode, ontology: SlotOntology,
                     vocab: Vocabulary) -> PreparedDialogue:
    k = episode.num_turns
    prev = np.zeros((k, ontology.num_actions + 1))
    actions = np.zeros(k, dtype=np.int64)
    kb_enc = np.zeros((k, 5))
    slot_targets = {s: np.zeros(k, dtype=np.int64) for s in ontology.slots}
    token_ids = []
    prev_id: int | None = None
    for i, turn in enumerate(episode.turns):
        if turn.labels is None or turn.action_id is None:
            raise DataError("corpus turn is missing labels or action")
        token_ids.append(tokenize(turn.user_text, vocab))
        prev[i] = encode_prev_action(prev_id, ontology)
        actions[i] = turn.action_id
        kb_enc[i] = encode_kb_result(
            KBResult(entity_ids=("x",) * turn.kb_count, requested_count=1,
                     available=turn.kb_available))
        for slot in ontology.slots:
            if slot not in turn.labels:
                raise DataError(f"corpus turn is missing label for slot {slot!r}")
            slot_targets[slot][i] = ontology.candidate_index(slot, turn.labels[slot])
        prev_id = turn.action_id
    return PreparedDialogue(token_ids=token_ids, prev_actions=prev,
                            action_targets=actions, slot_targets=slot_targets,
                            kb_encodings=kb_enc)


def prepare_corpus(episodes: list[Episode], ontology: SlotOntology,
                   vocab: Vocabulary) -> list[PreparedDialogue]:
    return [prepare_dialogue(e, ontology, vocab) for e in episodes]


# ---------------------------------------------------------------------------
# supervised training


@dataclass
class FlatBatch:
    """A minibatch flattened to (dialogue, turn) columns for lockstep stepping.

    Dialogues are sorted by length (desc) so that at every dialogue-LSTM step
    the still-running dialogues form a prefix; columns of the stacked state
    block are laid out step-major: all dialogues' turn 0, then turn 1, ...
    """

    sequences: list[list[int]]       # utterances, dialogue-major
    alive: list[int]                 # dialogues still running at each step
    utt_col: np.ndarray              # step-major flat index -> utterance column
    prev_actions: np.ndarray         # (A+1, N) step-major
    kb_encodings: np.ndarray         # (5, N)
    action_targets: np.ndarray       # (N,)
    slot_targets: dict[str, np.ndarray]
    dialogue_of: np.ndarray          # (N,) original dialogue index per column
    is_final: np.ndarray             # (N,) True at each dialogue's last turn


def build_flat_batch(batch: list[PreparedDialogue]) -> FlatBatch:
    order = sorted(range(len(batch)), key=lambda i: -len(batch[i].token_ids))
    ds = [batch[i] for i in order]
    ks = [len(d.token_ids) for d in ds]
    offsets = np.concatenate([[0], np.cumsum(ks)])
    slots = list(ds[0].slot_targets)
    utt_col, prev, kbs, act_t, dia, fin = [], [], [], [], [], []
    slot_t: dict[str, list[int]] = {s: [] for s in slots}
    alive = []
    for t in range(max(ks)):
        n_alive = sum(1 for k in ks if k > t)
        alive.append(n_alive)
        for di in range(n_alive):
            d = ds[di]
            utt_col.append(offsets[di] + t)
            prev.append(d.prev_actions[t])
            kbs.append(d.kb_encodings[t])
            act_t.append(d.action_targets[t])
            dia.append(order[di])
            fin.append(t == ks[di] - 1)
            for s in slots:
                slot_t[s].append(d.slot_targets[s][t])
    return FlatBatch(
        sequences=[ids for d in ds for ids in d.token_ids],
        alive=alive, utt_col=np.array(utt_col, dtype=np.int64),
        prev_actions=np.array(prev).T, kb_encodings=np.array(kbs).T,
        action_targets=np.array(act_t, dtype=np.int64),
        slot_targets={s: np.array(v, dtype=np.int64) for s, v in slot_t.items()},
        dialogue_of=np.array(dia, dtype=np.int64), is_final=np.array(fin, dtype=bool))


def _flat_forward(fw: ModelForward, flat: FlatBatch):
    """Encode, step every dialogue in lockstep, and return head log-prob nodes."""
    tape = fw.tape
    utt_block = fw.encode_utterances(flat.sequences)
    wx, wh, b = fw.dialogue
    hidden = fw.hyper.dialogue_hidden
    state_h = tape.const(np.zeros((hidden, flat.alive[0])))
    state_c = tape.const(np.zeros((hidden, flat.alive[0])))
    h_blocks = []
    cursor = 0
    for t, n_alive in enumerate(flat.alive):
        if n_alive < state_h.value.shape[1]:
            state_h = nn.slice_cols(tape, state_h, 0, n_alive)
            state_c = nn.slice_cols(tape, state_c, 0, n_alive)
        u = nn.gather_cols(tape, utt_block, flat.utt_col[cursor:cursor + n_alive])
        x = nn.concat_rows(tape, [u, tape.const(
            flat.prev_actions[:, cursor:cursor + n_alive])])
        state_h, state_c = nn.lstm_step_stacked(tape, wx, wh, b, x, state_h, state_c)
        h_blocks.append(state_h)
        cursor += n_alive
    h_all = nn.concat_cols(tape, h_blocks) if len(h_blocks) > 1 else h_blocks[0]
    slot_nodes = fw.slot_logprob_nodes(h_all)
    belief = fw.belief_node(slot_nodes)
    policy_in = nn.concat_rows(tape, [h_all, belief, tape.const(flat.kb_encodings)])
    action_lp = nn.log_softmax(tape, fw._mlp(fw.policy, policy_in))
    return slot_nodes, action_lp


def _flat_loss(fw: ModelForward, flat: FlatBatch, n_dialogues: int,
               hyper: Hyperparameters, ontology: SlotOntology):
    """Mean over dialogues of the per-dialogue turn-summed interpolated CE."""
    tape = fw.tape
    slot_nodes, action_lp = _flat_forward(fw, flat)
    n = flat.action_targets.shape[0]
    loss = nn.nll_cols(tape, action_lp, flat.action_targets,
                       np.full(n, hyper.action_loss_weight))
    for idx, slot in enumerate(ontology.slots):
        piece = nn.nll_cols(tape, slot_nodes[slot], flat.slot_targets[slot],
                            np.full(n, hyper.slot_weight(idx)))
        loss = nn.add(tape, loss, piece)
    return nn.scale(tape, loss, 1.0 / n_dialogues)


def _batch_step(params: ParameterSet, batch: list[PreparedDialogue],
                hyper: Hyperparameters, ontology: SlotOntology, adam: AdamState,
                dropout_rng: np.random.Generator) -> float:
    """One Adam update on the mean per-dialogue loss of a minibatch."""
    tape = Tape()
    fw = ModelForward(tape, params, hyper, ontology, train=True,
                      dropout_rng=dropout_rng)
    loss = _flat_loss(fw, build_flat_batch(batch), len(batch), hyper, ontology)
    grads = tape.backward(loss)
    clip_global_norm(grads, hyper.grad_clip_norm)
    adam_step(params, grads, adam)
    return float(loss.value)


@dataclass
class SupervisedResult:
    params: ParameterSet            # best-dev parameters
    final_params: ParameterSet      # parameters at the last epoch (for resuming)
    vocab: Vocabulary
    history: TrainingHistory
    adam: AdamState
    best_epoch: int
    best_joint: float
    epochs_run: int
    rng_streams: dict = field(default_factory=dict)  # live generators, for checkpointing


def train_supervised(train_episodes: list[Episode], dev_episodes: list[Episode],
                     hyper: Hyperparameters, ontology: SlotOntology,
                     vocab: Vocabulary | None = None,
                     params: ParameterSet | None = None,
                     adam: AdamState | None = None,
                     start_epoch: int = 0,
                     rng_states: dict | None = None,
                     history: TrainingHistory | None = None,
                     best: tuple[ParameterSet, float, int] | None = None,
                     log=None) -> SupervisedResult:
    """Mini-batch Adam on the interpolated tracking + action loss.

    Dialogues are fully unrolled (length is capped by max_turns); dev joint
    accuracy is evaluated every epoch and the best-dev snapshot is returned.
    Passing the optional state arguments resumes a run exactly where a
    checkpoint left it.
    """
    if vocab is None:
        vocab = build_vocab((t.user_text for e in train_episodes for t in e.turns),
                            min_count=hyper.min_count)
    if params is None:
        params = init_parameters(hyper, ontology, vocab,
                                 stream_rng(hyper.seed, STREAM_INIT))
    if adam is None:
        adam = AdamState(learning_rate=hyper.learning_rate)
    from .seeding import restore_rng
    if rng_states is not None:
        shuffle_rng = restore_rng(rng_states["shuffle"])
        dropout_rng = restore_rng(rng_states["dropout"])
    else:
        shuffle_rng = stream_rng(hyper.seed, STREAM_SHUFFLE)
        dropout_rng = stream_rng(hyper.seed, STREAM_DROPOUT)
    history = history if history is not None else TrainingHistory()

    prepared = prepare_corpus(train_episodes, ontology, vocab)
    best_params, best_joint, best_epoch = best if best is not None else (params.copy(), -1.0, -1)

    epoch = start_epoch
    for epoch in range(start_epoch, hyper.epochs):
        order = shuffle_rng.permutation(len(prepared))
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, len(order), hyper.batch_size):
            batch = [prepared[j] for j in order[lo:lo + hyper.batch_size]]
            epoch_loss += _batch_step(params, batch, hyper, ontology, adam, dropout_rng)
            n_batches += 1
        report = evaluate_state_tracking(params, dev_episodes, hyper, ontology, vocab)
        record = {
            "phase": "sl", "epoch": epoch, "train_loss": epoch_loss / max(1, n_batches),
            "dev_joint": report.joint_all, "dev_joint_final": report.joint_final,
            "dev_action_acc": report.action_accuracy,
        }
        history.append(record)
        if log:
            log(f"epoch {epoch}: loss {record['train_loss']:.4f} "
                f"dev joint {report.joint_all:.4f} action {report.action_accuracy:.4f}")
        if report.joint_all > best_joint:
            best_joint = report.joint_all
            best_params = params.copy()
            best_epoch = epoch
        elif epoch - best_epoch >= hyper.patience:
            break
    return SupervisedResult(params=best_params, final_params=params, vocab=vocab,
                            history=history, adam=adam, best_epoch=best_epoch,
                            best_joint=best_joint, epochs_run=epoch + 1,
                            rng_streams={"shuffle": shuffle_rng,
                                         "dropout": dropout_rng})


# ---------------------------------------------------------------------------
# corpus evaluation


@dataclass
class TrackingReport:
    slot_accuracy: dict[str, float]        # all turns
    joint_all: float
    slot_accuracy_final: dict[str, float]  # dialogue-final turns
    joint_final: float
    action_accuracy: float
    turns: int
    dialogues: int

    def summary(self) -> str:
        slots = " ".join(f"{s}={v:.4f}" for s, v in self.slot_accuracy.items())
        return (f"joint={self.joint_all:.4f} joint_final={self.joint_final:.4f} "
                f"action={self.action_accuracy:.4f} [{slots}]")


def evaluate_state_tracking(params: ParameterSet, episodes: list[Episode],
                            hyper: Hyperparameters, ontology: SlotOntology,
                            vocab: Vocabulary, chunk: int = 32) -> TrackingReport:
    """Per-slot and joint goal accuracy, over all turns and at final turns."""
    slot_hits = {s: 0 for s in ontology.slots}
    slot_hits_final = {s: 0 for s in ontology.slots}
    joint_hits = 0
    joint_hits_final = 0
    action_hits = 0
    total_turns = 0
    prepared = prepare_corpus(episodes, ontology, vocab)
    for lo in range(0, len(prepared), chunk):
        flat = build_flat_batch(prepared[lo:lo + chunk])
        fw = ModelForward(Tape(record=False), params, hyper, ontology, train=False)
        slot_nodes, action_lp = _flat_forward(fw, flat)
        n = flat.action_targets.shape[0]
        total_turns += n
        correct = np.ones(n, dtype=bool)
        for slot in ontology.slots:
            hits = np.argmax(slot_nodes[slot].value, axis=0) == flat.slot_targets[slot]
            slot_hits[slot] += int(hits.sum())
            slot_hits_final[slot] += int(hits[flat.is_final].sum())
            correct &= hits
        joint_hits += int(correct.sum())
        joint_hits_final += int(correct[flat.is_final].sum())
        action_hits += int((np.argmax(action_lp.value, axis=0)
                            == flat.action_targets).sum())
    n_ep = max(1, len(episodes))
    total = max(1, total_turns)
    return TrackingReport(
        slot_accuracy={s: slot_hits[s] / total for s in ontology.slots},
        joint_all=joint_hits / total,
        slot_accuracy_final={s: slot_hits_final[s] / n_ep for s in ontology.slots},
        joint_final=joint_hits_final / n_ep,
        action_accuracy=action_hits / total,
        turns=total_turns, dialogues=len(episodes))


# ---------------------------------------------------------------------------
# reinforcement


def compute_returns(rewards: list[float], total_return: bool = False) -> np.ndarray:
    """Undiscounted reward-to-go R_k = sum_{j>=k} r_j (or the episode total)."""
    arr = np.asarray(rewards, dtype=float)
    if total_return:
        return np.full_like(arr, arr.sum())
    return np.cumsum(arr[::-1])[::-1].copy()


class NeuralSessionAgent:
    """Adapts an AgentSession to the episode runner, collecting log-prob nodes."""

    def __init__(self, session: AgentSession):
        self.session = session
        self.logprob_nodes = []

    def act(self, user_text: str, user_act):
        del user_act  # the neural agent only reads surface text
        res = self.session.agent_turn(user_text)
        if res.logprob_node is not None:
            self.logprob_nodes.append(res.logprob_node)
        final = {d.slot: d.argmax_value(self.session.ontology) for d in res.dists}
        return (res.action, res.realized_action, res.offer, res.kb_result, final,
                res.logprob)


@dataclass
class EvalReport:
    success_rate: float
    avg_turns: float | None         # successful dialogues only; None when none succeed
    avg_return: float
    episodes: int


def run_neural_episode(params: ParameterSet, hyper: Hyperparameters,
                       ontology: SlotOntology, vocab: Vocabulary, kb: KnowledgeBase,
                       library: TemplateLibrary, template_set: str, mode: str,
                       rng: np.random.Generator, tape: Tape | None = None,
                       episode_id: str = "ep") -> tuple[Episode, list]:
    goal = sample_goal(ontology, kb, rng, mode="satisfiable")
    session = AgentSession(params, hyper, ontology, vocab, kb, library, mode=mode,
                           rng=rng, tape=tape)
    agent = NeuralSessionAgent(session)
    user_set = library.user_set(template_set)
    episode = run_episode(
        agent, goal, kb, ontology,
        realize_user=lambda act: realize_user_act(act, goal, user_set, rng,
                                                  canonical_set=library.user_train),
        rng=rng, hyper=hyper, episode_id=episode_id)
    return episode, agent.logprob_nodes


def evaluate_interactive(params: ParameterSet, hyper: Hyperparameters,
                         ontology: SlotOntology, vocab: Vocabulary,
                         kb: KnowledgeBase, library: TemplateLibrary,
                         n_episodes: int, seed: int,
                         template_set: str = "extended") -> EvalReport:
    """Greedy-policy dialogue simulations; turns are averaged over successes only."""
    if n_episodes < 1:
        raise ConfigurationError("evaluation needs at least one episode")
    successes = 0
    success_turns = 0
    total_return = 0.0
    for i in range(n_episodes):
        rng = episode_rng(seed, i)
        episode, _ = run_neural_episode(params, hyper, ontology, vocab, kb, library,
                                        template_set, "greedy", rng,
                                        episode_id=f"eval{i:05d}")
        total_return += episode.total_reward
        if episode.success:
            successes += 1
            success_turns += episode.num_turns
    return EvalReport(
        success_rate=successes / n_episodes,
        avg_turns=(success_turns / successes) if successes else None,
        avg_return=total_return / n_episodes,
        episodes=n_episodes)


def train_reinforce(start_params: ParameterSet, hyper: Hyperparameters,
                    ontology: SlotOntology, vocab: Vocabulary, kb: KnowledgeBase,
                    library: TemplateLibrary, mode: str, episodes: int, seed: int,
                    template_set: str = "extended", eval_seed: int | None = None,
                    log=None) -> tuple[ParameterSet, TrainingHistory]:
    """REINFORCE on top of a supervised checkpoint.

    ``mode`` is ``end_to_end`` (all groups trainable) or ``policy_only``
    (everything but the policy network frozen). One Adam step per episode;
    a fresh optimizer state is used for the new objective.
    """
    if mode not in ("end_to_end", "policy_only"):
        raise ConfigurationError(f"unknown RL mode {mode!r}")
    params = start_params.copy()
    if mode == "policy_only":
        params.freeze_all_except(POLICY_GROUP)
    else:
        for group in params.groups:
            params.set_trainable(group, True)
    adam = AdamState(learning_rate=hyper.rl_learning_rate)
    history = TrainingHistory()
    eval_seed = eval_seed if eval_seed is not None else seed + 999_983

    def eval_point(after: int) -> None:
        report = evaluate_interactive(params, hyper, ontology, vocab, kb, library,
                                      hyper.eval_episodes, eval_seed,
                                      template_set=template_set)
        history.append({
            "episodes": after, "success_rate": report.success_rate,
            "avg_turns": report.avg_turns, "avg_return": report.avg_return,
            "mode": mode,
        })
        if log:
            turns = "-" if report.avg_turns is None else f"{report.avg_turns:.2f}"
            log(f"[{mode}] episodes {after}: success {report.success_rate:.3f} "
                f"turns {turns} return {report.avg_return:.2f}")

    # turn-indexed moving-average baseline (optional; off for fidelity to the
    # plain likelihood-ratio estimator)
    baseline = np.zeros(hyper.max_turns)
    baseline_seen = np.zeros(hyper.max_turns, dtype=bool)

    for i in range(episodes):
        rng = episode_rng(seed, i)
        tape = Tape()
        episode, logprob_nodes = run_neural_episode(
            params, hyper, ontology, vocab, kb, library, template_set, "sample",
            rng, tape=tape, episode_id=f"rl{i:06d}")
        if not logprob_nodes:
            continue
        returns = compute_returns([t.reward for t in episode.turns],
                                  total_return=hyper.rl_total_return)
        weights = returns.copy()
        if hyper.rl_baseline:
            ks = np.arange(len(returns))
            fresh = ~baseline_seen[ks]
            baseline[ks[fresh]] = returns[fresh]
            baseline_seen[ks] = True
            weights = returns - baseline[ks]
            baseline[ks] = (hyper.rl_baseline_decay * baseline[ks]
                            + (1.0 - hyper.rl_baseline_decay) * returns)
        loss = None
        for node, weight in zip(logprob_nodes, weights):
            piece = nn.scale(tape, node, -float(weight))
            loss = piece if loss is None else nn.add(tape, loss, piece)
        grads = tape.backward(loss)
        clip_global_norm(grads, hyper.grad_clip_norm)
        adam_step(params, grads, adam)
        if (i + 1) % hyper.eval_interval == 0:
            eval_point(i + 1)
    if not history.records or history.records[-1]["episodes"] != episodes:
        eval_point(episodes)
    return params, history


# ---------------------------------------------------------------------------
# learning curves


CURVE_HEADER = "episodes,success_rate,avg_turns,avg_return,mode"


def emit_learning_curves(runs: list[tuple[str, TrainingHistory]], path: str,
                         plot_path: str | None = None) -> None:
    """Write the overlayed curve table (and optionally a rendered figure)."""
    if not runs or all(not h.records for _, h in runs):
        raise ContractError("no history records to emit")
    lines = [CURVE_HEADER]
    for label, hist in runs:
        for rec in hist.records:
            if "success_rate" not in rec:
                continue
            turns = rec.get("avg_turns")
            lines.append(",".join([
                str(rec["episodes"]), f"{rec['success_rate']:.6f}",
                "" if turns is None else f"{turns:.6f}",
                f"{rec.get('avg_return', float('nan')):.6f}", label,
            ]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if plot_path:
        _render_curves(runs, plot_path)


def _render_curves(runs, plot_path: str) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return  # the CSV table is the contract; the figure is best-effort
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    for label, hist in runs:
        xs = [r["episodes"] for r in hist.records if "success_rate" in r]
        sr = [r["success_rate"] for r in hist.records if "success_rate" in r]
        if len(xs) == 1:  # constant baseline reference
            ax1.axhline(sr[0], linestyle="--", label=label)
        else:
            ax1.plot(xs, sr, label=label)
        turn_pts = [(r["episodes"], r["avg_turns"]) for r in hist.records
                    if r.get("avg_turns") is not None]
        if len(turn_pts) == 1:
            ax2.axhline(turn_pts[0][1], linestyle="--", label=label)
        elif turn_pts:
            ax2.plot(*zip(*turn_pts), label=label)
    ax1.set_xlabel("episodes")
    ax1.set_ylabel("task success rate")
    ax2.set_xlabel("episodes")
    ax2.set_ylabel("avg turns (successful)")
    ax1.legend()
    ax2.legend()
    fig.tight_layout()
    fig.savefig(plot_path, dpi=120)
    plt.close(fig)
