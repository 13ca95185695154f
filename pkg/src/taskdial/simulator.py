"""Rule-based user simulator, rule-based reference agent, and episode running.

The simulator is truthful and agenda-driven: it answers requests with goal
values (optionally volunteering one extra slot), accepts an offer exactly when
the offered entity matches its goal and covers the ticket count, restates all
constraints given so far after a first no-match report, and gives up on a
second one. The rule agent is the deterministic policy used only to generate
supervised corpora.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import Hyperparameters, RewardConfig
from .errors import ContractError, DataError, SamplingError
from .kb import (
    EntityRecord,
    KBQuery,
    KBResult,
    KnowledgeBase,
    execute_query,
    pick_offer_entity,
)
from .seeding import episode_rng
from .ontology import (
    ACT_CONFIRM,
    ACT_GOODBYE,
    ACT_GREET,
    ACT_NO_MATCH,
    ACT_OFFER,
    ACT_REQUEST,
    NONE_VALUE,
    SlotOntology,
    SystemAction,
)

CORPUS_VERSION = 1


@dataclass(frozen=True)
class UserGoal:
    """One concrete value per ontology slot."""

    values: dict[str, str]

    def ticket_count(self, ontology: SlotOntology) -> int:
        if ontology.count_slot is None:
            return 1
        return int(self.values[ontology.count_slot])


@dataclass(frozen=True)
class UserAct:
    act: str                          # inform | affirm | deny | bye
    slots: tuple[str, ...] = ()
    values: tuple[str, ...] = ()      # aligned with slots; always the goal values
    canonical: bool = False           # restatements are enunciated in plain phrasing


@dataclass
class SimulatorState:
    goal: UserGoal
    informed: set[str] = field(default_factory=set)
    offer_pending: bool = False
    accepted: bool = False
    done: bool = False                # user said bye; only bye follows
    no_match_retries: int = 0         # patience spent on restating constraints
    turns: int = 0


@dataclass
class EpisodeTurn:
    user_text: str
    user_act: UserAct | None          # None on the opening (empty-input) turn
    labels: dict[str, str]            # cumulative truthful slot labels
    action_id: int
    reward: float
    kb_count: int
    kb_available: bool
    action_logprob: float | None = None


@dataclass
class Episode:
    episode_id: str
    goal: UserGoal
    turns: list[EpisodeTurn]
    success: bool
    offer_accepted: bool

    @property
    def total_reward(self) -> float:
        return sum(t.reward for t in self.turns)

    @property
    def num_turns(self) -> int:
        return len(self.turns)


def sample_goal(ontology: SlotOntology, kb: KnowledgeBase, rng: np.random.Generator,
                mode: str = "satisfiable") -> UserGoal:
    """Draw a user goal; satisfiable mode derives it from an actual KB entity."""
    if mode == "satisfiable":
        pool = [r for r in kb if r.tickets_available >= 1]
        if not pool:
            raise SamplingError("satisfiable goal sampling needs an available KB entity")
        row = pool[int(rng.integers(len(pool)))]
        values = dict(row.values)
        if ontology.count_slot is not None:
            cap = min(4, row.tickets_available)
            values[ontology.count_slot] = str(int(rng.integers(1, cap + 1)))
        return UserGoal(values=values)
    if mode == "any":
        values = {slot: str(rng.choice(ontology.concrete_values(slot)))
                  for slot in ontology.slots}
        return UserGoal(values=values)
    raise ContractError(f"unknown goal sampling mode {mode!r}")


def goal_is_satisfiable(goal: UserGoal, kb: KnowledgeBase, ontology: SlotOntology) -> bool:
    need = goal.ticket_count(ontology)
    return any(all(row.values[s] == goal.values[s] for s in ontology.entity_slots)
               and row.tickets_available >= need for row in kb)


def _entity_matches_goal(entity: EntityRecord, goal: UserGoal,
                         ontology: SlotOntology) -> bool:
    return (all(entity.values[s] == goal.values[s] for s in ontology.entity_slots)
            and entity.tickets_available >= goal.ticket_count(ontology))


def user_policy_step(state: SimulatorState, sys_action: SystemAction,
                     rng: np.random.Generator, ontology: SlotOntology,
                     p_extra: float = 0.3,
                     offered_entity: EntityRecord | None = None) -> UserAct:
    """Agenda rules; informed values always equal goal values (truthful user)."""
    if state.done:
        return UserAct("bye")

    def uninformed() -> list[str]:
        return [s for s in ontology.slots if s not in state.informed]

    def inform(slots: tuple[str, ...]) -> UserAct:
        state.informed.update(slots)
        return UserAct("inform", slots, tuple(state.goal.values[s] for s in slots))

    act = sys_action.act
    if act == ACT_REQUEST:
        repeat = sys_action.slot in state.informed
        slots = [sys_action.slot]
        extra_pool = [s for s in uninformed() if s != sys_action.slot]
        if extra_pool and rng.random() < p_extra:
            slots.append(extra_pool[int(rng.integers(len(extra_pool)))])
        state.informed.update(slots)
        # users repeat an already-given answer in plain, canonical phrasing
        return UserAct("inform", tuple(slots),
                       tuple(state.goal.values[s] for s in slots),
                       canonical=repeat)
    if act == ACT_OFFER:
        state.offer_pending = False
        if offered_entity is not None and _entity_matches_goal(offered_entity, state.goal,
                                                               ontology):
            state.accepted = True
            return UserAct("affirm")
        return UserAct("deny")
    if act == ACT_CONFIRM:
        if state.accepted:
            state.done = True
            return UserAct("bye")
        return UserAct("deny")
    if act == ACT_NO_MATCH:
        # a patient user restates one already-given constraint, plainly worded;
        # after two dead ends (or one before anything was said) they give up
        if state.no_match_retries < 2 and state.informed:
            state.no_match_retries += 1
            informed = [s for s in ontology.slots if s in state.informed]
            slot = informed[int(rng.integers(len(informed)))]
            return UserAct("inform", (slot,), (state.goal.values[slot],),
                           canonical=True)
        state.done = True
        return UserAct("bye")
    # greet and the catch-all act elicit one slot
    pool = uninformed()
    if pool:
        return inform((pool[int(rng.integers(len(pool)))],))
    return inform((ontology.slots[int(rng.integers(len(ontology.slots)))],))


@dataclass
class RuleAgentState:
    last_user_act: UserAct | None = None
    offered: bool = False


def rule_agent_step(tracked: dict[str, str], result: KBResult, turn_index: int,
                    ontology: SlotOntology, state: RuleAgentState) -> SystemAction:
    """Deterministic corpus-generation policy.

    greet at turn 0; request the first (ontology-order) unfilled slot; with all
    slots filled, offer when an available match exists, otherwise report no
    match; confirm after an affirm; goodbye after the user says bye.
    """
    last = state.last_user_act
    if last is not None and last.act == "bye":
        return SystemAction(ACT_GOODBYE)
    if last is not None and last.act == "affirm":
        return SystemAction(ACT_CONFIRM)
    if turn_index == 0:
        return SystemAction(ACT_GREET)
    for slot in ontology.slots:
        if slot not in tracked:
            return SystemAction(ACT_REQUEST, slot)
    if result.available:
        return SystemAction(ACT_OFFER)
    return SystemAction(ACT_NO_MATCH)


def judge_success(offer_accepted: bool, goal: UserGoal,
                  final_argmax: dict[str, str], ontology: SlotOntology) -> bool:
    """Success iff every slot's final estimate equals the goal and an offer was accepted."""
    tracked_ok = all(final_argmax.get(slot, NONE_VALUE) == goal.values[slot]
                     for slot in ontology.slots)
    return tracked_ok and offer_accepted


def compute_rewards(turns: int, success: bool, reward: RewardConfig) -> list[float]:
    """Per-turn penalties with the terminal bonus folded into the last turn."""
    rewards = [reward.step_penalty] * turns
    if turns:
        rewards[-1] += reward.success_reward if success else reward.failure_reward
    return rewards


def run_episode(agent, goal: UserGoal, kb: KnowledgeBase, ontology: SlotOntology,
                realize_user, rng: np.random.Generator, hyper: Hyperparameters,
                episode_id: str = "ep") -> Episode:
    """Alternate agent and simulator turns until goodbye or the turn cap.

    ``agent`` implements act(user_text, user_act) -> (SystemAction, realized
    SystemAction, offered entity, KBResult, final-argmax dict, logprob).
    ``realize_user`` maps a UserAct to surface text.
    """
    sim = SimulatorState(goal=goal)
    turns: list[EpisodeTurn] = []
    user_text, user_act = "", None
    final_argmax: dict[str, str] = {}
    offer_accepted = False
    while True:
        step = agent.act(user_text, user_act)
        (action, realized, offer, result, final_argmax, logprob) = step
        labels = {s: goal.values[s] if s in sim.informed else NONE_VALUE
                  for s in ontology.slots}
        turns.append(EpisodeTurn(
            user_text=user_text, user_act=user_act, labels=labels,
            action_id=ontology.action_id(action), reward=0.0,
            kb_count=result.count if result is not None else 0,
            kb_available=result.available if result is not None else False,
            action_logprob=logprob))
        if action.act == ACT_GOODBYE or len(turns) >= hyper.max_turns:
            break
        user_act = user_policy_step(sim, realized, rng, ontology,
                                    p_extra=hyper.p_extra, offered_entity=offer)
        if user_act.act == "affirm":
            offer_accepted = True
        user_text = realize_user(user_act)
    success = judge_success(offer_accepted, goal, final_argmax, ontology)
    for turn, r in zip(turns, compute_rewards(len(turns), success, hyper.reward)):
        turn.reward = r
    return Episode(episode_id=episode_id, goal=goal, turns=turns,
                   success=success, offer_accepted=offer_accepted)


class RuleAgent:
    """Corpus-generation agent: perfect symbolic tracking plus the rule policy."""

    def __init__(self, kb: KnowledgeBase, ontology: SlotOntology):
        self.kb = kb
        self.ontology = ontology
        self.tracked: dict[str, str] = {}
        self.state = RuleAgentState()
        self.turn_index = 0

    def act(self, user_text: str, user_act: UserAct | None):
        del user_text  # the rule agent reads the semantic act directly
        ontology = self.ontology
        if user_act is not None:
            self.state.last_user_act = user_act
            if user_act.act == "inform":
                for slot, value in zip(user_act.slots, user_act.values):
                    self.tracked[slot] = value
        count = self.tracked.get(ontology.count_slot) if ontology.count_slot else None
        requested = int(count) if count is not None else 1
        query = KBQuery(constraints={s: self.tracked[s] for s in ontology.entity_slots
                                     if s in self.tracked})
        result = execute_query(self.kb, query, requested)
        action = rule_agent_step(self.tracked, result, self.turn_index, ontology,
                                 self.state)
        offer = None
        realized = action
        if action.act == ACT_OFFER:
            offer = pick_offer_entity(result, self.kb)
            if offer is None:
                realized = SystemAction(ACT_NO_MATCH)
        self.turn_index += 1
        return action, realized, offer, result, dict(self.tracked), None


# -- corpus generation ---------------------------------------------------------


def generate_corpus(n: int, kb: KnowledgeBase, ontology: SlotOntology,
                    library, hyper: Hyperparameters, master_seed: int) -> list[Episode]:
    """Rule-agent vs simulator dialogues with per-turn supervision labels.

    A fraction of goals is drawn in "any" mode so the corpus contains
    inform_no_match behaviour; episode i depends only on (master_seed, i).
    """
    from .templates import realize_user_act

    if n < 1:
        raise ContractError("corpus size must be at least 1")
    train_set = library.user_train
    episodes = []
    for i in range(n):
        rng = episode_rng(master_seed, i)
        mode = "any" if rng.random() < hyper.unsat_fraction else "satisfiable"
        goal = sample_goal(ontology, kb, rng, mode=mode)
        agent = RuleAgent(kb, ontology)
        episode = run_episode(
            agent, goal, kb, ontology,
            realize_user=lambda act: realize_user_act(act, goal, train_set, rng,
                                                      canonical_set=train_set),
            rng=rng, hyper=hyper, episode_id=f"ep{i:05d}")
        episodes.append(episode)
    return episodes


def split_corpus(episodes: list[Episode]) -> tuple[list[Episode], list[Episode], list[Episode]]:
    """80/10/10 split by episode position."""
    n = len(episodes)
    n_train = (n * 8) // 10
    n_dev = n // 10
    return (episodes[:n_train], episodes[n_train:n_train + n_dev],
            episodes[n_train + n_dev:])


def episode_to_record(episode: Episode) -> dict:
    return {
        "v": CORPUS_VERSION,
        "id": episode.episode_id,
        "goal": episode.goal.values,
        "success": episode.success,
        "offer_accepted": episode.offer_accepted,
        "turns": [{
            "text": t.user_text,
            "act": (None if t.user_act is None else
                    {"act": t.user_act.act, "slots": list(t.user_act.slots),
                     "values": list(t.user_act.values)}),
            "labels": t.labels,
            "action": t.action_id,
            "reward": t.reward,
            "kb": [t.kb_count, int(t.kb_available)],
            "logprob": t.action_logprob,
        } for t in episode.turns],
    }


def episode_from_record(record: dict) -> Episode:
    if record.get("v") != CORPUS_VERSION:
        raise DataError(f"corpus record version {record.get('v')!r} unsupported")
    for key in ("id", "goal", "turns"):
        if key not in record:
            raise DataError(f"corpus record is missing field {key!r}")
    turns = []
    for t in record["turns"]:
        for key in ("labels", "action", "text"):
            if key not in t:
                raise DataError(f"corpus turn is missing field {key!r}")
        act = t.get("act")
        turns.append(EpisodeTurn(
            user_text=t["text"],
            user_act=(None if act is None else
                      UserAct(act["act"], tuple(act["slots"]), tuple(act["values"]))),
            labels=t["labels"], action_id=t["action"], reward=t.get("reward", 0.0),
            kb_count=t["kb"][0], kb_available=bool(t["kb"][1]),
            action_logprob=t.get("logprob")))
    return Episode(episode_id=record["id"], goal=UserGoal(values=record["goal"]),
                   turns=turns, success=record.get("success", False),
                   offer_accepted=record.get("offer_accepted", False))


def save_corpus(episodes: list[Episode], path: str) -> None:
    with open(path, "w") as fh:
        for episode in episodes:
            fh.write(json.dumps(episode_to_record(episode), sort_keys=True) + "\n")


def load_corpus(path: str) -> list[Episode]:
    episodes = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                episodes.append(episode_from_record(json.loads(line)))
    return episodes
