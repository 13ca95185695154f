"""Reader for the public DSTC2 corpus layout (restaurant search domain).

Walks a directory tree for session folders holding ``log.json`` (system side,
with ASR hypotheses for the user response) and ``label.json`` (transcriptions
and cumulative goal labels), and maps each call onto the internal episode
schema: internal turn k pairs the user input of source turn k-1 with the
system acts of source turn k, so the opening machine turn lines up with the
empty-input greeting convention. Goal slots are area / food / pricerange.

System acts outside the catalog bucket to the catch-all ``other`` action; it
only feeds the action-prediction loss, state-tracking metrics are unaffected.
No KB results ship with the corpus, so the result encoding defaults to the
zero-match bucket.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .errors import LoadError
from .ontology import (
    ACT_GOODBYE,
    ACT_GREET,
    ACT_NO_MATCH,
    ACT_OFFER,
    ACT_OTHER,
    ACT_REQUEST,
    DONTCARE_VALUE,
    NONE_VALUE,
    SlotOntology,
    SystemAction,
    make_ontology,
)
from .simulator import Episode, EpisodeTurn, UserGoal

DSTC2_SLOTS = ("area", "food", "pricerange")

_EXPECTED_LAYOUT = (
    "expected DSTC2 layout: <root>/**/<session>/log.json + label.json, "
    "optionally <root>/ontology_dstc2.json (or scripts/config/ontology_dstc2.json)")


@dataclass
class DSTC2Corpus:
    episodes: list[Episode]
    ontology: SlotOntology
    transcript_fallbacks: int     # turns where no ASR hypothesis was present
    sessions: list[str]


def _find_sessions(root: str) -> list[str]:
    sessions = []
    for dirpath, _dirnames, filenames in os.walk(root):
        if "log.json" in filenames and "label.json" in filenames:
            sessions.append(dirpath)
    return sorted(sessions)


def _load_ontology(root: str, episodes_values: dict[str, set[str]]) -> SlotOntology:
    for candidate in (os.path.join(root, "ontology_dstc2.json"),
                      os.path.join(root, "scripts", "config", "ontology_dstc2.json")):
        if os.path.exists(candidate):
            with open(candidate) as fh:
                data = json.load(fh)
            informable = data.get("informable", {})
            values = {slot: tuple(sorted(v for v in informable.get(slot, [])
                                         if v != DONTCARE_VALUE))
                      for slot in DSTC2_SLOTS}
            return make_ontology(DSTC2_SLOTS, values)
    values = {slot: tuple(sorted(episodes_values[slot])) for slot in DSTC2_SLOTS}
    return make_ontology(DSTC2_SLOTS, values)


_ACT_PRIORITY = (ACT_GOODBYE, ACT_NO_MATCH, ACT_OFFER, ACT_REQUEST, ACT_GREET)


def _map_system_acts(dialog_acts: list[dict]) -> SystemAction:
    """Bucket a DSTC2 act list onto the catalog, most specific act first."""
    found: dict[str, SystemAction] = {}
    for entry in dialog_acts:
        act = entry.get("act", "")
        if act == "welcomemsg":
            found.setdefault(ACT_GREET, SystemAction(ACT_GREET))
        elif act == "bye":
            found.setdefault(ACT_GOODBYE, SystemAction(ACT_GOODBYE))
        elif act.startswith("canthelp"):
            found.setdefault(ACT_NO_MATCH, SystemAction(ACT_NO_MATCH))
        elif act in ("offer", "inform"):
            found.setdefault(ACT_OFFER, SystemAction(ACT_OFFER))
        elif act == "request":
            for slot_pair in entry.get("slots", []):
                slot = slot_pair[1] if len(slot_pair) > 1 else slot_pair[0]
                if slot in DSTC2_SLOTS:
                    found.setdefault(ACT_REQUEST, SystemAction(ACT_REQUEST, slot))
    for act in _ACT_PRIORITY:
        if act in found:
            return found[act]
    return SystemAction(ACT_OTHER)


def _user_text(log_turn: dict, label_turn: dict) -> tuple[str, bool]:
    """Top ASR hypothesis, falling back to the transcription when absent."""
    hyps = (log_turn.get("input", {}).get("live", {}) or {}).get("asr-hyps", [])
    if hyps and hyps[0].get("asr-hyp"):
        return hyps[0]["asr-hyp"], False
    return label_turn.get("transcription", ""), True


def load_dstc2(root: str) -> DSTC2Corpus:
    """Parse every session under ``root`` into internal episodes."""
    if not os.path.isdir(root):
        raise LoadError(f"{root}: not a directory; {_EXPECTED_LAYOUT}")
    sessions = _find_sessions(root)
    if not sessions:
        raise LoadError(f"{root}: no log.json/label.json pairs found; {_EXPECTED_LAYOUT}")

    raw_sessions = []
    observed: dict[str, set[str]] = {slot: set() for slot in DSTC2_SLOTS}
    fallbacks = 0
    for session_dir in sessions:
        try:
            with open(os.path.join(session_dir, "log.json")) as fh:
                log = json.load(fh)
            with open(os.path.join(session_dir, "label.json")) as fh:
                label = json.load(fh)
        except json.JSONDecodeError as exc:
            raise LoadError(f"{session_dir}: invalid JSON ({exc})") from exc
        log_turns = log.get("turns", [])
        label_turns = label.get("turns", [])
        if len(log_turns) != len(label_turns):
            raise LoadError(f"{session_dir}: log has {len(log_turns)} turns but "
                            f"label has {len(label_turns)}")
        for turn in label_turns:
            for slot, value in turn.get("goal-labels", {}).items():
                if slot in observed and value != DONTCARE_VALUE:
                    observed[slot].add(value)
        raw_sessions.append((session_dir, log, log_turns, label_turns))

    ontology = _load_ontology(root, observed)
    episodes = []
    for session_dir, log, log_turns, label_turns in raw_sessions:
        turns: list[EpisodeTurn] = []
        goal: dict[str, str] = {slot: NONE_VALUE for slot in DSTC2_SLOTS}
        for k, log_turn in enumerate(log_turns):
            if k == 0:
                text = ""
            else:
                text, fell_back = _user_text(log_turns[k - 1], label_turns[k - 1])
                if fell_back:
                    fallbacks += 1
            labels = {slot: NONE_VALUE for slot in DSTC2_SLOTS}
            if k > 0:
                for slot, value in label_turns[k - 1].get("goal-labels", {}).items():
                    if slot in labels:
                        labels[slot] = value
            action = _map_system_acts(log_turn.get("output", {}).get("dialog-acts", []))
            turns.append(EpisodeTurn(
                user_text=text, user_act=None, labels=labels,
                action_id=ontology.action_id(action), reward=0.0,
                kb_count=0, kb_available=False))
            goal.update({s: v for s, v in labels.items() if v != NONE_VALUE})
        episodes.append(Episode(
            episode_id=log.get("session-id", os.path.basename(session_dir)),
            goal=UserGoal(values=goal), turns=turns, success=False,
            offer_accepted=False))
    return DSTC2Corpus(episodes=episodes, ontology=ontology,
                       transcript_fallbacks=fallbacks,
                       sessions=[os.path.basename(s) for s in sessions])
