"""Slot ontology and the system-action catalog.

One ontology file drives the agent, the simulator, and evaluation. Every
slot's candidate list starts with the NONE sentinel (goal not yet expressed)
followed by DONTCARE; the action catalog contains exactly one terminal action
(goodbye) plus a catch-all `other` used when mapping external corpora.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

from .errors import ConfigurationError, ContractError, LoadError

NONE_VALUE = "none"
DONTCARE_VALUE = "dontcare"

ONTOLOGY_VERSION = 1

ACT_GREET = "greet"
ACT_REQUEST = "request"
ACT_OFFER = "offer"
ACT_NO_MATCH = "inform_no_match"
ACT_CONFIRM = "confirm_booking"
ACT_GOODBYE = "goodbye"
ACT_OTHER = "other"


@dataclass(frozen=True)
class SystemAction:
    """A discrete agent act: type plus optional slot argument."""

    act: str
    slot: str | None = None

    @property
    def name(self) -> str:
        return f"{self.act}_{self.slot}" if self.slot else self.act

    @property
    def terminal(self) -> bool:
        return self.act == ACT_GOODBYE


@dataclass(frozen=True)
class SlotOntology:
    slots: tuple[str, ...]
    candidates: dict[str, tuple[str, ...]]
    actions: tuple[SystemAction, ...]
    count_slot: str | None = None    # the "how many" slot, excluded from KB columns
    version: int = ONTOLOGY_VERSION

    def __post_init__(self):
        if len(set(self.slots)) != len(self.slots):
            raise ConfigurationError("slot names must be unique")
        for slot in self.slots:
            cands = self.candidates.get(slot)
            if not cands or cands[0] != NONE_VALUE:
                raise ConfigurationError(f"slot {slot!r} must list {NONE_VALUE!r} at index 0")
            if DONTCARE_VALUE not in cands:
                raise ConfigurationError(f"slot {slot!r} is missing {DONTCARE_VALUE!r}")
        if sum(1 for a in self.actions if a.terminal) != 1:
            raise ConfigurationError("action catalog needs exactly one terminal action")

    # -- slots ---------------------------------------------------------------

    @property
    def entity_slots(self) -> tuple[str, ...]:
        return tuple(s for s in self.slots if s != self.count_slot)

    def slot_index(self, slot: str) -> int:
        return self.slots.index(slot)

    def candidate_index(self, slot: str, value: str) -> int:
        try:
            return self.candidates[slot].index(value)
        except ValueError:
            raise ContractError(f"value {value!r} is not a candidate of slot {slot!r}") from None

    def concrete_values(self, slot: str) -> tuple[str, ...]:
        return tuple(v for v in self.candidates[slot] if v not in (NONE_VALUE, DONTCARE_VALUE))

    @property
    def belief_dim(self) -> int:
        return sum(len(self.candidates[s]) for s in self.slots)

    # -- actions -------------------------------------------------------------

    def action_id(self, action: SystemAction) -> int:
        try:
            return self.actions.index(action)
        except ValueError:
            raise ContractError(f"action {action.name!r} is not in the catalog") from None

    def action(self, action_id: int) -> SystemAction:
        if not (0 <= action_id < len(self.actions)):
            raise ContractError(f"action id {action_id} out of catalog range")
        return self.actions[action_id]

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    # -- io --------------------------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "version": self.version,
            "count_slot": self.count_slot,
            "slots": list(self.slots),
            "candidates": {s: list(self.candidates[s]) for s in self.slots},
            "actions": [{"act": a.act, "slot": a.slot} for a in self.actions],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_json(cls, text: str) -> "SlotOntology":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise LoadError(f"ontology: invalid JSON ({exc})") from exc
        if data.get("version") != ONTOLOGY_VERSION:
            raise LoadError(f"ontology: unsupported version {data.get('version')!r}")
        return cls(
            slots=tuple(data["slots"]),
            candidates={s: tuple(v) for s, v in data["candidates"].items()},
            actions=tuple(SystemAction(a["act"], a.get("slot")) for a in data["actions"]),
            count_slot=data.get("count_slot"),
        )

    @classmethod
    def load(cls, path: str) -> "SlotOntology":
        with open(path) as fh:
            return cls.from_json(fh.read())


def build_action_catalog(slots: tuple[str, ...]) -> tuple[SystemAction, ...]:
    """greet, request per slot, offer, no-match, confirm, goodbye, catch-all."""
    catalog = [SystemAction(ACT_GREET)]
    catalog.extend(SystemAction(ACT_REQUEST, slot) for slot in slots)
    catalog.extend([
        SystemAction(ACT_OFFER),
        SystemAction(ACT_NO_MATCH),
        SystemAction(ACT_CONFIRM),
        SystemAction(ACT_GOODBYE),
        SystemAction(ACT_OTHER),
    ])
    return tuple(catalog)


def make_ontology(slots: tuple[str, ...], values: dict[str, tuple[str, ...]],
                  count_slot: str | None = None) -> SlotOntology:
    """Assemble an ontology from concrete values, adding sentinels and the catalog."""
    candidates = {
        slot: (NONE_VALUE, DONTCARE_VALUE) + tuple(values[slot]) for slot in slots
    }
    return SlotOntology(slots=slots, candidates=candidates,
                        actions=build_action_catalog(slots), count_slot=count_slot)


def load_asset_ontology(domain: str) -> SlotOntology:
    ref = resources.files("taskdial.assets").joinpath(domain).joinpath("ontology.json")
    return SlotOntology.from_json(ref.read_text())


def movie_ontology() -> SlotOntology:
    return load_asset_ontology("movie")
