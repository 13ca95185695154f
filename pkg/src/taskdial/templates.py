"""Template NLG for both sides of the conversation.

The system side is deterministic (always the first template of an act) so
golden traces are stable. The user side samples uniformly from a template
set: ``train`` during corpus generation, ``extended`` (a strict superset with
unseen paraphrases) during RL and interactive evaluation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

from .errors import ConfigurationError, ContractError, LoadError
from .kb import EntityRecord, KBResult
from .ontology import (
    ACT_OFFER,
    ACT_CONFIRM,
    ACT_REQUEST,
    DONTCARE_VALUE,
    NONE_VALUE,
    SlotOntology,
    SystemAction,
)

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")

TEMPLATES_VERSION = 1


@dataclass(frozen=True)
class TemplateSet:
    set_id: str                       # "train" or "extended"
    templates: dict[str, tuple[str, ...]]

    def for_act(self, key: str) -> tuple[str, ...]:
        if key not in self.templates or not self.templates[key]:
            raise ContractError(f"no template for act {key!r} in set {self.set_id!r}")
        return self.templates[key]


@dataclass(frozen=True)
class TemplateLibrary:
    """System templates plus the train/extended user sets for one domain."""

    system: dict[str, tuple[str, ...]]
    user_train: TemplateSet
    user_extended: TemplateSet

    def user_set(self, set_id: str) -> TemplateSet:
        if set_id == "train":
            return self.user_train
        if set_id == "extended":
            return self.user_extended
        raise ConfigurationError(f"unknown template set {set_id!r}")


def load_template_library(text: str) -> TemplateLibrary:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LoadError(f"templates: invalid JSON ({exc})") from exc
    if data.get("version") != TEMPLATES_VERSION:
        raise LoadError(f"templates: unsupported version {data.get('version')!r}")
    train = {k: tuple(v) for k, v in data["user_train"].items()}
    extended = {k: train.get(k, ()) + tuple(v)
                for k, v in data["user_extended"].items()}
    for key in train:
        if key not in extended:
            extended[key] = train[key]
    return TemplateLibrary(
        system={k: tuple(v) for k, v in data["system"].items()},
        user_train=TemplateSet("train", train),
        user_extended=TemplateSet("extended", extended),
    )


def load_asset_templates(domain: str) -> TemplateLibrary:
    ref = resources.files("taskdial.assets").joinpath(domain).joinpath("templates.json")
    return load_template_library(ref.read_text())


def _fill(template: str, values: dict[str, str]) -> str:
    text = template
    for name, value in values.items():
        text = text.replace("{" + name + "}", value)
    leftover = _PLACEHOLDER_RE.search(text)
    if leftover:
        raise ContractError(f"unfilled placeholder {leftover.group(0)!r} in {template!r}")
    return text


def requested_count_from(dists, ontology: SlotOntology) -> int:
    """Ticket count implied by the tracker: concrete argmax of the count slot, else 1."""
    if ontology.count_slot is None:
        return 1
    for dist in dists:
        if dist.slot == ontology.count_slot:
            value = dist.argmax_value(ontology)
            if value not in (NONE_VALUE, DONTCARE_VALUE):
                try:
                    return max(1, int(value))
                except ValueError:
                    return 1
    return 1


def realize_system_action(action: SystemAction, dists, offer: EntityRecord | None,
                          result: KBResult | None, library: TemplateLibrary,
                          ontology: SlotOntology) -> str:
    """Deterministic system NLG: first template of the act, placeholders filled."""
    key = f"{ACT_REQUEST}_{action.slot}" if action.act == ACT_REQUEST else action.act
    templates = library.system.get(key)
    if not templates:
        raise ContractError(f"no system template for act {key!r}")
    values: dict[str, str] = {}
    if action.act in (ACT_OFFER, ACT_CONFIRM):
        if offer is None:
            raise ContractError(f"{action.act} requires an offered entity; "
                                "route to inform_no_match instead")
        values.update(offer.values)
        if ontology.count_slot is not None:
            values[ontology.count_slot] = str(requested_count_from(dists, ontology))
    return _fill(templates[0], values)


def realize_user_act(act, goal, template_set: TemplateSet, rng,
                     canonical_set: TemplateSet | None = None) -> str:
    """Sample one surface form for a user act and fill it with goal values.

    Multi-slot informs realize the first slot's full template and join the
    rest with short fragments. Acts flagged canonical draw from
    ``canonical_set`` (the train set) when provided: a user repeating
    themselves falls back to plain phrasing.
    """
    if getattr(act, "canonical", False) and canonical_set is not None:
        template_set = canonical_set
    values = dict(goal.values)
    if act.act == "inform":
        if not act.slots:
            raise ContractError("inform act carries no slots")
        options = template_set.for_act(f"inform_{act.slots[0]}")
        parts = [options[int(rng.integers(len(options)))]]
        for slot in act.slots[1:]:
            extras = template_set.for_act(f"extra_{slot}")
            parts.append(extras[int(rng.integers(len(extras)))])
        return _fill(" and ".join(parts), values)
    options = template_set.for_act(act.act)
    return _fill(options[int(rng.integers(len(options)))], values)
