"""Knowledge base: storage, symbolic query formulation, execution, encoding.

Queries are exact-match conjunctions built from tracker argmaxes. The result
summary fed to the policy is a 5-dim feature: match-count bucket one-hot over
{0, 1, 2, 3+} concatenated with an availability bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LoadError, SamplingError
from .ontology import DONTCARE_VALUE, NONE_VALUE, SlotOntology

KB_ENCODING_DIM = 5


@dataclass(frozen=True)
class EntityRecord:
    entity_id: str
    values: dict[str, str]           # one value per entity slot
    tickets_available: int


@dataclass(frozen=True)
class KBQuery:
    """Slot -> required value, concrete values only (sentinels never appear)."""

    constraints: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class KBResult:
    entity_ids: tuple[str, ...]      # KB insertion order
    requested_count: int
    available: bool                  # some match has tickets_available >= requested_count

    @property
    def count(self) -> int:
        return len(self.entity_ids)


class KnowledgeBase:
    """Immutable after load; iteration order equals file order."""

    def __init__(self, rows: list[EntityRecord]):
        self.rows = rows
        self.by_id = {r.entity_id: r for r in rows}

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def save(self, path: str, ontology: SlotOntology) -> None:
        cols = list(ontology.entity_slots)
        with open(path, "w") as fh:
            fh.write("\t".join(["id"] + cols + ["tickets_available"]) + "\n")
            for row in self.rows:
                fh.write("\t".join([row.entity_id] + [row.values[c] for c in cols]
                                   + [str(row.tickets_available)]) + "\n")


def load_kb(path: str, ontology: SlotOntology) -> KnowledgeBase:
    """Parse a tab-separated KB file, validating every value against the ontology."""
    expected = ["id"] + list(ontology.entity_slots) + ["tickets_available"]
    rows: list[EntityRecord] = []
    seen_ids: set[str] = set()
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        return KnowledgeBase([])
    header = lines[0].split("\t")
    if header != expected:
        raise LoadError(f"{path}:1: header {header} does not match expected columns {expected}")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != len(expected):
            raise LoadError(f"{path}:{lineno}: expected {len(expected)} columns, "
                            f"got {len(parts)}")
        entity_id = parts[0]
        if entity_id in seen_ids:
            raise LoadError(f"{path}:{lineno}: duplicate entity id {entity_id!r}")
        seen_ids.add(entity_id)
        values = {}
        for slot, raw in zip(ontology.entity_slots, parts[1:-1]):
            if raw not in ontology.concrete_values(slot):
                raise LoadError(f"{path}:{lineno}: value {raw!r} is not in the "
                                f"ontology for slot {slot!r}")
            values[slot] = raw
        try:
            tickets = int(parts[-1])
        except ValueError:
            raise LoadError(f"{path}:{lineno}: tickets_available {parts[-1]!r} "
                            "is not an integer") from None
        if tickets < 0:
            raise LoadError(f"{path}:{lineno}: tickets_available must be non-negative")
        rows.append(EntityRecord(entity_id, values, tickets))
    return KnowledgeBase(rows)


def generate_kb(ontology: SlotOntology, n: int, rng: np.random.Generator) -> KnowledgeBase:
    """Seeded synthetic KB; ~10% of rows are sold out, the rest hold 1-5 tickets."""
    rows = []
    for i in range(n):
        values = {slot: str(rng.choice(ontology.concrete_values(slot)))
                  for slot in ontology.entity_slots}
        tickets = 0 if rng.random() < 0.1 else int(rng.integers(1, 6))
        rows.append(EntityRecord(f"e{i:04d}", values, tickets))
    if n > 0 and all(r.tickets_available == 0 for r in rows):
        rows[0] = EntityRecord(rows[0].entity_id, rows[0].values, 1)
    return KnowledgeBase(rows)


def formulate_query(dists, requested_count: int, ontology: SlotOntology) -> KBQuery:
    """Constrain each entity slot to its argmax candidate when that is concrete.

    NONE and DONTCARE argmaxes leave the slot unconstrained; the count slot
    never becomes a constraint (it turns into ``requested_count`` upstream).
    """
    constraints: dict[str, str] = {}
    for dist in dists:
        if dist.slot == ontology.count_slot:
            continue
        value = dist.argmax_value(ontology)
        if value not in (NONE_VALUE, DONTCARE_VALUE):
            constraints[dist.slot] = value
    return KBQuery(constraints=constraints)


def execute_query(kb: KnowledgeBase, query: KBQuery, requested_count: int) -> KBResult:
    """Exact-match conjunction over constrained slots, in KB order."""
    ids = []
    available = False
    for row in kb:
        if all(row.values.get(slot) == value for slot, value in query.constraints.items()):
            ids.append(row.entity_id)
            if row.tickets_available >= requested_count:
                available = True
    return KBResult(entity_ids=tuple(ids), requested_count=requested_count,
                    available=available)


def encode_kb_result(result: KBResult) -> np.ndarray:
    """Bucketed count one-hot {0,1,2,3+} plus the availability bit."""
    enc = np.zeros(KB_ENCODING_DIM)
    enc[min(result.count, 3)] = 1.0
    enc[4] = 1.0 if result.available else 0.0
    return enc


def pick_offer_entity(result: KBResult, kb: KnowledgeBase) -> EntityRecord | None:
    """First matched entity (KB order) that can cover the requested count.

    Stand-in for an external recommender; deterministic by construction.
    """
    for entity_id in result.entity_ids:
        row = kb.by_id[entity_id]
        if row.tickets_available >= result.requested_count:
            return row
    return None


def sample_entity(kb: KnowledgeBase, rng: np.random.Generator,
                  min_tickets: int = 1) -> EntityRecord:
    pool = [r for r in kb if r.tickets_available >= min_tickets]
    if not pool:
        raise SamplingError("no KB entity with sufficient availability")
    return pool[int(rng.integers(len(pool)))]
