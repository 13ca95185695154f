"""Per-slot belief distributions produced by the tracker."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .ontology import SlotOntology


@dataclass
class SlotDistribution:
    """Categorical belief over one slot's candidate values (plus log-probs)."""

    slot: str
    probs: np.ndarray
    logprobs: np.ndarray

    def __post_init__(self):
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ContractError(f"slot {self.slot!r}: probabilities sum to "
                                f"{float(self.probs.sum())!r}, not 1")

    @property
    def argmax(self) -> int:
        # np.argmax already breaks ties by lowest index
        return int(np.argmax(self.probs))

    def argmax_value(self, ontology: SlotOntology) -> str:
        return ontology.candidates[self.slot][self.argmax]

    def top_values(self, ontology: SlotOntology, k: int = 3) -> list[tuple[str, float]]:
        order = np.argsort(-self.probs, kind="stable")[:k]
        cands = ontology.candidates[self.slot]
        return [(cands[i], float(self.probs[i])) for i in order]


def build_belief_vector(dists: list[SlotDistribution], ontology: SlotOntology) -> np.ndarray:
    """Concatenated log-probability vectors in ontology slot order."""
    if [d.slot for d in dists] != list(ontology.slots):
        raise ContractError(
            f"belief vector needs one distribution per slot in ontology order "
            f"{list(ontology.slots)}, got {[d.slot for d in dists]}")
    return np.concatenate([d.logprobs for d in dists])
