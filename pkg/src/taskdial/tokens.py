"""Tokenization and vocabulary management."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ConfigurationError

PAD, UNK, BOS, EOS = 0, 1, 2, 3
RESERVED = ("<pad>", "<unk>", "<bos>", "<eos>")

_TOKEN_RE = re.compile(r"[a-z0-9']+")


def split_text(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation; punctuation is dropped."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class Vocabulary:
    """Token-to-index map with reserved PAD/UNK/BOS/EOS slots."""

    id_to_token: list[str] = field(default_factory=lambda: list(RESERVED))

    def __post_init__(self):
        self.token_to_id = {tok: i for i, tok in enumerate(self.id_to_token)}

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)


def build_vocab(corpus: Iterable[str], min_count: int = 1) -> Vocabulary:
    """Frequency-thresholded vocabulary with deterministic index order.

    Tokens are ranked by (frequency desc, lexicographic) so two builds over
    the same corpus produce identical maps.
    """
    counts: Counter[str] = Counter()
    seen_any = False
    for text in corpus:
        seen_any = True
        counts.update(split_text(text))
    if not seen_any:
        raise ConfigurationError("cannot build a vocabulary from an empty corpus")
    kept = sorted((tok for tok, c in counts.items() if c >= min_count),
                  key=lambda tok: (-counts[tok], tok))
    return Vocabulary(id_to_token=list(RESERVED) + kept)


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    """Map text to ids wrapped in BOS/EOS; unseen tokens become UNK."""
    return [BOS] + [vocab.lookup(tok) for tok in split_text(text)] + [EOS]
