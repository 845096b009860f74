"""Subword vocabulary: byte-pair-encoding pieces learned from a corpus.

Words are marked SPM-style with a leading "▁" (LOWER ONE EIGHTH
BLOCK) standing in for the preceding space, then merged bottom-up from
characters. Training is fully deterministic: the most frequent adjacent
pair merges first, ties broken by lexicographically smallest pair.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..errors import EmptyCorpus, SizeTooSmall

WORD_BOUNDARY = "▁"

PAD, UNK, MASK, BOS, EOS = 0, 1, 2, 3, 4
SPECIAL_PIECES = ("<pad>", "<unk>", "<mask>", "<s>", "</s>")
NUM_SPECIALS = len(SPECIAL_PIECES)


@dataclass(frozen=True)
class SubwordVocab:
    pieces: tuple[str, ...]            # id -> piece, specials first
    merges: tuple[tuple[str, str], ...]  # merge rules in priority order
    piece_to_id: dict[str, int] = field(init=False, repr=False)
    merge_rank: dict[tuple[str, str], int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.pieces[:NUM_SPECIALS] != SPECIAL_PIECES:
            raise ValueError("vocab must start with the special pieces")
        object.__setattr__(self, "piece_to_id",
                           {p: i for i, p in enumerate(self.pieces)})
        object.__setattr__(self, "merge_rank",
                           {m: r for r, m in enumerate(self.merges)})

    @property
    def size(self) -> int:
        return len(self.pieces)

    def _encode_word(self, word: str) -> list[int]:
        symbols = list(WORD_BOUNDARY + word)
        # standard BPE encode: repeatedly apply the highest-priority merge
        while len(symbols) > 1:
            best_rank = None
            best_pos = -1
            for i in range(len(symbols) - 1):
                rank = self.merge_rank.get((symbols[i], symbols[i + 1]))
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank = rank
                    best_pos = i
            if best_rank is None:
                break
            symbols[best_pos:best_pos + 2] = [symbols[best_pos] + symbols[best_pos + 1]]
        return [self.piece_to_id.get(sym, UNK) for sym in symbols]

    def tokenize(self, text: str) -> list[int]:
        """Text to piece ids; never empty (empty text -> [UNK])."""
        ids: list[int] = []
        for word in text.split():
            ids.extend(self._encode_word(word))
        return ids if ids else [UNK]

    def detokenize(self, ids) -> str:
        parts = []
        for i in ids:
            if i < 0 or i >= len(self.pieces):
                raise ValueError(f"id {i} outside vocab of {len(self.pieces)}")
            if i < NUM_SPECIALS:
                continue
            parts.append(self.pieces[i])
        return "".join(parts).replace(WORD_BOUNDARY, " ").strip()

    def to_dict(self) -> dict:
        return {"pieces": list(self.pieces),
                "merges": [list(m) for m in self.merges]}

    @classmethod
    def from_dict(cls, d: dict) -> "SubwordVocab":
        return cls(pieces=tuple(d["pieces"]),
                   merges=tuple((a, b) for a, b in d["merges"]))


def train_vocab(corpus, size: int) -> SubwordVocab:
    """Learn a BPE vocab of at most `size` pieces from an iterable of lines."""
    word_freq = Counter()
    for line in corpus:
        for word in line.split():
            word_freq[WORD_BOUNDARY + word] += 1
    if not word_freq:
        raise EmptyCorpus("no words in training corpus")

    alphabet = sorted({ch for word in word_freq for ch in word})
    floor = NUM_SPECIALS + len(alphabet)
    if size < floor:
        raise SizeTooSmall(
            f"size {size} below alphabet + specials = {floor}")

    # each distinct word as a symbol sequence, weighted by frequency
    words = {w: list(w) for w in word_freq}
    pieces = list(SPECIAL_PIECES) + alphabet
    known = set(pieces)
    merges: list[tuple[str, str]] = []

    while len(pieces) < size:
        pair_freq = Counter()
        for w, syms in words.items():
            f = word_freq[w]
            for i in range(len(syms) - 1):
                pair_freq[(syms[i], syms[i + 1])] += f
        candidates = [(pf, pair) for pair, pf in pair_freq.items()
                      if pair[0] + pair[1] not in known]
        if not candidates:
            break
        # most frequent first, then lexicographically smallest pair
        _, best = min(candidates, key=lambda c: (-c[0], c[1]))
        merged = best[0] + best[1]
        merges.append(best)
        pieces.append(merged)
        known.add(merged)
        for w, syms in words.items():
            i = 0
            while i < len(syms) - 1:
                if syms[i] == best[0] and syms[i + 1] == best[1]:
                    syms[i:i + 2] = [merged]
                else:
                    i += 1

    return SubwordVocab(pieces=tuple(pieces), merges=tuple(merges))
