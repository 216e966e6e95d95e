from __future__ import annotations

from collections import Counter
from typing import Iterable

from ..text import tokenize

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
RESERVED = (PAD, BOS, EOS, UNK)


class Vocabulary:
    """Dense token <-> index map with four reserved entries at indices 0-3."""

    def __init__(self, words: Iterable[str] = ()):
        self.itos: list[str] = list(RESERVED)
        for w in words:
            if w in RESERVED:
                raise ValueError(f"{w!r} is reserved")
            if w not in self.itos:
                self.itos.append(w)
        self.stoi = {w: i for i, w in enumerate(self.itos)}

    pad = property(lambda self: 0)
    bos = property(lambda self: 1)
    eos = property(lambda self: 2)
    unk = property(lambda self: 3)

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, word: str) -> bool:
        return word in self.stoi

    @classmethod
    def build(cls, captions: Iterable[str], min_freq: int = 2) -> "Vocabulary":
        counts = Counter(tok for cap in captions for tok in tokenize(cap))
        return cls(sorted(w for w, c in counts.items() if c >= min_freq))

    def encode(self, caption: str, add_eos: bool = True) -> list[int]:
        ids = [self.stoi.get(tok, self.unk) for tok in tokenize(caption)]
        if add_eos:
            ids.append(self.eos)
        return ids

    def decode(self, ids: Iterable[int], strip: bool = True) -> list[str]:
        words = []
        for i in ids:
            if strip and i == self.eos:
                break
            if strip and i in (self.pad, self.bos):
                continue
            words.append(self.itos[i])
        return words
