"""Weighted per-word precision/recall of generated captions.

For a word w and an image, the image is ground-truth positive when any of
its reference captions contains w; a positive image weighs the number of
references containing w, a negative image weighs 1.  The image is predicted
positive when its generated caption contains w.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from ..text import tokenize
from .lemma import lemmatize


@dataclass
class WordPRRow:
    word: str
    precision: float
    recall: float
    f_score: float
    support: int  # reference captions (summed over images) that contain the word
    precision_defined: bool = True


def _lemmas(text, lemmatizer) -> list[str]:
    tokens = tokenize(text) if isinstance(text, str) else list(text)
    return [lemmatizer(t) for t in tokens]


def word_pr(
    generated: Mapping[str, str | Sequence[str]],
    references: Mapping[str, Sequence[str | Sequence[str]]],
    min_freq: int = 10,
    lemmatizer: Callable[[str], str] = lemmatize,
) -> list[WordPRRow]:
    """Rows for every word occurring more than ``min_freq`` times in the references."""
    missing = [i for i in references if i not in generated]
    if missing:
        raise KeyError(f"no generated caption for images {missing[:5]}")
    ids = sorted(references)
    gen_sets = {i: set(_lemmas(generated[i], lemmatizer)) for i in ids}
    ref_sets = {i: [set(_lemmas(r, lemmatizer)) for r in references[i]] for i in ids}
    freq = Counter(tok for i in ids for r in references[i] for tok in _lemmas(r, lemmatizer))

    rows = []
    for word in sorted(w for w, c in freq.items() if c > min_freq):
        tp = fn = fp = 0.0
        support = 0
        for i in ids:
            pos_weight = sum(word in r for r in ref_sets[i])
            predicted = word in gen_sets[i]
            support += pos_weight
            if pos_weight:
                if predicted:
                    tp += pos_weight
                else:
                    fn += pos_weight
            elif predicted:
                fp += 1.0
        defined = tp + fp > 0
        precision = tp / (tp + fp) if defined else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        rows.append(WordPRRow(word, precision, recall, f, support, defined))
    return rows


def word_pr_delta(rows_a: Sequence[WordPRRow], rows_b: Sequence[WordPRRow],
                  threshold: float = 0.05) -> tuple[list[str], list[str]]:
    """Words whose F-score rises (B over A) by more than ``threshold``, and those that fall."""
    fa = {r.word: r.f_score for r in rows_a}
    fb = {r.word: r.f_score for r in rows_b}
    common = sorted(set(fa) & set(fb))
    improved = [w for w in common if fb[w] - fa[w] > threshold]
    degraded = [w for w in common if fb[w] - fa[w] < -threshold]
    return improved, degraded
