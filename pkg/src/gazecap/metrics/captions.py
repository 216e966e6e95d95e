"""Corpus-level caption metrics: BLEU-1..4, ROUGE-L and CIDEr."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..text import tokenize


@dataclass
class EvalPair:
    image_id: str
    candidate: list[str]
    references: list[list[str]]

    def __post_init__(self):
        if not self.references:
            raise ValueError(f"image {self.image_id!r} has no references")

    @classmethod
    def from_text(cls, image_id: str, candidate: str, references: Iterable[str]) -> "EvalPair":
        return cls(image_id, tokenize(candidate), [tokenize(r) for r in references])


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _closest_ref_len(cand_len: int, refs: Sequence[Sequence[str]]) -> int:
    # ties go to the shorter reference
    return min((abs(len(r) - cand_len), len(r)) for r in refs)[1]


def bleu(pairs: Sequence[EvalPair], max_n: int = 4, smooth: bool = False) -> list[float]:
    """Corpus BLEU-1..``max_n`` with clipped counts and closest-length brevity penalty.

    Without ``smooth`` a zero n-gram precision makes that BLEU-n zero; with it,
    orders above 1 use add-one counts.
    """
    if not pairs:
        raise ValueError("empty corpus")
    matched = [0] * (max_n + 1)
    total = [0] * (max_n + 1)
    c_len = r_len = 0
    for pair in pairs:
        cand = pair.candidate
        c_len += len(cand)
        r_len += _closest_ref_len(len(cand), pair.references)
        for n in range(1, max_n + 1):
            counts = ngrams(cand, n)
            max_ref: Counter = Counter()
            for ref in pair.references:
                max_ref |= ngrams(ref, n)
            matched[n] += sum(min(c, max_ref[g]) for g, c in counts.items())
            total[n] += max(len(cand) - n + 1, 0)

    if c_len == 0:
        return [0.0] * max_n
    bp = 1.0 if c_len > r_len else math.exp(1.0 - r_len / c_len)
    scores = []
    log_sum = 0.0
    dead = False
    for n in range(1, max_n + 1):
        m, t = matched[n], total[n]
        if smooth and n > 1:
            m, t = m + 1, t + 1
        if m == 0 or t == 0:
            dead = True
        if dead:
            scores.append(0.0)
            continue
        log_sum += math.log(m / t)
        scores.append(bp * math.exp(log_sum / n))
    return scores


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l_pair(candidate: Sequence[str], references: Sequence[Sequence[str]], beta: float = 1.2) -> float:
    best = 0.0
    for ref in references:
        lcs = lcs_length(candidate, ref)
        if lcs == 0:
            continue
        p, r = lcs / len(candidate), lcs / len(ref)
        f = (1 + beta**2) * p * r / (r + beta**2 * p)
        best = max(best, f)
    return best


def rouge_l(pairs: Sequence[EvalPair], beta: float = 1.2) -> float:
    if not pairs:
        raise ValueError("empty corpus")
    return sum(rouge_l_pair(p.candidate, p.references, beta) for p in pairs) / len(pairs)


def _cosine(a: dict, b: dict) -> float:
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return sum(v * b[g] for g, v in a.items() if g in b) / (na * nb)


def cider_per_image(pairs: Sequence[EvalPair], max_n: int = 4) -> list[float]:
    """tf-idf cosine consensus per image, averaged over references and n, times 10.

    Document frequency counts images whose reference set contains the n-gram.
    """
    if not pairs:
        raise ValueError("empty corpus")
    df: dict[tuple, int] = defaultdict(int)
    for pair in pairs:
        seen = set()
        for ref in pair.references:
            for n in range(1, max_n + 1):
                seen.update(ngrams(ref, n))
        for g in seen:
            df[g] += 1
    log_n = math.log(len(pairs))

    def vec(tokens, n):
        return {g: c * (log_n - math.log(max(1, df.get(g, 0)))) for g, c in ngrams(tokens, n).items()}

    scores = []
    for pair in pairs:
        per_n = []
        for n in range(1, max_n + 1):
            vc = vec(pair.candidate, n)
            per_n.append(sum(_cosine(vc, vec(r, n)) for r in pair.references) / len(pair.references))
        scores.append(10.0 * sum(per_n) / max_n)
    return scores


def cider(pairs: Sequence[EvalPair], max_n: int = 4) -> float:
    s = cider_per_image(pairs, max_n)
    return sum(s) / len(s)


METRIC_COLUMNS = ("BLEU1", "BLEU2", "BLEU3", "BLEU4", "ROUGE_L", "CIDEr")


def evaluate(pairs: Sequence[EvalPair], smooth: bool = False) -> dict[str, float]:
    """Table-style row of every metric."""
    b = bleu(pairs, 4, smooth=smooth)
    return dict(zip(METRIC_COLUMNS, [*b, rouge_l(pairs), cider(pairs)]))
