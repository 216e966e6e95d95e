from .captions import (
    METRIC_COLUMNS,
    EvalPair,
    bleu,
    cider,
    cider_per_image,
    evaluate,
    lcs_length,
    rouge_l,
    rouge_l_pair,
)
from .lemma import lemmatize
from .word_pr import WordPRRow, word_pr, word_pr_delta

__all__ = [
    "METRIC_COLUMNS",
    "EvalPair",
    "WordPRRow",
    "bleu",
    "cider",
    "cider_per_image",
    "evaluate",
    "lcs_length",
    "lemmatize",
    "rouge_l",
    "rouge_l_pair",
    "word_pr",
    "word_pr_delta",
]
