"""Deterministic rule-based English lemmatizer.

Good enough to merge plural/verb forms consistently on both sides of a
precision/recall comparison; not a linguistic lemmatizer.

Rules, applied to lowercase words in order (first match wins):

=========================  ======================  ====================
pattern                    action                  example
=========================  ======================  ====================
irregular table            table lookup            men -> man
len <= 3                   unchanged               bus -> bus
-ies (len > 4)             -> -y                   skies -> sky
-sses                      -> -ss                  glasses -> glass
-ches/-shes/-xes/-zzes     drop -es                boxes -> box
-ss/-us/-is                unchanged               grass -> grass
-s                         drop -s                 dogs -> dog
-ing / -ed (stem >= 3)     strip, then repair      running -> run,
                                                   making -> make
=========================  ======================  ====================

Stem repair after -ing/-ed: a doubled final consonant (other than l, s, z)
is undoubled; a three-letter consonant-vowel-consonant stem gets an -e.
"""

IRREGULAR = {
    "men": "man",
    "women": "woman",
    "children": "child",
    "people": "person",
    "feet": "foot",
    "teeth": "tooth",
    "mice": "mouse",
    "geese": "goose",
    "leaves": "leaf",
    "knives": "knife",
    "wolves": "wolf",
    "shelves": "shelf",
    "ran": "run",
    "sat": "sit",
    "stood": "stand",
    "flew": "fly",
    "ate": "eat",
    "is": "be",
    "are": "be",
    "was": "be",
    "were": "be",
    "has": "have",
    "during": "during",
    "something": "something",
    "nothing": "nothing",
    "ceiling": "ceiling",
    "building": "building",
}

VOWELS = set("aeiou")


def _repair(stem: str) -> str:
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in VOWELS and stem[-1] not in "lsz":
        return stem[:-1]
    if (len(stem) == 3 and stem[0] not in VOWELS and stem[1] in VOWELS
            and stem[2] not in VOWELS and stem[2] not in "wxy"):
        return stem + "e"
    return stem


def lemmatize(word: str) -> str:
    w = word.lower()
    if w in IRREGULAR:
        return IRREGULAR[w]
    if len(w) <= 3:
        return w
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith(("ches", "shes", "xes", "zzes")):
        return w[:-2]
    if w.endswith(("ss", "us", "is")):
        return w
    if w.endswith("s"):
        return w[:-1]
    for suffix in ("ing", "ed"):
        if w.endswith(suffix) and len(w) - len(suffix) >= 3:
            stem = w[: -len(suffix)]
            if not any(ch in VOWELS or ch == "y" for ch in stem):
                return w
            return _repair(stem)
    return w
