"""Classic Porter stemming algorithm (the original 1980 rule set).

Lowercase ASCII input is assumed; tokens containing other characters are
returned unchanged by the analyzer before this stage is reached.
"""

_VOWELS = "aeiou"


def _is_consonant(word, i):
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem):
    """Number of VC sequences in [C](VC)^m[V]."""
    runs = []
    for i in range(len(stem)):
        form = "c" if _is_consonant(stem, i) else "v"
        if not runs or runs[-1] != form:
            runs.append(form)
    return "".join(runs).count("vc")


def _measure_gt(stem, bound):
    return _measure(stem) > bound


def _contains_vowel(stem):
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word):
    return (len(word) >= 2 and word[-1] == word[-2]
            and _is_consonant(word, len(word) - 1))


def _ends_cvc(word):
    if len(word) < 3:
        return False
    if (_is_consonant(word, len(word) - 3)
            and not _is_consonant(word, len(word) - 2)
            and _is_consonant(word, len(word) - 1)):
        return word[-1] not in "wxy"
    return False


def _replace_suffix(word, suffix, replacement):
    return word[:len(word) - len(suffix)] + replacement


def _step1a(word):
    if word.endswith("sses"):
        return _replace_suffix(word, "sses", "ss")
    if word.endswith("ies"):
        return _replace_suffix(word, "ies", "i")
    if word.endswith("ss"):
        return word
    if word.endswith("s"):
        return word[:-1]
    return word


def _step1b(word):
    if word.endswith("eed"):
        stem = _replace_suffix(word, "eed", "")
        if _measure_gt(stem, 0):
            return word[:-1]
        return word
    flag = False
    if word.endswith("ed"):
        stem = _replace_suffix(word, "ed", "")
        if _contains_vowel(stem):
            word, flag = stem, True
    elif word.endswith("ing"):
        stem = _replace_suffix(word, "ing", "")
        if _contains_vowel(stem):
            word, flag = stem, True
    if flag:
        if word.endswith(("at", "bl", "iz")):
            return word + "e"
        if _ends_double_consonant(word) and word[-1] not in "lsz":
            return word[:-1]
        if _measure(word) == 1 and _ends_cvc(word):
            return word + "e"
    return word


def _step1c(word):
    if word.endswith("y") and _contains_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


_STEP2 = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]

_STEP3 = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

_STEP4 = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]


def _rule_table(word, rules, bound):
    for suffix, replacement in rules:
        if word.endswith(suffix):
            stem = _replace_suffix(word, suffix, "")
            if _measure_gt(stem, bound):
                return stem + replacement
            return word
    return word


def _step4(word):
    for suffix in _STEP4:
        if word.endswith(suffix):
            stem = _replace_suffix(word, suffix, "")
            if suffix == "ion" and not (stem and stem[-1] in "st"):
                return word
            if _measure_gt(stem, 1):
                return stem
            return word
    return word


def _step5a(word):
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            return stem
    return word


def _step5b(word):
    if _measure_gt(word, 1) and _ends_double_consonant(word) and word.endswith("l"):
        return word[:-1]
    return word


def stem(word: str) -> str:
    """Stem one lowercase token; words of length <= 2 are left alone."""
    if len(word) <= 2:
        return word
    word = _step1a(word)
    word = _step1b(word)
    word = _step1c(word)
    word = _rule_table(word, _STEP2, 0)
    word = _rule_table(word, _STEP3, 0)
    word = _step4(word)
    word = _step5a(word)
    word = _step5b(word)
    return word
