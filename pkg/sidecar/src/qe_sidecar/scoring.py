"""Deterministic stub scorer math.

These formulas are the cross-component contract: clients may compute them
locally, and the shared golden fixture file pins both sides bit for bit.
Keep the operations (and their order) exactly as written.
"""

from __future__ import annotations

from collections import Counter


def char_trigram_f1(candidate: str, reference: str) -> float:
    """Character 3-gram F1 between two strings (whitespace included)."""
    cand = _trigrams(candidate)
    ref = _trigrams(reference)
    if not cand and not ref:
        return 1.0 if candidate == reference else 0.0
    if not cand or not ref:
        return 0.0
    overlap = sum((cand & ref).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(cand.values())
    recall = overlap / sum(ref.values())
    return 2.0 * precision * recall / (precision + recall)


def _trigrams(text: str) -> Counter:
    return Counter(text[i : i + 3] for i in range(len(text) - 2))


def longest_common_substring(a: str, b: str) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    best = 0
    for ca in a:
        cur = [0] * (len(b) + 1)
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                cur[j] = prev[j - 1] + 1
                if cur[j] > best:
                    best = cur[j]
        prev = cur
    return best


def span_misalignment(span: str, counterpart: str) -> float:
    """1 - LCS(span, counterpart) / len(span); higher means more misaligned.

    The host text is deliberately unused: this is the stub's best-match
    rule, which also covers spans that are not anchored in the host.
    """
    if not span:
        raise ValueError("span must be non-empty")
    return 1.0 - longest_common_substring(span, counterpart) / len(span)


def clamp_unit(value: float) -> float:
    """Clamp a live span score onto the shared [0, 1] scale."""
    return min(1.0, max(0.0, value))
