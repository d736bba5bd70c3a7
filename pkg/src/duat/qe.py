"""Quality-estimation scoring: sentence-level, span-level, and reranking.

Two interchangeable scorer clients are provided: :class:`StubQe` computes
deterministic scores locally (no model, no network) and :class:`HttpQe`
talks to a scoring sidecar over a small JSON protocol.  Both expose the
same three calls: ``score_sentence``, ``score_source_span`` and the
generic ``score_span``.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

import requests

logger = logging.getLogger(__name__)

HIGHER_BETTER = "higher_better"
HIGHER_WORSE = "higher_worse"

SPAN_VS_SOURCE = "translation_span_vs_source"
SOURCE_VS_TRANSLATION = "source_span_vs_translation"

STUB_SENTENCE_SCORER = "stub-chrf3"
STUB_REFERENCE_SCORER = "stub-chrf3-ref"
STUB_TOKEN_SCORER = "stub-lcs"

# Scorer ids accepted by config validation.  Live ids are served by a
# sidecar; stub ids are always available in-process.
KNOWN_SCORERS = frozenset(
    {
        STUB_SENTENCE_SCORER,
        STUB_REFERENCE_SCORER,
        STUB_TOKEN_SCORER,
        "wmt21-comet-qe-da",
        "comet-ref",
        "token-qe",
    }
)


class QeError(RuntimeError):
    """Scoring failed (transport, schema, or scorer-side error)."""


class QeComparisonError(TypeError):
    """Scores from different scorers or conventions were compared."""


@dataclass(frozen=True)
class QeScore:
    """A single score plus the metadata needed to compare it safely."""

    scorer: str
    value: float
    convention: str
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self) -> None:
        if self.convention not in (HIGHER_BETTER, HIGHER_WORSE):
            raise ValueError(f"unknown convention {self.convention!r}")
        if not (self.lo <= self.value <= self.hi):
            raise ValueError(
                f"score {self.value} outside declared range [{self.lo}, {self.hi}]"
            )

    def better_than(self, other: "QeScore") -> bool:
        """Strict comparison under this score's convention.

        Comparing scores from different scorers or conventions is a
        programming error and raises, never silently compares.
        """
        if self.scorer != other.scorer or self.convention != other.convention:
            raise QeComparisonError(
                f"cannot compare {self.scorer}/{self.convention} "
                f"with {other.scorer}/{other.convention}"
            )
        if self.convention == HIGHER_BETTER:
            return self.value > other.value
        return self.value < other.value


def char_trigram_f1(candidate: str, reference: str) -> float:
    """Character 3-gram F1 between two strings (whitespace included).

    Degenerate inputs: if neither side has a trigram the score is 1.0 for
    equal strings and 0.0 otherwise; if exactly one side has none, 0.0.
    """
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
    """Length of the longest contiguous substring shared by a and b."""
    if not a or not b:
        return 0
    # Rolling DP row; O(len(a) * len(b)) which is fine at sentence scale.
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
    """Stub span error degree: 1 - LCS(span, counterpart) / len(span)."""
    if not span:
        raise ValueError("span must be non-empty")
    return 1.0 - longest_common_substring(span, counterpart) / len(span)


class StubQe:
    """Deterministic local scorers used in tests and offline runs.

    Sentence scores are character 3-gram F1 against a pinned
    pseudo-reference (the source itself when none is pinned); span scores
    use the longest-common-substring rule.  Values are bit-stable for
    identical inputs.
    """

    def __init__(self, pseudo_refs: Mapping[str, str] | None = None) -> None:
        self.pseudo_refs = dict(pseudo_refs or {})

    def score_sentence(self, src: str, cand: str, ref: str | None = None) -> QeScore:
        if not src or not cand:
            # Empty candidate is scoreable (minimal); empty source is not.
            if not src:
                raise QeError("source must be non-empty")
        if ref is not None:
            return QeScore(STUB_REFERENCE_SCORER, char_trigram_f1(cand, ref), HIGHER_BETTER)
        target = self.pseudo_refs.get(src, src)
        return QeScore(STUB_SENTENCE_SCORER, char_trigram_f1(cand, target), HIGHER_BETTER)

    def score_span(self, host: str, counterpart: str, span: str, direction: str) -> QeScore:
        if direction not in (SPAN_VS_SOURCE, SOURCE_VS_TRANSLATION):
            raise QeError(f"unknown direction {direction!r}")
        # The stub rule is symmetric in the two texts: only the counterpart
        # matters, so both directions reduce to the same computation.
        return QeScore(STUB_TOKEN_SCORER, span_misalignment(span, counterpart), HIGHER_WORSE)

    def score_source_span(self, src: str, draft: str, span: str) -> QeScore:
        return self.score_span(src, draft, span, SOURCE_VS_TRANSLATION)

    def health(self) -> dict:
        return {
            "scorers": [STUB_SENTENCE_SCORER, STUB_REFERENCE_SCORER, STUB_TOKEN_SCORER],
            "stub_mode": True,
        }


class HttpQe:
    """Client for the scoring sidecar's wire protocol.

    POST /v1/score_sentence {"src", "cand", "scorer", "ref"?} -> {"value", "convention"}
    POST /v1/score_span {"host", "counterpart", "span", "direction", "scorer"} -> {"value"}
    GET  /v1/health -> {"scorers": [...], "stub_mode": bool}
    """

    def __init__(
        self,
        endpoint: str,
        sentence_scorer: str = "wmt21-comet-qe-da",
        token_scorer: str = "token-qe",
        reference_scorer: str = "comet-ref",
        retries: int = 2,
        backoff_s: float = 0.1,
        session: requests.Session | None = None,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.sentence_scorer = sentence_scorer
        self.token_scorer = token_scorer
        self.reference_scorer = reference_scorer
        self.retries = retries
        self.backoff_s = backoff_s
        self.session = session or requests.Session()

    def score_sentence(self, src: str, cand: str, ref: str | None = None) -> QeScore:
        scorer = self.reference_scorer if ref is not None else self.sentence_scorer
        body: dict = {"src": src, "cand": cand, "scorer": scorer}
        if ref is not None:
            body["ref"] = ref
        payload = self._post("/v1/score_sentence", body)
        value = self._field(payload, "value")
        convention = payload.get("convention", HIGHER_BETTER)
        # Sentence scorers do not declare a range on the wire; accept any
        # finite value.
        return QeScore(scorer, float(value), convention, lo=float("-inf"), hi=float("inf"))

    def score_span(self, host: str, counterpart: str, span: str, direction: str) -> QeScore:
        body = {
            "host": host,
            "counterpart": counterpart,
            "span": span,
            "direction": direction,
            "scorer": self.token_scorer,
        }
        payload = self._post("/v1/score_span", body)
        value = float(self._field(payload, "value"))
        if not 0.0 <= value <= 1.0:
            raise QeError(f"sidecar span score {value} outside the clamped [0, 1] scale")
        return QeScore(self.token_scorer, value, HIGHER_WORSE)

    def score_source_span(self, src: str, draft: str, span: str) -> QeScore:
        return self.score_span(src, draft, span, SOURCE_VS_TRANSLATION)

    def health(self) -> dict:
        resp = self.session.get(self.endpoint + "/v1/health", timeout=30)
        if resp.status_code != 200:
            raise QeError(f"health check failed with status {resp.status_code}")
        return resp.json()

    def _post(self, path: str, body: dict) -> dict:
        import time

        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self.session.post(self.endpoint + path, json=body, timeout=60)
            except requests.RequestException as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(self.backoff_s * (2**attempt))
                continue
            if resp.status_code >= 500:
                last_error = QeError(f"sidecar error {resp.status_code}: {resp.text}")
                if attempt < self.retries:
                    time.sleep(self.backoff_s * (2**attempt))
                continue
            if resp.status_code != 200:
                raise QeError(f"sidecar rejected request ({resp.status_code}): {resp.text}")
            try:
                return resp.json()
            except ValueError as exc:
                raise QeError(f"sidecar returned non-JSON body: {resp.text[:200]}") from exc
        raise QeError(
            f"sidecar unreachable after {self.retries + 1} attempts: {last_error}"
        ) from last_error

    @staticmethod
    def _field(payload: dict, name: str):
        if name not in payload:
            raise QeError(f"sidecar response missing {name!r}: {payload!r}")
        return payload[name]


def rerank_best(src: str, candidates: list[str], scorer) -> tuple[int, QeScore]:
    """Pick the candidate with the best sentence score; ties keep the lowest index."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    best_index = 0
    best = scorer.score_sentence(src, candidates[0])
    for i, cand in enumerate(candidates[1:], start=1):
        score = scorer.score_sentence(src, cand)
        if score.better_than(best):
            best_index, best = i, score
    return best_index, best
