"""Draft translation and difficult-word detection.

Two detection modes: the intrinsic mode takes one greedy detection pass
at face value; the external mode unions K temperature-sampled passes into
a candidate set, scores each candidate's misalignment against the draft,
and keeps only candidates strictly above the difficulty threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .core import DemonstrationSets, DifficultWord, LangPair, nfc
from .llm import GREEDY, LlmGateway, LlmRequest
from .prompts import parse_difficult_words, render

logger = logging.getLogger(__name__)


class DetectionError(RuntimeError):
    """Detection aborted; ``partial`` holds candidates scored so far."""

    def __init__(self, message: str, partial: tuple[DifficultWord, ...] = ()):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class DetectionResult:
    draft: str
    candidates: tuple[DifficultWord, ...]
    selected: tuple[DifficultWord, ...]
    mode: str
    tau: float | None


def draft_translate(
    x: str,
    pair: LangPair,
    demos: DemonstrationSets,
    gateway: LlmGateway,
) -> str:
    """Preliminary in-context translation, greedy decode."""
    prompt = render("mt", pair, demos, {"source": x})
    reply = gateway.complete(LlmRequest(prompt=prompt, decode=GREEDY, tag="mt")).strip()
    if not reply:
        raise DetectionError("empty draft")
    return reply


def _to_words(surfaces: list[str], x: str, origin: str) -> list[DifficultWord]:
    source = nfc(x)
    words = []
    for surface in surfaces:
        anchored = surface in source
        if not anchored:
            logger.warning("difficult word %r is not a substring of the source", surface)
        words.append(DifficultWord(surface=surface, origin=origin, anchored=anchored))
    return words


def detect_intrinsic(
    x: str,
    draft: str,
    pair: LangPair,
    demos: DemonstrationSets,
    gateway: LlmGateway,
) -> list[DifficultWord]:
    """One greedy detection pass; no external scoring."""
    prompt = render("diff_detect", pair, demos, {"source": x, "draft": draft})
    reply = gateway.complete(LlmRequest(prompt=prompt, decode=GREEDY, tag="diff"))
    return _to_words(parse_difficult_words(reply), x, origin="intrinsic-greedy")


def select_by_threshold(
    candidates: list[DifficultWord] | tuple[DifficultWord, ...], tau: float
) -> tuple[DifficultWord, ...]:
    """Keep candidates with misalignment strictly above tau, order preserved."""
    return tuple(
        replace(word, origin="selected")
        for word in candidates
        if word.score is not None and word.score > tau
    )


def detect_external(
    x: str,
    draft: str,
    pair: LangPair,
    demos: DemonstrationSets,
    gateway: LlmGateway,
    qe,
    sample_count: int,
    temperature: float,
    tau: float,
) -> DetectionResult:
    """Sampled-union detection with difficulty-aware selection.

    Candidates are the union of all sampled detections, ordered by first
    appearance (draw index, then position within the draw).
    """
    prompt = render("diff_detect", pair, demos, {"source": x, "draft": draft})
    draws = gateway.sample_k(
        LlmRequest(prompt=prompt, decode=GREEDY, tag="diff"), sample_count, temperature
    )
    union: dict[str, None] = {}
    for reply in draws:
        for surface in parse_difficult_words(reply):
            union.setdefault(surface, None)
    unscored = _to_words(list(union), x, origin="sampled")

    scored: list[DifficultWord] = []
    for word in unscored:
        try:
            score = qe.score_source_span(x, draft, word.surface)
        except Exception as exc:
            raise DetectionError(
                f"span scoring failed for {word.surface!r}: {exc}", partial=tuple(scored)
            ) from exc
        scored.append(replace(word, score=score.value))

    candidates = tuple(scored)
    return DetectionResult(
        draft=draft,
        candidates=candidates,
        selected=select_by_threshold(candidates, tau),
        mode="duat-e",
        tau=tau,
    )
