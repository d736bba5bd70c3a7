"""Cross-lingual interpretation, guided refinement, and quality control.

The quality-control loop ablates each interpretation once, in its
original order, against the currently surviving set: a removal is kept
only when the sentence score of the resulting guided translation strictly
improves.  The loop issues exactly 1 + |A| refinement calls.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable

from .core import DemonstrationSets, DifficultWord, Interpretation, IqcTraceStep, LangPair
from .llm import GREEDY, LlmGateway, LlmRequest
from .prompts import ParseFailure, parse_interpretations, render
from .qe import QeScore

logger = logging.getLogger(__name__)

ScoreFn = Callable[[str, str], QeScore]


class RefinementError(RuntimeError):
    """Refinement aborted; ``partial_trace`` holds completed steps."""

    def __init__(self, message: str, partial_trace: tuple[IqcTraceStep, ...] = ()):
        super().__init__(message)
        self.partial_trace = partial_trace


@dataclass(frozen=True)
class IqcResult:
    interpretations: tuple[Interpretation, ...]
    final: str
    final_score: QeScore
    trace: tuple[IqcTraceStep, ...]

    @property
    def kept(self) -> tuple[Interpretation, ...]:
        return tuple(a for a in self.interpretations if a.status == "kept")


def interpret(
    x: str,
    selected: list[DifficultWord] | tuple[DifficultWord, ...],
    pair: LangPair,
    demos: DemonstrationSets,
    gateway: LlmGateway,
    language_mode: str = "target",
) -> list[Interpretation]:
    """One greedy interpretation pass over the selected difficult words.

    ``language_mode`` selects the gloss language: the target language by
    default, the source language, or source glosses translated into the
    target language with one extra call per gloss.
    """
    if not selected:
        raise ValueError("selected word list must be non-empty")
    words = [w.surface for w in selected]
    gloss_language = pair.src_name if language_mode in ("source", "source-then-translate") else None
    prompt = render(
        "interp", pair, demos, {"source": x, "words": words}, gloss_language=gloss_language
    )
    reply = gateway.complete(LlmRequest(prompt=prompt, decode=GREEDY, tag="interp"))
    parsed = parse_interpretations(reply, words)
    if isinstance(parsed, ParseFailure):
        logger.warning("interpretation response unparseable: %s", parsed.reason)
        return []
    if parsed.shortfall:
        logger.warning("no gloss returned for: %s", ", ".join(parsed.shortfall))
    glosses = dict(parsed.glosses)
    if language_mode == "source-then-translate":
        for word, gloss in glosses.items():
            translated = _translate_gloss(gloss, pair, gateway)
            if translated:
                glosses[word] = translated
    return [Interpretation(word=w, gloss=glosses[w]) for w in words if w in glosses]


def _translate_gloss(gloss: str, pair: LangPair, gateway: LlmGateway) -> str:
    # Second explicit stage: zero-shot translation of the gloss itself.
    prompt = render("mt", pair, DemonstrationSets.empty(), {"source": gloss})
    return gateway.complete(LlmRequest(prompt=prompt, decode=GREEDY, tag="interp-translate")).strip()


def guided_translate(
    x: str,
    draft: str,
    interpretations: list[Interpretation] | tuple[Interpretation, ...],
    pair: LangPair,
    demos: DemonstrationSets,
    gateway: LlmGateway,
) -> str:
    """Refine the draft under the given interpretations (may be empty)."""
    prompt = render(
        "igt_refine",
        pair,
        demos,
        {
            "source": x,
            "draft": draft,
            "interpretations": [(a.word, a.gloss) for a in interpretations],
        },
    )
    reply = gateway.complete(LlmRequest(prompt=prompt, decode=GREEDY, tag="igt")).strip()
    if not reply:
        raise RefinementError("empty guided translation")
    return reply


def iqc(
    x: str,
    draft: str,
    interpretations: list[Interpretation] | tuple[Interpretation, ...],
    pair: LangPair,
    demos: DemonstrationSets,
    gateway: LlmGateway,
    score: ScoreFn,
) -> IqcResult:
    """Greedy one-at-a-time interpretation ablation.

    Each original interpretation is ablated once, in order, against the
    currently surviving set; the ablation is accepted only on strict
    score improvement.  ``score`` maps (source, candidate translation) to
    a sentence-level QeScore.
    """
    original = list(interpretations)
    current = list(original)
    trace: list[IqcTraceStep] = []
    removed_at: dict[int, int] = {}
    try:
        best_text = guided_translate(x, draft, current, pair, demos, gateway)
        best_score = score(x, best_text)
        for i, item in enumerate(original):
            trial_set = [a for a in current if a is not item]
            trial_text = guided_translate(x, draft, trial_set, pair, demos, gateway)
            trial_score = score(x, trial_text)
            accepted = trial_score.better_than(best_score)
            trace.append(
                IqcTraceStep(
                    step=i,
                    word=item.word,
                    score_before=best_score.value,
                    score_with_ablation=trial_score.value,
                    accepted=accepted,
                )
            )
            if accepted:
                current = trial_set
                best_text, best_score = trial_text, trial_score
                removed_at[id(item)] = i
    except RefinementError:
        raise
    except Exception as exc:
        raise RefinementError(f"quality control aborted: {exc}", partial_trace=tuple(trace)) from exc

    marked = tuple(
        replace(a, status="removed", removed_at_step=removed_at[id(a)])
        if id(a) in removed_at
        else replace(a, status="kept")
        for a in original
    )
    return IqcResult(
        interpretations=marked,
        final=best_text,
        final_score=best_score,
        trace=tuple(trace),
    )
