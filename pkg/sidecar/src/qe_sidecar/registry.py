"""Scorer registry: stub scorers always load; live models are optional.

A live scorer id is registered only when its model actually loads; a
missing checkpoint or package logs a warning and the service keeps
serving the stubs.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Callable

from . import scoring

logger = logging.getLogger(__name__)

HIGHER_BETTER = "higher_better"

ENV_SENTENCE_MODEL = "QE_SIDECAR_SENTENCE_MODEL"
ENV_REFERENCE_MODEL = "QE_SIDECAR_REFERENCE_MODEL"
ENV_TOKEN_MODEL = "QE_SIDECAR_TOKEN_MODEL"

STUB_SENTENCE = "stub-chrf3"
STUB_REFERENCE = "stub-chrf3-ref"
STUB_SPAN = "stub-lcs"


@dataclass(frozen=True)
class SentenceScorer:
    id: str
    needs_ref: bool
    # fn(src, cand, ref) -> float
    fn: Callable[[str, str, str | None], float]


@dataclass(frozen=True)
class SpanScorer:
    id: str
    # fn(host, counterpart, span, direction) -> float in [0, 1]
    fn: Callable[[str, str, str, str], float]


class ScorerRegistry:
    def __init__(self) -> None:
        self.sentence: dict[str, SentenceScorer] = {}
        self.span: dict[str, SpanScorer] = {}

    def ids(self) -> list[str]:
        return sorted(set(self.sentence) | set(self.span))

    def register_stubs(self) -> None:
        self.sentence[STUB_SENTENCE] = SentenceScorer(
            STUB_SENTENCE,
            needs_ref=False,
            fn=lambda src, cand, ref: scoring.char_trigram_f1(cand, src),
        )
        self.sentence[STUB_REFERENCE] = SentenceScorer(
            STUB_REFERENCE,
            needs_ref=True,
            fn=lambda src, cand, ref: scoring.char_trigram_f1(cand, ref),
        )
        self.span[STUB_SPAN] = SpanScorer(
            STUB_SPAN,
            fn=lambda host, counterpart, span, direction: scoring.span_misalignment(
                span, counterpart
            ),
        )

    def register_live(self) -> None:
        self._try_live_sentence("wmt21-comet-qe-da", ENV_SENTENCE_MODEL, needs_ref=False)
        self._try_live_sentence("comet-ref", ENV_REFERENCE_MODEL, needs_ref=True)
        self._try_live_span("token-qe", ENV_TOKEN_MODEL)

    def _load_checkpoint(self, scorer_id: str, env_var: str):
        path = os.environ.get(env_var)
        if not path or not os.path.exists(path):
            logger.warning("no checkpoint for %s (%s unset or missing); not registered", scorer_id, env_var)
            return None
        try:
            from comet import load_from_checkpoint  # optional heavy dependency
        except ImportError:
            logger.warning("comet package unavailable; %s not registered", scorer_id)
            return None
        try:
            return load_from_checkpoint(path)
        except Exception as exc:
            logger.warning("failed to load %s from %s: %s; not registered", scorer_id, path, exc)
            return None

    def _try_live_sentence(self, scorer_id: str, env_var: str, needs_ref: bool) -> None:
        model = self._load_checkpoint(scorer_id, env_var)
        if model is None:
            return

        def fn(src: str, cand: str, ref: str | None) -> float:
            sample = {"src": src, "mt": cand}
            if needs_ref:
                sample["ref"] = ref
            output = model.predict([sample], progress_bar=False)
            return float(output.scores[0])

        self.sentence[scorer_id] = SentenceScorer(scorer_id, needs_ref=needs_ref, fn=fn)

    def _try_live_span(self, scorer_id: str, env_var: str) -> None:
        model = self._load_checkpoint(scorer_id, env_var)
        if model is None:
            return

        def fn(host: str, counterpart: str, span: str, direction: str) -> float:
            # Span error degree via the model's span-attribution interface;
            # the tool is symmetric in its two texts, so both directions
            # score the span against the counterpart.
            output = model.predict(
                [{"src": counterpart, "mt": host, "span": span}], progress_bar=False
            )
            return scoring.clamp_unit(float(output.scores[0]))

        self.span[scorer_id] = SpanScorer(scorer_id, fn=fn)


def build_registry(stub_mode: bool) -> ScorerRegistry:
    registry = ScorerRegistry()
    registry.register_stubs()
    if not stub_mode:
        registry.register_live()
    return registry
