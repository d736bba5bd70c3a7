"""Demonstration synthesis from parallel data, with reference-based QC.

Each parallel pair produces a baseline draft, a post-explanation pass
extracting difficult words with their glosses, and a quality-control loop
identical in shape to the runtime one but scored against the reference.
The surviving material populates all four demonstration pools.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from functools import partial
from pathlib import Path

from .core import (
    DemonstrationSets,
    DiffDemo,
    Interpretation,
    InterpDemo,
    LangPair,
    MtDemo,
    RefineDemo,
    SentencePair,
)
from .detection import draft_translate
from .llm import GREEDY, LlmGateway, LlmRequest
from .prompts import ParseFailure, parse_demo_synthesis, render
from .refine import iqc

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthesizedDemo:
    """One synthesized exemplar; populates the demonstration pools."""

    pair_id: str
    x: str
    y: str
    draft: str
    words: tuple[str, ...]
    interpretations: tuple[Interpretation, ...]
    final: str

    @property
    def mt_only(self) -> bool:
        # No difficult words extracted: usable only as a plain translation
        # exemplar.
        return not self.words

    @property
    def kept(self) -> tuple[Interpretation, ...]:
        return tuple(a for a in self.interpretations if a.status == "kept")


@dataclass(frozen=True)
class SkipRecord:
    pair_id: str
    reason: str


def synthesize(
    pairs: list[SentencePair],
    pair: LangPair,
    gateway: LlmGateway,
    metric,
    demos: DemonstrationSets | None = None,
) -> tuple[list[SynthesizedDemo], list[SkipRecord]]:
    """Synthesize exemplars from parallel pairs; unparseable pairs are skipped.

    ``metric`` must expose ``score_sentence(src, cand, ref=...)`` with a
    higher-is-better convention; quality control compares candidates
    against the pair's reference.
    """
    demos = demos or DemonstrationSets.empty()
    out: list[SynthesizedDemo] = []
    skips: list[SkipRecord] = []
    for sp in pairs:
        if sp.ref is None:
            skips.append(SkipRecord(sp.id, "missing reference"))
            continue
        try:
            demo = _synthesize_one(sp, pair, gateway, metric, demos)
        except Exception as exc:
            logger.warning("synthesis failed for %s: %s", sp.id, exc)
            skips.append(SkipRecord(sp.id, str(exc)))
            continue
        if demo is None:
            skips.append(SkipRecord(sp.id, "unparseable demo synthesis"))
            continue
        out.append(demo)
    return out, skips


def _synthesize_one(
    sp: SentencePair,
    pair: LangPair,
    gateway: LlmGateway,
    metric,
    demos: DemonstrationSets,
) -> SynthesizedDemo | None:
    draft = draft_translate(sp.src, pair, demos, gateway)
    prompt = render("demo_synth", pair, demos, {"source": sp.src, "target": sp.ref})
    reply = gateway.complete(LlmRequest(prompt=prompt, decode=GREEDY, tag="demo-synth"))
    parsed = parse_demo_synthesis(reply)
    if isinstance(parsed, ParseFailure):
        return None
    candidates = [Interpretation(word=w, gloss=parsed.glosses[w]) for w in parsed.words]
    if not candidates:
        return SynthesizedDemo(sp.id, sp.src, sp.ref, draft, (), (), draft)
    result = iqc(
        sp.src,
        draft,
        candidates,
        pair,
        demos,
        gateway,
        score=partial(metric.score_sentence, ref=sp.ref),
    )
    return SynthesizedDemo(
        pair_id=sp.id,
        x=sp.src,
        y=sp.ref,
        draft=draft,
        words=parsed.words,
        interpretations=result.interpretations,
        final=result.final,
    )


def assemble_sets(demos: list[SynthesizedDemo], shots: int, seed: int) -> DemonstrationSets:
    """Seeded uniform selection of ``shots`` exemplars per pool.

    Pool eligibility: every demo can serve the translation pool; the
    detection and refinement pools need difficult words; the
    interpretation pool additionally needs at least one surviving gloss
    (its exemplars list only the glossed words, keeping input and output
    consistent).
    """
    mt_eligible = demos
    diff_eligible = [d for d in demos if d.words]
    intp_eligible = [d for d in demos if d.kept]
    igt_eligible = [d for d in demos if d.words]
    if shots == 0:
        return DemonstrationSets(shots=0)
    for slot, eligible in (
        ("mt", mt_eligible),
        ("diff", diff_eligible),
        ("intp", intp_eligible),
        ("igt", igt_eligible),
    ):
        if len(eligible) < shots:
            raise ValueError(
                f"insufficient demonstrations for slot {slot}: need {shots}, have {len(eligible)}"
            )
    rng = random.Random(seed)

    def pick(eligible: list[SynthesizedDemo]) -> list[SynthesizedDemo]:
        return rng.sample(eligible, shots)

    return DemonstrationSets(
        mt=tuple(MtDemo(d.x, d.y) for d in pick(mt_eligible)),
        diff=tuple(DiffDemo(d.x, d.draft, d.words) for d in pick(diff_eligible)),
        intp=tuple(
            InterpDemo(d.x, tuple((a.word, a.gloss) for a in d.kept))
            for d in pick(intp_eligible)
        ),
        igt=tuple(
            RefineDemo(d.x, d.draft, tuple((a.word, a.gloss) for a in d.kept), d.final)
            for d in pick(igt_eligible)
        ),
        shots=shots,
    )


def save_demos(demos: list[SynthesizedDemo], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for demo in demos:
            handle.write(json.dumps(demo_to_json(demo), ensure_ascii=False) + "\n")


def load_demos(path: str | Path) -> list[SynthesizedDemo]:
    out = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                out.append(demo_from_json(json.loads(line)))
    return out


def demo_to_json(demo: SynthesizedDemo) -> dict:
    return {
        "id": demo.pair_id,
        "src": demo.x,
        "ref": demo.y,
        "draft": demo.draft,
        "words": list(demo.words),
        "interpretations": [
            {
                "word": a.word,
                "gloss": a.gloss,
                "status": a.status,
                "removed_at_step": a.removed_at_step,
            }
            for a in demo.interpretations
        ],
        "final": demo.final,
    }


def demo_from_json(obj: dict) -> SynthesizedDemo:
    return SynthesizedDemo(
        pair_id=obj["id"],
        x=obj["src"],
        y=obj["ref"],
        draft=obj["draft"],
        words=tuple(obj["words"]),
        interpretations=tuple(
            Interpretation(
                word=a["word"],
                gloss=a["gloss"],
                status=a.get("status", "candidate"),
                removed_at_step=a.get("removed_at_step"),
            )
            for a in obj["interpretations"]
        ),
        final=obj["final"],
    )
