"""Hard-sample benchmark construction from multi-system metric scores.

Each system contributes the bottom fraction of its per-sample scores; the
benchmark is the intersection of those sets, split evenly into validation
and test halves.  All tie-breaking is deterministic and documented.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .core import SentencePair

logger = logging.getLogger(__name__)


class BenchError(ValueError):
    """Benchmark construction inputs are invalid."""


@dataclass(frozen=True)
class SystemScores:
    """Per-sample metric scores for one system, plus its bottom fraction."""

    system: str
    scores: dict[str, float]
    rho: float

    def __post_init__(self) -> None:
        if not 0.0 < self.rho <= 1.0:
            raise BenchError(f"rho for {self.system!r} must lie in (0, 1], got {self.rho}")


@dataclass(frozen=True)
class BenchmarkSplit:
    validation: tuple[str, ...]
    test: tuple[str, ...]


def load_system_scores(path: str | Path, system: str, rho: float) -> SystemScores:
    """Read a per-system score file: JSONL of {"id": str, "score": float}."""
    scores: dict[str, float] = {}
    with Path(path).open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                sample_id, score = str(row["id"]), float(row["score"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise BenchError(f"{path}: line {lineno}: {exc}") from exc
            if sample_id in scores:
                raise BenchError(f"{path}: line {lineno}: duplicate id {sample_id!r}")
            scores[sample_id] = score
    return SystemScores(system=system, scores=scores, rho=rho)


def bottom_rho(system: SystemScores) -> set[str]:
    """Ids of the floor(rho * n) lowest-scored samples.

    Ties at the cutoff break toward the lexicographically smaller id.
    """
    if not system.scores:
        raise BenchError(f"system {system.system!r} has no scores")
    count = math.floor(system.rho * len(system.scores))
    ranked = sorted(system.scores.items(), key=lambda kv: (kv[1], kv[0]))
    return {sample_id for sample_id, _ in ranked[:count]}


def intersect_hard(sets: list[set[str]]) -> set[str]:
    """Samples hard for every system; the construction is multi-system by design."""
    if len(sets) < 2:
        raise BenchError("need difficult-sample sets from at least 2 systems")
    result = set(sets[0])
    for other in sets[1:]:
        result &= other
    if not result:
        logger.warning("difficult-sample sets are disjoint; consider a larger rho")
    return result


def split_even(ids: set[str] | list[str], seed: int) -> BenchmarkSplit:
    """Seeded shuffle then halve; validation takes the extra odd sample."""
    if not ids:
        raise BenchError("cannot split an empty id set")
    ordered = sorted(ids)
    random.Random(seed).shuffle(ordered)
    half = math.ceil(len(ordered) / 2)
    return BenchmarkSplit(validation=tuple(ordered[:half]), test=tuple(ordered[half:]))


# Languages counted in characters instead of whitespace tokens.
CHARACTER_COUNTED = frozenset({"zh", "ja", "th"})


def _length(text: str, lang: str) -> int:
    if lang in CHARACTER_COUNTED:
        return len(text.replace(" ", ""))
    return len(text.split())


def corpus_stats(pairs: list[SentencePair], src_lang: str, tgt_lang: str) -> dict:
    """Sample count and mean side lengths under per-language conventions."""
    if not pairs:
        return {
            "samples": 0,
            "src_len_mean": 0.0,
            "tgt_len_mean": 0.0,
            "with_ref": 0,
        }
    src_lengths = [_length(p.src, src_lang) for p in pairs]
    refs = [p.ref for p in pairs if p.ref is not None]
    tgt_lengths = [_length(r, tgt_lang) for r in refs]
    return {
        "samples": len(pairs),
        "src_len_mean": sum(src_lengths) / len(src_lengths),
        "tgt_len_mean": (sum(tgt_lengths) / len(tgt_lengths)) if tgt_lengths else 0.0,
        "with_ref": len(refs),
    }


def build_benchmark(
    corpus: list[SentencePair],
    systems: list[SystemScores],
    seed: int,
) -> tuple[list[dict], dict]:
    """Full construction: coverage check, bottom-rho, intersection, split.

    Returns benchmark rows (corpus order, each tagged with its split) and
    a manifest of the construction parameters.
    """
    corpus_ids = {p.id for p in corpus}
    for system in systems:
        missing = corpus_ids - set(system.scores)
        extra = set(system.scores) - corpus_ids
        if missing or extra:
            raise BenchError(
                f"system {system.system!r} scores do not cover the corpus exactly "
                f"({len(missing)} missing, {len(extra)} extra)"
            )
    hard = intersect_hard([bottom_rho(s) for s in systems])
    rows: list[dict] = []
    if hard:
        split = split_even(hard, seed)
        split_of = {i: "validation" for i in split.validation}
        split_of.update({i: "test" for i in split.test})
        for p in corpus:
            if p.id in hard:
                row = {"id": p.id, "src": p.src}
                if p.ref is not None:
                    row["ref"] = p.ref
                row["split"] = split_of[p.id]
                rows.append(row)
    manifest = {
        "systems": [s.system for s in systems],
        "rho": {s.system: s.rho for s in systems},
        "seed": seed,
        "counts": {
            "corpus": len(corpus),
            "intersection": len(hard),
            "validation": sum(1 for r in rows if r["split"] == "validation"),
            "test": sum(1 for r in rows if r["split"] == "test"),
        },
    }
    return rows, manifest
