"""Shared domain types, corpus records, and pipeline configuration."""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .qe import KNOWN_SCORERS, QeScore

MODES = ("duat-i", "duat-e")
INTERP_LANGUAGES = ("target", "source", "source-then-translate")
WORD_ORIGINS = ("intrinsic-greedy", "sampled", "selected")
WORD_STATUSES = ("candidate", "kept", "removed")

DEFAULT_SHOTS = 8
DEFAULT_SAMPLE_COUNT = 5
DEFAULT_SAMPLE_TEMPERATURE = 0.5
# Midpoint of the recommended 0.13-0.15 difficulty threshold band.
DEFAULT_DIFFICULTY_THRESHOLD = 0.14

LANGUAGE_NAMES = {
    "en": "English",
    "zh": "Chinese",
    "et": "Estonian",
    "is": "Icelandic",
    "de": "German",
    "fr": "French",
    "es": "Spanish",
    "ja": "Japanese",
    "ko": "Korean",
    "ru": "Russian",
}


class CorpusError(ValueError):
    """A corpus file failed to load or validate."""


class ConfigError(ValueError):
    """A pipeline configuration value is invalid."""


def nfc(text: str) -> str:
    """Canonical NFC form used for all surface matching."""
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class LangPair:
    """Source/target language codes plus display names for prompt text."""

    src: str
    tgt: str
    src_name: str
    tgt_name: str

    def __post_init__(self) -> None:
        if self.src == self.tgt:
            raise ValueError(f"source and target language must differ, got {self.src!r}")
        if not self.src_name or not self.tgt_name:
            raise ValueError("language display names must be non-empty")

    @classmethod
    def from_codes(cls, src: str, tgt: str, src_name: str | None = None, tgt_name: str | None = None) -> "LangPair":
        def name_for(code: str, override: str | None) -> str:
            if override:
                return override
            if code not in LANGUAGE_NAMES:
                raise ConfigError(
                    f"no display name known for language code {code!r}; pass one explicitly"
                )
            return LANGUAGE_NAMES[code]

        return cls(src, tgt, name_for(src, src_name), name_for(tgt, tgt_name))


@dataclass(frozen=True)
class SentencePair:
    """One corpus entry: a source sentence and an optional reference."""

    id: str
    src: str
    ref: str | None = None

    def __post_init__(self) -> None:
        if not self.src.strip():
            raise ValueError(f"source text of {self.id!r} is empty")


@dataclass(frozen=True)
class DifficultWord:
    """A source-language span judged difficult, with its misalignment score.

    ``score`` is on the clamped [0, 1] scale shared by all token scorers;
    it is absent for words produced without external scoring.  ``anchored``
    is False when the span is not an exact NFC substring of the source.
    """

    surface: str
    score: float | None = None
    origin: str = "sampled"
    anchored: bool = True

    def __post_init__(self) -> None:
        if not self.surface:
            raise ValueError("difficult word surface must be non-empty")
        if self.origin not in WORD_ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"misalignment score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class Interpretation:
    """A target-language gloss for one difficult word."""

    word: str
    gloss: str
    status: str = "candidate"
    removed_at_step: int | None = None

    def __post_init__(self) -> None:
        if self.status not in WORD_STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.status in ("candidate", "kept") and not self.gloss:
            raise ValueError(f"{self.status} interpretation of {self.word!r} has empty gloss")
        if self.status == "removed" and self.removed_at_step is None:
            raise ValueError("removed interpretation must record its ablation step")


@dataclass(frozen=True)
class IqcTraceStep:
    """One ablation step of the interpretation quality-control loop."""

    step: int
    word: str
    score_before: float
    score_with_ablation: float
    accepted: bool


@dataclass(frozen=True)
class MtDemo:
    x: str
    y: str


@dataclass(frozen=True)
class DiffDemo:
    x: str
    draft: str
    words: tuple[str, ...]


@dataclass(frozen=True)
class InterpDemo:
    x: str
    interpretations: tuple[tuple[str, str], ...]

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(word for word, _ in self.interpretations)


@dataclass(frozen=True)
class RefineDemo:
    x: str
    draft: str
    interpretations: tuple[tuple[str, str], ...]
    final: str


@dataclass(frozen=True)
class DemonstrationSets:
    """The four exemplar pools used for in-context prompting.

    ``shots`` is the number of exemplars each rendered prompt consumes;
    every pool must hold at least that many when its prompt is built.
    """

    mt: tuple[MtDemo, ...] = ()
    diff: tuple[DiffDemo, ...] = ()
    intp: tuple[InterpDemo, ...] = ()
    igt: tuple[RefineDemo, ...] = ()
    shots: int = 0

    @classmethod
    def empty(cls) -> "DemonstrationSets":
        return cls()


@dataclass(frozen=True)
class TranslationRecord:
    """Full per-sentence pipeline trace, from draft to final translation."""

    pair: LangPair
    input: SentencePair
    draft: str
    candidates: tuple[DifficultWord, ...]
    selected: tuple[DifficultWord, ...]
    interpretations: tuple[Interpretation, ...]
    iqc_trace: tuple[IqcTraceStep, ...]
    final: str
    final_qe: QeScore | None = None

    def __post_init__(self) -> None:
        cand_surfaces = {w.surface for w in self.candidates}
        for word in self.selected:
            if word.surface not in cand_surfaces:
                raise ValueError(f"selected word {word.surface!r} not among candidates")
        sel_surfaces = {w.surface for w in self.selected}
        for interp in self.interpretations:
            if interp.word not in sel_surfaces:
                raise ValueError(f"interpretation for unselected word {interp.word!r}")
        if self.draft and not self.final:
            raise ValueError("final translation empty despite non-empty draft")


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for one pipeline run; defaults follow the recommended settings."""

    mode: str = "duat-e"
    shots: int = DEFAULT_SHOTS
    sample_count: int = DEFAULT_SAMPLE_COUNT
    sample_temperature: float = DEFAULT_SAMPLE_TEMPERATURE
    difficulty_threshold: float = DEFAULT_DIFFICULTY_THRESHOLD
    interpretation_language: str = "target"
    qe_sentence_scorer: str = "wmt21-comet-qe-da"
    qe_token_scorer: str = "token-qe"
    llm_backend: str = "openai-compat"
    max_retries: int = 2
    retry_backoff_s: float = 0.1


def validate_config(cfg: PipelineConfig, known_scorers: frozenset[str] | None = None) -> PipelineConfig:
    """Normalize and check a config; idempotent for already-valid configs."""
    known = KNOWN_SCORERS if known_scorers is None else known_scorers
    mode = cfg.mode.strip().lower()
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    interp_lang = cfg.interpretation_language.strip().lower()
    if interp_lang not in INTERP_LANGUAGES:
        raise ConfigError(
            f"interpretation_language must be one of {INTERP_LANGUAGES}, got {cfg.interpretation_language!r}"
        )
    if cfg.shots < 0:
        raise ConfigError("shots must be >= 0")
    if cfg.sample_count < 1:
        raise ConfigError("sample_count must be >= 1")
    if not 0.0 <= cfg.sample_temperature <= 2.0:
        raise ConfigError("sample_temperature must lie in [0, 2]")
    if not 0.0 <= cfg.difficulty_threshold <= 1.0:
        raise ConfigError("difficulty_threshold must lie in the token scorer range [0, 1]")
    if cfg.max_retries < 0:
        raise ConfigError("max_retries must be >= 0")
    if cfg.retry_backoff_s < 0:
        raise ConfigError("retry_backoff_s must be >= 0")
    for scorer in (cfg.qe_sentence_scorer, cfg.qe_token_scorer):
        if scorer not in known:
            raise ConfigError(
                f"unknown scorer id {scorer!r}; known: {', '.join(sorted(known))}"
            )
    return replace(cfg, mode=mode, interpretation_language=interp_lang)


def config_from_dict(data: dict) -> PipelineConfig:
    """Build a config from a partial mapping; missing keys take defaults."""
    allowed = {f.name for f in fields(PipelineConfig)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return PipelineConfig(**data)


def load_corpus(path: str | Path, format: str = "jsonl") -> list[SentencePair]:
    """Load sentence pairs from a JSONL ({id, src, ref?}) or TSV (src<TAB>ref) file."""
    if format not in ("jsonl", "tsv"):
        raise CorpusError(f"unknown corpus format {format!r}")
    path = Path(path)
    pairs: list[SentencePair] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            if format == "jsonl":
                pair = _parse_jsonl_line(line, lineno)
            else:
                pair = _parse_tsv_line(line, lineno)
            if pair.id in seen:
                raise CorpusError(f"line {lineno}: duplicate id {pair.id!r}")
            seen.add(pair.id)
            pairs.append(pair)
    return pairs


def _parse_jsonl_line(line: str, lineno: int) -> SentencePair:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise CorpusError(f"line {lineno}: expected an object")
    if "src" not in obj:
        raise CorpusError(f"line {lineno}: missing field src")
    src = obj["src"]
    if not isinstance(src, str) or not src.strip():
        raise CorpusError(f"line {lineno}: empty src")
    ref = obj.get("ref")
    if ref is not None and not isinstance(ref, str):
        raise CorpusError(f"line {lineno}: ref must be a string")
    raw_id = obj.get("id", lineno)
    return SentencePair(id=str(raw_id), src=src, ref=ref)


def _parse_tsv_line(line: str, lineno: int) -> SentencePair:
    cols = line.rstrip("\n").split("\t")
    if len(cols) > 2:
        raise CorpusError(f"line {lineno}: expected src<TAB>ref, got {len(cols)} columns")
    src = cols[0]
    if not src.strip():
        raise CorpusError(f"line {lineno}: empty src")
    ref = cols[1] if len(cols) == 2 and cols[1] else None
    return SentencePair(id=str(lineno), src=src, ref=ref)


def record_to_json(record: TranslationRecord) -> dict:
    """Serialize a record to the documented JSONL schema (stable key order)."""
    out: dict = {
        "id": record.input.id,
        "src": record.input.src,
    }
    if record.input.ref is not None:
        out["ref"] = record.input.ref
    out["pair"] = {
        "src": record.pair.src,
        "tgt": record.pair.tgt,
        "src_name": record.pair.src_name,
        "tgt_name": record.pair.tgt_name,
    }
    out["draft"] = record.draft
    out["candidates"] = [_word_to_json(w) for w in record.candidates]
    out["selected"] = [_word_to_json(w) for w in record.selected]
    out["interpretations"] = [
        {
            "word": a.word,
            "gloss": a.gloss,
            "status": a.status,
            "removed_at_step": a.removed_at_step,
        }
        for a in record.interpretations
    ]
    out["iqc_trace"] = [
        {
            "i": s.step,
            "word": s.word,
            "s_hat": s.score_before,
            "s_bar": s.score_with_ablation,
            "accepted": s.accepted,
        }
        for s in record.iqc_trace
    ]
    out["final"] = record.final
    out["final_qe"] = (
        None
        if record.final_qe is None
        else {
            "scorer": record.final_qe.scorer,
            "value": record.final_qe.value,
            "convention": record.final_qe.convention,
            "lo": record.final_qe.lo,
            "hi": record.final_qe.hi,
        }
    )
    return out


def record_from_json(obj: dict) -> TranslationRecord:
    """Inverse of :func:`record_to_json`."""
    pair = LangPair(**obj["pair"])
    final_qe = None
    if obj.get("final_qe") is not None:
        final_qe = QeScore(**obj["final_qe"])
    return TranslationRecord(
        pair=pair,
        input=SentencePair(id=obj["id"], src=obj["src"], ref=obj.get("ref")),
        draft=obj["draft"],
        candidates=tuple(_word_from_json(w) for w in obj["candidates"]),
        selected=tuple(_word_from_json(w) for w in obj["selected"]),
        interpretations=tuple(
            Interpretation(
                word=a["word"],
                gloss=a["gloss"],
                status=a["status"],
                removed_at_step=a.get("removed_at_step"),
            )
            for a in obj["interpretations"]
        ),
        iqc_trace=tuple(
            IqcTraceStep(
                step=s["i"],
                word=s["word"],
                score_before=s["s_hat"],
                score_with_ablation=s["s_bar"],
                accepted=s["accepted"],
            )
            for s in obj["iqc_trace"]
        ),
        final=obj["final"],
        final_qe=final_qe,
    )


def record_to_line(record: TranslationRecord) -> str:
    return json.dumps(record_to_json(record), ensure_ascii=False)


def _word_to_json(word: DifficultWord) -> dict:
    return {
        "surface": word.surface,
        "score": word.score,
        "origin": word.origin,
        "anchored": word.anchored,
    }


def _word_from_json(obj: dict) -> DifficultWord:
    return DifficultWord(
        surface=obj["surface"],
        score=obj.get("score"),
        origin=obj.get("origin", "sampled"),
        anchored=obj.get("anchored", True),
    )
