"""Prompt rendering for the five request shapes, and response parsing.

Rendering is a pure function of its arguments: a request header, N
demonstration blocks, then exactly one query block.  Parsers are lenient
about list markers and never raise on arbitrary text; they hand back
either a payload or a :class:`ParseFailure`.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from importlib import resources

from .core import DemonstrationSets, LangPair, nfc

KINDS = ("mt", "diff_detect", "interp", "igt_refine", "demo_synth")

_REFUSALS = frozenset({"", "none", "n/a", "no", "nothing", "没有", "无"})

# Leading enumeration markers: bullets (space-delimited, so bold "**" is
# untouched) and "1." / "2)" / "3、" numbering.
_MARKER_RE = re.compile(r"^\s*(?:[-*•·]\s+|\d+\s*[.)、]\s*)")
_QUOTE_PAIRS = [
    ('"', '"'),
    ("'", "'"),
    ("“", "”"),
    ("‘", "’"),
    ("「", "」"),
    ("『", "』"),
    ("《", "》"),
]
_SYNTH_LINE_RE = re.compile(r"<<\s*(.+?)\s*>>\s*:{1,2}\s*<<\s*(.+?)\s*>>")


class PromptError(ValueError):
    """Rendering was asked for something the inputs cannot satisfy."""


@dataclass(frozen=True)
class ParseFailure:
    """Structured parse error carrying the raw response for audit."""

    reason: str
    raw: str


@dataclass(frozen=True)
class InterpretationParse:
    glosses: dict[str, str]
    shortfall: tuple[str, ...]


@dataclass(frozen=True)
class DemoSynthesisParse:
    words: tuple[str, ...]
    glosses: dict[str, str]


def _load_wording() -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    text = resources.files("duat.resources").joinpath("prompt_wording.cfg").read_text("utf-8")
    parser.read_string(text)
    return {section: dict(parser[section]) for section in parser.sections()}


WORDING = _load_wording()


def wording_text() -> str:
    """Raw bytes of the wording resource, for hash pinning in tests."""
    return resources.files("duat.resources").joinpath("prompt_wording.cfg").read_text("utf-8")


def _label(name: str, value: str) -> str:
    return f"{name}: {value}" if value else f"{name}:"


def _interp_lines(interpretations: tuple[tuple[str, str], ...] | list[tuple[str, str]]) -> list[str]:
    return [f"{word}: {gloss}" for word, gloss in interpretations]


def render(
    kind: str,
    pair: LangPair,
    demos: DemonstrationSets,
    query: dict,
    shots: int | None = None,
    gloss_language: str | None = None,
) -> str:
    """Render one prompt: request header, N demo blocks, one query block.

    ``query`` carries the kind-specific fields (``source`` always; plus
    ``draft``, ``words``, ``interpretations`` or ``target`` as needed).
    ``gloss_language`` overrides the language display name used in the
    interpretation request (the source-language ablation mode).
    """
    if kind not in KINDS:
        raise PromptError(f"unknown prompt kind {kind!r}")
    wording = WORDING[kind]
    n = demos.shots if shots is None else shots
    gloss_name = gloss_language or pair.tgt_name
    request = wording["request"].format(src_lang=pair.src_name, tgt_lang=pair.tgt_name)
    if kind == "interp":
        request = wording["request"].format(src_lang=pair.src_name, tgt_lang=gloss_name)

    blocks: list[str] = []
    header = "Request: " + request
    if "format" in wording:
        header += "\n" + wording["format"].format(
            src_lang=pair.src_name, tgt_lang=pair.tgt_name
        )
    blocks.append(header)
    blocks.extend(_demo_blocks(kind, wording, demos, n))
    blocks.append(_query_block(kind, wording, query))
    return "\n\n".join(blocks)


def _demo_blocks(kind: str, wording: dict[str, str], demos: DemonstrationSets, n: int) -> list[str]:
    if n == 0:
        return []
    if kind == "demo_synth":
        # The synthesis request is format-driven; it carries no exemplars.
        return []
    pool = {"mt": demos.mt, "diff_detect": demos.diff, "interp": demos.intp, "igt_refine": demos.igt}[kind]
    if len(pool) < n:
        raise PromptError(
            f"insufficient demonstrations for {kind}: need {n}, have {len(pool)}"
        )
    blocks = []
    for demo in pool[:n]:
        if kind == "mt":
            blocks.append(
                _label(wording["source_label"], demo.x)
                + "\n"
                + _label(wording["output_label"], demo.y)
            )
        elif kind == "diff_detect":
            words = "\n".join(demo.words) if demo.words else "None"
            blocks.append(
                _label(wording["source_label"], demo.x)
                + "\n"
                + _label(wording["draft_label"], demo.draft)
                + "\n"
                + wording["output_label"]
                + ":\n"
                + words
            )
        elif kind == "interp":
            lines = [
                _label(wording["source_label"], demo.x),
                _label(wording["words_label"], ", ".join(demo.words)),
                wording["output_label"] + ":",
            ]
            lines.extend(_interp_lines(demo.interpretations))
            blocks.append("\n".join(lines))
        else:  # igt_refine
            lines = [
                _label(wording["source_label"], demo.x),
                _label(wording["draft_label"], demo.draft),
                wording["interp_label"] + ":",
            ]
            lines.extend(_interp_lines(demo.interpretations))
            lines.append(_label(wording["output_label"], demo.final))
            blocks.append("\n".join(lines))
    return blocks


def _query_block(kind: str, wording: dict[str, str], query: dict) -> str:
    source = query["source"]
    if kind == "mt":
        return _label(wording["source_label"], source) + "\n" + wording["output_label"] + ":"
    if kind == "diff_detect":
        return (
            _label(wording["source_label"], source)
            + "\n"
            + _label(wording["draft_label"], query.get("draft", ""))
            + "\n"
            + wording["output_label"]
            + ":"
        )
    if kind == "interp":
        return (
            _label(wording["source_label"], source)
            + "\n"
            + _label(wording["words_label"], ", ".join(query["words"]))
            + "\n"
            + wording["output_label"]
            + ":"
        )
    if kind == "igt_refine":
        lines = [
            _label(wording["source_label"], source),
            _label(wording["draft_label"], query.get("draft", "")),
            wording["interp_label"] + ":",
        ]
        lines.extend(_interp_lines(query.get("interpretations", [])))
        lines.append(wording["output_label"] + ":")
        return "\n".join(lines)
    # demo_synth
    return (
        _label(wording["source_label"], source)
        + "\n"
        + _label(wording["target_label"], query["target"])
    )


def _strip_item(line: str) -> str:
    item = _MARKER_RE.sub("", line).strip()
    while item.startswith("**") and item.endswith("**") and len(item) > 4:
        item = item[2:-2].strip()
    for opener, closer in _QUOTE_PAIRS:
        if len(item) > 1 and item.startswith(opener) and item.endswith(closer):
            item = item[1:-1].strip()
    return item


def parse_difficult_words(raw: str) -> list[str]:
    """Extract a difficult-word list from a model response.

    Accepts newline- or comma-separated items with optional numbering,
    bullets, bold markers, and quotes.  Refusals and empty responses give
    an empty list.  Items are NFC-normalized and deduplicated preserving
    first occurrence.
    """
    if not isinstance(raw, str):
        return []
    text = raw.strip()
    if text.lower() in _REFUSALS:
        return []
    lines = [ln for ln in text.splitlines() if ln.strip()]
    items: list[str] = []
    for line in lines:
        stripped = _strip_item(line)
        if not stripped:
            continue
        # A pure header line ("Mistranslated Words:") carries no item.
        if stripped.endswith((":", "：")) and len(lines) > 1:
            continue
        items.append(stripped)
    if len(items) == 1 and re.search(r"[,，、]", items[0]):
        items = [part.strip() for part in re.split(r"[,，、]", items[0]) if part.strip()]
        items = [_strip_item(part) for part in items]
    seen: dict[str, None] = {}
    for item in items:
        canonical = nfc(item)
        if canonical and canonical.lower() not in _REFUSALS and canonical not in seen:
            seen[canonical] = None
    return list(seen)


def parse_interpretations(raw: str, expected: list[str]) -> InterpretationParse | ParseFailure:
    """Map expected words to glosses from a "word: gloss" response.

    Words the response does not cover are reported in ``shortfall``,
    never fabricated.  A non-empty response with no recognizable
    word/gloss structure is a :class:`ParseFailure`.
    """
    if not expected:
        raise ValueError("expected word list must be non-empty")
    expected_canonical = {nfc(w): w for w in expected}
    glosses: dict[str, str] = {}
    saw_separator = False
    if isinstance(raw, str):
        for line in raw.splitlines():
            stripped = _strip_item(line)
            if not stripped:
                continue
            match = re.match(r"^(.*?)\s*(?:::|[:：])\s*(.+)$", stripped)
            if not match:
                continue
            saw_separator = True
            word = nfc(_strip_item(match.group(1)))
            gloss = match.group(2).strip()
            if word in expected_canonical and gloss:
                original = expected_canonical[word]
                glosses.setdefault(original, gloss)
    if not glosses and not saw_separator and isinstance(raw, str) and raw.strip():
        return ParseFailure("no word/gloss structure found", raw)
    shortfall = tuple(w for w in expected if w not in glosses)
    return InterpretationParse(glosses=glosses, shortfall=shortfall)


def parse_demo_synthesis(raw: str) -> DemoSynthesisParse | ParseFailure:
    """Parse the post-explanation format: lines of ``<<word>> :: <<gloss>>``.

    A refusal-style reply counts as zero difficult words, not a failure.
    """
    if not isinstance(raw, str) or not raw.strip():
        return ParseFailure("unparseable demo synthesis", raw if isinstance(raw, str) else "")
    if raw.strip().lower() in _REFUSALS:
        return DemoSynthesisParse(words=(), glosses={})
    words: list[str] = []
    glosses: dict[str, str] = {}
    for match in _SYNTH_LINE_RE.finditer(raw):
        word = nfc(match.group(1))
        gloss = match.group(2).strip()
        if word and gloss and word not in glosses:
            words.append(word)
            glosses[word] = gloss
    if not words:
        return ParseFailure("unparseable demo synthesis", raw)
    return DemoSynthesisParse(words=tuple(words), glosses=glosses)


def format_difficult_words(words: list[str]) -> str:
    """Canonical one-per-line response text for a word list."""
    return "\n".join(words) if words else "None"


def format_interpretations(glosses: dict[str, str]) -> str:
    return "\n".join(f"{word}: {gloss}" for word, gloss in glosses.items())


def format_demo_synthesis(glosses: dict[str, str]) -> str:
    return "\n".join(f"<<{word}>> :: <<{gloss}>>" for word, gloss in glosses.items())
