"""Shared fixtures: a reply-synthesizing backend and a scripted corpus.

The synthesizing backend derives every reply from a seeded RNG keyed by
the prompt digest, so replies are a pure function of (prompt, decode,
draw index, seed).  Recording those replies yields a playbook that
replays byte-identically through the plain scripted backend.
"""

from __future__ import annotations

import json
import random
from dataclasses import replace
from pathlib import Path

import pytest

from duat.cli import translate_one
from duat.core import (
    DemonstrationSets,
    LangPair,
    PipelineConfig,
    load_corpus,
    validate_config,
)
from duat.demos import assemble_sets, save_demos, synthesize
from duat.llm import GREEDY, LlmGateway, playbook_digest
from duat.qe import StubQe

CORPUS_SENTENCES = [
    "the committee ratified the unprecedented moratorium despite fierce objections",
    "a drought parched the terraced vineyards overlooking the basalt coastline",
    "her wry remarks unsettled the complacent delegates at the plenary session",
    "the translator wrestled with the idiom about burning bridges behind oneself",
    "quantum annealing hardware outperformed the heuristic scheduler by a wide margin",
    "the museum repatriated the looted bronzes after decades of litigation",
    "an off-the-record briefing derailed the fragile ceasefire negotiations",
    "the startup pivoted toward subscription revenue after the funding winter",
    "干旱的河床 cracked beneath the relentless festival crowds",
    "the ombudsman chastised the ministry for its opaque procurement practices",
    "glacier meltwater recharged the aquifer feeding the downstream orchards",
    "the novelist satirized the echo chamber 信息茧房 of modern media",
    "volunteers shored up the levee before the typhoon made landfall",
    "the tribunal upheld the whistleblower statute in a landmark ruling",
    "counterfeit semiconductors infiltrated the aerospace supply chain",
    "the archivist digitized brittle manuscripts from the monastery cellar",
    "a rogue trader concealed catastrophic losses in offshore ledgers",
    "the choreographer fused flamenco with contemporary vernacular movement",
    "hyperinflation eroded pensions faster than the indexation could adjust",
    "the summit communique papered over deep rifts on carbon tariffs",
]

REFS = [
    "委员会不顾强烈反对批准了前所未有的暂停令",
    "干旱使俯瞰玄武岩海岸线的梯田葡萄园干涸",
    "她的挖苦言论让全体会议上自满的代表们不安",
    "译者为破釜沉舟这个习语绞尽脑汁",
    "量子退火硬件大幅超越了启发式调度器",
    "博物馆在数十年诉讼后归还了被掠夺的铜器",
    "一次私下吹风会使脆弱的停火谈判脱轨",
    "资本寒冬之后这家初创公司转向订阅收入",
    "河床在狂欢的人群脚下干裂",
    "监察专员斥责该部采购不透明",
    "冰川融水补给了灌溉下游果园的含水层",
    "小说家讽刺了现代媒体的信息茧房",
    "台风登陆前志愿者加固了堤坝",
    "法庭在里程碑式的裁决中维持了吹哨人法令",
    "假冒半导体渗入了航空航天供应链",
    "档案员将修道院地窖里脆弱的手稿数字化",
    "一名流氓交易员在离岸账本中隐瞒了灾难性损失",
    "编舞家将弗拉明戈与当代方言动作融合",
    "恶性通货膨胀侵蚀养老金的速度快于指数化调整",
    "峰会公报掩盖了碳关税上的深刻分歧",
]


def _last_field(prompt: str, label: str) -> str:
    value = ""
    for line in prompt.splitlines():
        if line.startswith(label + ":"):
            value = line[len(label) + 1 :].strip()
    return value


def _query_interp_words(prompt: str) -> list[str]:
    """Words listed in the query's interpretation section (igt prompts)."""
    lines = prompt.splitlines()
    start = None
    for i, line in enumerate(lines):
        if line == "Interpretations of Difficult Words:":
            start = i
    if start is None:
        return []
    words = []
    for line in lines[start + 1 :]:
        if line.startswith("Revised Translation:"):
            break
        word = line.split(":", 1)[0].strip()
        if word:
            words.append(word)
    return words


class SynthesizingBackend:
    """Derives deterministic canned replies and records them as a playbook."""

    supports_sampling = True
    max_context_chars = 500_000

    def __init__(self, seed: int = 7):
        self.seed = seed
        self.rows: dict[tuple[str, int], str] = {}

    def complete(self, req) -> str:
        digest = playbook_digest(req.prompt, req.decode)
        k = 0 if req.decode == GREEDY else (req.draw_index or 0)
        key = (digest, k)
        if key not in self.rows:
            self.rows[key] = self._reply(req.prompt, digest, k)
        return self.rows[key]

    def dump(self, path: Path) -> None:
        with path.open("w", encoding="utf-8") as handle:
            for (digest, k) in sorted(self.rows):
                row = {"digest": digest, "k": k, "reply": self.rows[(digest, k)]}
                handle.write(json.dumps(row, ensure_ascii=False) + "\n")

    def _reply(self, prompt: str, digest: str, k: int) -> str:
        rng = random.Random(f"{self.seed}:{digest}:{k}")
        header = prompt.splitlines()[0]
        if "Please translate" in header:
            return self._mangle(_last_field(prompt, "Source Sentence"), rng)
        if "output the mistranslated" in header:
            tokens = [t for t in _last_field(prompt, "Source Sentence").split() if len(t) >= 4]
            count = rng.randint(0, min(3, len(tokens)))
            picks = rng.sample(tokens, count) if count else []
            if not picks:
                return "None"
            return "\n".join(f"{i + 1}. {w}" for i, w in enumerate(picks))
        if "concise interpretation" in header:
            words = [w for w in _last_field(prompt, "Difficult Words").split(", ") if w]
            return "\n".join(f"{w}: sense {rng.randint(0, 99)} of {w}" for w in words)
        if "revise the translation" in header:
            draft = _last_field(prompt, "Draft Translation")
            tokens = draft.split() if draft else ["fresh", "rendering"]
            kept = [t for t in tokens if rng.random() < 0.85] or tokens[:1]
            for word in _query_interp_words(prompt):
                if rng.random() < 0.5:
                    kept.append(word)
            kept.append(f"v{rng.randint(0, 9)}")
            return " ".join(kept)
        if "difficult-to-translate words" in header:
            tokens = [t for t in _last_field(prompt, "Source Sentence").split() if len(t) >= 4]
            count = rng.randint(1, min(3, max(1, len(tokens))))
            picks = rng.sample(tokens, min(count, len(tokens)))
            return "\n".join(f"<<{w}>> :: <<gloss {rng.randint(0, 99)} for {w}>>" for w in picks)
        raise AssertionError(f"unrecognized prompt header: {header!r}")

    @staticmethod
    def _mangle(text: str, rng: random.Random) -> str:
        out = []
        for token in text.split():
            roll = rng.random()
            if roll < 0.45:
                out.append(token)
            elif roll < 0.75:
                out.append(token[::-1])
            else:
                out.append(token[0] + token[2:] if len(token) > 2 else token)
        return " ".join(out) if out else "blank"


@pytest.fixture(scope="session")
def lang_pair() -> LangPair:
    return LangPair.from_codes("en", "zh")


@pytest.fixture(scope="session")
def scripted_fixture(tmp_path_factory) -> dict:
    """Corpus, synthesized demos, and a full playbook covering both modes."""
    root = tmp_path_factory.mktemp("fixture")
    corpus_path = root / "corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as handle:
        for i, (src, ref) in enumerate(zip(CORPUS_SENTENCES, REFS), start=1):
            handle.write(
                json.dumps({"id": f"s{i:02d}", "src": src, "ref": ref}, ensure_ascii=False) + "\n"
            )

    pair = LangPair.from_codes("en", "zh")
    backend = SynthesizingBackend(seed=7)
    gateway = LlmGateway(backend, backoff_s=0.0)
    qe = StubQe()
    pairs = load_corpus(corpus_path)

    # Demonstrations come from the same corpus via the synthesis path.
    synthesized, skips = synthesize(pairs[:16], pair, gateway, qe)
    assert not skips, f"fixture synthesis skipped pairs: {skips}"
    demos_path = root / "demos.jsonl"
    save_demos(synthesized, demos_path)
    demosets = assemble_sets(synthesized, shots=8, seed=1)

    cfg = validate_config(PipelineConfig(mode="duat-e", shots=8))
    for sp in pairs:
        translate_one(sp, pair, cfg, demosets, gateway, qe)
    for sp in pairs:
        translate_one(sp, pair, replace(cfg, mode="duat-i"), demosets, gateway, qe)
    # Threshold-sweep and ablation arms reach prompts the default run does
    # not; cover them so CLI replays stay fully scripted.
    for tau in (0.10, 0.13, 0.15, 0.17, 0.19):
        point = replace(cfg, difficulty_threshold=tau)
        for sp in pairs:
            translate_one(sp, pair, point, demosets, gateway, qe)
    for sp in pairs:
        translate_one(sp, pair, cfg, demosets, gateway, qe, without_draft=True)
    for language_mode in ("source", "source-then-translate"):
        point = replace(cfg, interpretation_language=language_mode)
        for sp in pairs:
            translate_one(sp, pair, point, demosets, gateway, qe)

    playbook_path = root / "playbook.jsonl"
    backend.dump(playbook_path)
    return {
        "corpus": corpus_path,
        "demos": demos_path,
        "playbook": playbook_path,
        "pair": pair,
        "sentences": len(pairs),
    }
