import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duat.core import DemonstrationSets, DifficultWord, LangPair
from duat.detection import (
    DetectionError,
    detect_external,
    detect_intrinsic,
    draft_translate,
    select_by_threshold,
)
from duat.llm import LlmGateway, LlmRequest, SAMPLE, ScriptedBackend
from duat.prompts import parse_difficult_words, render
from duat.qe import HIGHER_WORSE, QeScore, StubQe

PAIR = LangPair.from_codes("en", "zh")
EMPTY = DemonstrationSets.empty()


def scripted(prompt_reply: dict[str, str], draws: dict[str, list[str]] | None = None):
    backend = ScriptedBackend()
    for prompt, reply in prompt_reply.items():
        backend.add(prompt, reply)
    for prompt, variants in (draws or {}).items():
        for k, reply in enumerate(variants):
            backend.add(prompt, reply, decode=SAMPLE, k=k)
    return LlmGateway(backend, backoff_s=0.0)


def test_draft_translate_scripted_verbatim():
    prompt = render("mt", PAIR, EMPTY, {"source": "hello"})
    gateway = scripted({prompt: "你好"})
    assert draft_translate("hello", PAIR, EMPTY, gateway) == "你好"


def test_draft_translate_zero_shot_path():
    prompt = render("mt", PAIR, EMPTY, {"source": "hello"})
    assert "Source Sentence: hello" in prompt
    gateway = scripted({prompt: "draft"})
    assert draft_translate("hello", PAIR, EMPTY, gateway) == "draft"


def test_draft_translate_deterministic():
    prompt = render("mt", PAIR, EMPTY, {"source": "hello"})
    gateway = scripted({prompt: "你好"})
    assert draft_translate("hello", PAIR, EMPTY, gateway) == draft_translate(
        "hello", PAIR, EMPTY, gateway
    )


def test_draft_translate_empty_reply_is_error():
    prompt = render("mt", PAIR, EMPTY, {"source": "hello"})
    gateway = scripted({prompt: "   "})
    with pytest.raises(DetectionError, match="empty draft"):
        draft_translate("hello", PAIR, EMPTY, gateway)


def _diff_prompt(x: str, draft: str) -> str:
    return render("diff_detect", PAIR, EMPTY, {"source": x, "draft": draft})


def test_detect_intrinsic_single_word():
    x, draft = "the 崩塌 case", "draft text"
    gateway = scripted({_diff_prompt(x, draft): "崩塌"})
    words = detect_intrinsic(x, draft, PAIR, EMPTY, gateway)
    assert [w.surface for w in words] == ["崩塌"]
    assert words[0].origin == "intrinsic-greedy"
    assert words[0].score is None
    assert words[0].anchored


def test_detect_intrinsic_none_reply():
    gateway = scripted({_diff_prompt("x", "d"): "None"})
    assert detect_intrinsic("x", "d", PAIR, EMPTY, gateway) == []


def test_detect_intrinsic_dedup_and_anchor_flag():
    x = "alpha beta"
    gateway = scripted({_diff_prompt(x, "d"): "alpha\nalpha\nghost"})
    words = detect_intrinsic(x, "d", PAIR, EMPTY, gateway)
    assert [w.surface for w in words] == ["alpha", "ghost"]
    assert words[0].anchored and not words[1].anchored


class MappedSpanQe:
    """Hand-specified span scores for selection tests."""

    def __init__(self, values: dict[str, float]):
        self.values = values

    def score_source_span(self, src, draft, span):
        return QeScore("stub-lcs", self.values[span], HIGHER_WORSE)


def test_detect_external_union_of_draws():
    x = "a b c here"
    draws = ["a", "a\nb", "", "b", "c"]
    gateway = scripted({}, draws={_diff_prompt(x, "draft"): draws})
    qe = MappedSpanQe({"a": 0.9, "b": 0.1, "c": 0.5})
    result = detect_external(x, "draft", PAIR, EMPTY, gateway, qe, 5, 0.5, 0.14)
    assert [w.surface for w in result.candidates] == ["a", "b", "c"]
    # Brute-force union of the individually parsed draws.
    brute = set()
    for reply in draws:
        brute |= set(parse_difficult_words(reply))
    assert {w.surface for w in result.candidates} == brute


def test_detect_external_threshold_selection():
    x = "a b c here"
    gateway = scripted({}, draws={_diff_prompt(x, "draft"): ["a", "a\nb", "", "b", "c"]})
    qe = MappedSpanQe({"a": 0.9, "b": 0.1, "c": 0.5})
    result = detect_external(x, "draft", PAIR, EMPTY, gateway, qe, 5, 0.5, 0.14)
    assert [w.surface for w in result.selected] == ["a", "c"]
    assert all(w.origin == "selected" for w in result.selected)
    assert result.tau == 0.14


def test_detect_external_tau_above_scorer_max():
    x = "a here"
    gateway = scripted({}, draws={_diff_prompt(x, "draft"): ["a"]})
    qe = MappedSpanQe({"a": 1.0})
    result = detect_external(x, "draft", PAIR, EMPTY, gateway, qe, 1, 0.5, 1.0)
    assert result.candidates and not result.selected


def test_detect_external_qe_failure_carries_partial():
    x = "a b here"

    class FailsOnB:
        def score_source_span(self, src, draft, span):
            if span == "b":
                raise RuntimeError("scorer down")
            return QeScore("stub-lcs", 0.4, HIGHER_WORSE)

    gateway = scripted({}, draws={_diff_prompt(x, "draft"): ["a\nb"]})
    with pytest.raises(DetectionError) as err:
        detect_external(x, "draft", PAIR, EMPTY, gateway, FailsOnB(), 1, 0.5, 0.14)
    assert [w.surface for w in err.value.partial] == ["a"]


# Hand-computed stub misalignment scores (1 - LCS/len(span)):
#   abcdefghij (10) vs "abcdefghi" -> 1 - 9/10  = 0.1
#   klmnopq    (7)  vs "klmnop"    -> 1 - 6/7  ~= 0.1429
#   rstuvw     (6)  vs "rstuv"     -> 1 - 5/6  ~= 0.1667
#   01234      (5)  vs "0123"      -> 1 - 4/5   = 0.2
#   xyz123456  (9)  vs "xyz12345"  -> 1 - 8/9  ~= 0.1111
GRID_SOURCE = "abcdefghij klmnopq rstuvw 01234 xyz123456 filler"
GRID_DRAFT = "abcdefghi klmnop rstuv 0123 xyz12345"
GRID_DRAWS = ["abcdefghij\nklmnopq", "klmnopq\nrstuvw", "None", "01234", "xyz123456\nabcdefghij"]
GRID_EXPECTED = {
    0.10: ["klmnopq", "rstuvw", "01234", "xyz123456"],  # 0.1 excluded: strict >
    0.13: ["klmnopq", "rstuvw", "01234"],
    0.15: ["rstuvw", "01234"],
    0.17: ["01234"],
    0.19: ["01234"],
}


def test_grid_selection_matches_hand_computed_sets():
    gateway = scripted({}, draws={_diff_prompt(GRID_SOURCE, GRID_DRAFT): GRID_DRAWS})
    stub = StubQe()
    previous = None
    for tau, expected in GRID_EXPECTED.items():
        gateway_fresh = scripted({}, draws={_diff_prompt(GRID_SOURCE, GRID_DRAFT): GRID_DRAWS})
        result = detect_external(
            GRID_SOURCE, GRID_DRAFT, PAIR, EMPTY, gateway_fresh, stub, 5, 0.5, tau
        )
        got = [w.surface for w in result.selected]
        assert got == expected, f"tau={tau}"
        if previous is not None:
            assert set(got) <= set(previous)  # nested decreasing
        previous = got


@settings(max_examples=60)
@given(
    scores=st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=0, max_size=8),
    tau1=st.floats(0.0, 1.0, allow_nan=False),
    tau2=st.floats(0.0, 1.0, allow_nan=False),
)
def test_threshold_monotonicity(scores, tau1, tau2):
    lo, hi = min(tau1, tau2), max(tau1, tau2)
    candidates = [
        DifficultWord(f"w{i}", score=s, origin="sampled") for i, s in enumerate(scores)
    ]
    wide = {w.surface for w in select_by_threshold(candidates, lo)}
    narrow = {w.surface for w in select_by_threshold(candidates, hi)}
    assert narrow <= wide


def test_duat_i_reproducible(scripted_fixture):
    from dataclasses import replace

    from duat.cli import translate_one
    from duat.core import PipelineConfig, load_corpus, validate_config
    from duat.demos import assemble_sets, load_demos

    pairs = load_corpus(scripted_fixture["corpus"])[:3]
    demosets = assemble_sets(load_demos(scripted_fixture["demos"]), 8, 1)
    cfg = validate_config(PipelineConfig(mode="duat-i", shots=8))

    def run():
        backend = ScriptedBackend.from_playbook(scripted_fixture["playbook"])
        gateway = LlmGateway(backend, backoff_s=0.0)
        return [
            translate_one(sp, scripted_fixture["pair"], cfg, demosets, gateway, StubQe())
            for sp in pairs
        ]

    assert run() == run()
