import pytest

from duat.core import DemonstrationSets, Interpretation, LangPair, SentencePair
from duat.demos import (
    SynthesizedDemo,
    assemble_sets,
    demo_from_json,
    demo_to_json,
    load_demos,
    save_demos,
    synthesize,
)
from duat.llm import LlmGateway, ScriptedBackend
from duat.prompts import render
from duat.qe import HIGHER_BETTER, QeScore

PAIR = LangPair.from_codes("en", "zh")
EMPTY = DemonstrationSets.empty()


class MappedRefMetric:
    """Reference-based metric with hand-specified candidate values."""

    def __init__(self, values: dict[str, float]):
        self.values = values

    def score_sentence(self, src, cand, ref=None):
        assert ref is not None, "synthesis quality control is reference-based"
        return QeScore("stub-chrf3-ref", self.values[cand], HIGHER_BETTER)


def _mt_prompt(x: str) -> str:
    return render("mt", PAIR, EMPTY, {"source": x})


def _synth_prompt(x: str, y: str) -> str:
    return render("demo_synth", PAIR, EMPTY, {"source": x, "target": y})


def _igt_prompt(x: str, draft: str, interps: list[tuple[str, str]]) -> str:
    return render("igt_refine", PAIR, EMPTY, {"source": x, "draft": draft, "interpretations": interps})


def test_synthesize_qc_removes_one_of_two():
    sp = SentencePair(id="p1", src="source one", ref="参考一")
    backend = ScriptedBackend()
    backend.add(_mt_prompt(sp.src), "draft one")
    backend.add(_synth_prompt(sp.src, sp.ref), "<<w1>> :: <<g1>>\n<<w2>> :: <<g2>>")
    backend.add(_igt_prompt(sp.src, "draft one", [("w1", "g1"), ("w2", "g2")]), "T_full")
    backend.add(_igt_prompt(sp.src, "draft one", [("w2", "g2")]), "T_minus1")
    backend.add(_igt_prompt(sp.src, "draft one", []), "T_empty")
    gateway = LlmGateway(backend, backoff_s=0.0)
    metric = MappedRefMetric({"T_full": 0.5, "T_minus1": 0.7, "T_empty": 0.6})

    demos, skips = synthesize([sp], PAIR, gateway, metric)
    assert not skips
    demo = demos[0]
    assert demo.words == ("w1", "w2")
    assert [a.word for a in demo.kept] == ["w2"]
    assert demo.final == "T_minus1"
    # Reference-based QC monotonicity by the accept rule.
    assert metric.values[demo.final] >= metric.values["T_full"]


def test_synthesize_empty_words_is_mt_only():
    sp = SentencePair(id="p1", src="simple text", ref="简单文本")
    backend = ScriptedBackend()
    backend.add(_mt_prompt(sp.src), "draft")
    backend.add(_synth_prompt(sp.src, sp.ref), "None")
    gateway = LlmGateway(backend, backoff_s=0.0)

    demos, skips = synthesize([sp], PAIR, gateway, MappedRefMetric({}))
    assert not skips
    assert demos[0].mt_only
    assert demos[0].final == "draft"


def test_synthesize_batch_skips_unparseable():
    pairs = [
        SentencePair(id=f"p{i}", src=f"source {i}", ref=f"参考 {i}") for i in range(3)
    ]
    backend = ScriptedBackend()
    values = {}
    for i, sp in enumerate(pairs):
        backend.add(_mt_prompt(sp.src), f"draft {i}")
        if i == 1:
            backend.add(_synth_prompt(sp.src, sp.ref), "totally unstructured")
        else:
            backend.add(_synth_prompt(sp.src, sp.ref), f"<<w{i}>> :: <<g{i}>>")
            backend.add(_igt_prompt(sp.src, f"draft {i}", [(f"w{i}", f"g{i}")]), f"full{i}")
            backend.add(_igt_prompt(sp.src, f"draft {i}", []), f"empty{i}")
            values[f"full{i}"] = 0.8
            values[f"empty{i}"] = 0.2
    gateway = LlmGateway(backend, backoff_s=0.0)

    demos, skips = synthesize(pairs, PAIR, gateway, MappedRefMetric(values))
    assert len(demos) == 2
    assert len(skips) == 1
    assert skips[0].pair_id == "p1"
    assert skips[0].reason == "unparseable demo synthesis"


def test_synthesize_requires_reference():
    sp = SentencePair(id="p1", src="no ref here")
    demos, skips = synthesize([sp], PAIR, LlmGateway(ScriptedBackend()), MappedRefMetric({}))
    assert not demos
    assert skips[0].reason == "missing reference"


def _make_demo(i: int, kept: bool = True) -> SynthesizedDemo:
    status = "kept" if kept else "removed"
    interp = Interpretation(
        f"w{i}", f"g{i}", status=status, removed_at_step=None if kept else 0
    )
    return SynthesizedDemo(
        pair_id=f"p{i}",
        x=f"source {i}",
        y=f"ref {i}",
        draft=f"draft {i}",
        words=(f"w{i}",),
        interpretations=(interp,),
        final=f"final {i}",
    )


def test_assemble_sets_seeded_and_stable():
    demos = [_make_demo(i) for i in range(10)]
    first = assemble_sets(demos, 8, seed=1)
    second = assemble_sets(demos, 8, seed=1)
    assert first == second
    assert len(first.mt) == len(first.diff) == len(first.intp) == len(first.igt) == 8
    assert first.shots == 8
    assert assemble_sets(demos, 8, seed=2) != first


def test_assemble_sets_zero_shots():
    sets = assemble_sets([], 0, seed=1)
    assert sets == DemonstrationSets(shots=0)


def test_assemble_sets_insufficient_names_slot():
    demos = [_make_demo(i, kept=False) for i in range(10)]
    with pytest.raises(ValueError, match="slot intp: need 8, have 0"):
        assemble_sets(demos, 8, seed=1)


def test_assemble_sets_intp_lists_only_glossed_words():
    demo = SynthesizedDemo(
        pair_id="p",
        x="x",
        y="y",
        draft="d",
        words=("w1", "w2"),
        interpretations=(
            Interpretation("w1", "g1", status="kept"),
            Interpretation("w2", "g2", status="removed", removed_at_step=0),
        ),
        final="f",
    )
    sets = assemble_sets([demo], 1, seed=0)
    assert sets.intp[0].words == ("w1",)
    assert sets.diff[0].words == ("w1", "w2")  # detection pool keeps full D


def test_demo_file_round_trip(tmp_path):
    demos = [_make_demo(i) for i in range(3)]
    path = tmp_path / "demos.jsonl"
    save_demos(demos, path)
    assert load_demos(path) == demos
    assert demo_from_json(demo_to_json(demos[0])) == demos[0]
