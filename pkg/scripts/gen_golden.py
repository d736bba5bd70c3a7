"""Regenerate the cross-component golden scores for the stub scorers.

Both the in-process stub and the sidecar's stub mode must reproduce these
values bit for bit.  Run from the repository root:

    python3 scripts/gen_golden.py
"""

from __future__ import annotations

import json
from pathlib import Path

from duat.qe import SOURCE_VS_TRANSLATION, SPAN_VS_SOURCE, StubQe

CASES = [
    {"kind": "sentence", "src": "hello world", "cand": "hello world"},
    {"kind": "sentence", "src": "hello world", "cand": ""},
    {"kind": "sentence", "src": "the committee ratified the moratorium", "cand": "the committee ratified a moratorium"},
    {"kind": "sentence", "src": "abcdef", "cand": "abcde"},
    {"kind": "sentence", "src": "信息茧房崩塌了", "cand": "信息茧房倒塌了"},
    {"kind": "sentence", "src": "ab", "cand": "ab"},
    {"kind": "sentence_ref", "src": "src text", "cand": "候选译文", "ref": "参考译文"},
    {"kind": "sentence_ref", "src": "src text", "cand": "same words", "ref": "same words"},
    {"kind": "span", "host": "x abcd y", "counterpart": "the abcd here", "span": "abcd", "direction": SOURCE_VS_TRANSLATION},
    {"kind": "span", "host": "abcd here", "counterpart": "xyz", "span": "abcd", "direction": SOURCE_VS_TRANSLATION},
    {"kind": "span", "host": "abcd", "counterpart": "xx ab yy cd zz", "span": "abcd", "direction": SOURCE_VS_TRANSLATION},
    {"kind": "span", "host": "译文在此", "counterpart": "source 崩塌 text", "span": "崩塌了", "direction": SPAN_VS_SOURCE},
    {"kind": "span", "host": "h", "counterpart": "the committee ratified", "span": "committee ratified the", "direction": SOURCE_VS_TRANSLATION},
]


def main() -> None:
    stub = StubQe()
    out = []
    for case in CASES:
        row = dict(case)
        if case["kind"] == "sentence":
            row["value"] = stub.score_sentence(case["src"], case["cand"]).value
        elif case["kind"] == "sentence_ref":
            row["value"] = stub.score_sentence(case["src"], case["cand"], ref=case["ref"]).value
        else:
            row["value"] = stub.score_span(
                case["host"], case["counterpart"], case["span"], case["direction"]
            ).value
        out.append(row)
    target = Path(__file__).resolve().parents[1] / "golden" / "qe_stub_cases.json"
    target.parent.mkdir(exist_ok=True)
    target.write_text(json.dumps(out, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(out)} cases to {target}")


if __name__ == "__main__":
    main()
