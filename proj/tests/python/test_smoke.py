import json
import os
from pathlib import Path

import pytest

import acgen

ROOT = Path(os.environ.get("ACGEN_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def test_gherkin_round_trip():
    acs = acgen.parse_gherkin("GIVEN a member\nWHEN they renew\nTHEN the due date moves\nAND a receipt is sent")
    assert len(acs) == 1
    assert acs[0]["then"] == ["the due date moves", "a receipt is sent"]
    atomic = acgen.atomicize(acs)
    assert [a["then"] for a in atomic] == [["the due date moves"], ["a receipt is sent"]]
    assert acgen.parse_gherkin(acgen.render(acs))[0]["then"] == acs[0]["then"]


def test_metrics():
    m = acgen.ranking_metrics(["A", "B", "C"], {"A", "C"}, 3)
    assert m["average_precision"] == pytest.approx(5 / 6)
    assert acgen.levenshtein("kitten", "sitting") == 3
    assert acgen.rouge("a b c", "a b c", "1")["f1"] == 1.0
    assert acgen.bleu("the cat sat on the mat", ["the cat sat on a mat"]) == pytest.approx(0.537284965911771, abs=1e-9)


def test_errors_carry_codes():
    with pytest.raises(acgen.Error) as info:
        acgen.ranking_metrics(["A"], set(), 1)
    assert info.value.code == "EmptyRelevanceSet"


def test_toy_pipeline(tmp_path):
    p = acgen.Pipeline(ROOT / "config" / "pipeline.toy.json", run_dir=tmp_path / "run", cache_dir=tmp_path / "cache")
    out = p.run("all")
    assert out["run_id"] == p.run_id
    report = json.loads((p.run_path() / "report.json").read_text())
    assert report["run_id"] == p.run_id
    again = acgen.Pipeline(ROOT / "config" / "pipeline.toy.json", run_dir=tmp_path / "run2",
                           cache_dir=tmp_path / "cache", cache_mode="replay")
    again.run("all")
    first = (p.run_path() / "report.json").read_bytes()
    assert again.run_id == p.run_id
    assert (again.run_path() / "report.json").read_bytes() == first
    with pytest.raises(acgen.Error) as info:
        acgen.Pipeline(ROOT / "config" / "pipeline.toy.json", run_dir=tmp_path / "run3",
                       cache_dir=tmp_path / "cache").run("report")
    assert info.value.code == "MissingArtifact"
