import json

import pytest

import evadebench as eb


def test_auc_and_threshold():
    assert eb.compute_auc([3, 4], [1, 2]) == 1.0
    assert eb.compute_auc([3, 4], [1, 2], "lower_is_mgt") == 0.0
    assert eb.compute_auc([1, 1], [1, 1]) == 0.5
    assert eb.optimal_f1_threshold([3, 4], [1, 2]) == 3
    with pytest.raises(eb.InputError):
        eb.compute_auc([], [1])


def test_text_metrics():
    assert eb.tokenize("Hello, World!") == ["hello", ",", "world", "!"]
    assert eb.rouge_l("a b c d", "a c d") == pytest.approx(2 * 3 / 7)
    assert eb.raft_budget(100, 0.15) == 15
    assert eb.blend_assignment("One. Two. Three. Four.", ["A", "B"]) == ["A", "B", "A", "B"]
    assert len(eb.split_sentences("One. Two!")) == 2


def test_ngram_and_detectors():
    model = eb.NgramModel.train(["the cat sat on the mat .", "the dog sat on the log ."], order=2)
    scores = model.score_text("the cat sat")
    assert [s["token"] for s in scores] == ["the", "cat", "sat"]
    assert all(s["logprob"] <= 0 for s in scores)
    assert model.perplexity("the cat sat") > 1
    assert eb.detector_direction("log_likelihood") == "higher_is_mgt"
    assert "binoculars" in eb.metric_detector_names()
    ll = eb.metric_score("log_likelihood", model, "the cat sat on the mat .")
    assert ll == pytest.approx(sum(s["logprob"] for s in model.score_text("the cat sat on the mat .")) / 7)


def test_split_corpus():
    samples = [
        {"id": f"m{i}", "text": "t", "label": "machine", "generator": "g", "dataset": "d", "domain": "x", "split": "unassigned"}
        for i in range(10)
    ]
    out = eb.split_corpus(samples, 0.8, 3)
    assert sum(s["split"] == "train" for s in out) == 8
    splits = {s["id"]: s["split"] for s in out}
    assert splits == {s["id"]: s["split"] for s in eb.split_corpus(list(reversed(samples)), 0.8, 3)}


def test_pipeline_round_trip(tmp_path):
    bench = eb.write_synthetic(tmp_path / "bench", seed=2, per_class=20)
    config = bench["config"]
    store = tmp_path / "store"
    assert eb.run_command("ingest", config, store)["samples"] == 40
    eb.run_command("attack", config, store, attacks=["dipper"])
    eb.run_command("score", config, store, detectors=["log_likelihood"])
    eval_summary = eb.run_command("eval", config, store, detectors=["log_likelihood"])
    assert eval_summary["cells"] > 0
    report = eb.run_command("report", config, store)
    assert "clean" in report["mean_auc"]
    with pytest.raises(eb.InputError):
        eb.run_command("dance", config, store)
    assert json.loads((store / "manifest.json").read_text())["runs"]
