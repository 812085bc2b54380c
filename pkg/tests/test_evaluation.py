import json
import random

import pytest

from tablenli.evaluation import (
    LabelSpace,
    compute_metrics,
    load_dataset,
    normalize_label,
    numerical_subset,
    project_label,
    run_eval,
)
from tablenli.pipeline import UsageError

LABELS = ["SUPPORTS", "REFUTES", "NEI"]


def oracle_metrics(preds, golds):
    labels = sorted(set(golds))
    f1s = []
    for lab in labels:
        tp = fp = fn = 0
        for p, g in zip(preds, golds):
            if p == lab and g == lab:
                tp += 1
            elif p == lab:
                fp += 1
            elif g == lab:
                fn += 1
        f1s.append(0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn))
    acc = sum(p == g for p, g in zip(preds, golds)) / len(golds)
    return acc, sum(f1s) / len(f1s)


def test_hand_computed_example():
    m = compute_metrics(["S", "R", "R", "R"], ["S", "S", "R", "R"])
    assert m.accuracy == 0.75
    assert m.macro_f1 == pytest.approx((2 / 3 + 4 / 5) / 2)
    assert m.per_label["SUPPORTS"].recall == 0.5


def test_perfect_predictions():
    m = compute_metrics(LABELS, LABELS)
    assert m.accuracy == 1.0 and m.macro_f1 == 1.0


def test_random_pairs_match_oracle():
    rng = random.Random(7)
    for _ in range(1000):
        n = rng.randint(1, 12)
        preds = [rng.choice(LABELS) for _ in range(n)]
        golds = [rng.choice(LABELS) for _ in range(n)]
        m = compute_metrics(preds, golds)
        acc, f1 = oracle_metrics(preds, golds)
        assert m.accuracy == pytest.approx(acc) and m.macro_f1 == pytest.approx(f1)


def test_two_way_projection():
    m = compute_metrics(["NEI", "SUPPORTS"], ["NOT_SUPPORTED", "SUPPORTS"], LabelSpace.TWO_WAY)
    assert m.accuracy == 1.0
    assert project_label("SUPPORTS", "two_way") == "SUPPORTS"
    assert project_label("REFUTES", "two_way") == "NOT_SUPPORTED"


def test_length_mismatch_and_unknown_label():
    with pytest.raises(UsageError):
        compute_metrics(["S"], [])
    with pytest.raises(UsageError):
        normalize_label("MAYBE")


def test_empty_metrics_are_undefined():
    m = compute_metrics([], [])
    assert m.undefined and m.accuracy is None and m.to_dict()["undefined"]


def _write(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


@pytest.fixture
def feverous_file(tmp_path, cases):
    recs = [{"id": c["id"], "claim": c["claim"], "label": c["label"], "tables": c["tables"]}
            for c in cases.values()]
    return _write(tmp_path / "dev.jsonl", recs)


def test_load_dataset_skips_bad_lines(tmp_path, cases, caplog):
    c = cases["ortegal"]
    path = tmp_path / "d.jsonl"
    path.write_text(json.dumps({"id": 1, "claim": c["claim"], "label": "REFUTES", "tables": c["tables"]})
                    + "\n{not json\n" + json.dumps({"id": 2, "claim": "x"}) + "\n", encoding="utf-8")
    ds = load_dataset(path)
    assert len(ds.instances) == 1 and ds.skipped == 2
    assert ds.label_space is LabelSpace.THREE_WAY
    assert "skipped" in caplog.text


def test_load_tabfact(tmp_path):
    path = _write(tmp_path / "t.jsonl", [{"id": "t1", "claim": "a has 2", "label": 1,
                                          "table": [["name", "n"], ["a", "2"]]}])
    ds = load_dataset(path, "tabfact-jsonl")
    assert ds.label_space is LabelSpace.TWO_WAY
    inst = ds.instances[0]
    assert inst.label == "SUPPORTS" and inst.tables[0].header_row_count == 1


def test_load_dataset_rejects_format(tmp_path):
    with pytest.raises(UsageError):
        load_dataset(tmp_path / "x", "csv")


def test_numerical_subset_sources(feverous_file):
    ds = load_dataset(feverous_file)
    subset, source = numerical_subset(ds.instances)
    assert source == "numeral-detection" and len(subset) == 3
    ds.instances[0].numerical = True
    subset, source = numerical_subset(ds.instances)
    assert source == "flag" and len(subset) == 1


def test_run_eval_on_bundled_traces(engine, feverous_file, tmp_path):
    ds = load_dataset(feverous_file)
    out = tmp_path / "out.jsonl"
    result = run_eval(ds.instances, engine, out)
    assert result.metrics.accuracy == 1.0 and result.metrics.execution_found == 1.0
    verdicts = {r["id"]: r["verdict"] for r in result.records}
    assert verdicts == {"ortegal": "REFUTES", "washington-primary": "SUPPORTS", "globe-telecom": "SUPPORTS"}
    assert len(out.read_text().splitlines()) == 3


def test_resume_skips_completed_ids(engine, feverous_file, tmp_path):
    ds = load_dataset(feverous_file)
    out = tmp_path / "out.jsonl"
    first = run_eval(ds.instances[:2], engine, out)
    calls = []

    def counting(inst):
        calls.append(inst.id)
        return engine.verify_claim(inst.claim, inst.tables, inst.id).to_dict(with_diagnostics=False)

    resumed = run_eval(ds.instances, counting, out, resume=True)
    assert calls == [ds.instances[2].id]
    assert len(out.read_text().splitlines()) == 3
    full = run_eval(ds.instances, engine, tmp_path / "fresh.jsonl")
    assert resumed.metrics == full.metrics
    assert first.metrics.n == 2


def test_failing_instance_degrades(feverous_file):
    ds = load_dataset(feverous_file)

    def broken(inst):
        raise RuntimeError("boom")

    result = run_eval(ds.instances, broken, parallel=2)
    assert all(r["verdict"] == "NEI" for r in result.records)
    assert result.metrics.execution_found == 0.0


def test_empty_dataset(engine):
    result = run_eval([], engine)
    assert result.records == [] and result.metrics.undefined
