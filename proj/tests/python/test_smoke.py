"""End-to-end smoke tests for the python bindings."""

import os

import pytest

import bioqa

FIXTURES = os.environ.get("BIOQA_FIXTURES", "tests/fixtures")


def fixture(name):
    return os.path.join(FIXTURES, name)


def test_tokenize_offsets():
    toks = bioqa.tokenize("fluorouracil, epirubicin")
    assert [(t["text"], t["begin"], t["end"]) for t in toks] == [
        ("fluorouracil", 0, 12),
        (",", 12, 13),
        ("epirubicin", 14, 24),
    ]
    assert bioqa.tokenize("") == []


def test_match_answer():
    assert bioqa.match_answer("p53", ["P53"])
    assert not bioqa.match_answer("β-glucocerebrosidase", ["Beta glucocerebrosidase"])


def test_bioasq_ingestion_and_stats():
    ds = bioqa.Dataset.from_bioasq(fixture("bioasq_tiny.json"))
    stats = ds.stats()
    assert stats["n_questions"] == 4
    assert stats["n_factoid"] == 2
    assert stats["n_list"] == 2
    assert 0.0 <= stats["extractable_fraction_list"] <= 1.0


def test_squad_ingestion_roundtrip(tmp_path):
    ds = bioqa.Dataset.from_squad(fixture("squad_tiny.json"))
    assert len(ds) == 3
    out = tmp_path / "canon.json"
    ds.save(str(out))
    again = bioqa.Dataset.load(str(out))
    assert again.ids() == ds.ids()


def test_make_folds_partition():
    ds = bioqa.Dataset.synthetic(11, seed=5)
    folds = bioqa.make_folds(ds, k=5, seed=9)
    sizes = sorted(len(f) for f in folds)
    assert sizes == [2, 2, 2, 2, 3]
    seen = [qid for f in folds for qid in f.ids()]
    assert sorted(seen) == sorted(ds.ids())


def test_train_predict_evaluate_cycle(tmp_path):
    ds = bioqa.Dataset.synthetic(12, seed=7)
    ckpt = str(tmp_path / "model.bqc")
    summary = bioqa.train(
        ds,
        ckpt,
        seed=5,
        hidden=12,
        steps=80,
        batch_size=4,
        dropout=0.0,
        lr=3e-3,
        char_dim=4,
        char_width=3,
        char_filters=6,
    )
    assert os.path.exists(ckpt)
    assert summary["final_loss"] < 1.0

    preds = bioqa.predict([ckpt], ds)
    assert len(preds) == len(ds)
    threshold = bioqa.tune_threshold(preds, ds)
    assert 0.0 <= threshold <= 1.0

    preds = bioqa.predict([ckpt], ds, threshold=threshold)
    report = bioqa.evaluate(preds, ds)
    assert report["factoid_mrr"] > 0.8
    assert report["list_f1"] > 0.8

    # an ensemble of two copies scores like the single model
    pair = bioqa.predict([ckpt, ckpt], ds, threshold=threshold)
    report2 = bioqa.evaluate(pair, ds)
    assert abs(report2["factoid_mrr"] - report["factoid_mrr"]) < 1e-12
    assert abs(report2["list_f1"] - report["list_f1"]) < 1e-12


def test_finetune_from_base(tmp_path):
    source = bioqa.Dataset.synthetic(10, seed=11, cue="marker")
    target = bioqa.Dataset.synthetic(8, seed=12, cue="vull")
    base = str(tmp_path / "base.bqc")
    tuned = str(tmp_path / "tuned.bqc")
    bioqa.train(source, base, seed=3, hidden=10, steps=60, batch_size=4,
                dropout=0.0, lr=3e-3, char_dim=4, char_width=3, char_filters=6)
    summary = bioqa.train(target, tuned, seed=4, steps=40, batch_size=4,
                          dropout=0.0, base_checkpoint=base, c_fc=1.0, c_l2=0.1)
    assert os.path.exists(tuned)
    assert summary["final_loss"] >= 0.0


def test_errors_surface_as_python_exceptions():
    with pytest.raises(Exception):
        bioqa.Dataset.from_squad("/nonexistent/file.json")
    # library errors arrive as the module's exception type
    with pytest.raises(bioqa.BioqaError):
        bioqa.tune_threshold([], bioqa.Dataset.synthetic(2, seed=1))
