"""Smoke tests for the python bindings: the main operations compose into
the score -> prune -> evaluate flow and agree with the file formats.

Runs standalone (python3 test_smoke.py) or under pytest.
"""

import math
import os
import tempfile

import moso


def make_spec(ds, seed=0):
    return moso.ModelSpec(
        kind=moso.ModelKind.logistic,
        dim=ds.dim,
        num_classes=ds.num_classes,
        init_seed=seed,
    )


def test_generate_and_noise():
    ds = moso.generate_blobs(num_classes=2, per_class=20, dim=2, spread=0.5, seed=7)
    assert len(ds) == 40
    assert ds.dim == 2 and ds.num_classes == 2
    again = moso.generate_blobs(2, 20, 2, 0.5, 7)
    assert ds == again

    noisy = moso.inject_label_noise(ds, rate=0.2, seed=3)
    flips = sum(1 for s in noisy.samples if s.noisy)
    assert 0 < flips <= 8
    assert all(
        a.features == b.features for a, b in zip(ds.samples, noisy.samples)
    )


def test_training_and_scoring():
    ds = moso.generate_blobs(2, 30, 2, 0.6, seed=11)
    spec = make_spec(ds, seed=5)
    cfg = moso.TrainConfig(epochs=8, batch_size=16,
                           schedule=moso.Schedule.constant(0.4),
                           shuffle_seed=2)
    result = moso.fit(ds, spec, cfg, moso.CaptureRule.all())
    assert result.trace.total_steps == 8 * 4
    assert len(result.trace.entries) == result.trace.total_steps

    scores = moso.moso_approx(ds, result.trace, moso.SamplingRule.all())
    assert scores.method == moso.ScoreMethod.moso_approx
    assert len(scores.scores) == len(ds)

    rho = moso.spearman(scores.scores, scores.scores)
    assert abs(rho - 1.0) < 1e-12

    grand = moso.grand_score(ds, result.trace, moso.SamplingRule.all())
    assert all(s >= 0 for s in grand.scores)

    el2n = moso.el2n_score(ds, result.final_params)
    assert len(el2n.scores) == len(ds)


def test_exact_scores_match_zero_training():
    ds = moso.generate_blobs(2, 8, 2, 0.5, seed=3)
    spec = make_spec(ds, seed=1)
    cfg = moso.TrainConfig(epochs=2, batch_size=8,
                           schedule=moso.Schedule.constant(0.0))
    full = moso.fit(ds, spec, cfg, moso.CaptureRule.all())
    exact = moso.moso_exact(ds, spec, cfg, full)
    assert all(s == 0.0 for s in exact.scores)


def test_guard_raises():
    ds = moso.generate_blobs(2, 8, 2, 0.5, seed=3)
    spec = make_spec(ds)
    cfg = moso.TrainConfig(epochs=1, batch_size=8,
                           schedule=moso.Schedule.constant(0.1))
    full = moso.fit(ds, spec, cfg, moso.CaptureRule.all())
    try:
        moso.moso_exact(ds, spec, cfg, full, guard_limit=4)
    except RuntimeError as e:
        assert "O(T*n^2)" in str(e)
    else:
        raise AssertionError("guard did not trip")


def test_prune_evaluate_roundtrip():
    full = moso.generate_blobs(2, 60, 2, 0.6, seed=21)
    parts = moso.split(full, train_fraction=0.8, seed=4)
    train, test = parts.train, parts.test
    noisy = moso.inject_label_noise(train, rate=0.2, seed=9)

    spec = make_spec(noisy, seed=8)
    cfg = moso.TrainConfig(epochs=12, batch_size=16,
                           schedule=moso.Schedule.constant(0.4),
                           shuffle_seed=6)
    plan = moso.make_partition(noisy, subsets=2, seed=5)
    scores = moso.score_pipeline(noisy, spec, cfg, plan,
                                 moso.SamplingRule.all(),
                                 moso.ScoreMethod.moso_approx)
    assert len(scores.scores) == len(noisy)

    report = moso.noise_detection(scores, noisy, bottom_fraction=0.2)
    assert report.applicable
    assert report.recall >= report.random_baseline

    coreset = moso.prune(noisy, scores, delta=0.3)
    assert len(coreset.kept_ids) == len(noisy) - int(0.3 * len(noisy))

    prune_report = moso.evaluate_coreset(noisy, coreset, test, spec, cfg,
                                         repeats=2)
    assert 0.0 <= prune_report.accuracy_mean <= 1.0
    assert len(prune_report.per_repeat_accuracy) == 2
    mean = sum(prune_report.per_repeat_accuracy) / 2
    assert math.isclose(prune_report.accuracy_mean, mean, rel_tol=1e-12)


def test_file_roundtrips():
    ds = moso.generate_blobs(3, 5, 4, 0.5, seed=13)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "data.ds")
        moso.write_dataset(ds, path, ["run cmd=python-smoke"])
        back = moso.read_dataset(path)
        assert back == ds
        assert moso.dataset_digest(back) == moso.dataset_digest(ds)

        table = moso.random_score(ds, seed=2)
        spath = os.path.join(tmp, "scores.tbl")
        moso.write_score_table(table, spath)
        tback = moso.read_score_table(spath)
        assert tback.scores == table.scores

        coreset = moso.prune(ds, table, delta=0.2)
        cpath = os.path.join(tmp, "coreset.cs")
        moso.write_coreset(coreset, cpath)
        cback = moso.read_coreset(cpath)
        assert cback.kept_ids == coreset.kept_ids
        kept = moso.materialize(ds, cback)
        assert len(kept.data) == len(coreset.kept_ids)


def test_parse_error_is_a_value_error():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "broken.ds")
        with open(path, "w") as f:
            f.write("#moso-dataset v1 d=1 K=2 N=1\n0,5,0,0.5\n")
        try:
            moso.read_dataset(path)
        except ValueError as e:
            assert "label out of range" in str(e)
        else:
            raise AssertionError("expected a parse error")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok    {test.__name__}")
    print(f"all {len(tests)} python smoke tests passed")
