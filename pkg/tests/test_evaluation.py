import random

import numpy as np
import pytest

from fcert.core import DataError, FewShotConfig, InputError, fcert_predict
from fcert.dataio import FeatureDataset, synth_gaussian
from fcert.evaluation import (
    EvalConfig,
    assemble_report,
    certified_accuracy,
    evaluate_episode,
    run_benchmark,
    sample_episodes,
)


def _tiny_dataset(classes, per_class, dim=3):
    ids = [f"{c}-{i}" for c in range(classes) for i in range(per_class)]
    labels = [f"L{c}" for c in range(classes) for _ in range(per_class)]
    feats = np.arange(classes * per_class * dim, dtype=float).reshape(-1, dim)
    return FeatureDataset.from_records(ids, labels, feats)


def test_sampling_deterministic():
    ds = synth_gaussian(8, 10, 4, 3.0, 1.0, seed=0)
    cfg = EvalConfig(batches=5, seed=42)
    a, b = sample_episodes(ds, cfg), sample_episodes(ds, cfg)
    for x, y in zip(a, b):
        assert x.support.tobytes() == y.support.tobytes()
        assert x.queries.tobytes() == y.queries.tobytes()
        assert x.class_map == y.class_map


def test_exact_fit_uses_every_sample():
    ds = _tiny_dataset(5, 6)
    for ep in sample_episodes(ds, EvalConfig(batches=4, seed=3)):
        assert sorted(ep.class_map) == ds.label_names
        used = np.concatenate([ep.support.reshape(-1, 3), ep.queries])
        assert sorted(map(tuple, used)) == sorted(map(tuple, ds.features))
        for q, y in zip(ep.queries, ep.query_labels):
            assert not any(np.array_equal(q, s) for s in ep.support[y])


def test_insufficient_data_names_class():
    ds = FeatureDataset.from_records(
        [str(i) for i in range(31)], ["big"] * 6 + ["a"] * 6 + ["b"] * 6 + ["c"] * 6 + ["small"] * 7,
        np.zeros((31, 2)))
    ds.labels[-2:] = 0  # shrink "small" to 5 samples
    with pytest.raises(DataError, match="'small' \\(5\\)"):
        sample_episodes(ds, EvalConfig(batches=1))


def test_class_selection_uniform():
    ds = _tiny_dataset(10, 2, dim=1)
    cfg = EvalConfig(batches=10000, ways=3, shots=1, kprime=0, seed=8)
    counts = np.zeros(10)
    for ep in sample_episodes(ds, cfg):
        for name in ep.class_map:
            counts[int(name[1:])] += 1
    n, p = 10000, 0.3
    assert np.all(np.abs(counts - n * p) <= 3 * np.sqrt(n * p * (1 - p)))


def test_certified_accuracy_examples():
    assert certified_accuracy([(True, 2)] * 4, 2) == 1.0
    recs = [(True, 0), (True, 1), (False, 2), (True, 2)]
    assert certified_accuracy(recs, 0) == 0.75
    with pytest.raises(InputError):
        certified_accuracy([], 0)


def test_certified_accuracy_hand_count():
    recs = [(True, 2), (False, 2), (True, 0), (True, 1), (True, 2),
            (False, 0), (True, 1), (True, 3), (False, 1), (True, 0)]
    # T=0: 7 correct; T=1: 5 (sizes 2,1,2,1,3); T=2: 3; T=3: 1
    assert [certified_accuracy(recs, t) for t in range(4)] == [0.7, 0.5, 0.3, 0.1]


def test_separable_benchmark_fully_certified():
    ds = synth_gaussian(5, 20, 16, 10.0, 0.1, seed=7)
    rep = run_benchmark(ds, EvalConfig(seed=7))
    for model in ("individual", "group"):
        assert rep.curve("fcert", model, "certified_accuracy") == [1.0, 1.0, 1.0]


@pytest.fixture(scope="module")
def noisy():
    ds = synth_gaussian(8, 12, 6, 2.0, 1.0, seed=11)
    cfg = EvalConfig(batches=8, ways=4, shots=7, queries_per_class=2, seed=5, strategy="cross-class")
    return ds, cfg, run_benchmark(ds, cfg)


def test_report_invariants(noisy):
    ds, cfg, rep = noisy
    for model in cfg.models:
        cert = rep.curve("fcert", model, "certified_accuracy")
        emp = rep.curve("fcert", model, "empirical_accuracy")
        assert all(0 <= x <= 1 for x in cert + emp)
        assert cert == sorted(cert, reverse=True)
        assert all(e >= c for e, c in zip(emp, cert))
        for method in cfg.methods:
            assert rep.curve(method, model, "T") == list(range(cfg.kprime + 1))
    clean = np.mean([fcert_predict(ep, q, cfg.fewshot()) == y
                     for ep in sample_episodes(ds, cfg) for q, y in zip(ep.queries, ep.query_labels)])
    assert rep.curve("fcert", "individual", "certified_accuracy")[0] == clean
    assert rep.curve("fcert", "individual", "empirical_accuracy")[0] == clean


def test_report_reproducible_and_order_independent(noisy):
    ds, cfg, rep = noisy
    assert run_benchmark(ds, cfg).to_dict() == rep.to_dict()
    episodes = list(enumerate(sample_episodes(ds, cfg)))
    random.Random(0).shuffle(episodes)
    records = [r for i, ep in episodes for r in evaluate_episode(i, ep, cfg)]
    assert assemble_report(records, cfg).to_dict()["summary"] == rep.summary


@pytest.mark.parametrize("strategy", ["collision", "cross-class", "far-point"])
def test_empirical_dominates_certified_each_strategy(strategy):
    ds = synth_gaussian(6, 15, 5, 1.5, 1.0, seed=21)
    cfg = EvalConfig(batches=6, ways=3, shots=9, seed=2, strategy=strategy, methods=("fcert",))
    rep = run_benchmark(ds, cfg)
    for model in cfg.models:
        cert = rep.curve("fcert", model, "certified_accuracy")
        emp = rep.curve("fcert", model, "empirical_accuracy")
        assert all(e >= c for e, c in zip(emp, cert))


def test_config_validation():
    with pytest.raises(InputError):
        EvalConfig(methods=("svm",))
    with pytest.raises(InputError):
        EvalConfig(shots=5, kprime=3)
    assert EvalConfig().fewshot() == FewShotConfig(5, 5, 2)
