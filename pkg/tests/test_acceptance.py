"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL lines as
they happen; they are also repeated in the terminal summary. The BPI 2017
check needs ``HOEGKIT_BPI17`` pointing at the JSON-OCEL file and is skipped
otherwise.
"""
import os
import time

import numpy as np
import pytest

from hoegkit.encoders import EVENT, encode_efg, encode_hoeg, subgraph_samples
from hoegkit.extraction import extract, extract_connected_components
from hoegkit.features import build_feature_config, fit_normalization
from hoegkit.io import build_otc_fixture, read_ocel
from hoegkit.learn import ModelConfig, ModelParams, as_graph_data, backward, evaluate, forward, loss
from hoegkit.learn import model_predictor
from hoegkit.model import EventLog, directly_follows
from hoegkit.pipeline import RunConfig, build_dataset, fit_and_evaluate, median_report
from hoegkit.synthetic import make_linear_log

from gen import (
    bfs_components,
    numeric_gradients,
    perturbed_params,
    random_log,
    random_toy_graph,
    relative_errors,
)

pytestmark = pytest.mark.acceptance


def test_fixture_fidelity(acceptance_line):
    start = time.perf_counter()
    log = build_otc_fixture()
    (ex,) = extract(log, "cc")
    cfg = build_feature_config([ex], log)
    h = encode_hoeg(ex, log, cfg, fit_normalization([ex], log, cfg), prefix="e9")
    elapsed = time.perf_counter() - start

    features = {t: m.shape for t, m in h.features.items()}
    adjacency = {et[0]: a.shape for et, a in h.adjacency.items()}
    expected_features = {EVENT: (cfg.event_dim, 9), "order": (1, 2), "item": (1, 3),
                         "package": (2, 2), "delivery": (2, 1)}
    # order-interacts is brute-forced to 10 (o1 in 5 events, o2 in 5 events up to e9)
    expected_adjacency = {EVENT: (2, 10), "order": (2, 10), "item": (2, 9),
                          "package": (2, 4), "delivery": (2, 1)}
    order_refs = sum(len(log.event(e).refs.get("order", ())) for e in ex.event_ids[:9])
    ok = (features == expected_features and adjacency == expected_adjacency
          and order_refs == 10 and elapsed < 1.0)
    assert acceptance_line(1, "fixture fidelity", ok, f"features={features} adjacency={adjacency} {elapsed:.3f}s")


def test_extraction_oracle(acceptance_line):
    start = time.perf_counter()
    failures = 0
    for seed in range(500):
        log = random_log(np.random.default_rng(seed), max_objects=200, max_events=400)
        executions = extract_connected_components(log)
        comps = [ex.object_ids for ex in executions]
        ok = sorted(comps, key=min) == sorted(bfs_components(log), key=min)
        # partition: objects and events are each covered exactly once
        ok &= sorted(o for c in comps for o in c) == sorted(log.objects)
        ok &= sorted(e for ex in executions for e in ex.event_ids) == sorted(e.id for e in log.events)
        df = directly_follows(log)
        ok &= sum(len(ex.edges) for ex in executions) == len(df)
        failures += not ok
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 30
    assert acceptance_line(2, "extraction oracle", ok, f"500 logs, {failures} mismatches, {elapsed:.1f}s")


def test_gradient_correctness(acceptance_line):
    start = time.perf_counter()
    errors = []
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        g = random_toy_graph(rng, max_events=6, max_types=3)
        params = perturbed_params(g, int(rng.integers(1, 9)), seed, rng)
        analytic = backward(g, params)
        numeric = numeric_gradients(g, params, lambda p: loss(forward(g, p), g.targets), eps=1e-5)
        errors.append(relative_errors(analytic, numeric))
    errs = np.concatenate(errors)
    elapsed = time.perf_counter() - start
    worst, p99 = float(errs.max()), float(np.quantile(errs, 0.99))
    ok = worst < 1e-3 and p99 < 1e-4 and elapsed < 60
    assert acceptance_line(3, "gradient correctness", ok,
                           f"{errs.size} entries, max {worst:.2e}, p99 {p99:.2e}, {elapsed:.1f}s")


def test_efg_is_hoeg_without_object_edges(acceptance_line):
    checked, mismatches, seed = 0, 0, 0
    while checked < 20:
        log = random_log(np.random.default_rng(seed), max_objects=30, max_events=60)
        seed += 1
        executions = [ex for ex in extract(log) if ex.event_ids]
        if not executions:
            continue
        cfg = build_feature_config(executions, log)
        stats = fit_normalization(executions, log, cfg)
        ex = max(executions, key=lambda x: len(x.event_ids))
        h = as_graph_data(encode_hoeg(ex, log, cfg, stats))
        e = as_graph_data(encode_efg(ex, log, cfg, stats))
        hp = ModelParams.init(h.signature(), 8, 2, seed=seed)
        for k in hp.tensors:
            if ".msg." in k and "|interacts|" in k:
                hp.tensors[k][:] = 0.0
        ep = ModelParams.init(e.signature(), 8, 2, seed=seed)
        for k in ep.tensors:
            ep.tensors[k] = hp.tensors[k].copy()
        mismatches += not np.array_equal(forward(h, hp), forward(e, ep))
        checked += 1
    assert acceptance_line(4, "EFG within HOEG", mismatches == 0, f"{checked} graphs, {mismatches} not bit-equal")


def test_learning_sanity(acceptance_line):
    start = time.perf_counter()
    log = make_linear_log(200, seed=0)
    run = RunConfig(splits=(0.56, 0.14, 0.30), seed=0, encoder="hoeg",
                    model=ModelConfig(hidden_dim=16, learning_rate=0.001, max_epochs=200,
                                      early_stop_patience=None, seed=0))
    dataset = build_dataset(log, run)
    params, report = fit_and_evaluate(dataset, run.model)
    train_mae, train_mse, _ = evaluate(model_predictor(params), dataset.of_split("train"))
    median, _ = median_report(dataset)
    ratio = median["train"]["mae"] / train_mae
    elapsed = time.perf_counter() - start
    ok = train_mse <= 0.01 and ratio >= 10 and elapsed < 300
    assert acceptance_line(5, "learning sanity", ok,
                           f"train MSE {train_mse:.5f}, median/model MAE {ratio:.1f}, "
                           f"test MAE model {report.metrics['test']['mae']:.4f} "
                           f"median {median['test']['mae']:.4f}, {elapsed:.1f}s")


def _restrict(log, executions):
    keep_events = {e for ex in executions for e in ex.event_ids}
    keep_objects = {o for ex in executions for o in ex.object_ids}
    return EventLog([e for e in log.events if e.id in keep_events],
                    [o for o in log.objects.values() if o.id in keep_objects], log.object_types)


def test_normalization_leakage(acceptance_line):
    logs, seed = [make_linear_log(80, seed=5)], 0
    while len(logs) < 21:
        log = random_log(np.random.default_rng(seed), 120, 150, max_refs=1 + seed % 2)
        seed += 1
        # need enough executions to fill all three splits
        if sum(1 for ex in extract(log) if ex.event_ids) >= 10:
            logs.append(log)
    changed = 0
    for log in logs:
        run = RunConfig(splits=(0.6, 0.2, 0.2), seed=1, encoder="efg")
        dataset = build_dataset(log, run)
        train_ex = [ex for ex in dataset.executions if dataset.split.assignment[ex.id] == "train"]
        reduced = _restrict(log, train_ex)
        cfg_r = build_feature_config(train_ex, reduced)
        stats_r = fit_normalization(train_ex, reduced, cfg_r)
        changed += not (cfg_r == dataset.feature_config and stats_r == dataset.stats)
    ok = changed == 0
    assert acceptance_line(6, "normalization leakage", ok, f"{len(logs)} logs, {changed} with changed statistics")


def test_subgraph_sampling(acceptance_line):
    bad, total = 0, 0
    for seed in range(30):
        log = random_log(np.random.default_rng(seed), 40, 120)
        executions = [ex for ex in extract(log) if ex.event_ids]
        if not executions:
            continue
        cfg = build_feature_config(executions, log)
        stats = fit_normalization(executions, log, cfg)
        for ex in executions:
            g = encode_efg(ex, log, cfg, stats)
            samples = subgraph_samples(g)
            n = len(ex.event_ids)
            ok = len(samples) == max(0, n - 3)
            ok &= all(s.indices == tuple(range(i, i + 4)) for i, s in enumerate(samples))
            ok &= all(s.target == g.targets[s.indices[-1]] for s in samples)
            bad += not ok
            total += 1
    assert acceptance_line(7, "subgraph sampling", bad == 0, f"{total} executions, {bad} wrong")


def test_determinism(acceptance_line):
    log = make_linear_log(40, seed=7)

    def once():
        run = RunConfig(splits=(0.6, 0.2, 0.2), seed=11, encoder="hoeg",
                        model=ModelConfig(hidden_dim=8, max_epochs=5, seed=11))
        _, report = fit_and_evaluate(build_dataset(log, run), run.model)
        return report

    a, b = once(), once()
    ok = a.metrics == b.metrics and a.train_loss == b.train_loss and a.val_loss == b.val_loss
    assert acceptance_line(8, "determinism", ok, f"test MAE {a.metrics['test']['mae']:.6f} vs {b.metrics['test']['mae']:.6f}")


def test_bpi17_median(acceptance_line):
    path = os.environ.get("HOEGKIT_BPI17")
    if not path or not os.path.exists(path):
        acceptance_line(9, "BPI17 median baseline", None, "set HOEGKIT_BPI17 to the JSON-OCEL file")
        pytest.skip("BPI17 log not available")
    log, _ = read_ocel(path)
    run = RunConfig(input=path, extraction="cc", splits=(0.56, 0.14, 0.30), seed=0, encoder="efg")
    median, _ = median_report(build_dataset(log, run))
    mae = median["test"]["mae"]
    ok = abs(mae - 0.7746) <= 0.03
    assert acceptance_line(9, "BPI17 median baseline", ok, f"test MAE {mae:.4f}, expected 0.7746 +- 0.03")
