import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hoegkit.extraction import ProcessExecution, extract
from hoegkit.features import (
    FeatureConfig,
    NormalizationStats,
    assign_splits,
    build_feature_config,
    event_feature_matrix,
    event_feature_vector,
    fit_normalization,
    object_feature_vector,
    remaining_time,
)
from hoegkit.model import Event, EventLog, ObjectInstance, utc

from gen import random_log

DAY = 86400.0


def test_remaining_time(otc, execution_a):
    assert remaining_time(execution_a, "e10", otc) == 0
    # 2023-01-30 -> 2023-02-02 at the same time of day
    assert remaining_time(execution_a, "e1", otc) == (utc(2023, 2, 2) - utc(2023, 1, 30)).total_seconds()
    assert remaining_time(execution_a, "e1", otc) == 3 * DAY
    assert remaining_time(execution_a, "e9", otc) == DAY


def test_remaining_time_unknown_event(otc):
    (_, small, _) = extract(otc, "leading:item")
    with pytest.raises(KeyError):
        remaining_time(small, "e5", otc)


def _named(cfg, vec):
    return dict(zip(cfg.event_feature_names(), vec))


def test_event_features_first_event(otc, execution_a, otc_features):
    cfg, stats = otc_features
    f = _named(cfg, event_feature_vector(execution_a, "e1", otc, cfg, stats))
    # P2 and P5 are standardized; raw zero maps to -mean/std
    assert f["P2"] == pytest.approx(stats.standardize("P2", 0.0))
    assert f["P5"] == pytest.approx(stats.standardize("P5", 0.0))
    assert f["O3"] == 0


def test_event_features_raw_values(otc, execution_a):
    cfg = build_feature_config([execution_a], otc)
    identity = NormalizationStats(0.0, 1.0)
    m = event_feature_matrix(execution_a, otc, cfg, identity)
    names = cfg.event_feature_names()
    p2 = m[names.index("P2")]
    p5 = m[names.index("P5")]
    o3 = m[names.index("O3")]
    days = [0, 0, 0, 0, 1, 1, 1, 1, 2, 3]
    assert p2.tolist() == [d * DAY for d in days]
    assert p5.tolist() == [0.0] + [(b - a) * DAY for a, b in zip(days, days[1:])]
    # e9: order, item, package seen in e1..e8; delivery first appears at e9
    assert o3[execution_a.event_ids.index("e9")] == 3
    assert o3[execution_a.event_ids.index("e10")] == 4
    assert o3.tolist() == [0, 2, 2, 2, 2, 2, 2, 3, 3, 4]


def test_activity_one_hot(otc, execution_a, otc_features):
    cfg, stats = otc_features
    v = event_feature_vector(execution_a, "e5", otc, cfg, stats)
    one_hot = v[: len(cfg.activities) + 1]
    assert one_hot.sum() == 1
    assert cfg.event_feature_names()[int(np.argmax(one_hot))] == "C2:Pick item"


def test_unknown_activity_slot(otc, execution_a, otc_features):
    cfg, stats = otc_features
    cfg = replace(cfg, activities=[a for a in cfg.activities if a != "Pick item"])
    v = _named(cfg, event_feature_vector(execution_a, "e5", otc, cfg, stats))
    assert v["C2:<unknown>"] == 1


def test_object_features(otc, otc_features):
    cfg, stats = otc_features
    assert cfg.object_feature_names("package") == ["Weight", "Size=medium"]
    p1 = object_feature_vector(otc.objects["p1"], cfg, stats)
    mean, std = stats.features["package:Weight"]
    assert (mean, std) == (3.25, 0.25)
    assert p1.tolist() == [(3.5 - 3.25) / 0.25, 1.0]
    raw = NormalizationStats(0.0, 1.0)
    assert object_feature_vector(otc.objects["i2"], cfg, raw).tolist() == [0.0]
    # a single delivery object: std falls back to 1 and the value standardizes to 0
    assert stats.features["delivery:No. stops"] == (5.0, 1.0)
    assert object_feature_vector(otc.objects["d1"], cfg, stats).tolist() == [0.0, 1.0]


def test_object_missing_attribute(otc, otc_features):
    cfg, stats = otc_features
    bare = ObjectInstance("i9", "item", {})
    with pytest.raises(ValueError, match="Discount"):
        object_feature_vector(bare, cfg, stats)
    assert object_feature_vector(bare, replace(cfg, zero_fill=True), stats).tolist() == [0.0]


def _single_object_log(times):
    obj = ObjectInstance("o", "t")
    events = [Event(f"e{i}", "a", utc(2023, 1, 1) + s, refs={"t": ("o",)}) for i, s in enumerate(times)]
    return EventLog(events, [obj])


def test_fit_normalization_population_std():
    from datetime import timedelta

    log = _single_object_log([timedelta(seconds=0), timedelta(seconds=10), timedelta(seconds=20)])
    stats = fit_normalization(extract(log), log)
    assert stats.target_mean == 10.0
    assert stats.target_std == pytest.approx(math.sqrt(200 / 3), rel=1e-15)
    assert stats.target_std == pytest.approx(8.16496580927726, rel=1e-12)


def test_fit_normalization_degenerate():
    from datetime import timedelta

    log = _single_object_log([timedelta(0)])
    stats = fit_normalization(extract(log), log)
    assert stats.target_std == 1.0
    assert stats.standardize_target([0.0]).tolist() == [0.0]


def test_fit_normalization_empty(otc):
    with pytest.raises(ValueError):
        fit_normalization([], otc)


def test_standardized_train_targets():
    rng = np.random.default_rng(3)
    log = random_log(rng, max_objects=40, max_events=120)
    executions = [ex for ex in extract(log) if ex.event_ids]
    stats = fit_normalization(executions, log)
    from hoegkit.features import remaining_times

    z = stats.standardize_target(np.concatenate([remaining_times(ex, log) for ex in executions]))
    if np.ptp(z) > 0:
        assert abs(z.mean()) < 1e-9 and abs(z.std() - 1) < 1e-9


def test_assign_splits_sizes():
    executions = [ProcessExecution(f"x{i}", frozenset(), (), frozenset()) for i in range(100)]
    split = assign_splits(executions, (0.56, 0.14, 0.30), seed=7)
    assert split.sizes() == (56, 14, 30)
    assert split == assign_splits(executions, (0.56, 0.14, 0.30), seed=7)
    assert split != assign_splits(executions, (0.56, 0.14, 0.30), seed=8)


def test_assign_splits_all_train():
    executions = [ProcessExecution(f"x{i}", frozenset(), (), frozenset()) for i in range(3)]
    assert set(assign_splits(executions, (1.0, 0, 0), seed=1).assignment.values()) == {"train"}


def test_assign_splits_small_keeps_every_split():
    executions = [ProcessExecution(f"x{i}", frozenset(), (), frozenset()) for i in range(3)]
    assert assign_splits(executions, (0.25, 0.125, 0.625), seed=0).sizes() == (1, 1, 1)


def test_assign_splits_errors():
    executions = [ProcessExecution(f"x{i}", frozenset(), (), frozenset()) for i in range(2)]
    with pytest.raises(ValueError):
        assign_splits(executions, (0.7, 0.15, 0.15))
    with pytest.raises(ValueError):
        assign_splits(executions, (0.5, 0.2, 0.2))


def test_assign_splits_chronological():
    executions = [ProcessExecution(f"x{i}", frozenset(), (), frozenset()) for i in range(10)]
    split = assign_splits(executions, (0.6, 0.2, 0.2), chronological=True)
    assert split.ids("train") == [f"x{i}" for i in range(6)]
    assert split.ids("test") == ["x8", "x9"]


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 400), st.floats(0.05, 0.9), st.floats(0.05, 0.9), st.integers(0, 1000))
def test_split_proportions(n, a, b, seed):
    if a + b >= 0.99:
        return
    ratios = (a, b, 1 - a - b)
    executions = [ProcessExecution(f"x{i}", frozenset(), (), frozenset()) for i in range(n)]
    sizes = assign_splits(executions, ratios, seed).sizes()
    assert sum(sizes) == n
    for size, r in zip(sizes, ratios):
        assert size >= 1
        assert abs(size / n - r) <= 2 / n + 1e-12
    if all(r * n >= 1 for r in ratios):
        assert all(abs(size / n - r) <= 1 / n + 1e-12 for size, r in zip(sizes, ratios))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_feature_dims_and_monotonicity(seed):
    log = random_log(np.random.default_rng(seed), max_objects=40, max_events=80)
    executions = [ex for ex in extract(log) if ex.event_ids]
    if not executions:
        return
    cfg = build_feature_config(executions, log)
    stats = fit_normalization(executions, log, cfg)
    names = cfg.event_feature_names()
    raw = NormalizationStats(0.0, 1.0)
    for ex in executions:
        m = event_feature_matrix(ex, log, cfg, stats)
        assert m.shape == (cfg.event_dim, len(ex.event_ids))
        o3 = event_feature_matrix(ex, log, cfg, raw)[names.index("O3")]
        col = {e: i for i, e in enumerate(ex.event_ids)}
        for a, b in ex.edges:
            assert remaining_time(ex, a, log) >= remaining_time(ex, b, log)
            assert o3[col[a]] <= o3[col[b]]
    for o in log.objects.values():
        assert len(object_feature_vector(o, cfg, stats)) == cfg.object_dim(o.type_name)


def test_config_json_roundtrip(otc_features):
    cfg, stats = otc_features
    assert FeatureConfig.from_dict(cfg.to_dict()) == cfg
    assert NormalizationStats.from_dict(stats.to_dict()) == stats
