import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from stagesum.corpus import Sample
from stagesum.estimator import (
    compression_rate,
    estimate_stages,
    generated_token_multiplier,
    inference_time_fraction,
    stage_stats,
)
from stagesum.matcher import build_stage_dataset


@pytest.mark.parametrize(
    "d, c, n_val, n_hat",
    [(3582.47, 373.29, 0.55, 1), (1517.02, 492.89, -0.41, 0), (1500, 300, -0.25, 0)],
)
def test_examples(d, c, n_val, n_hat):
    got_val, got_hat = estimate_stages(d, c, 1024, early_stop=True)
    assert got_val == pytest.approx(n_val, abs=0.01)
    assert got_hat == n_hat


def test_without_early_stop_needs_more_stages():
    early, _ = estimate_stages(3582.47, 373.29, 1024, early_stop=True)
    plain, n_hat = estimate_stages(3582.47, 373.29, 1024, early_stop=False)
    assert plain > early
    assert n_hat == math.ceil(plain)


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        estimate_stages(0, 10, 1024)
    with pytest.raises(ValueError):
        estimate_stages(100, 1024, 1024)


@given(st.floats(10, 1e6), st.floats(1, 1000), st.integers(64, 4096))
def test_log_base_independence(d, c, k):
    assume(abs(c - k) > 1)
    n_val, _ = estimate_stages(d, c, k, early_stop=True)
    natural = (math.log(2) + math.log(k) - math.log(d)) / (math.log(c) - math.log(k))
    assert n_val == pytest.approx(natural, abs=1e-9)


@given(st.floats(10, 1e6), st.floats(1, 1000), st.integers(1024, 4096))
def test_zero_stages_iff_already_short(d, c, k):
    # c < K: a stage compresses, so N_hat == 0 exactly when d <= 2K
    assume(c < k - 1)
    _, n_hat = estimate_stages(d, c, k, early_stop=True)
    assert (n_hat == 0) == (d <= 2 * k)


@given(st.floats(3000, 1e5), st.floats(100, 900))
def test_monotone_in_source_length(d, c):
    a, _ = estimate_stages(d, c, 1024)
    b, _ = estimate_stages(d * 2, c, 1024)
    assert b > a


def test_compression_rate():
    assert compression_rate(7996.01, 3582.47) == pytest.approx(0.448, abs=1e-3)
    with pytest.raises(ValueError):
        compression_rate(0, 1)


@pytest.mark.parametrize("k, r, n, pct", [(1024, 0.27, 6420.64, 21.8), (1024, 0.43, 7890.46, 22.8)])
def test_time_fraction_examples(k, r, n, pct):
    assert 100 * inference_time_fraction(k, r, n) == pytest.approx(pct, abs=0.1)


@given(st.floats(0, 0.95), st.floats(100, 1e5), st.integers(16, 4096))
def test_time_fraction_is_geometric_series(r, n, k):
    # sum over stages of (R^i n / K) segments each costing K^2
    series = sum((r ** i) * n / k * k * k for i in range(2000))
    assert inference_time_fraction(k, r, n) * n * n == pytest.approx(series, rel=1e-6)


def test_generated_token_multiplier():
    assert generated_token_multiplier(0.27) == pytest.approx(1.370, abs=1e-3)
    assert generated_token_multiplier(0.43) == pytest.approx(1.754, abs=1e-3)
    for bad in (1.0, -0.1):
        with pytest.raises(ValueError):
            generated_token_multiplier(bad)
        with pytest.raises(ValueError):
            inference_time_fraction(1024, bad, 1000)


def _dataset():
    samples = [
        Sample("a", tuple(f"Alpha {i} beta." for i in range(10)), "Alpha beta.", split="train"),
        Sample("b", ("Gamma delta.",), "Gamma.", split="dev"),
    ]
    return build_stage_dataset(samples, 12), samples


def test_stage_stats_means():
    ds, samples = _dataset()
    outputs = ["x y z"] * len(ds.pairs)
    stats = stage_stats(ds, outputs, 12, prev_avg_source=100.0)
    assert stats.avg_source_tokens == pytest.approx((40 + 3) / 2)
    assert stats.avg_coarse_segment_tokens == 3
    assert stats.compression_rate == pytest.approx(21.5 / 100)
    assert stats.samples == 2 and stats.segments == len(ds.pairs)
    only_b = stage_stats(ds, outputs, 12, sample_ids=["b"])
    assert only_b.avg_source_tokens == 3 and only_b.segments == 1
    assert only_b.compression_rate is None


def test_stage_stats_misaligned():
    ds, _ = _dataset()
    with pytest.raises(ValueError):
        stage_stats(ds, ["x"], 12)


def test_stage_stats_c_equal_k():
    ds, _ = _dataset()
    stats = stage_stats(ds, ["a b c d e f g h i j k l"] * len(ds.pairs), 12)
    assert stats.estimated_remaining is None
