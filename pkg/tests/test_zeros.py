"""Zero counter: pinned counts, refinement, stability, change of variables."""

import math

import numpy as np
import pytest

from slzeros import (DomainError, NumericError, build_process, count_zeros,
                     count_zeros_changed_variable, sample_coefficients,
                     standardize_count)
from slzeros.weights import TWO_PI, builtin_weights


def test_count_cosine_pinned():
    k = 5
    res = count_zeros(lambda x: np.cos(k * np.asarray(x, dtype=float)),
                      n_hint=k)
    assert res.count == 2 * k
    assert res.stable
    want = (0.5 + np.arange(2 * k)) * math.pi / k
    np.testing.assert_allclose(np.sort(res.locations), want, atol=1e-10)
    # refined locations are actual roots
    assert np.max(np.abs(np.cos(k * res.locations))) < 1e-10
    assert res.grid_factor >= 16
    assert res.near_tangencies == ()
    assert res.scale > 0.9


def test_count_subinterval():
    res = count_zeros(np.cos, interval=(0.0, math.pi), n_hint=1)
    assert res.count == 1
    np.testing.assert_allclose(res.locations, [math.pi / 2.0], atol=1e-10)


def test_node_zero_triggers_shift():
    # cos has zeros exactly on the default 16-cell scan nodes
    res = count_zeros(np.cos, n_hint=1)
    assert res.count == 2
    assert res.stable
    np.testing.assert_allclose(np.sort(res.locations),
                               [0.5 * math.pi, 1.5 * math.pi], atol=1e-10)


def test_endpoint_zero_is_refused():
    # a process vanishing at the interval ends defeats the node shift
    with pytest.raises(NumericError):
        count_zeros(lambda x: np.sin(2.0 * np.asarray(x, dtype=float)),
                    n_hint=2)


def test_unstable_count_is_flagged():
    # 74 zeros scanned with 1 cell and 3 doublings: counts 0, 2, 4, 8
    # never repeat, so the result must carry stable=False
    res = count_zeros(lambda x: np.cos(37.0 * np.asarray(x, dtype=float)),
                      n_hint=1, scan_constant=1, max_doublings=3)
    assert not res.stable
    assert res.count != 74


def test_zero_doublings_never_stabilizes():
    res = count_zeros(np.cos, n_hint=1, max_doublings=0)
    assert not res.stable
    assert res.count == 2


def test_near_tangency_reported_not_counted():
    # strictly positive with a 1e-10 dip at x = pi (a scan node)
    res = count_zeros(lambda x: (np.asarray(x, dtype=float) - math.pi) ** 2
                      + 1e-10, n_hint=1)
    assert res.count == 0
    assert res.locations.size == 0
    assert len(res.near_tangencies) >= 1
    assert any(abs(t - math.pi) < 1e-6 for t in res.near_tangencies)


def test_dip_audit_recovers_pair_between_nodes():
    # two zeros strictly inside one scan cell at both grid sizes the
    # doubling rule visits: the sign scan alone sees nothing there, so
    # the dip audit must recover the pair
    h = TWO_PI / 16
    center = math.pi + 0.3 * h
    half_gap = 0.05 * h

    def dip(x):
        x = np.asarray(x, dtype=float)
        return (x - center) ** 2 - half_gap ** 2

    res = count_zeros(dip, n_hint=1)
    assert res.count == 2
    assert res.stable
    np.testing.assert_allclose(
        res.locations, [center - half_gap, center + half_gap], atol=1e-9)
    assert res.near_tangencies == ()


def test_dip_audit_reports_unresolved_flat_dip():
    # a flat quartic valley between nodes: the fitted parabola
    # undershoots and predicts a crossing, the dense rescan finds none,
    # so the dip is reported as a near-tangency and never counted
    h = TWO_PI / 16
    center = math.pi + 0.3 * h
    floor = 1e-4 * h ** 4

    def quartic(x):
        x = np.asarray(x, dtype=float)
        return (x - center) ** 4 + floor

    res = count_zeros(quartic, n_hint=1)
    assert res.count == 0
    assert res.stable
    assert len(res.near_tangencies) == 1
    assert abs(res.near_tangencies[0] - center) < h


def test_count_zeros_validation():
    with pytest.raises(DomainError):
        count_zeros(np.cos, interval=(2.0, 1.0))
    with pytest.raises(DomainError):
        count_zeros(np.cos, interval=(0.0, math.inf))
    with pytest.raises(DomainError):
        count_zeros(np.cos, n_hint=0)
    with pytest.raises(DomainError):
        count_zeros(lambda x: np.zeros_like(np.asarray(x, dtype=float)))
    with pytest.raises(DomainError):
        count_zeros(lambda x: np.full_like(np.asarray(x, dtype=float),
                                           math.nan))


def test_empty_interval():
    res = count_zeros(np.cos, interval=(1.0, 1.0))
    assert res.count == 0
    assert res.stable


def test_standardize_count():
    assert standardize_count(32.0, 29.5, 100) == (32.0 - 29.5) / 10.0
    assert standardize_count(10, 10.0, 7) == 0.0
    with pytest.raises(DomainError):
        standardize_count(3, 2.0, 0)


# ----------------------------------------------------------------------
# change of variables


def test_changed_variable_counts_agree():
    w = builtin_weights("sine2")
    rng = np.random.default_rng(414)
    for rid in range(20):
        draw = sample_coefficients(99, 30, rid)
        proc = build_process("X_n_raw", 30, draw, weight=w)
        T = float(rng.uniform(0.5, TWO_PI))
        res_raw, res_pull = count_zeros_changed_variable(proc, T)
        assert res_raw.count == res_pull.count


def test_changed_variable_validation():
    w = builtin_weights("sine2")
    draw = sample_coefficients(99, 10, 0)
    wrong = build_process("T_n", 10, draw)
    with pytest.raises(DomainError):
        count_zeros_changed_variable(wrong, 1.0)
    proc = build_process("X_n_raw", 10, draw, weight=w)
    with pytest.raises(DomainError):
        count_zeros_changed_variable(proc, -0.5)
    with pytest.raises(DomainError):
        count_zeros_changed_variable(proc, TWO_PI + 1.0)
