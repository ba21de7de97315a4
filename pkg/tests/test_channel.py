import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from otadp.channel import (ChannelDraw, awgn, check_power, draw_channels, ota_aggregate,
                           power_from_snr, rayleigh)
from otadp.errors import InvalidInput
from otadp.rng import stream


def _draw(gains, sigma_c=0.0, jammer=1.0):
    return ChannelDraw(np.asarray(gains, dtype=float), jammer, sigma_c, 0)


def test_unit_second_moment():
    h = rayleigh(stream(123, "moment"), 10 ** 6)
    assert 0.997 <= np.mean(h ** 2) <= 1.003


def test_draw_deterministic_and_positive():
    a, b = draw_channels(5, 3, 11), draw_channels(5, 3, 11)
    assert np.array_equal(a.gains, b.gains) and a.jammer_gain == b.jammer_gain
    assert a.gains.shape == (5,)
    assert np.all(a.gains > 0) and a.jammer_gain > 0
    assert not np.array_equal(a.gains, draw_channels(5, 4, 11).gains)


def test_aggregate_identity_and_linearity_examples():
    y = ota_aggregate([np.array([1.0, 2.0])], _draw([1.0]))
    assert np.array_equal(y, [1.0, 2.0])
    y = ota_aggregate([np.array([1.0, 0.0]), np.array([0.0, 1.0])], _draw([0.5, 2.0]))
    assert np.array_equal(y, [0.5, 2.0])


def test_aggregate_with_jammer():
    y = ota_aggregate([np.ones(3)], _draw([2.0], jammer=0.5), jammer_signal=np.array([2.0, 0, -2]))
    assert np.array_equal(y, [3.0, 2.0, 1.0])


def test_aggregate_length_mismatch():
    with pytest.raises(InvalidInput):
        ota_aggregate([np.ones(3), np.ones(2)], _draw([1.0, 1.0]))
    with pytest.raises(InvalidInput):
        ota_aggregate([np.ones(3)], _draw([1.0, 1.0]))
    with pytest.raises(InvalidInput):
        ota_aggregate([np.ones(3)], _draw([1.0]), jammer_signal=np.ones(4))


def test_noise_variance():
    y = ota_aggregate([np.zeros(10 ** 5)], _draw([1.0], sigma_c=1.0), noise_seed=5)
    assert 0.99 <= y.var() <= 1.01


def test_noise_uncorrelated_across_rounds():
    a = awgn(10 ** 5, 1.0, int(np.random.SeedSequence([0, 1]).generate_state(1)[0]))
    b = awgn(10 ** 5, 1.0, int(np.random.SeedSequence([0, 2]).generate_state(1)[0]))
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(1, 6), st.integers(0, 10 ** 6))
def test_linearity_without_noise(alpha, beta, K, seed):
    rng = np.random.default_rng(seed)
    draw = draw_channels(K, 0, seed, sigma_c=0.0)
    xs = [rng.normal(size=7) for _ in range(K)]
    zs = [rng.normal(size=7) for _ in range(K)]
    mixed = ota_aggregate([alpha * x + beta * z for x, z in zip(xs, zs)], draw)
    split = alpha * ota_aggregate(xs, draw) + beta * ota_aggregate(zs, draw)
    assert np.max(np.abs(mixed - split)) <= 1e-12 * max(1.0, np.max(np.abs(mixed)))


def test_check_power_examples():
    assert check_power(np.array([1.0, 1.0]), 2.0)
    assert not check_power(np.array([2.0, 0.0]), 2.0)
    with pytest.raises(InvalidInput):
        check_power(np.ones(2), 0.0)


def test_power_from_snr():
    assert power_from_snr(0.0, 100, 0.5) == pytest.approx(25.0)
    assert power_from_snr(10.0, 1, 1.0) == pytest.approx(10.0)
