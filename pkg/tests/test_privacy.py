import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from otadp.errors import DegeneratePrivacy, InvalidInput
from otadp.privacy import (EffectiveNoise, PrivacyLedger, compute_a, epsilon_for_client,
                           epsilon_from_sum, epsilon_max_client, epsilon_upper_bound,
                           record_round, replay)

from oracles import a_root, eps_closed_form, rel


def test_record_round_increments():
    led = record_round(PrivacyLedger.empty(2, 100, 1e-5), EffectiveNoise(0.05), [1.0, 2.0])
    assert led.client_sums[0] == pytest.approx(20.0, rel=1e-15)
    assert led.client_sums[1] == pytest.approx(5.0, rel=1e-15)
    assert led.bound_sum == pytest.approx(20.0, rel=1e-15)
    assert led.rounds_counted == 1


def test_record_round_errors():
    led = PrivacyLedger.empty(1, 10, 0.01)
    with pytest.raises(DegeneratePrivacy):
        record_round(led, 0.0, [1.0])
    with pytest.raises(InvalidInput):
        record_round(led, 1.0, [0.5])
    with pytest.raises(InvalidInput):
        record_round(led, 1.0, [1.0, 1.0])


def test_worked_epsilon_value():
    led = PrivacyLedger.empty(1, 100, 1e-5)
    for _ in range(10):
        led = record_round(led, 0.01, [1.0])
    assert led.client_sums[0] == pytest.approx(1000.0, rel=1e-14)
    # 2 sqrt(0.05 ln 1e5) + 0.05
    assert epsilon_for_client(led, 0) == pytest.approx(1.5674271293851464, abs=1e-12)
    assert rel(epsilon_for_client(led, 0), eps_closed_form(1000, 100, 1e-5)) < 1e-12


def test_zero_sum_gives_zero_epsilon():
    led = PrivacyLedger.empty(3, 50, 1e-5)
    assert epsilon_for_client(led, 1) == 0.0
    assert epsilon_upper_bound(led) == 0.0


def test_doubling_data_size_scaling():
    S, delta = 750.0, 1e-4
    L = math.log(1 / delta)
    for D in (40, 300, 5000):
        r1, r2 = S / (2 * D * D), S / (2 * (2 * D) ** 2)
        assert r2 == pytest.approx(r1 / 4, rel=1e-15)
        sqrt1, sqrt2 = 2 * math.sqrt(r1 * L), 2 * math.sqrt(r2 * L)
        assert epsilon_from_sum(S, 2 * D, delta) == pytest.approx(sqrt1 / 2 + r1 / 4, rel=1e-14)
        assert sqrt2 == pytest.approx(sqrt1 / 2, rel=1e-14)


def test_bound_equals_client_when_s_is_one():
    led = PrivacyLedger.empty(3, 200, 1e-5)
    for sig in (0.3, 0.02, 1.7):
        led = record_round(led, sig, [1.0, 1.0, 1.0])
    for i in range(3):
        assert epsilon_for_client(led, i) == epsilon_upper_bound(led)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(1e-3, 10.0), st.lists(st.floats(1.0, 50.0), min_size=4, max_size=4)),
                min_size=1, max_size=12),
       st.integers(1, 10 ** 5), st.sampled_from([1e-5, 1e-3, 0.01, 0.1]))
def test_bound_dominates_every_client(rounds, D, delta):
    led = PrivacyLedger.empty(4, D, delta)
    prev = 0.0
    for sigma_sq, s in rounds:
        led = record_round(led, sigma_sq, s)
        eb = epsilon_upper_bound(led)
        assert eb >= prev
        prev = eb
        assert np.all(led.client_sums <= led.bound_sum)
        assert epsilon_max_client(led) <= eb + 1e-12


def test_lemma_bit_identical_without_recording():
    # non-transmitting iterations never call record_round; interleaving them is a no-op
    led = PrivacyLedger.empty(2, 100, 1e-5)
    a = record_round(record_round(led, 0.4, [1.0, 3.0]), 0.9, [2.0, 1.0])
    snapshot = (a.client_sums.copy(), a.bound_sum, a.rounds_counted)
    for _ in range(5):
        epsilon_upper_bound(a)
        epsilon_for_client(a, 1)
    assert np.array_equal(a.client_sums, snapshot[0])
    assert (a.bound_sum, a.rounds_counted) == snapshot[1:]


def test_composition_linearity():
    led = PrivacyLedger.empty(2, 100, 1e-5)
    for _ in range(16):
        led = record_round(led, 0.25, [1.0, 2.0])
    half = PrivacyLedger.empty(2, 100, 1e-5)
    for _ in range(8):
        half = record_round(half, 0.25, [1.0, 2.0])
    for _ in range(8):
        half = record_round(half, 0.25, [1.0, 2.0])
    assert np.array_equal(led.client_sums, half.client_sums)
    assert led.bound_sum == half.bound_sum


def test_monotone_in_noise_slack_and_data():
    base = epsilon_from_sum(10 / 0.5, 100, 1e-5)
    assert epsilon_from_sum(10 / 0.6, 100, 1e-5) < base
    assert epsilon_from_sum(10 / (0.5 * 4), 100, 1e-5) < base
    assert epsilon_from_sum(10 / 0.5, 101, 1e-5) < base
    assert epsilon_from_sum(11 / 0.5, 100, 1e-5) > base


def test_compute_a_worked_value():
    assert compute_a(4.4, 0.01) == pytest.approx(1.834585, abs=1e-5)
    assert rel(compute_a(4.4, 0.01), a_root(4.4, 0.01)) < 1e-14


def test_compute_a_small_eps_limit():
    assert compute_a(1e-12, 1e-5) == pytest.approx(0.5e-12, rel=1e-6)
    with pytest.raises(InvalidInput):
        compute_a(0.0, 0.1)
    with pytest.raises(InvalidInput):
        compute_a(1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-6, 100.0), st.floats(1e-12, 0.5))
def test_compute_a_quadratic_identity(eps, delta):
    a = compute_a(eps, delta)
    L = math.log(1 / delta)
    assert 2 * a + a * a / L == pytest.approx(eps, rel=1e-9)
    assert rel(a, a_root(eps, delta)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.one_of(st.just(0.0), st.floats(1e-290, 1e12)), st.integers(1, 10 ** 7),
       st.floats(1e-12, 0.5))
def test_epsilon_matches_high_precision(total, D, delta):
    got = epsilon_from_sum(total, D, delta)
    ref = eps_closed_form(total, D, delta)
    assert (got == 0.0 and ref == 0) or rel(got, ref) < 1e-12


def test_replay_rebuilds_sums():
    sig = [0.3, 0.7, 0.05]
    s = [[1.0, 2.0], [1.5, 1.0], [1.0, 1.0]]
    ledgers = replay(sig, s, 250, 1e-5)
    direct = PrivacyLedger.empty(2, 250, 1e-5)
    for a, b in zip(sig, s):
        direct = record_round(direct, a, b)
    assert np.array_equal(ledgers[-1].client_sums, direct.client_sums)
    assert [lg.rounds_counted for lg in ledgers] == [1, 2, 3]


def test_effective_noise_components():
    n = EffectiveNoise.from_components(alpha_cj=0.5, h_cj=2.0, alpha_u=4.0, sigma_c=1.0)
    assert n.sigma_sq == pytest.approx(0.25 ** 2 + 1 / 16, rel=1e-15)
    assert n.sigma_sq >= 1 / 16
