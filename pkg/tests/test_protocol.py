import numpy as np
import pytest

from otadp.errors import ConfigError, InvalidInput
from otadp.model import Algorithm, LocalHyper, ModelParams, clip_update, local_solve
from otadp.protocol import (LambdaSchedule, ProtocolSettings, even_global_update,
                            odd_global_update)

from helpers import small_trainer


def _vec(*v):
    return ModelParams(np.array(v, dtype=float), ((len(v), 1),), bias=False)


def test_odd_update_examples():
    w = _vec(0.0, 0.0)
    out = odd_global_update(w, np.array([0.1, -0.2]), np.array([0.01, 0.0]), np.array([0.0, 0.01]))
    assert np.allclose(out.values, [0.11, -0.19], atol=1e-15)
    assert np.array_equal(odd_global_update(_vec(1.0, 2.0), np.zeros(2)).values, [1.0, 2.0])
    with pytest.raises(InvalidInput):
        odd_global_update(w, np.zeros(3))


def test_even_update_examples():
    assert np.array_equal(even_global_update(_vec(1.0), _vec(0.0), 0.0, 0.15).values, [1.0])
    assert even_global_update(_vec(1.0), _vec(0.0), 0.1, 0.15).values[0] == pytest.approx(1.4, abs=1e-15)
    far = even_global_update(_vec(1.0, -3.0), _vec(0.0, 2.0), 0.1, 1e12)
    assert np.allclose(far.values, [1.0, -3.0], atol=1e-9)
    with pytest.raises(InvalidInput):
        even_global_update(_vec(1.0), _vec(0.0), 0.0, 0.0)


def test_lambda_schedule_breakpoints():
    lam = LambdaSchedule()
    assert [lam(m) for m in (1, 25, 26, 50, 51, 75, 76, 500)] == [0.15, 0.15, 0.4, 0.4, 0.9, 0.9, 1.9, 1.9]
    with pytest.raises(ConfigError):
        LambdaSchedule(((2, 0.1),))
    with pytest.raises(ConfigError):
        LambdaSchedule(((1, 0.1), (1, 0.2)))
    with pytest.raises(ConfigError):
        LambdaSchedule(((1, 0.0),))


def test_upcycled_transmission_count_and_ledger():
    tr = small_trainer(rounds=4, algorithm=Algorithm.UPCYCLED)
    ledgers = []
    metrics = []
    for _ in range(tr.settings.iterations):
        metrics.append(tr.run_round())
        ledgers.append((tr.ledger.client_sums.copy(), tr.ledger.bound_sum, tr.ledger.rounds_counted))
    assert tr.settings.iterations == 8
    assert tr.transmissions == 4 and len(tr.diagnostics) == 4
    assert [r.transmitted for r in metrics] == [True, False] * 4
    for k in range(1, 8, 2):
        assert np.array_equal(ledgers[k][0], ledgers[k - 1][0])
        assert ledgers[k][1:] == ledgers[k - 1][1:]
        assert metrics[k].eps_bound == metrics[k - 1].eps_bound


def test_fedavg_and_fedprox_consume_one_draw_per_iteration():
    for alg in (Algorithm.FEDAVG, Algorithm.FEDPROX):
        tr = small_trainer(rounds=3, algorithm=alg)
        tr.run()
        assert tr.transmissions == 3 and tr.iteration == 3


def test_even_step_closure():
    tr = small_trainer(rounds=3, algorithm=Algorithm.UPCYCLED, keep_trace=True)
    tr.run()
    lam = tr.settings.schedule
    mu = tr.settings.hyper.mu
    for m in range(1, 4):
        w_prev, w_odd, w_even = tr.trace[2 * m - 2], tr.trace[2 * m - 1], tr.trace[2 * m]
        expected = mu / (mu + lam(m)) * (w_odd - w_prev)
        assert np.max(np.abs((w_even - w_odd) - expected)) < 1e-12


def test_fedavg_equals_fedprox_with_zero_mu():
    hyper = LocalHyper(local_epochs=2, batch_size=16, mu=0.0)
    a = small_trainer(algorithm=Algorithm.FEDAVG, hyper=hyper, keep_trace=True)
    b = small_trainer(algorithm=Algorithm.FEDPROX, hyper=hyper, keep_trace=True)
    a.run()
    b.run()
    for x, y in zip(a.trace, b.trace):
        assert np.array_equal(x, y)


def test_noiseless_round_is_weighted_average():
    tr = small_trainer(rounds=1, algorithm=Algorithm.FEDAVG, sigma_c=0.0, channel_noise=False,
                       jammer_mode="off", alpha_u=1e-3, power=1.0,
                       hyper=LocalHyper(local_epochs=2, batch_size=16, mu=0.0, tau=0.5))
    w0 = tr.w
    deltas = [clip_update(local_solve(w0, c, tr.settings.hyper, Algorithm.FEDAVG, 1, 0).values - w0.values,
                          0.5) for c in tr.clients]
    expected = w0.values + sum(c.p * d for c, d in zip(tr.clients, deltas))
    tr.run_round()
    assert np.all(tr.diagnostics[0].s == 1.0)
    assert np.max(np.abs(tr.w.values - expected)) < 1e-9


def test_tx_power_never_exceeds_cap():
    tr = small_trainer(rounds=5, algorithm=Algorithm.FEDPROX)
    caps = max(c.power for c in tr.clients)
    for r in tr.run():
        assert r.avg_tx_power <= caps * (1 + 1e-9)


def test_worker_count_does_not_change_results():
    a = small_trainer(rounds=3, workers=1, keep_trace=True)
    b = small_trainer(rounds=3, workers=3, keep_trace=True)
    a.run()
    b.run()
    for x, y in zip(a.trace, b.trace):
        assert np.array_equal(x, y)


def test_jammer_hits_target():
    tr = small_trainer(rounds=4, eps_target=0.5, delta=1e-5, snr_db=20.0)
    metrics = tr.run()
    assert any(dg.alpha_cj > 0 for dg in tr.diagnostics)
    assert metrics[-1].eps_bound <= 0.5 * (1 + 1e-6)


def test_non_private_run_reports_infinite_epsilon():
    tr = small_trainer(rounds=2, channel_noise=False, sigma_c=1.0)
    assert all(r.eps_bound == float("inf") for r in tr.run())


def test_settings_validation():
    with pytest.raises(ConfigError):
        ProtocolSettings(jammer_mode="sometimes")
    with pytest.raises(ConfigError):
        ProtocolSettings(eps_target=1.0, channel_noise=False, jammer_mode="off")
    with pytest.raises(ConfigError):
        ProtocolSettings(jammer_margin=0.5)
    with pytest.raises(ConfigError):
        ProtocolSettings(alpha_u=0.0)


def test_run_round_past_end():
    tr = small_trainer(rounds=1, algorithm=Algorithm.FEDAVG)
    tr.run()
    with pytest.raises(InvalidInput):
        tr.run_round()
