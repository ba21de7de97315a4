"""Server update rules and the round loop for FedAvg, FedProx and Upcycled-FL.

FedAvg and FedProx transmit every iteration.  Upcycled-FL transmits only on
odd iterations; each even iteration extrapolates the last odd step on the
server, touches no client data and so costs no privacy.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import power
from .channel import check_power, draw_channels, ota_aggregate
from .errors import ConfigError, InvalidInput, InvariantViolation
from .model import (Algorithm, ClientRecord, LocalHyper, ModelParams, _loss_and_grad, accuracy,
                    clip_update, local_solve)
from .privacy import (EffectiveNoise, PrivacyLedger, epsilon_max_client, epsilon_upper_bound,
                      record_round)
from .rng import stream

DEFAULT_LAMBDA = ((1, 0.15), (26, 0.4), (51, 0.9), (76, 1.9))


@dataclass(frozen=True)
class LambdaSchedule:
    """Piecewise-constant ``m -> lambda_m`` from ``(first_m, value)`` breakpoints."""
    breakpoints: tuple[tuple[int, float], ...] = DEFAULT_LAMBDA

    def __post_init__(self):
        bps = tuple((int(m), float(v)) for m, v in self.breakpoints)
        if not bps or bps[0][0] != 1:
            raise ConfigError("lambda schedule must start at m = 1")
        if any(b[0] <= a[0] for a, b in zip(bps, bps[1:])):
            raise ConfigError("lambda breakpoints must be strictly increasing")
        if any(v <= 0 for _, v in bps):
            raise ConfigError("lambda values must be positive")
        object.__setattr__(self, "breakpoints", bps)

    def __call__(self, m: int) -> float:
        value = self.breakpoints[0][1]
        for start, v in self.breakpoints:
            if m >= start:
                value = v
        return value


def odd_global_update(w_prev: ModelParams, effective_sum: np.ndarray,
                      jammer_term: np.ndarray | None = None,
                      channel_noise_term: np.ndarray | None = None) -> ModelParams:
    """``w_prev + effective_sum + jammer_term + channel_noise_term``.

    A caller that only holds the received signal passes it (already divided
    by ``alpha_u``) as ``effective_sum`` and leaves the noise terms out.
    """
    out = np.array(w_prev.values, dtype=np.float64)
    for term in (effective_sum, jammer_term, channel_noise_term):
        if term is None:
            continue
        if len(term) != w_prev.d:
            raise InvalidInput(f"update term has length {len(term)}, model has {w_prev.d}")
        out += term
    return w_prev.with_values(out)


def even_global_update(w_odd: ModelParams, w_prev_even: ModelParams, mu: float,
                       lam: float) -> ModelParams:
    """First-order extrapolation ``w_odd + mu/(mu+lam) (w_odd - w_prev_even)``."""
    if mu < 0 or lam < 0 or mu + lam == 0:
        raise InvalidInput("need mu >= 0, lambda >= 0 and mu + lambda > 0")
    if w_odd.d != w_prev_even.d:
        raise InvalidInput("model dimensions differ")
    c = mu / (mu + lam)
    return w_odd.with_values(w_odd.values + c * (w_odd.values - w_prev_even.values))


@dataclass
class RoundMetrics:
    iteration: int
    transmitted: bool
    train_loss: float
    test_acc: float
    eps_bound: float
    eps_max_client: float
    jammer_var: float
    avg_tx_power: float
    wall_ms: int = 0


@dataclass(frozen=True)
class ProtocolSettings:
    algorithm: Algorithm = Algorithm.UPCYCLED
    rounds: int = 40                        # M, number of uplink transmissions
    hyper: LocalHyper = LocalHyper()
    schedule: LambdaSchedule = LambdaSchedule()
    sigma_c: float = 1.0
    channel_noise: bool = True
    delta: float = 1e-5
    eps_target: float | None = None
    jammer_mode: str = "auto"               # auto | off | forced
    jammer_margin: float = 1.0
    alpha_u: float | None = None            # None: chosen per round from CSI
    server_rescale: str = "tau_only"        # none | tau_only
    workers: int = 1
    seed: int = 0
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        if self.jammer_mode not in ("auto", "off", "forced"):
            raise ConfigError(f"unknown jammer mode {self.jammer_mode!r}")
        if self.jammer_margin < 1:
            raise ConfigError("jammer_margin must be >= 1")
        if self.server_rescale not in ("none", "tau_only"):
            raise ConfigError(f"unknown server_rescale {self.server_rescale!r}")
        if self.alpha_u is not None and not self.alpha_u > 0:
            raise ConfigError("fixed alpha_u must be positive")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.eps_target is not None:
            if not self.eps_target > 0:
                raise ConfigError("eps_target must be positive")
            if not self.channel_noise and self.jammer_mode == "off":
                raise ConfigError("eps_target is finite but the effective noise is zero")
        if self.sigma_c < 0:
            raise ConfigError("sigma_c must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def iterations(self) -> int:
        return 2 * self.rounds if self.algorithm is Algorithm.UPCYCLED else self.rounds

    @property
    def private(self) -> bool:
        """Whether the run releases noisy updates (otherwise epsilon is infinite)."""
        if self.channel_noise and self.sigma_c > 0:
            return True
        return self.eps_target is not None and self.jammer_mode != "off"


@dataclass
class RoundDiagnostics:
    """Per-transmission quantities kept for checks, replay and the bound."""
    iteration: int
    m: int
    alpha_u: float
    gains: np.ndarray
    jammer_gain: float
    alpha_cj: float
    s: np.ndarray
    tx_power_ratio: np.ndarray
    sigma_sq: float


class Trainer:
    """Holds the global model, ledger and history of one simulated run."""

    def __init__(self, model: ModelParams, clients: Sequence[ClientRecord],
                 test: tuple[np.ndarray, np.ndarray], settings: ProtocolSettings,
                 keep_trace: bool = False, observer: Callable | None = None):
        if not clients:
            raise ConfigError("need at least one client")
        if any(not c.power > 0 for c in clients):
            raise ConfigError("every client needs a positive power cap")
        self.settings = settings
        self.clients = list(clients)
        self.test = test
        self.w = model.with_values(np.array(model.values, dtype=np.float64))
        self.w_prev_even = self.w
        self.iteration = 0
        self.transmissions = 0
        self.D_total = sum(c.n for c in self.clients)
        self.ledger = PrivacyLedger.empty(len(self.clients), self.D_total, settings.delta)
        self.trace = [self.w.values.copy()] if keep_trace else None
        self.diagnostics: list[RoundDiagnostics] = []
        self.observer = observer
        self._train_x = np.concatenate([c.x for c in self.clients])
        self._train_y = np.concatenate([c.y for c in self.clients])
        self._need_var = None
        if settings.eps_target is not None and settings.jammer_mode != "off":
            self._need_var = power.required_noise_variance(
                settings.eps_target, settings.delta, settings.rounds, self.D_total)

    @property
    def K(self) -> int:
        return len(self.clients)

    def _local_updates(self, anchor: ModelParams, m: int) -> list[np.ndarray]:
        st = self.settings

        def solve(client):
            local = local_solve(anchor, client, st.hyper, st.algorithm, round_index=m, seed=st.seed)
            return clip_update(local.values - anchor.values, st.hyper.tau)

        if st.workers == 1:
            return [solve(c) for c in self.clients]
        with ThreadPoolExecutor(st.workers) as pool:
            return list(pool.map(solve, self.clients))

    def _jammer_factor(self, alpha_u: float, h_cj: float, m: int) -> float:
        st = self.settings
        if self._need_var is None:
            return 0.0
        sigma_c = st.sigma_c if st.channel_noise else 0.0
        if st.jammer_mode == "forced":
            base = alpha_u / h_cj * np.sqrt(self._need_var)
        else:
            # spend what is left of the total budget evenly over the remaining rounds
            budget = st.rounds / self._need_var - self.ledger.bound_sum
            base = power.jammer_for_budget(budget, st.rounds - m + 1, alpha_u, h_cj, sigma_c)
        return st.jammer_margin * base

    def _transmit(self) -> tuple[float, float]:
        """One uplink round; returns (jammer variance, mean transmit power)."""
        st = self.settings
        self.transmissions += 1
        m = self.transmissions
        anchor = self.w
        p = np.array([c.p for c in self.clients])
        caps = np.array([c.power for c in self.clients])
        sigma_c = st.sigma_c if st.channel_noise else 0.0
        draw = draw_channels(self.K, m, st.seed, sigma_c)
        if self.observer is not None:
            self.observer("before_transmit", self, m)

        deltas = self._local_updates(anchor, m)

        alpha_u = st.alpha_u if st.alpha_u is not None else power.dynamic_alpha_u(p, draw.gains, caps)
        s = np.array([power.compute_s(alpha_u, c.p, h, c.power)
                      for c, h in zip(self.clients, draw.gains)])
        signals, ratios = [], []
        for c, h, s_i, delta in zip(self.clients, draw.gains, s, deltas):
            a_i = power.client_pc_factor(alpha_u, c.p, h, st.hyper.tau, s_i)
            x = power.build_transmit_signal(a_i, delta)
            if not check_power(x, c.power):
                raise InvariantViolation(f"client {c.id} exceeds its power cap in round {m}")
            signals.append(x)
            ratios.append(float(x @ x) / c.power)

        alpha_cj = self._jammer_factor(alpha_u, draw.jammer_gain, m)
        jammer_signal = None
        if alpha_cj > 0:
            jammer_signal = alpha_cj * stream(st.seed, "jammer", m).standard_normal(anchor.d)
        noise_seed = int(np.random.SeedSequence([st.seed, m]).generate_state(1)[0])
        y = ota_aggregate(signals, draw, jammer_signal, noise_seed=noise_seed)

        scale = st.hyper.tau if st.server_rescale == "tau_only" else 1.0
        self.w = odd_global_update(anchor, (scale / alpha_u) * y)
        self.w_prev_even = anchor

        noise = EffectiveNoise.from_components(alpha_cj, draw.jammer_gain, alpha_u, sigma_c)
        if st.private:
            self.ledger = record_round(self.ledger, noise, s)
        jammer_var = (alpha_cj * draw.jammer_gain / alpha_u) ** 2
        self.diagnostics.append(RoundDiagnostics(
            iteration=self.iteration, m=m, alpha_u=alpha_u, gains=draw.gains,
            jammer_gain=draw.jammer_gain, alpha_cj=alpha_cj, s=s,
            tx_power_ratio=np.array(ratios), sigma_sq=noise.sigma_sq))
        return jammer_var, float(np.mean([x @ x for x in signals]))

    def run_round(self) -> RoundMetrics:
        """Advance one global iteration and evaluate the new global model."""
        st = self.settings
        if self.iteration >= st.iterations:
            raise InvalidInput("all iterations have already been run")
        t0 = time.perf_counter()
        self.iteration += 1
        t = self.iteration
        transmitting = st.algorithm is not Algorithm.UPCYCLED or t % 2 == 1
        if transmitting:
            jammer_var, tx_power = self._transmit()
        else:
            lam = st.schedule(t // 2)
            self.w = even_global_update(self.w, self.w_prev_even, st.hyper.mu, lam)
            jammer_var, tx_power = 0.0, 0.0
        if self.trace is not None:
            self.trace.append(self.w.values.copy())
        if self.observer is not None:
            self.observer("after_iteration", self, t)

        loss, _ = _loss_and_grad(self.w, self.w.values, self._train_x, self._train_y, need_grad=False)
        if st.private:
            eps_b, eps_c = epsilon_upper_bound(self.ledger), epsilon_max_client(self.ledger)
        else:
            eps_b = eps_c = float("inf")
        wall = int(round((time.perf_counter() - t0) * 1000)) if st.timing else 0
        return RoundMetrics(iteration=t, transmitted=transmitting, train_loss=float(loss),
                            test_acc=accuracy(self.w, self.test), eps_bound=eps_b,
                            eps_max_client=eps_c, jammer_var=jammer_var, avg_tx_power=tx_power,
                            wall_ms=wall)

    def run(self) -> list[RoundMetrics]:
        return [self.run_round() for _ in range(self.iteration, self.settings.iterations)]
