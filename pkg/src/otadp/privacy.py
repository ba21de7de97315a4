"""Moments-accountant ledger for the power-controlled analog uplink.

Each transmitting round releases the clients' weighted updates plus Gaussian
noise of variance ``sigma^2`` (channel noise and jammer noise, both divided by
the server factor).  With the power-control design the per-sample
sensitivity of client ``i`` is ``1 / (s_i |D|)``, and optimizing the moment
order in closed form gives

    eps_i = 2 sqrt(S_i / (2 |D|^2) * ln(1/delta)) + S_i / (2 |D|^2),
    S_i   = sum over rounds of 1 / (s_i^2 sigma^2).

Because ``s_i >= 1``, replacing ``S_i`` by ``S = sum 1/sigma^2`` gives a
client-independent upper bound.  Rounds that do not touch client data
(Upcycled even iterations) are never recorded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DegeneratePrivacy, InvalidInput


@dataclass(frozen=True)
class PrivacyLedger:
    delta: float
    D_total: int
    client_sums: np.ndarray = field(repr=False)
    bound_sum: float = 0.0
    rounds_counted: int = 0

    @classmethod
    def empty(cls, K: int, D_total: int, delta: float) -> "PrivacyLedger":
        if not 0 < delta < 1:
            raise InvalidInput("delta must lie in (0, 1)")
        if D_total <= 0 or K <= 0:
            raise InvalidInput("K and D_total must be positive")
        return cls(delta=float(delta), D_total=int(D_total), client_sums=np.zeros(K))

    @property
    def K(self) -> int:
        return len(self.client_sums)


@dataclass(frozen=True)
class EffectiveNoise:
    """Gaussian noise variance per model coordinate after server scaling."""
    sigma_sq: float

    @classmethod
    def from_components(cls, alpha_cj: float, h_cj: float, alpha_u: float,
                        sigma_c: float) -> "EffectiveNoise":
        return cls((alpha_cj * h_cj / alpha_u) ** 2 + sigma_c ** 2 / alpha_u ** 2)


def record_round(ledger: PrivacyLedger, noise: EffectiveNoise | float,
                 s_by_client: Sequence[float]) -> PrivacyLedger:
    """Return a new ledger with one more transmitting round composed in."""
    sigma_sq = noise.sigma_sq if isinstance(noise, EffectiveNoise) else float(noise)
    if not sigma_sq > 0:
        raise DegeneratePrivacy("effective noise variance is zero; epsilon is unbounded")
    s = np.asarray(s_by_client, dtype=np.float64)
    if s.shape != ledger.client_sums.shape:
        raise InvalidInput(f"expected {ledger.K} slack factors, got {s.size}")
    if np.any(s < 1):
        raise InvalidInput("every s_i must be >= 1")
    return replace(
        ledger,
        client_sums=ledger.client_sums + 1.0 / (s * s * sigma_sq),
        bound_sum=ledger.bound_sum + 1.0 / sigma_sq,
        rounds_counted=ledger.rounds_counted + 1,
    )


def epsilon_from_sum(total: float, D_total: int, delta: float) -> float:
    """``2 sqrt(total/(2|D|^2) ln(1/delta)) + total/(2|D|^2)``."""
    r = total / (2.0 * D_total ** 2)
    return 2.0 * math.sqrt(r * math.log(1.0 / delta)) + r


def epsilon_for_client(ledger: PrivacyLedger, client: int) -> float:
    return epsilon_from_sum(float(ledger.client_sums[client]), ledger.D_total, ledger.delta)


def epsilon_max_client(ledger: PrivacyLedger) -> float:
    return epsilon_from_sum(float(ledger.client_sums.max()), ledger.D_total, ledger.delta)


def epsilon_upper_bound(ledger: PrivacyLedger) -> float:
    return epsilon_from_sum(ledger.bound_sum, ledger.D_total, ledger.delta)


def compute_a(eps: float, delta: float) -> float:
    """Positive root of ``a^2 + 2 ln(1/delta) a - eps ln(1/delta) = 0``.

    Written as ``eps L / (L + sqrt(L^2 + eps L))`` with ``L = ln(1/delta)``,
    which equals ``-L + sqrt(L^2 + eps L)`` without the cancellation at small eps.
    """
    if not eps > 0:
        raise InvalidInput("eps must be positive")
    if not 0 < delta < 1:
        raise InvalidInput("delta must lie in (0, 1)")
    L = math.log(1.0 / delta)
    return eps * L / (L + math.sqrt(L * L + eps * L))


def replay(sigma_history: Sequence[float], s_history: Sequence[Sequence[float]],
           D_total: int, delta: float) -> list[PrivacyLedger]:
    """Rebuild the ledger after every recorded round from a noise history."""
    ledger = PrivacyLedger.empty(len(s_history[0]) if len(s_history) else 1, D_total, delta)
    out = []
    for sigma_sq, s in zip(sigma_history, s_history):
        ledger = record_round(ledger, sigma_sq, s)
        out.append(ledger)
    return out
