"""Decentralized power control and the cooperative-jammer design.

Client ``i`` transmits ``alpha_i * delta_i`` with
``alpha_i = alpha_u p_i / (|h_i| tau s_i)``, so after the server divides by
``alpha_u`` the fading cancels and client ``i`` contributes with weight
``p_i / (tau s_i)``.  The slack ``s_i >= 1`` is the smallest value keeping the
transmit power under the cap for any update of norm at most ``tau``.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import InvalidInput
from .privacy import compute_a


def _positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise InvalidInput(f"{name} must be positive, got {v}")


def compute_s(alpha_u: float, p_i: float, h_mag: float, P_i: float) -> float:
    _positive(alpha_u=alpha_u, p_i=p_i, h_mag=h_mag, P_i=P_i)
    return max(1.0, alpha_u * p_i / (h_mag * math.sqrt(P_i)))


def client_pc_factor(alpha_u: float, p_i: float, h_mag: float, tau: float, s_i: float) -> float:
    _positive(alpha_u=alpha_u, p_i=p_i, h_mag=h_mag, tau=tau)
    if s_i < 1:
        raise InvalidInput(f"s_i must be >= 1, got {s_i}")
    return alpha_u * p_i / (h_mag * tau * s_i)


def build_transmit_signal(alpha_i: float, delta_clipped: np.ndarray) -> np.ndarray:
    return alpha_i * np.asarray(delta_clipped, dtype=np.float64)


def dynamic_alpha_u(p: Sequence[float], gains: Sequence[float], powers: Sequence[float]) -> float:
    """Largest server factor for which every client can keep ``s_i = 1``.

    The binding client (smallest ``|h_i| sqrt(P_i) / p_i``) then transmits at
    exactly its power cap when its update sits on the clipping sphere.
    """
    p, h, P = (np.asarray(a, dtype=np.float64) for a in (p, gains, powers))
    return float(np.min(h * np.sqrt(P) / p))


def required_noise_variance(eps: float, delta: float, M: int, D_total: int) -> float:
    """Per-round effective noise variance at which the uniform bound hits ``eps``.

    Equal to ``M ln(1/delta) / (2 |D|^2 a^2)``.
    """
    if M < 0 or D_total <= 0:
        raise InvalidInput("M must be >= 0 and D_total positive")
    a = compute_a(eps, delta)
    return M * math.log(1.0 / delta) / (2.0 * D_total ** 2 * a ** 2)


def jammer_needed(M: int, D_total: int, a: float, sigma_c: float, alpha_u: float,
                  delta: float) -> bool:
    """Whether channel noise alone falls short of the required variance."""
    if a <= 0:
        raise InvalidInput("a must be positive (requires eps > 0)")
    if M <= 0:
        return False
    _positive(D_total=D_total, alpha_u=alpha_u)
    lhs = M / (2.0 * D_total ** 2 * a ** 2) * math.log(1.0 / delta)
    return lhs > sigma_c ** 2 / alpha_u ** 2


def design_jammer(eps_target: float, delta: float, M: int, D_total: int, alpha_u: float,
                  h_cj: float, sigma_c: float) -> float:
    """Minimal jammer power-control factor meeting ``eps_target``; 0 if not needed."""
    if not 0 < delta < 1:
        raise InvalidInput("delta must lie in (0, 1)")
    if not eps_target > 0:
        raise InvalidInput("eps_target must be positive")
    _positive(D_total=D_total, alpha_u=alpha_u, h_cj=h_cj)
    if M <= 0:
        return 0.0
    need = required_noise_variance(eps_target, delta, M, D_total)
    return _factor_for_variance(need, alpha_u, h_cj, sigma_c)


def _factor_for_variance(need: float, alpha_u: float, h_cj: float, sigma_c: float) -> float:
    channel = sigma_c ** 2 / alpha_u ** 2
    if need <= channel:
        return 0.0
    return alpha_u / h_cj * math.sqrt(need - channel)


def jammer_for_budget(budget_left: float, rounds_left: int, alpha_u: float, h_cj: float,
                      sigma_c: float) -> float:
    """Jammer factor when the per-round noise varies across rounds.

    ``budget_left`` is what remains of the total ``sum 1/sigma_m^2`` allowed by
    the privacy target.  Spreading it evenly over the remaining rounds means
    no round can overdraw it, and rounds that used less than their share
    leave more for later rounds.  With identical rounds this gives the same
    factor as :func:`design_jammer`.
    """
    _positive(alpha_u=alpha_u, h_cj=h_cj)
    if rounds_left < 1:
        raise InvalidInput("no rounds left to design for")
    if not budget_left > 0:
        raise InvalidInput("privacy budget exhausted")
    return _factor_for_variance(rounds_left / budget_left, alpha_u, h_cj, sigma_c)
