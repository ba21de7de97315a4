"""Numeric evaluation of the non-convex convergence bound for Upcycled-FL.

The bound reads

    min_m E||grad f(w^{2m-1})||^2 <= (f0 - f*) / (M C1) + C6 / C1
                                     + 1/(M C1) sum_m (C2^m + C3^m + C4^m + C5^m)

and is only meaningful when ``C1 > 0``.  It is reported next to the
empirical curves and never feeds back into training.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInput
from .model import _loss_and_grad
from .protocol import LambdaSchedule


class BoundInapplicable(UserWarning):
    """C1 <= 0: the bound's hypothesis fails for these constants."""


@dataclass
class BoundConstants:
    L: float
    B: float
    rho: float
    q: float
    G: float
    kappa: np.ndarray
    mu: float
    tau: float
    d: int
    sigma_c: float
    alpha_u: float
    lambda_schedule: LambdaSchedule = field(default_factory=LambdaSchedule)
    jammer_terms: list[tuple[float, float]] = field(default_factory=list)  # (|h_CJ|, alpha_CJ) per m

    def __post_init__(self):
        self.kappa = np.asarray(self.kappa, dtype=np.float64)
        for name in ("L", "B", "rho", "mu", "tau", "alpha_u"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"{name} must be positive")
        if self.q < 0 or self.G < 0 or np.any(self.kappa < 0):
            raise InvalidInput("q, G and kappa must be nonnegative")

    @property
    def C1(self) -> float:
        return 1.0 / (2.0 * self.mu) - self.L * self.B / (self.mu * self.rho ** 2)

    @property
    def C6(self) -> float:
        return self.L * self.sigma_c ** 2 * self.d / (2.0 * self.alpha_u ** 2)


def eval_constants(c: BoundConstants, m: int, s_by_client: Sequence[float],
                   p: Sequence[float]) -> tuple[float, float, float, float, float, float]:
    """``(C1, C2^m, C3^m, C4^m, C5^m, C6)`` with the client expectation weighted by ``p``."""
    s = np.asarray(s_by_client, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if np.any(s < 1):
        raise InvalidInput("every s_i must be >= 1")
    if s.shape != p.shape or s.shape != c.kappa.shape:
        raise InvalidInput("s, p and kappa must have one entry per client")
    L, mu, rho = c.L, c.mu, c.rho
    ratio = mu / (mu + c.lambda_schedule(m))
    c2 = ratio * (1.0 + 2.0 * L * c.B * (L + rho) / (mu * rho ** 2)) * c.q * c.G
    c3 = ratio ** 2 * L * (1.0 + (L + rho) ** 2 / (mu * rho ** 2)) * c.q ** 2
    ts = c.tau * s
    c4 = float(np.sum(p * (2.0 * mu * (ts - 1.0) ** 2 + (2.0 * L - mu) * mu)
                      / (2.0 * mu ** 2 * ts ** 2) * (c.kappa + c.G) ** 2))
    h_cj, a_cj = c.jammer_terms[m - 1] if m - 1 < len(c.jammer_terms) else (0.0, 0.0)
    c5 = L * c.d / 2.0 * (h_cj * a_cj / c.alpha_u) ** 2
    if c.C1 <= 0:
        warnings.warn(f"C1 = {c.C1:.6g} <= 0; convergence bound does not apply", BoundInapplicable)
    return c.C1, c2, c3, c4, c5, c.C6


def eval_bound(c: BoundConstants, f0_minus_fstar: float, M: int,
               per_round_terms: Sequence[Sequence[float]]) -> float:
    """Right-hand side of the bound; ``per_round_terms[m-1] = (C2, C3, C4, C5)``.

    Returns ``nan`` (with a :class:`BoundInapplicable` warning) when ``C1 <= 0``.
    """
    if M < 1:
        raise InvalidInput("M must be >= 1")
    if len(per_round_terms) != M:
        raise InvalidInput(f"expected {M} per-round term tuples, got {len(per_round_terms)}")
    C1 = c.C1
    if C1 <= 0:
        warnings.warn(f"C1 = {C1:.6g} <= 0; convergence bound does not apply", BoundInapplicable)
        return math.nan
    total = math.fsum(math.fsum(terms) for terms in per_round_terms)
    return f0_minus_fstar / (M * C1) + c.C6 / C1 + total / (M * C1)


@dataclass
class TraceEstimator:
    """Heuristic running estimates of L, B, G, q and kappa_i from a training run.

    Attach as a :class:`~otadp.protocol.Trainer` observer.  Gradients are full
    local gradients at each broadcast global model.
    """
    L: float = 0.0
    B: float = 0.0
    G: float = 0.0
    q: float = 0.0
    kappa: np.ndarray | None = None
    f0: float | None = None
    _prev: tuple | None = None

    def __call__(self, event: str, trainer, t: int) -> None:
        if event == "before_transmit":
            self._probe(trainer)
        elif event == "after_iteration" and trainer.diagnostics and trainer.diagnostics[-1].iteration == t:
            step = np.linalg.norm(trainer.w.values - trainer.w_prev_even.values)
            self.q = max(self.q, float(step))

    def _probe(self, trainer) -> None:
        w = trainer.w
        p = np.array([c.p for c in trainer.clients])
        grads = np.array([_loss_and_grad(w, w.values, c.x, c.y)[1] for c in trainer.clients])
        full = p @ grads
        if self.f0 is None:
            self.f0 = float(sum(pi * _loss_and_grad(w, w.values, c.x, c.y, need_grad=False)[0]
                                for pi, c in zip(p, trainer.clients)))
        gap = np.linalg.norm(grads - full, axis=1)
        self.kappa = gap if self.kappa is None else np.maximum(self.kappa, gap)
        gnorm = float(np.linalg.norm(full))
        self.G = max(self.G, gnorm)
        if gnorm > 0:
            spread = float(p @ np.sum(grads ** 2, axis=1)) / gnorm ** 2
            self.B = max(self.B, math.sqrt(spread))
        if self._prev is not None:
            w_old, g_old = self._prev
            dist = np.linalg.norm(w.values - w_old)
            if dist > 0:
                self.L = max(self.L, float(np.max(np.linalg.norm(grads - g_old, axis=1)) / dist))
        self._prev = (w.values.copy(), grads)
