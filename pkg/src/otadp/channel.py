"""Block flat-fading uplink with additive white Gaussian noise.

Clients know their own channel, so each one pre-rotates its signal by the
channel phase and only the magnitude ``|h|`` survives.  The simulation is
therefore real-valued throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput
from .rng import stream


@dataclass(frozen=True)
class ChannelDraw:
    gains: np.ndarray       # |h_i|, one per client
    jammer_gain: float      # |h_CJ|
    sigma_c: float          # AWGN std per coordinate
    round: int


def rayleigh(rng: np.random.Generator, size) -> np.ndarray:
    """Magnitudes of CN(0, 1) samples, so that E|h|^2 = 1."""
    re = rng.normal(0.0, np.sqrt(0.5), size)
    im = rng.normal(0.0, np.sqrt(0.5), size)
    return np.hypot(re, im)


def draw_channels(K: int, round: int, seed: int, sigma_c: float = 1.0) -> ChannelDraw:
    """Fading magnitudes for ``K`` clients and the jammer in one round."""
    if K < 1:
        raise InvalidInput("K must be >= 1")
    if sigma_c < 0:
        raise InvalidInput("sigma_c must be nonnegative")
    h = rayleigh(stream(seed, "fading", round), K + 1)
    # hypot(0, 0) has probability zero but would break channel inversion
    h = np.maximum(h, np.finfo(np.float64).tiny)
    return ChannelDraw(gains=h[:K], jammer_gain=float(h[K]), sigma_c=float(sigma_c), round=round)


def awgn(d: int, sigma_c: float, noise_seed: int) -> np.ndarray:
    if sigma_c == 0:
        return np.zeros(d)
    return stream(noise_seed, "noise").normal(0.0, sigma_c, d)


def ota_aggregate(signals: Sequence[np.ndarray], draw: ChannelDraw,
                  jammer_signal: np.ndarray | None = None, noise_seed: int = 0) -> np.ndarray:
    """Received signal ``sum_i |h_i| x_i + |h_CJ| x_CJ + z``.

    Signals are summed in client-index order so the result does not depend on
    how they were produced.
    """
    if len(signals) != len(draw.gains):
        raise InvalidInput(f"{len(signals)} signals for {len(draw.gains)} channel gains")
    d = len(signals[0])
    y = np.zeros(d)
    for h, x in zip(draw.gains, signals):
        if len(x) != d:
            raise InvalidInput("all transmit signals must have the same length")
        y += h * x
    if jammer_signal is not None:
        if len(jammer_signal) != d:
            raise InvalidInput("jammer signal length differs from client signals")
        y += draw.jammer_gain * jammer_signal
    y += awgn(d, draw.sigma_c, noise_seed)
    return y


def check_power(x: np.ndarray, P: float) -> bool:
    """True iff ``||x||^2 <= P`` up to a 1e-9 relative rounding slack."""
    if P <= 0:
        raise InvalidInput("P must be positive")
    return float(np.dot(x, x)) <= P * (1.0 + 1e-9)


def power_from_snr(snr_db: float, d: int, sigma_c: float) -> float:
    """Transmit power cap giving ``SNR = P / (d sigma_c^2)``."""
    return 10.0 ** (snr_db / 10.0) * d * sigma_c ** 2
