# %% [markdown]
# # Fading channel and decentralized power control
#
# Each client scales its clipped update by alpha_i = alpha_u p_i / (|h_i| tau s_i).
# After the superposition and the server's division by alpha_u, the fading
# cancels and client i enters with weight p_i / (tau s_i).

# %%
import numpy as np

from otadp.channel import check_power, draw_channels, ota_aggregate, power_from_snr
from otadp.model import clip_update
from otadp.power import build_transmit_signal, client_pc_factor, compute_s, dynamic_alpha_u

K, d, tau, sigma_c = 5, 1000, 1.0, 1.0
rng = np.random.default_rng(0)
p = rng.dirichlet(np.ones(K))
P = np.full(K, power_from_snr(1.0, d, sigma_c))
draw = draw_channels(K, round=1, seed=0, sigma_c=sigma_c)
print("fading magnitudes:", np.round(draw.gains, 3))

# %% [markdown]
# The server factor is the largest one that lets every client keep s_i = 1;
# the client with the weakest link then sits exactly on its power cap.

# %%
alpha_u = dynamic_alpha_u(p, draw.gains, P)
deltas = [clip_update(rng.normal(0, 1, d), tau) for _ in range(K)]
signals = []
for i in range(K):
    s = compute_s(alpha_u, p[i], draw.gains[i], P[i])
    x = build_transmit_signal(client_pc_factor(alpha_u, p[i], draw.gains[i], tau, s), deltas[i])
    print(f"client {i}: s={s:.3f}, |x|^2/P={x @ x / P[i]:.4f}, within cap: {check_power(x, P[i])}")
    signals.append(x)

# %% [markdown]
# Received signal, rescaled by tau / alpha_u, versus the ideal weighted average.

# %%
y = ota_aggregate(signals, draw, noise_seed=1)
estimate = tau * y / alpha_u
ideal = sum(pi * dl for pi, dl in zip(p, deltas))
print("noise std after scaling:", tau * sigma_c / alpha_u)
print("empirical error std:", np.std(estimate - ideal))
