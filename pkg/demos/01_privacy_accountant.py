# %% [markdown]
# # Privacy accountant
#
# Every transmitting round releases the weighted client updates plus Gaussian
# noise of variance sigma^2 per coordinate.  The ledger keeps, per client, the
# running sum of 1/(s_i^2 sigma^2) and turns it into (eps, delta) in closed form.

# %%
import numpy as np

from otadp.privacy import (PrivacyLedger, compute_a, epsilon_for_client, epsilon_upper_bound,
                           record_round)

ledger = PrivacyLedger.empty(K=3, D_total=100, delta=1e-5)
for sigma_sq in (0.01,) * 10:
    ledger = record_round(ledger, sigma_sq, s_by_client=[1.0, 2.0, 4.0])

# %% [markdown]
# Client 0 always transmitted at full scale (s=1), so its epsilon equals the
# uniform bound.  Clients that had to shrink their update (s>1) leak less.

# %%
for i in range(ledger.K):
    print(f"client {i}: eps = {epsilon_for_client(ledger, i):.6f}")
print(f"uniform bound: eps = {epsilon_upper_bound(ledger):.6f}")

# %% [markdown]
# Rounds that touch no client data are simply never recorded, so the ledger
# object is untouched by them.  Composition is plain addition of the sums.

# %%
longer = ledger
for _ in range(10):
    longer = record_round(longer, 0.01, [1.0, 2.0, 4.0])
print("20 rounds:", epsilon_upper_bound(longer))
print("client sums double exactly:", np.array_equal(longer.client_sums, 2 * ledger.client_sums))

# %% [markdown]
# `compute_a` is the positive root used when inverting the bound for a target eps.

# %%
for eps in (0.1, 1.0, 4.4, 6.52):
    print(f"a({eps}, 0.01) = {compute_a(eps, 0.01):.6f}")
