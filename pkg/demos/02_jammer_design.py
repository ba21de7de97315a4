# %% [markdown]
# # Designing the cooperative jammer
#
# Given a privacy target, the jammer supplies whatever noise the channel does
# not.  When channel noise alone suffices the jammer stays silent.

# %%
from otadp.power import design_jammer, required_noise_variance
from otadp.privacy import EffectiveNoise, PrivacyLedger, epsilon_upper_bound, record_round

M, D, delta = 10, 100, 1e-5
alpha_u, h_cj, sigma_c = 1.0, 1.0, 0.1

for eps in (0.5, 1.0, 2.0, 5.0, 10.0):
    need = required_noise_variance(eps, delta, M, D)
    a_cj = design_jammer(eps, delta, M, D, alpha_u, h_cj, sigma_c)
    print(f"eps={eps:5}: need sigma^2={need:.6f}, channel gives {sigma_c**2 / alpha_u**2:.4f}, "
          f"alpha_CJ={a_cj:.6f}")

# %% [markdown]
# Closing the loop: running the accountant with the resulting noise lands on
# the target exactly whenever the jammer is active.

# %%
a_cj = design_jammer(1.0, delta, M, D, alpha_u, h_cj, sigma_c)
noise = EffectiveNoise.from_components(a_cj, h_cj, alpha_u, sigma_c)
ledger = PrivacyLedger.empty(1, D, delta)
for _ in range(M):
    ledger = record_round(ledger, noise, [1.0])
print("achieved eps:", epsilon_upper_bound(ledger))

# %% [markdown]
# The same numbers are available from the command line:
#
#     otadp design-jammer --eps 1 --delta 1e-5 --rounds 10 --data-size 100 \
#         --alpha-u 1 --h-cj 1 --sigma-c 0.1
