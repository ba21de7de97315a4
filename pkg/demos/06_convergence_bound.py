# %% [markdown]
# # Evaluating the convergence bound
#
# The bound needs smoothness, dissimilarity and norm constants.  Here they
# are picked by hand to show how each term reacts.

# %%
import warnings

from otadp.bound import BoundConstants, BoundInapplicable, eval_bound, eval_constants

c = BoundConstants(L=1.0, B=0.1, rho=2.0, q=0.05, G=0.5, kappa=[0.1, 0.3], mu=1.0, tau=1.0,
                   d=1000, sigma_c=0.01, alpha_u=50.0, jammer_terms=[(1.0, 0.5)] * 100)
print("C1 =", c.C1, " C6 =", c.C6)

for M in (10, 50, 100):
    terms = [eval_constants(c, m, [1.0, 1.5], [0.6, 0.4])[1:5] for m in range(1, M + 1)]
    print(f"M={M:3d}: bound = {eval_bound(c, 2.0, M, terms):.5f}")

# %% [markdown]
# When the dissimilarity is too large, C1 turns negative and the bound says
# nothing.  That case is reported with a warning and a NaN, not an exception.

# %%
bad = BoundConstants(L=1.0, B=5.0, rho=2.0, q=0.05, G=0.5, kappa=[0.1, 0.3], mu=1.0, tau=1.0,
                     d=1000, sigma_c=0.01, alpha_u=50.0)
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always", BoundInapplicable)
    print("bound:", eval_bound(bad, 2.0, 1, [(0, 0, 0, 0)]), "|", caught[0].message)
