# %% [markdown]
# # Privacy versus accuracy
#
# The same desk-scale experiment at four privacy levels, five seeds each.
# "inf" turns channel noise off entirely, so nothing is private.
# Takes around half a minute.

# %%
from pathlib import Path

import numpy as np

from otadp.runner import parse_config, run_seed
from otadp.svg import emit_svg

levels = {"inf": ["channel.noise=off"], "6.52": ["privacy.eps_target=6.52"],
          "1.0": ["privacy.eps_target=1.0"], "0.1": ["privacy.eps_target=0.1"]}
series = {}
for label, ov in levels.items():
    cfg = parse_config(None, ov + ["experiment.seeds=0,1,2,3,4", "bound.enabled=false"])
    runs = [run_seed(cfg, s)[1] for s in cfg.seeds]
    accs = [m[-1].test_acc for m in runs]
    print(f"eps={label:>5}: final accuracy {np.mean(accs):.3f} +- {np.std(accs, ddof=1):.3f}")
    series[f"eps={label}"] = runs[0]

# %%
out = Path("demo_output")
out.mkdir(exist_ok=True)
emit_svg(series, out / "tradeoff.svg")
print("wrote", out / "tradeoff.svg")
