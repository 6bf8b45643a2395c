"""Named desk-scale experiment recipes (INI text, editable after export).

Seed counts default to 8 at every scale, smaller than the 24/24/14/10
seeds of the original heavy suite; pass ``--seeds`` to change them.
"""

from __future__ import annotations

from .config import ExperimentConfig, parse_config

RECIPES = {
    "calibrate-order": """
[experiment]
name = calibrate-order
preset = ou1
dt = 0.1
[data]
train = 64
val = 8
test = 64
seeds = 1
[estimators]
names = BE, Gen2, Gen3
features = linear
transitions = exact
startup = oracle
[sweep]
dt = 0.2, 0.1, 0.05, 0.025
""",
    "benchmark": """
[experiment]
name = benchmark
preset = regulator4
dt = 0.1
[data]
train = 256
val = 128
test = 128
seeds = 8
[estimators]
names = BE, Gen2, Gen3, MBLinear, MBQuadratic
features = quadratic
bandwidths = 1, 3, 5
[truth]
rollouts = 128
max_states = 32
""",
    "overtime": """
[experiment]
name = overtime
preset = pendulum2
dt = 0.1
[data]
train = 256
val = 128
test = 32
seeds = 8
[estimators]
names = BE, Gen2
features = quadratic
bandwidths = 1, 3
[truth]
mode = mc
rollouts = 256
max_states = 32
""",
    "feature-ablation": """
[experiment]
name = feature-ablation
preset = regulator4
dt = 0.1
[data]
train = 256
val = 128
test = 128
seeds = 8
[estimators]
names = BE, Gen2
bandwidths = 1, 3
[sweep]
family = reduced, quadratic, richer
""",
    "mismatch": """
[experiment]
name = mismatch
preset = ou1
dt = 0.1
[data]
train = 512
val = 128
test = 256
seeds = 8
[estimators]
names = BE, Gen2
features = linear
[perturbation]
kind = gain_shift
[sweep]
kappa = 0.5, 0.75, 1.0, 1.25, 1.5
""",
    "regime-sweep": """
[experiment]
name = regime-sweep
preset = ou1
dt = 0.1
[data]
train = 128
val = 64
test = 128
seeds = 8
[estimators]
names = BE, Gen2
features = linear
bandwidths = 1, 3, 5
[sweep]
M = 32, 128, 512
zeta = 0, 1, 2, 4
""",
    "startup-ablation": """
[experiment]
name = startup-ablation
preset = regulator4
dt = 0.1
[data]
train = 256
val = 128
test = 128
seeds = 8
[estimators]
names = BE, Gen2, Gen3
features = quadratic
[sweep]
startup = bellman, terminal_copy
""",
    "scaling": """
[experiment]
name = scaling
preset = ou10
dt = 0.1
[data]
train = 64
val = 64
test = 128
seeds = 8
[estimators]
names = BE, Gen2
features = linear
[sweep]
M = 64, 128, 256, 512
""",
    "conditioning": """
[experiment]
name = conditioning
preset = netlq12
dt = 0.1
[data]
train = 256
val = 64
test = 64
seeds = 4
[estimators]
names = BE, Gen2, Gen3
features = quadratic
""",
}


def recipe_text(name: str) -> str:
    try:
        return RECIPES[name].lstrip()
    except KeyError:
        raise KeyError(f"unknown recipe {name!r}; available: {sorted(RECIPES)}") from None


def get_recipe(name: str, seeds: int | None = None) -> ExperimentConfig:
    cfg = parse_config(recipe_text(name))
    if seeds is not None:
        cfg = cfg.replace(seeds=list(range(int(seeds))))
    return cfg
