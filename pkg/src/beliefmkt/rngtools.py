"""Deterministic stream splitting for reproducible Monte Carlo.

All randomness derives from a single 64-bit master seed through numpy's
PCG64 generator.  Substreams are carved out with ``SeedSequence`` spawn
keys, so a run is reproducible bit-for-bit from its master seed alone,
and adding paths or agents never perturbs the streams already drawn:

* path ``p``   -> spawn key ``(0, p)``
* agent ``j``  -> spawn key ``(1, j)``

The agent rule gives the prefix property: simulating with more agents
under the same master seed reproduces the earlier agents exactly.
"""

import numpy as np

_PATH_DOMAIN = 0
_AGENT_DOMAIN = 1


def path_rng(master_seed: int, path_index: int) -> np.random.Generator:
    """Generator for the driver noise of one simulated path."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(_PATH_DOMAIN, path_index))
    return np.random.default_rng(ss)


def agent_rng(master_seed: int, agent_index: int) -> np.random.Generator:
    """Generator for the characteristic draws of one agent."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(_AGENT_DOMAIN, agent_index))
    return np.random.default_rng(ss)
