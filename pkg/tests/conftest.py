import numpy as np
import pytest

from beliefmkt.beliefs import ConstantDrift
from beliefmkt.equilibrium import AgentSpec, MarketSpec

# The three-agent benchmark calibration used throughout: a fitted
# configuration for long-sample US price/dividend data.
BENCHMARK_SIGMA = 0.517
BENCHMARK_ALPHA_STAR = -0.01
BENCHMARK_ALPHAS = (0.210, 0.727, -0.05)
BENCHMARK_RHOS = (0.131, 0.01, 0.443)
BENCHMARK_NUS = (14.47, 1.00, 0.174)


def benchmark_market() -> MarketSpec:
    agents = tuple(
        AgentSpec(impatience=r, belief=ConstantDrift(a), weight=n)
        for a, r, n in zip(BENCHMARK_ALPHAS, BENCHMARK_RHOS, BENCHMARK_NUS)
    )
    return MarketSpec(sigma=BENCHMARK_SIGMA,
                      drift_adjustment=BENCHMARK_ALPHA_STAR, agents=agents)


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)
