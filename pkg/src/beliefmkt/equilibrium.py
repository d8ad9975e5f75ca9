"""Continuous-time market equilibrium for log investors with diverse beliefs.

The economy has one productive asset in unit net supply paying dividend
stream delta_t, and a bank account in zero net supply.  Agent j discounts
log consumption at rate rho_j and prices events with a subjective density
process Lambda^j against the common reference measure, under which the
driver X is standard Brownian motion and

    d delta = delta * sigma * (dX + alpha_star dt).

With log utility everything is closed form.  Writing
l_j(t) = -rho_j t + log Lambda^j_t - log nu_j and q = softmax(l):

    zeta_t   = sum_j exp(l_j) / delta_t          (state-price density)
    PD_t     = sum_j q_j / rho_j                 (price/dividend ratio)
    S_t      = delta_t * PD_t
    r_t      = rhobar + sigma*(alpha_star + alphabar) - sigma^2
    kappa_t  = sigma - alphabar
    sigma^S  = kappa + a,   a = weighted drift with weights q_j/rho_j
    w_j      = delta * q_j / rho_j,   c_j = rho_j w_j = delta * q_j
    pi_j     = w_j (alpha_j + kappa) / (S (a + kappa))

so the clearing identities sum(c) = delta, sum(w) = S, sum(pi) = 1 hold to
rounding error by construction.  All agent aggregation happens through the
softmax of log weights, which is immune to under/overflow at large t.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .beliefs import ConstantDrift, ContinuousBelief, drift_at
from .errors import ConfigError, SingularMarketError
from .numerics import logsumexp, softmax, solve_decreasing
from .rngtools import path_rng

# |a + kappa| below this is treated as a degenerate (zero stock volatility)
# market rather than silently producing huge portfolio numbers.
_SINGULAR_TOL = 1e-14

# A price/dividend ratio beyond this almost certainly means the transversality
# (integrability) requirement fails for the chosen parameters; runs flag it.
PD_DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class AgentSpec:
    """One log investor: impatience rho > 0, a belief, and either an
    equilibrium weight nu > 0 or an initial wealth (converted through
    nu = 1 / (rho * wealth), the ratio the zeta_0 = 1 convention fixes)."""

    impatience: float
    belief: ContinuousBelief
    weight: Optional[float] = None
    initial_wealth: Optional[float] = None

    def __post_init__(self):
        if not self.impatience > 0.0:
            raise ConfigError("impatience must be > 0")
        if (self.weight is None) == (self.initial_wealth is None):
            raise ConfigError("exactly one of weight, initial_wealth must be set")
        if self.weight is not None and not self.weight > 0.0:
            raise ConfigError("weight must be > 0")
        if self.initial_wealth is not None and not self.initial_wealth > 0.0:
            raise ConfigError("initial_wealth must be > 0")

    def resolved_weight(self) -> float:
        if self.weight is not None:
            return self.weight
        return 1.0 / (self.impatience * self.initial_wealth)


@dataclass(frozen=True)
class MarketSpec:
    """Dividend dynamics plus the agent roster."""

    sigma: float
    agents: tuple
    drift_adjustment: float = 0.0
    initial_dividend: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ConfigError("sigma must be > 0")
        if not self.initial_dividend > 0.0:
            raise ConfigError("initial_dividend must be > 0")
        if len(self.agents) < 1:
            raise ConfigError("at least one agent is required")
        object.__setattr__(self, "agents", tuple(self.agents))

    def arrays(self):
        rho = np.array([a.impatience for a in self.agents])
        nu = np.array([a.resolved_weight() for a in self.agents])
        return rho, nu


# ---------------------------------------------------------------------------
# pointwise equilibrium formulas (vectorized over a leading time axis)


def log_agent_weights(rho, nu, log_lam, t):
    """l_j = -rho_j t + log Lambda^j - log nu_j, shape (..., J)."""
    t = np.asarray(t, dtype=float)[..., None]
    return -rho * t + log_lam - np.log(nu)


def consumption_weights(rho, nu, log_lam, t):
    """Normalized weights q_j; each agent's share of aggregate consumption."""
    return softmax(log_agent_weights(rho, nu, log_lam, t), axis=-1)


def state_price_density(rho, nu, log_lam, t, dividend):
    """(L_t, zeta_t) with L = sum_j exp(l_j) and zeta = L / dividend."""
    log_level = logsumexp(log_agent_weights(rho, nu, log_lam, t), axis=-1)
    level = np.exp(log_level)
    return level, np.exp(log_level - np.log(dividend))


def price_dividend_ratio(rho, nu, log_lam, t):
    """PD depends on beliefs and impatience only, never on the dividend."""
    q = consumption_weights(rho, nu, log_lam, t)
    return q @ (1.0 / rho)


def stock_price(rho, nu, log_lam, t, dividend):
    pd = price_dividend_ratio(rho, nu, log_lam, t)
    return dividend * pd, pd


def rate_and_kappa(rho, nu, alpha, sigma, drift_adjustment, log_lam, t):
    """Riskless rate, market price of risk, and the q-weighted aggregates.

    Returns (r, kappa, q, alphabar, rhobar); ``alpha`` holds each agent's
    current believed drift, broadcastable against shape (..., J).
    """
    q = consumption_weights(rho, nu, log_lam, t)
    alphabar = (q * alpha).sum(axis=-1)
    rhobar = q @ rho
    r = rhobar + sigma * (drift_adjustment + alphabar) - sigma * sigma
    kappa = sigma - alphabar
    return r, kappa, q, alphabar, rhobar


def stock_volatility(rho, nu, alpha, log_lam, t, kappa):
    """(sigma_S, a): a is the drift average under weights prop. to q_j/rho_j."""
    l = log_agent_weights(rho, nu, log_lam, t)
    wa = softmax(l - np.log(rho), axis=-1)
    a = (wa * alpha).sum(axis=-1)
    return kappa + a, a


def wealth_and_portfolios(rho, q, alpha, dividend, kappa, a):
    """Wealth, consumption and risky-asset holdings for every agent.

    Raises SingularMarketError where the stock volatility denominator
    a + kappa vanishes.
    """
    denom = a + kappa
    if np.any(np.abs(denom) < _SINGULAR_TOL):
        raise SingularMarketError("a + kappa = 0: stock volatility degenerate")
    dividend = np.asarray(dividend, dtype=float)[..., None]
    wealth = dividend * q / rho
    consumption = dividend * q
    stock = wealth.sum(axis=-1)  # unit net supply: S = sum_j w_j
    holdings = wealth * (alpha + np.asarray(kappa)[..., None]) / (
        stock[..., None] * denom[..., None]
    )
    return wealth, consumption, holdings


def trade_volume(rho, q, alpha, sigma):
    """Diffusion coefficients theta_j of the holdings processes and their
    Euclidean norm (the total trading-volume proxy).

    Valid only under the hypotheses of the closed form: common impatience,
    constant drifts and volatility.
    """
    rho = np.asarray(rho, dtype=float)
    if np.ptp(rho) != 0.0:
        raise ConfigError("trade_volume requires a common impatience rate")
    alpha = np.asarray(alpha, dtype=float)
    q = np.asarray(q, dtype=float)
    alphabar = (q * alpha).sum(axis=-1, keepdims=True)
    dev = alpha - alphabar
    v = (q * dev * dev).sum(axis=-1, keepdims=True)
    theta = q * (dev * dev / sigma - v / sigma + dev)
    total = np.sqrt((theta * theta).sum(axis=-1))
    return theta, total


def solve_market_clearing(inverse_marginals: Sequence[Callable], lam, nu,
                          dividend: float, t: float, rtol: float = 1e-13):
    """zeta_t solving sum_j I_j(t, zeta * nu_j / lam_j) = dividend.

    Each I_j(t, .) must be continuous, strictly decreasing with range
    (0, inf), which makes the aggregate demand strictly decreasing in zeta
    and the root unique.  Bracketing failures raise BracketError.
    """
    lam = np.asarray(lam, dtype=float)
    nu = np.asarray(nu, dtype=float)

    def excess(zeta):
        return math.fsum(
            I(t, zeta * nu_j / lam_j) for I, nu_j, lam_j in zip(inverse_marginals, nu, lam)
        ) - dividend

    return solve_decreasing(excess, x0=1.0, rtol=rtol)


# ---------------------------------------------------------------------------
# path simulation


def simulate_driver(spec: MarketSpec, horizon: float, dt: float, seed: int,
                    path_index: int = 0):
    """Simulate (times, X, delta) under the reference measure.

    X is a gaussian random walk with N(0, dt) increments; delta evolves in
    log space, d log delta = sigma dX + (sigma*alpha_star - sigma^2/2) dt.
    Deterministic given (seed, path_index).
    """
    n = _n_steps(horizon, dt)
    rng = path_rng(seed, path_index)
    dx = rng.normal(0.0, math.sqrt(dt), size=n)
    x = np.concatenate([[0.0], np.cumsum(dx)])
    times = np.arange(n + 1) * dt
    log_div = (
        math.log(spec.initial_dividend)
        + spec.sigma * x
        + (spec.sigma * spec.drift_adjustment - 0.5 * spec.sigma**2) * times
    )
    return times, x, np.exp(log_div)


def _n_steps(horizon, dt):
    if not horizon > 0.0 or not dt > 0.0 or dt > horizon:
        raise ConfigError("need horizon > 0 and 0 < dt <= horizon")
    return int(round(horizon / dt))


def log_ratio_paths(spec: MarketSpec, times, x, dt):
    """Per-agent (log Lambda, believed drift) along a driver path.

    Constant-drift agents get the exact exponential-martingale form;
    gaussian learners are integrated with the log-space Euler step, which
    preserves positivity.
    Returns arrays of shape (n+1, J).
    """
    n1 = len(times)
    J = len(spec.agents)
    alpha = np.empty((n1, J))
    log_lam = np.empty((n1, J))
    dx = np.diff(x)
    for j, agent in enumerate(spec.agents):
        b = agent.belief
        if isinstance(b, ConstantDrift):
            alpha[:, j] = b.drift
            log_lam[:, j] = b.drift * x - 0.5 * b.drift**2 * times
        else:
            a_path = drift_at(b, times, x)
            alpha[:, j] = a_path
            incr = a_path[:-1] * dx - 0.5 * a_path[:-1] ** 2 * dt
            log_lam[0, j] = 0.0
            log_lam[1:, j] = np.cumsum(incr)
    return log_lam, alpha


@dataclass
class EquilibriumPath:
    """One simulated equilibrium trajectory on a uniform grid."""

    times: np.ndarray
    x: np.ndarray
    dividend: np.ndarray
    zeta: np.ndarray
    stock: np.ndarray
    pd_ratio: np.ndarray
    rate: np.ndarray
    kappa: np.ndarray
    stock_vol: np.ndarray
    q: np.ndarray            # (n+1, J) consumption shares
    wealth: np.ndarray       # (n+1, J)
    consumption: np.ndarray  # (n+1, J)
    holdings: np.ndarray     # (n+1, J) units of the risky asset
    trade: np.ndarray        # (n+1, J) theta; NaN unless common impatience
    drifts: np.ndarray       # (n+1, J) believed drifts alpha^j_t
    log_ratios: np.ndarray   # (n+1, J) log Lambda^j_t
    mean_drift: np.ndarray       # q-weighted average drift
    mean_impatience: np.ndarray  # q-weighted average impatience
    wealth_drift: np.ndarray     # drift average under wealth weights q_j/rho_j
    dt: float
    seed: int
    path_index: int
    ic_suspect: bool = False  # PD exceeded PD_DIVERGENCE_LIMIT somewhere

    CSV_BASE_COLUMNS = ("t", "X", "delta", "zeta", "S", "PD", "r", "kappa", "sigmaS")

    @property
    def n_agents(self):
        return self.q.shape[1]

    def csv_header(self):
        cols = list(self.CSV_BASE_COLUMNS)
        J = self.n_agents
        for name in ("q", "w", "c", "pi", "theta"):
            cols += [f"{name}_{j + 1}" for j in range(J)]
        return cols

    def write_csv(self, fp):
        """Fixed column order: t, X, delta, zeta, S, PD, r, kappa, sigmaS,
        then q_1..q_J, w_1..w_J, c_1..c_J, pi_1..pi_J, theta_1..theta_J."""
        fp.write(",".join(self.csv_header()) + "\n")
        base = (self.times, self.x, self.dividend, self.zeta, self.stock,
                self.pd_ratio, self.rate, self.kappa, self.stock_vol)
        blocks = (self.q, self.wealth, self.consumption, self.holdings, self.trade)
        for i in range(len(self.times)):
            row = [format(col[i], ".17g") for col in base]
            for block in blocks:
                row += [format(v, ".17g") for v in block[i]]
            fp.write(",".join(row) + "\n")


def evaluate_grid(spec: MarketSpec, times, x, dividend, dt) -> EquilibriumPath:
    """All equilibrium quantities along a given driver/dividend path."""
    rho, nu = spec.arrays()
    log_lam, alpha = log_ratio_paths(spec, times, x, dt)
    _, zeta = state_price_density(rho, nu, log_lam, times, dividend)
    r, kappa, q, abar, rhobar = rate_and_kappa(
        rho, nu, alpha, spec.sigma, spec.drift_adjustment, log_lam, times)
    sigma_s, a = stock_volatility(rho, nu, alpha, log_lam, times, kappa)
    pd = q @ (1.0 / rho)
    stock = dividend * pd
    wealth, consumption, holdings = wealth_and_portfolios(
        rho, q, alpha, dividend, kappa, a)
    if np.ptp(rho) == 0.0:
        trade, _ = trade_volume(rho, q, alpha, spec.sigma)
    else:
        trade = np.full_like(q, np.nan)
    return EquilibriumPath(
        times=times, x=x, dividend=dividend, zeta=zeta, stock=stock,
        pd_ratio=pd, rate=r, kappa=kappa, stock_vol=sigma_s, q=q,
        wealth=wealth, consumption=consumption, holdings=holdings,
        trade=trade, drifts=alpha, log_ratios=log_lam, mean_drift=abar,
        mean_impatience=rhobar, wealth_drift=a, dt=dt, seed=-1,
        path_index=-1, ic_suspect=bool(np.any(pd > PD_DIVERGENCE_LIMIT)),
    )


def simulate_path(spec: MarketSpec, horizon: float, dt: float, seed: int,
                  path_index: int = 0) -> EquilibriumPath:
    """Simulate one equilibrium path; deterministic given (seed, path_index)."""
    times, x, dividend = simulate_driver(spec, horizon, dt, seed, path_index)
    path = evaluate_grid(spec, times, x, dividend, dt)
    path.seed = seed
    path.path_index = path_index
    return path


def simulate_paths(spec: MarketSpec, horizon: float, dt: float, seed: int,
                   n_paths: int):
    """Yield n_paths independent paths split off the master seed."""
    for p in range(n_paths):
        yield simulate_path(spec, horizon, dt, seed, p)
