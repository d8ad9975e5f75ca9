"""Moment computation, historical data ingestion, and parameter search.

Estimator conventions (these matter and are easy to get subtly wrong, so
they are fixed here once):

* PD and the riskless rate are pooled over every grid point of every path.
* The equity return is the per-step total return
      R_k = (S_{k+1} + delta_k * dt - S_k) / S_k,
  annualized by 1/dt on the mean and 1/sqrt(dt) on the std.
* equity premium = mean equity return - mean riskless rate, and
  Sharpe = premium / std equity return, exactly as computed.

Pooled statistics accumulate with math.fsum so the report is invariant to
the order of the path set.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from .equilibrium import MarketSpec, AgentSpec, simulate_path
from .beliefs import ConstantDrift
from .errors import ConfigError

MOMENT_NAMES = (
    "mean_pd", "std_pd", "mean_equity_return", "std_equity_return",
    "mean_riskless", "std_riskless", "equity_premium", "sharpe",
)


@dataclass(frozen=True)
class MomentReport:
    mean_pd: float
    std_pd: float
    mean_equity_return: float
    std_equity_return: float
    mean_riskless: float
    std_riskless: float
    equity_premium: float
    sharpe: float

    def as_dict(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in MOMENT_NAMES}


@dataclass(frozen=True)
class EmpiricalTargets:
    mean_pd: float
    std_pd: float
    mean_equity_return: float
    std_equity_return: float
    mean_riskless: float
    std_riskless: float
    equity_premium: float
    sharpe: float
    provenance: str = "unspecified"

    def as_dict(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in MOMENT_NAMES}


#: Long-sample US stock-market targets (S&P real price and dividend,
#: 1871-1998, monthly): the default calibration target set.
DEFAULT_TARGETS = EmpiricalTargets(
    mean_pd=25.0, std_pd=7.1,
    mean_equity_return=0.07, std_equity_return=0.18,
    mean_riskless=0.018, std_riskless=0.057,
    equity_premium=0.06, sharpe=0.33,
    provenance="built-in long-sample US targets",
)


class _Pool:
    """Streaming mean/std over pooled samples, fsum-reduced across paths."""

    def __init__(self):
        self.n = []
        self.s = []
        self.s2 = []

    def add(self, values):
        v = np.asarray(values, dtype=float)
        self.n.append(float(v.size))
        self.s.append(float(v.sum()))
        self.s2.append(float((v * v).sum()))

    def mean(self):
        return math.fsum(self.s) / math.fsum(self.n)

    def std(self):
        n = math.fsum(self.n)
        m = math.fsum(self.s) / n
        var = math.fsum(self.s2) / n - m * m
        return math.sqrt(max(var, 0.0))


def compute_moments(paths) -> MomentReport:
    """Pooled moment report over an iterable of EquilibriumPath objects.

    Paths must share their grid spacing.  Raises ConfigError on empty input.
    """
    pd_pool, r_pool, ret_pool = _Pool(), _Pool(), _Pool()
    dt = None
    for path in paths:
        if dt is None:
            dt = path.dt
        elif path.dt != dt:
            raise ConfigError("paths do not share a common grid spacing")
        pd_pool.add(path.pd_ratio)
        r_pool.add(path.rate)
        ret = (path.stock[1:] + path.dividend[:-1] * path.dt - path.stock[:-1]) \
            / path.stock[:-1]
        ret_pool.add(ret)
    if dt is None:
        raise ConfigError("compute_moments needs at least one path")
    mean_ret = ret_pool.mean() / dt
    std_ret = ret_pool.std() / math.sqrt(dt)
    mean_r = r_pool.mean()
    premium = mean_ret - mean_r
    return MomentReport(
        mean_pd=pd_pool.mean(), std_pd=pd_pool.std(),
        mean_equity_return=mean_ret, std_equity_return=std_ret,
        mean_riskless=mean_r, std_riskless=r_pool.std(),
        equity_premium=premium,
        sharpe=premium / std_ret if std_ret > 0.0 else math.nan,
    )


# ---------------------------------------------------------------------------
# historical price/dividend ingestion


@dataclass(frozen=True)
class IngestReport:
    targets: EmpiricalTargets
    n_rows: int
    first_date: str
    last_date: str


def ingest_price_dividend_csv(path, min_years: float = 10.0) -> IngestReport:
    """Empirical targets from a monthly price/dividend CSV.

    The file needs a header with columns named (case-insensitively) date,
    price and dividend; price is the real index level and dividend the
    annualized real dividend rate, monthly rows.  An optional riskless
    column (annualized rate, decimal) enables the rate moments; otherwise
    those moments are NaN.

    Annualization: monthly total returns scaled by 12 (mean) and sqrt(12)
    (std); PD is price over the annualized dividend, pooled monthly.
    """
    rows = []
    with open(path, newline="") as fp:
        reader = csv.reader(fp)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        cols = {name.strip().lower(): i for i, name in enumerate(header)}
        for required in ("date", "price", "dividend"):
            if required not in cols:
                raise ConfigError(f"{path}: missing column '{required}'")
        has_rate = "riskless" in cols
        bad_lines = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                date = row[cols["date"]].strip()
                price = float(row[cols["price"]])
                dividend = float(row[cols["dividend"]])
                rate = float(row[cols["riskless"]]) if has_rate else math.nan
                if price <= 0.0 or dividend <= 0.0:
                    raise ValueError("nonpositive price or dividend")
            except (ValueError, IndexError) as exc:
                bad_lines.append((lineno, str(exc)))
                continue
            rows.append((date, price, dividend, rate))
        if bad_lines:
            listing = "; ".join(f"line {n}: {msg}" for n, msg in bad_lines[:5])
            raise ConfigError(f"{path}: {len(bad_lines)} unparseable row(s): {listing}")
    if len(rows) < int(min_years * 12) + 1:
        raise ConfigError(
            f"{path}: span too short ({len(rows)} monthly rows; "
            f"need more than {min_years:g} years)")

    price = np.array([r[1] for r in rows])
    dividend = np.array([r[2] for r in rows])
    rate = np.array([r[3] for r in rows])

    pd_ratio = price / dividend
    # monthly total return: next price plus one month of dividend flow
    ret_m = (price[1:] + dividend[:-1] / 12.0 - price[:-1]) / price[:-1]
    mean_ret = 12.0 * float(ret_m.mean())
    std_ret = math.sqrt(12.0) * float(ret_m.std())
    if np.all(np.isfinite(rate)):
        mean_r = float(rate.mean())
        std_r = float(rate.std())
        premium = mean_ret - mean_r
        sharpe = premium / std_ret if std_ret > 0.0 else math.nan
    else:
        mean_r = std_r = premium = sharpe = math.nan
    targets = EmpiricalTargets(
        mean_pd=float(pd_ratio.mean()), std_pd=float(pd_ratio.std()),
        mean_equity_return=mean_ret, std_equity_return=std_ret,
        mean_riskless=mean_r, std_riskless=std_r,
        equity_premium=premium, sharpe=sharpe,
        provenance=f"ingested:{path}",
    )
    return IngestReport(targets=targets, n_rows=len(rows),
                        first_date=rows[0][0], last_date=rows[-1][0])


# ---------------------------------------------------------------------------
# moment-matching search


@dataclass(frozen=True)
class FreeParameter:
    """A parameter the search may move, on a bounded box."""

    name: str          # sigma | drift_adjustment | alpha_<j> | rho_<j> | nu_<j>
    lower: float
    upper: float
    start: float

    def __post_init__(self):
        if not (self.lower < self.upper):
            raise ConfigError(f"{self.name}: need lower < upper")
        if not (self.lower <= self.start <= self.upper):
            raise ConfigError(f"{self.name}: start outside bounds")


@dataclass(frozen=True)
class CalibrationProblem:
    """Search setup: which parameters move, on what Monte Carlo budget."""

    n_agents: int
    free: Tuple[FreeParameter, ...]
    fixed: Dict[str, float] = field(default_factory=dict)
    n_paths: int = 200
    horizon: float = 50.0
    dt: float = 1.0 / 252.0
    seed: int = 0
    loss_weights: Optional[Dict[str, float]] = None
    max_iterations: int = 200

    def __post_init__(self):
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1")
        names = [p.name for p in self.free]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate free parameter names")
        for p in self.free:
            _check_param_name(p.name, self.n_agents)
            if p.name.startswith(("rho_", "nu_")) or p.name == "sigma":
                if p.lower <= 0.0:
                    raise ConfigError(f"{p.name}: bounds must keep the value > 0")
        for name in self.fixed:
            _check_param_name(name, self.n_agents)


def _check_param_name(name: str, n_agents: int):
    if name in ("sigma", "drift_adjustment"):
        return
    for prefix in ("alpha_", "rho_", "nu_"):
        if name.startswith(prefix):
            idx = name[len(prefix):]
            if idx.isdigit() and 0 <= int(idx) < n_agents:
                return
    raise ConfigError(f"unknown parameter name '{name}'")


_SPEC_DEFAULTS = {"sigma": 0.2, "drift_adjustment": 0.0,
                  "alpha": 0.0, "rho": 0.05, "nu": 1.0}


def build_market(values: Dict[str, float], n_agents: int) -> MarketSpec:
    """MarketSpec from a flat parameter dict (constant-drift agents)."""
    agents = []
    for j in range(n_agents):
        agents.append(AgentSpec(
            impatience=values.get(f"rho_{j}", _SPEC_DEFAULTS["rho"]),
            belief=ConstantDrift(values.get(f"alpha_{j}", _SPEC_DEFAULTS["alpha"])),
            weight=values.get(f"nu_{j}", _SPEC_DEFAULTS["nu"]),
        ))
    return MarketSpec(
        sigma=values.get("sigma", _SPEC_DEFAULTS["sigma"]),
        drift_adjustment=values.get("drift_adjustment",
                                    _SPEC_DEFAULTS["drift_adjustment"]),
        agents=tuple(agents),
    )


def moment_loss(report: MomentReport, targets: EmpiricalTargets,
                weights: Optional[Dict[str, float]] = None) -> float:
    """Weighted relative squared error, sum_k w_k ((m_k - t_k)/t_k)^2.

    Moments whose target is NaN are skipped; a non-finite moment makes the
    loss infinite.
    """
    total = 0.0
    for name in MOMENT_NAMES:
        target = getattr(targets, name)
        if math.isnan(target):
            continue
        w = 1.0 if weights is None else weights.get(name, 1.0)
        m = getattr(report, name)
        if not math.isfinite(m):
            return math.inf
        total += w * ((m - target) / target) ** 2
    return total


def evaluate_point(problem: CalibrationProblem, values: Dict[str, float],
                   targets: EmpiricalTargets) -> Tuple[float, MomentReport]:
    """Loss and moment report at one parameter point, with common random
    numbers (the same path seeds on every call)."""
    spec = build_market(values, problem.n_agents)
    ic = False

    def gen():
        nonlocal ic
        for p in range(problem.n_paths):
            path = simulate_path(spec, problem.horizon, problem.dt,
                                 problem.seed, p)
            ic = ic or path.ic_suspect
            yield path

    report = compute_moments(gen())
    loss = math.inf if ic else moment_loss(report, targets, problem.loss_weights)
    return loss, report


def _to_box(u, lower, upper):
    # smooth bijection R -> (lower, upper); keeps the simplex unconstrained
    return lower + (upper - lower) / (1.0 + np.exp(-u))


def _from_box(x, lower, upper):
    frac = np.clip((x - lower) / (upper - lower), 1e-12, 1.0 - 1e-12)
    return np.log(frac / (1.0 - frac))


@dataclass
class FitResult:
    values: Dict[str, float]
    report: MomentReport
    loss: float
    n_evaluations: int
    converged: bool


def fit_parameters(problem: CalibrationProblem,
                   targets: EmpiricalTargets) -> FitResult:
    """Derivative-free moment matching.

    Nelder-Mead simplex on logistic-transformed coordinates keeps every
    trial point inside its box; non-finite losses (e.g. transversality
    violations) reject the point.  Deterministic given problem.seed.
    """
    names = [p.name for p in problem.free]
    lower = np.array([p.lower for p in problem.free])
    upper = np.array([p.upper for p in problem.free])
    start = np.array([p.start for p in problem.free])
    n_eval = 0

    def values_at(u):
        x = _to_box(u, lower, upper)
        vals = dict(problem.fixed)
        vals.update(zip(names, x))
        return vals

    def objective(u):
        nonlocal n_eval
        n_eval += 1
        loss, _ = evaluate_point(problem, values_at(u), targets)
        return loss

    u0 = _from_box(start, lower, upper)
    res = minimize(objective, u0, method="Nelder-Mead",
                   options={"maxiter": problem.max_iterations,
                            "xatol": 1e-4, "fatol": 1e-6})
    best = values_at(res.x)
    loss, report = evaluate_point(problem, best, targets)
    return FitResult(values=best, report=report, loss=loss,
                     n_evaluations=n_eval, converged=bool(res.success))


def comparison_table(report: MomentReport, targets: EmpiricalTargets) -> str:
    """Aligned two-column moment table (model vs target)."""
    labels = {
        "mean_pd": "Mean price/dividend ratio",
        "std_pd": "Standard deviation of price/dividend ratio",
        "mean_equity_return": "Mean return on equity",
        "std_equity_return": "Standard deviation of return on equity",
        "mean_riskless": "Mean riskless rate",
        "std_riskless": "Standard deviation of riskless rate",
        "equity_premium": "Equity premium",
        "sharpe": "Sharpe ratio",
    }
    width = max(len(v) for v in labels.values())
    lines = [f"{'':{width}}  {'Model':>10}  {'Target':>10}"]
    for name in MOMENT_NAMES:
        lines.append(f"{labels[name]:{width}}  {getattr(report, name):10.4g}"
                     f"  {getattr(targets, name):10.4g}")
    return "\n".join(lines)
