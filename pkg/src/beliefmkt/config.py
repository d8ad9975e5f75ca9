"""Run configuration files: JSON schema, validation, manifests.

One JSON file fully describes a run.  Validation errors always name the
offending field with its dotted path.  A run's output directory receives a
``manifest.json`` echoing the resolved configuration, the subcommand and
the package version; a manifest is itself a valid ``--config`` argument,
which is what makes every run replayable byte for byte.
"""

import json
from typing import Any, Dict

from . import __version__
from .beauty import ContestSpec
from .beliefs import BayesianGaussian, ConstantDrift
from .calibration import (CalibrationProblem, EmpiricalTargets, FreeParameter,
                          DEFAULT_TARGETS)
from .equilibrium import AgentSpec, MarketSpec
from .errors import ConfigError
from .feedback import FeedbackConfig

import numpy as np


def load_config(path: str) -> Dict[str, Any]:
    try:
        with open(path) as fp:
            cfg = json.load(fp)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    # a manifest wraps the original config; accept it directly
    if "config" in cfg and "subcommand" in cfg:
        inner = cfg["config"]
        if not isinstance(inner, dict):
            raise ConfigError(f"{path}: config: must be an object")
        inner.setdefault("subcommand", cfg["subcommand"])
        return inner
    return cfg


def _get(cfg, path, kind, default=..., positive=False):
    node = cfg
    parts = path.split(".")
    for i, part in enumerate(parts):
        if not isinstance(node, dict) or part not in node:
            if default is not ...:
                return default
            raise ConfigError(f"{path}: missing required field")
        node = node[part]
    if kind is float:
        if isinstance(node, bool) or not isinstance(node, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        node = float(node)
        if positive and not node > 0.0:
            raise ConfigError(f"{path}: must be > 0")
    elif kind is int:
        if isinstance(node, bool) or not isinstance(node, int):
            raise ConfigError(f"{path}: expected an integer")
        if positive and node <= 0:
            raise ConfigError(f"{path}: must be > 0")
    elif kind is str:
        if not isinstance(node, str):
            raise ConfigError(f"{path}: expected a string")
    elif kind is list:
        if not isinstance(node, list):
            raise ConfigError(f"{path}: expected a list")
    elif kind is dict:
        if not isinstance(node, dict):
            raise ConfigError(f"{path}: expected an object")
    return node


def _pair(cfg, path, default):
    val = _get(cfg, path, list, default=list(default))
    if len(val) != 2 or not all(isinstance(v, (int, float)) for v in val):
        raise ConfigError(f"{path}: expected [low, high]")
    return float(val[0]), float(val[1])


def parse_belief(node, path):
    kind = _get(node, "type", str)
    if kind == "constant":
        return ConstantDrift(drift=_get(node, "drift", float))
    if kind == "bayesian":
        return BayesianGaussian(
            prior_mean=_get(node, "prior_mean", float),
            prior_precision=_get(node, "prior_precision", float, positive=True))
    raise ConfigError(f"{path}.type: unknown belief type '{kind}'")


def parse_market(cfg) -> MarketSpec:
    market = _get(cfg, "market", dict)
    agents_node = _get(market, "agents", list)
    if not agents_node:
        raise ConfigError("market.agents: need at least one agent")
    agents = []
    for i, node in enumerate(agents_node):
        path = f"market.agents[{i}]"
        if not isinstance(node, dict):
            raise ConfigError(f"{path}: expected an object")
        belief = parse_belief(_get(node, "belief", dict), f"{path}.belief")
        weight = node.get("weight")
        wealth = node.get("initial_wealth")
        try:
            agents.append(AgentSpec(
                impatience=_get(node, "impatience", float, positive=True),
                belief=belief,
                weight=float(weight) if weight is not None else None,
                initial_wealth=float(wealth) if wealth is not None else None))
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    try:
        return MarketSpec(
            sigma=_get(market, "sigma", float, positive=True),
            drift_adjustment=_get(market, "drift_adjustment", float, default=0.0),
            initial_dividend=_get(market, "initial_dividend", float,
                                  default=1.0, positive=True),
            agents=tuple(agents))
    except ConfigError as exc:
        raise ConfigError(f"market: {exc}") from None


def parse_simulate(cfg):
    spec = parse_market(cfg)
    horizon = _get(cfg, "horizon_years", float, default=128.0, positive=True)
    dt = _get(cfg, "dt", float, default=1.0 / 252.0, positive=True)
    n_paths = _get(cfg, "n_paths", int, default=1, positive=True)
    seed = _get(cfg, "seed", int, default=0)
    write_paths = _get(cfg, "write_paths", int, default=1)
    if write_paths < 0 or write_paths > n_paths:
        raise ConfigError("write_paths: must be between 0 and n_paths")
    if dt > horizon:
        raise ConfigError("dt: must not exceed horizon_years")
    return spec, horizon, dt, n_paths, seed, write_paths


def parse_feedback(cfg) -> FeedbackConfig:
    dt = _get(cfg, "dt", float, default=1.0 / 252.0, positive=True)
    if "n_steps" in cfg:
        n_steps = _get(cfg, "n_steps", int, positive=True)
    else:
        years = _get(cfg, "years", float, default=5.0, positive=True)
        n_steps = int(round(years / dt))
    try:
        return FeedbackConfig(
            n_agents=_get(cfg, "n_agents", int, positive=True),
            n_diligent=_get(cfg, "n_diligent", int, default=0),
            n_steps=n_steps,
            seed=_get(cfg, "seed", int, default=0),
            sigma_true=_get(cfg, "sigma_true", float, default=0.25, positive=True),
            growth_true=_get(cfg, "growth_true", float, default=0.015),
            dt=dt,
            rho_range=_pair(cfg, "rho_range", (0.04, 0.33)),
            tau_factor_range=_pair(cfg, "tau_factor_range", (0.4, 1.05)),
            prior_mean_range=_pair(cfg, "prior_mean_range", (-0.05, 0.15)),
            prior_weight=_get(cfg, "prior_weight", float, default=252.0,
                              positive=True),
            nu=_get(cfg, "nu", float, default=1.0, positive=True))
    except ConfigError:
        raise


def parse_contest(cfg) -> ContestSpec:
    agents = _get(cfg, "agents", list)
    gammas, alphas, variances = [], [], []
    for i, node in enumerate(agents):
        path = f"agents[{i}]"
        if not isinstance(node, dict):
            raise ConfigError(f"{path}: expected an object")
        g = _get(node, "risk_aversion", float)
        v = _get(node, "belief_variance", float)
        if not g > 0.0:
            raise ConfigError(f"{path}.risk_aversion: must be > 0")
        if not v > 0.0:
            raise ConfigError(f"{path}.belief_variance: must be > 0")
        gammas.append(g)
        alphas.append(_get(node, "mean_belief", float))
        variances.append(v)
    try:
        return ContestSpec(risk_aversion=np.array(gammas),
                           mean_belief=np.array(alphas),
                           belief_variance=np.array(variances))
    except ConfigError as exc:
        raise ConfigError(f"agents: {exc}") from None


def parse_targets(cfg) -> EmpiricalTargets:
    node = cfg.get("targets", "default")
    if node == "default":
        return DEFAULT_TARGETS
    if not isinstance(node, dict):
        raise ConfigError("targets: expected 'default' or an object")
    kwargs = {}
    for name in ("mean_pd", "std_pd", "mean_equity_return",
                 "std_equity_return", "mean_riskless", "std_riskless",
                 "equity_premium", "sharpe"):
        kwargs[name] = _get(node, name, float, default=float("nan"))
    return EmpiricalTargets(provenance="config targets", **kwargs)


def parse_fit(cfg) -> CalibrationProblem:
    free_nodes = _get(cfg, "free", list)
    free = []
    for i, node in enumerate(free_nodes):
        path = f"free[{i}]"
        if not isinstance(node, dict):
            raise ConfigError(f"{path}: expected an object")
        try:
            free.append(FreeParameter(
                name=_get(node, "name", str),
                lower=_get(node, "lower", float),
                upper=_get(node, "upper", float),
                start=_get(node, "start", float)))
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    fixed_node = _get(cfg, "fixed", dict, default={})
    fixed = {}
    for name, value in fixed_node.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"fixed.{name}: expected a number")
        fixed[name] = float(value)
    try:
        return CalibrationProblem(
            n_agents=_get(cfg, "n_agents", int, positive=True),
            free=tuple(free),
            fixed=fixed,
            n_paths=_get(cfg, "n_paths", int, default=200, positive=True),
            horizon=_get(cfg, "horizon_years", float, default=50.0,
                         positive=True),
            dt=_get(cfg, "dt", float, default=1.0 / 252.0, positive=True),
            seed=_get(cfg, "seed", int, default=0),
            max_iterations=_get(cfg, "max_iterations", int, default=200,
                                positive=True))
    except ConfigError:
        raise


def write_manifest(outdir, subcommand: str, cfg: Dict[str, Any]):
    manifest = {
        "package": "beliefmkt",
        "version": __version__,
        "subcommand": subcommand,
        "config": cfg,
    }
    path = outdir / "manifest.json"
    with open(path, "w") as fp:
        json.dump(manifest, fp, indent=2, sort_keys=True)
        fp.write("\n")
    return path
