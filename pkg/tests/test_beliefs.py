import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from beliefmkt.beliefs import (BayesianGaussian, ConstantDrift,
                               DiscreteBelief, bayesian_log_ratio_closed_form,
                               drift_at, initial_state, likelihood_ratio,
                               log_density_increment, log_likelihood_ratio,
                               log_ratio_step, update)
from beliefmkt.errors import SaturationError

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# independent oracles


def batch_log_density(xs, belief):
    """Joint log density of the observations, evaluated from the batch
    formula instead of the incremental update."""
    xs = np.asarray(xs, dtype=float)
    t = len(xs)
    k0, mu0, tau = belief.prior_weight, belief.prior_mean, belief.precision
    kt = k0 + t
    mut = (k0 * mu0 + xs.sum()) / kt
    return (-0.5 * tau * (xs * xs).sum()
            + 0.5 * tau * (kt * mut * mut - k0 * mu0 * mu0)
            + 0.5 * t * math.log(tau / TWO_PI)
            + 0.5 * math.log(k0 / kt))


def batch_log_ratio(xs, belief):
    """Likelihood ratio against the mean-zero reference, batch form."""
    xs = np.asarray(xs, dtype=float)
    t = len(xs)
    k0, mu0, tau = belief.prior_weight, belief.prior_mean, belief.precision
    kt = k0 + t
    mut = (k0 * mu0 + xs.sum()) / kt
    return 0.5 * tau * (kt * mut * mut - k0 * mu0 * mu0) + 0.5 * math.log(k0 / kt)


def quadrature_joint_density(xs, belief):
    """Joint density by integrating the gaussian likelihood against the
    prior on the unknown mean with adaptive quadrature."""
    tau = belief.precision
    k0, mu0 = belief.prior_weight, belief.prior_mean
    prior_sd = 1.0 / math.sqrt(k0 * tau)

    def integrand(mu):
        like = np.prod([math.sqrt(tau / TWO_PI)
                        * math.exp(-0.5 * tau * (x - mu) ** 2) for x in xs])
        prior = math.exp(-0.5 * (mu - mu0) ** 2 / prior_sd**2) \
            / (prior_sd * math.sqrt(TWO_PI))
        return like * prior

    value, _ = quad(integrand, mu0 - 12 * prior_sd, mu0 + 12 * prior_sd,
                    limit=200)
    return value


def run_updates(xs, belief):
    state = initial_state(belief)
    for x in xs:
        state = update(state, belief, x)
    return state


# ---------------------------------------------------------------------------
# continuous-time drift


def test_constant_drift_is_unconditional():
    belief = ConstantDrift(0.21)
    assert drift_at(belief, 0.0, 0.0) == 0.21
    assert drift_at(belief, 7.3, -4.0) == 0.21


def test_bayesian_prior_mean_at_time_zero():
    assert drift_at(BayesianGaussian(0.0, 1.0), 0.0, 0.0) == 0.0


def test_bayesian_drift_hand_value():
    # (0.5 + 0.1 * 2) / (2 + 3) = 0.14
    assert drift_at(BayesianGaussian(0.1, 2.0), 3.0, 0.5) == pytest.approx(0.14, abs=1e-15)


def test_bayesian_drift_matches_posterior_quadrature():
    # posterior mean of the drift b given Y_t = x with prior N(beta, 1/eps):
    # integrate b against exp(-eps (b-beta)^2 / 2) * exp(-(x - b t)^2 / (2 t))
    beta, eps, t, x = 0.07, 1.7, 4.2, 1.3

    def weight(b):
        return math.exp(-0.5 * eps * (b - beta) ** 2
                        - 0.5 * (x - b * t) ** 2 / t)

    num, _ = quad(lambda b: b * weight(b), -20, 20, limit=200)
    den, _ = quad(weight, -20, 20, limit=200)
    assert drift_at(BayesianGaussian(beta, eps), t, x) == pytest.approx(num / den, rel=1e-9)


def test_bayesian_drift_consistency():
    # observing Y_t = X_t + b t long enough pins the posterior mean down:
    # median error at t = 1e4 must be far below the t = 1e2 value
    rng = np.random.default_rng(3)
    b = 0.04
    belief = BayesianGaussian(prior_mean=-0.1, prior_precision=2.0)
    errors = {}
    for t in (1e2, 1e4):
        x_t = rng.normal(0.0, math.sqrt(t), size=400) + b * t
        errors[t] = np.median(np.abs(drift_at(belief, t, x_t) - b))
    assert errors[1e4] < 0.25 * errors[1e2]


def test_prior_precision_must_be_positive():
    with pytest.raises(ValueError):
        BayesianGaussian(0.0, 0.0)


# ---------------------------------------------------------------------------
# continuous-time likelihood ratio


def test_log_ratio_step_flat_for_zero_drift():
    assert log_ratio_step(0.0, 0.0, 0.3, 0.01) == 0.0


def test_constant_drift_exact_exponential_martingale():
    # alpha = 0.5, X_1 = 0.2: Lambda = exp(0.1 - 0.125)
    log_lam = 0.0
    dt = 1.0 / 64
    x = np.linspace(0.0, 0.2, 65)
    for dx in np.diff(x):
        log_lam = log_ratio_step(log_lam, 0.5, dx, dt)
    assert log_lam == pytest.approx(0.5 * 0.2 - 0.5 * 0.25 * 1.0, abs=1e-13)


def test_bayesian_sde_matches_closed_form_as_dt_shrinks():
    belief = BayesianGaussian(prior_mean=0.1, prior_precision=1.5)
    rng = np.random.default_rng(11)
    n_fine = 4096
    horizon = 1.0
    dw = rng.normal(0.0, math.sqrt(horizon / n_fine), size=n_fine)
    x_fine = np.concatenate([[0.0], np.cumsum(dw)])
    errors = []
    for factor in (16, 4, 1):
        x = x_fine[::factor]
        dt = horizon * factor / n_fine
        t = np.arange(len(x)) * dt
        log_lam = 0.0
        for i in range(len(x) - 1):
            alpha = drift_at(belief, t[i], x[i])
            log_lam = log_ratio_step(log_lam, alpha, x[i + 1] - x[i], dt)
        target = bayesian_log_ratio_closed_form(belief, horizon, x_fine[-1])
        errors.append(abs(log_lam - target))
    assert errors[2] < errors[0]
    assert errors[2] < 5e-3


def test_continuous_martingale_mean_constant_drift(rng):
    # exact form: mean of exp(alpha X_T - alpha^2 T / 2) over reference draws
    alpha, horizon, n = 0.8, 1.0, 30_000
    x_t = rng.normal(0.0, math.sqrt(horizon), size=n)
    lam = np.exp(alpha * x_t - 0.5 * alpha**2 * horizon)
    se = lam.std(ddof=1) / math.sqrt(n)
    assert abs(lam.mean() - 1.0) < 3.0 * se


# ---------------------------------------------------------------------------
# discrete updating


def test_update_zero_surprise_keeps_mean():
    belief = DiscreteBelief(prior_mean=0.5, prior_weight=1.0, precision=1.0)
    state = update(initial_state(belief), belief, 0.5)
    assert state.posterior_mean == 0.5
    assert state.sample_size == 2.0


def test_update_zero_observation_log_density():
    tau = 2.7
    belief = DiscreteBelief(prior_mean=0.0, prior_weight=1.0, precision=tau)
    state = update(initial_state(belief), belief, 0.0)
    assert state.posterior_mean == 0.0
    expected = 0.5 * (math.log(0.5) + math.log(tau / TWO_PI))
    assert state.log_density == pytest.approx(expected, rel=1e-14)


def test_sample_size_ledger_is_exact():
    belief = DiscreteBelief(prior_mean=0.1, prior_weight=2.5, precision=3.0)
    state = initial_state(belief)
    for t in range(1, 500):
        state = update(state, belief, 0.01 * t)
        assert state.sample_size == 2.5 + t
        assert state.step == t


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_incremental_matches_batch_density(seed):
    rng = np.random.default_rng(seed)
    belief = DiscreteBelief(prior_mean=rng.normal(0, 0.1),
                            prior_weight=rng.uniform(0.5, 30.0),
                            precision=rng.uniform(0.2, 50.0))
    xs = rng.normal(0.0, 1.0 / math.sqrt(belief.precision), size=100)
    state = run_updates(xs, belief)
    batch = batch_log_density(xs, belief)
    assert abs(state.log_density - batch) <= 1e-10 * max(1.0, abs(batch))
    ratio = log_likelihood_ratio(state, belief)
    batch_ratio = batch_log_ratio(xs, belief)
    assert abs(ratio - batch_ratio) <= 1e-10 * max(1.0, abs(batch_ratio))


def test_log_density_matches_quadrature_oracle():
    belief = DiscreteBelief(prior_mean=0.3, prior_weight=2.0, precision=4.0)
    xs = [0.1, -0.4, 0.8, 0.25]
    state = run_updates(xs, belief)
    oracle = quadrature_joint_density(xs, belief)
    assert state.log_density == pytest.approx(math.log(oracle), rel=1e-9)


def test_likelihood_ratio_at_time_zero_is_one():
    belief = DiscreteBelief(prior_mean=0.2, prior_weight=3.0, precision=1.1)
    assert likelihood_ratio(initial_state(belief), belief) == 1.0


def test_likelihood_ratio_one_step_hand_value():
    # mu0 = 0, K0 = 1, one observation x: the posterior mean is x/2 and
    # Lambda_1 = exp(tau (x/2)^2 * 2 / 2) * sqrt(1/2)
    tau, x = 1.8, 0.9
    belief = DiscreteBelief(prior_mean=0.0, prior_weight=1.0, precision=tau)
    state = update(initial_state(belief), belief, x)
    expected = math.exp(0.5 * tau * 2.0 * (x / 2.0) ** 2) * math.sqrt(0.5)
    assert likelihood_ratio(state, belief) == pytest.approx(expected, rel=1e-13)
    # and it agrees with the explicit density ratio lambda_t / lambda0_t
    ref_log_density = -0.5 * tau * x * x + 0.5 * math.log(tau / TWO_PI)
    assert state.log_density - ref_log_density == pytest.approx(
        math.log(expected), rel=1e-13)


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_likelihood_ratio_order_invariant(seed):
    rng = np.random.default_rng(seed)
    belief = DiscreteBelief(prior_mean=0.05, prior_weight=2.0, precision=5.0)
    xs = rng.normal(0.0, 0.4, size=12)
    forward = log_likelihood_ratio(run_updates(xs, belief), belief)
    shuffled = log_likelihood_ratio(run_updates(xs[::-1], belief), belief)
    assert forward == pytest.approx(shuffled, rel=1e-12, abs=1e-12)


def test_discrete_martingale_mean(rng):
    # E[Lambda_T] = 1 under the reference measure (mean zero, precision tau)
    tau, t_steps, n_paths = 4.0, 15, 20_000
    belief = DiscreteBelief(prior_mean=0.1, prior_weight=2.0, precision=tau)
    xs = rng.normal(0.0, 1.0 / math.sqrt(tau), size=(n_paths, t_steps))
    k0, mu0 = belief.prior_weight, belief.prior_mean
    kt = k0 + t_steps
    mut = (k0 * mu0 + xs.sum(axis=1)) / kt
    lam = np.exp(0.5 * tau * (kt * mut**2 - k0 * mu0**2)) * math.sqrt(k0 / kt)
    se = lam.std(ddof=1) / math.sqrt(n_paths)
    assert abs(lam.mean() - 1.0) < 3.0 * se


def test_saturation_is_an_explicit_error():
    belief = DiscreteBelief(prior_mean=50.0, prior_weight=1.0, precision=10.0)
    state = initial_state(belief)
    for _ in range(60):
        state = update(state, belief, 60.0)
    with pytest.raises(SaturationError):
        likelihood_ratio(state, belief)


def test_log_density_increment_vectorizes():
    means = np.array([0.0, 0.1, -0.2])
    out = log_density_increment(means, 2.0, 3.0, 0.05)
    scalar = [log_density_increment(m, 2.0, 3.0, 0.05) for m in means]
    np.testing.assert_allclose(out, scalar, rtol=1e-15)


def test_belief_validation():
    with pytest.raises(ValueError):
        DiscreteBelief(prior_mean=0.0, prior_weight=0.0, precision=1.0)
    with pytest.raises(ValueError):
        DiscreteBelief(prior_mean=0.0, prior_weight=1.0, precision=-2.0)
