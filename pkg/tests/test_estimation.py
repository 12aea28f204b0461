import numpy as np
import pytest
from hypothesis import given, strategies as st

from hawkes_lab.errors import CoverageError, ValidationError
from hawkes_lab.estimation import (
    bin_price_changes,
    exp_hawkes_loglik,
    exp_hawkes_loglik_grad,
    fit_exp_hawkes,
    fit_transition_matrix,
)
from hawkes_lab.chains import simulate_chain, MarkChainSpec
from hawkes_lab.hawkes import HawkesSpec, simulate
from hawkes_lab.kernels import Exponential, Zero

TRUE = HawkesSpec(1.0, Exponential(0.5, 1.0))


def naive_loglik(times, T, lam, alpha, beta):
    ll = 0.0
    for i, t in enumerate(times):
        ll += np.log(lam + alpha * np.sum(np.exp(-beta * (t - times[:i]))))
    return ll - lam * T - alpha / beta * np.sum(1 - np.exp(-beta * (T - times)))


def test_loglik_examples():
    assert exp_hawkes_loglik([], 2.0, 1.0, 0.5, 1.0) == -2.0
    assert exp_hawkes_loglik([1.0], 2.0, 1.0, 0.0, 1.0) == -2.0


def test_loglik_rejects_bad_stream():
    with pytest.raises(ValidationError):
        exp_hawkes_loglik([2.0, 1.0], 3.0, 1.0, 0.5, 1.0)
    with pytest.raises(ValidationError):
        exp_hawkes_loglik([1.0], 3.0, -1.0, 0.5, 1.0)


@given(st.integers(0, 1000), st.floats(0.2, 2), st.floats(0.0, 1.5), st.floats(0.3, 3))
def test_recursion_matches_naive(seed, lam, alpha, beta):
    ev = simulate(TRUE, 150.0, seed)
    got = exp_hawkes_loglik(ev, 150.0, lam, alpha, beta)
    assert got == pytest.approx(naive_loglik(ev.times, 150.0, lam, alpha, beta), rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("x", [(1.0, 0.5, 1.0), (0.7, 1.2, 2.5), (2.0, 0.1, 0.3)])
def test_gradient_finite_differences(x):
    ev = simulate(TRUE, 300.0, 1)
    _, g = exp_hawkes_loglik_grad(ev, 300.0, *x)
    for k in range(3):
        h = 1e-6 * x[k]
        xp, xm = list(x), list(x)
        xp[k] += h
        xm[k] -= h
        fd = (exp_hawkes_loglik(ev, 300.0, *xp) - exp_hawkes_loglik(ev, 300.0, *xm)) / (2 * h)
        assert g[k] == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_true_params_beat_perturbed():
    wins = 0
    for seed in range(100):
        ev = simulate(TRUE, 1000.0, seed)
        wins += exp_hawkes_loglik(ev, 1000.0, 1.0, 0.5, 1.0) > exp_hawkes_loglik(ev, 1000.0, 1.0, 0.75, 1.0)
    assert wins >= 95


def test_fit_needs_enough_events():
    with pytest.raises(ValidationError):
        fit_exp_hawkes(np.linspace(1, 10, 20), 11.0)


def test_fit_recovers_truth():
    hits = 0
    for seed in range(50):
        ev = simulate(TRUE, 5000.0, 1000 + seed)
        fit = fit_exp_hawkes(ev, 5000.0)
        assert fit.converged
        hits += all(abs(fit.params[k] - v) <= 3 * fit.se[k] for k, v in (("lambda", 1.0), ("alpha", 0.5), ("beta", 1.0)))
    assert hits >= 45


@pytest.mark.xfail(strict=True, reason="beta is unidentified when alpha = 0; the unconstrained MLE "
                   "puts alpha/beta above 0.05 on about a third of Poisson samples")
def test_fit_poisson_has_small_branching():
    small = 0
    for seed in range(50):
        ev = simulate(HawkesSpec(1.0, Zero()), 5000.0, seed)
        small += fit_exp_hawkes(ev, 5000.0).branching_ratio < 0.05
    assert small >= 45


def test_fit_round_trip():
    ev = simulate(TRUE, 5000.0, 3)
    fit = fit_exp_hawkes(ev, 5000.0)
    p = fit.params
    refit = fit_exp_hawkes(simulate(HawkesSpec(p["lambda"], Exponential(p["alpha"], p["beta"])), 5000.0, 4), 5000.0)
    for k in p:
        assert abs(refit.params[k] - p[k]) <= 3 * np.hypot(fit.se[k], refit.se[k])


def test_transition_examples():
    fit = fit_transition_matrix([0, 1, 0, 1, 0])
    assert fit.P.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    with pytest.raises(CoverageError):
        fit_transition_matrix([0, 0, 0, 0], n_states=2)


def test_transition_large_sample():
    P = np.array([[0.5, 0.3, 0.2], [0.2, 0.6, 0.2], [0.3, 0.3, 0.4]])
    states = simulate_chain(MarkChainSpec(P, [1.0, 0.0, -1.0]), 10**6, 5)
    assert np.max(np.abs(fit_transition_matrix(states, 3).P - P)) < 0.01


def test_bin_price_changes():
    prices = [100.0, 100.01, 100.01, 99.99, 100.0]
    states, a = bin_price_changes(prices, [-np.inf, -0.005, 0.005, np.inf])
    assert states.tolist() == [2, 1, 0, 2]
    assert a == pytest.approx([-0.02, 0.0, 0.01])
    with pytest.raises(CoverageError):
        bin_price_changes([1.0, 2.0, 3.0], [-np.inf, -0.005, 0.005, np.inf])
