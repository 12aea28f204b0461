import numpy as np
import pytest

from hawkes_lab import rng
from hawkes_lab.chains import MarkChainSpec, two_state_chain
from hawkes_lab.errors import DomainError
from hawkes_lab.hawkes import HawkesSpec, simulate
from hawkes_lab.kernels import Exponential, Zero
from hawkes_lab.price import PriceModelSpec, compose_price, sample_at, simulate_price


def test_zero_marks_constant_price():
    model = PriceModelSpec(50.0, HawkesSpec(1.0, Exponential(0.5, 1.0)),
                           MarkChainSpec([[0.3, 0.7], [0.6, 0.4]], [0.0, 0.0]))
    path = simulate_price(model, 100.0, 1)
    assert len(path.events) > 0
    assert np.all(path.prices == 50.0)


def test_symmetric_marks_mean_zero(reference_model):
    path = simulate_price(reference_model, 5.5e5, 3)
    inc = path.increments
    assert inc.size > 10**6
    assert set(np.unique(inc)) == {-1.0, 1.0}
    assert abs(inc.mean()) < 3 / np.sqrt(inc.size)


def test_compound_poisson_variance():
    # i.i.d. marks a in {2, 0} with prob 1/2 -> E[a^2] = 2; Var(S_T - s0) = lambda T E[a^2]
    lam, T = 1.5, 20.0
    model = PriceModelSpec(0.0, HawkesSpec(lam, Zero()), MarkChainSpec([[0.5, 0.5], [0.5, 0.5]], [2.0, 0.0]))
    finals = np.array([sample_at(simulate_price(model, T, s), T) for s in range(2000)])
    target = lam * T * 2.0
    d = (finals - finals.mean()) ** 2
    se = d.std(ddof=1) / np.sqrt(d.size)
    assert abs(finals.var(ddof=1) - target) < 3 * se


def test_sample_at(reference_model):
    path = simulate_price(reference_model, 50.0, 2)
    t1 = path.events.times[0]
    assert sample_at(path, 0.0) == 100.0
    assert sample_at(path, np.nextafter(t1, 0)) == 100.0
    assert sample_at(path, t1) == path.prices[0]
    assert sample_at(path, 50.0) == path.prices[-1]
    with pytest.raises(DomainError):
        sample_at(path, 50.1)


def test_prices_are_compensated_sums():
    model = PriceModelSpec(100.0, HawkesSpec(1.0, Exponential(0.5, 1.0)),
                           MarkChainSpec([[0.6, 0.4], [0.3, 0.7]], [0.01, -0.01]))
    path = simulate_price(model, 5.2e5, 0)
    assert path.increments.size > 10**6
    exact = np.bincount(path.states, minlength=2) @ model.marks.a
    assert abs((path.prices[-1] - 100.0) - exact) < 1e-9


def test_marks_independent_of_events(reference_model):
    spec = reference_model.hawkes
    mark_seed = rng.generator(77, 0, rng.MARKS)
    a = compose_price(reference_model, simulate(spec, 100.0, 1), mark_seed)
    b = compose_price(reference_model, simulate(spec, 100.0, 2), rng.generator(77, 0, rng.MARKS))
    n = min(len(a.increments), len(b.increments))
    assert np.array_equal(a.increments[:n], b.increments[:n])


def test_chpdo_equals_two_state_encoding():
    hawkes = HawkesSpec(1.0, Exponential(0.5, 1.0))
    chpdo = PriceModelSpec(0.0, hawkes, two_state_chain(0.7, 0.6, 0.5))
    general = PriceModelSpec(0.0, hawkes, MarkChainSpec([[0.7, 0.3], [0.4, 0.6]], [0.5, -0.5]))
    a, b = simulate_price(chpdo, 300.0, 5), simulate_price(general, 300.0, 5)
    assert np.array_equal(a.prices, b.prices)
    assert np.array_equal(a.events.times, b.events.times)


def test_price_determinism(reference_model):
    a = simulate_price(reference_model, 200.0, 8)
    b = simulate_price(reference_model, 200.0, 8)
    assert a.prices.tobytes() == b.prices.tobytes()
