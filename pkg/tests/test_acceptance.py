"""Acceptance suite: one test per criterion at its stated tolerance."""
import json
import math

import numpy as np
import pytest
from scipy import stats

from hawkes_lab import rng
from hawkes_lab._loops import centered_batch_sums
from hawkes_lab.chains import MarkChainSpec, RegimeSpec, simulate_chain, two_state_chain
from hawkes_lab.cli import run_cli
from hawkes_lab.estimation import fit_exp_hawkes
from hawkes_lab.hawkes import HawkesSpec, Identity, Saturating, simulate, time_rescale
from hawkes_lab.kernels import Exponential
from hawkes_lab.limits import chpdo_coefficients, event_rate, gchp2sdo_coefficients, nstate_coefficients, two_state_v
from hawkes_lab.mc import estimate_mean_rate, verify_fclt
from hawkes_lab.price import PriceModelSpec

from conftest import random_ergodic

pytestmark = pytest.mark.slow

EXP = Exponential(0.5, 1.0)
SYMMETRIC = two_state_chain(0.5, 0.5, 1.0)


def test_rate_lln(acceptance):
    rate, se = estimate_mean_rate(HawkesSpec(1.0, EXP), horizon=5000.0, burn_in=0.0, n_paths=200, seed=101)
    tol = max(3 * se, 0.02 * 2.0)
    ok = abs(rate - 2.0) <= tol
    acceptance(1, ok, f"mean N(T)/T = {rate:.5f} (SE {se:.5f}), target 2.0, tol {tol:.4f}")
    assert ok


def test_fclt_variance(acceptance):
    model = PriceModelSpec(0.0, HawkesSpec(1.0, EXP), SYMMETRIC)
    rep = verify_fclt(model, 1e4, 1.0, 2000, 102)
    assert rep.theoretical == pytest.approx(2.0, abs=1e-12)
    acceptance(2, rep.passed, f"Var = {rep.empirical:.4f} (SE {rep.se:.4f}), target 2.0, "
                              f"KS p = {rep.extras['ks_pvalue']:.3f} (advisory)")
    assert rep.passed


def test_regime_fclt(acceptance):
    regime = RegimeSpec([[-1.0, 1.0], [1.0, -1.0]], [1.0, 3.0])
    model = PriceModelSpec(0.0, HawkesSpec(regime, EXP), SYMMETRIC)
    rep = verify_fclt(model, 1e4, 1.0, 2000, 103)
    assert rep.theoretical == pytest.approx(4.0, abs=1e-12)
    acceptance(3, rep.passed, f"Var = {rep.empirical:.4f} (SE {rep.se:.4f}), target 4.0, "
                              f"KS p = {rep.extras['ks_pvalue']:.3f} (advisory)")
    assert rep.passed


def test_reduction_identities(acceptance):
    worst = 0.0
    grid = np.linspace(0.05, 0.95, 10)
    for p in grid:
        for q in grid:
            for delta in (0.01, 1.0, 3.5):
                chain = two_state_chain(p, q, delta)
                ref = chpdo_coefficients(p, q, delta)
                for got in (gchp2sdo_coefficients(chain), nstate_coefficients(chain)[:2]):
                    worst = max(worst, abs(got[0] - ref[0]), abs(got[1] - ref[1]))
                worst = max(worst, np.max(np.abs(two_state_v(chain) - nstate_coefficients(chain)[2].v)))
    gen = np.random.default_rng(104)
    for n in range(2, 8):
        pi = gen.dirichlet(np.ones(n))
        a = gen.normal(size=n)
        chain = MarkChainSpec(np.tile(pi, (n, 1)), a)
        var_pi = float(pi @ a**2 - (pi @ a) ** 2)
        worst = max(worst, abs(nstate_coefficients(chain)[1] - var_pi))
    ok = worst <= 1e-12
    acceptance(4, ok, f"max abs deviation over all identities = {worst:.2e}")
    assert ok


def test_nstate_variance_oracle(acceptance):
    gen = np.random.default_rng(105)
    n_steps, batch = 10_000_000, 10_000
    results = []
    for idx, n in enumerate((3, 4, 5, 3, 5)):
        chain = MarkChainSpec(random_ergodic(gen, n), gen.normal(size=n))
        a_star, sigma_sq, _ = nstate_coefficients(chain)
        states = simulate_chain(chain, n_steps, rng.child_seed(105, idx))
        sums = centered_batch_sums(states, chain.a, a_star, batch)
        est = float(np.mean(sums**2) / batch)
        boot = gen.integers(0, sums.size, size=(1000, sums.size))
        se = float(np.std(np.mean(sums[boot] ** 2, axis=1) / batch, ddof=1))
        results.append((n, sigma_sq, est, se, abs(est - sigma_sq) <= 3 * se))
    ok = all(r[-1] for r in results)
    acceptance(5, ok, "; ".join(f"n={n}: {s:.4f} vs {e:.4f}+-{se:.4f}" for n, s, e, se, _ in results))
    assert ok


def test_degenerate_equivalences(acceptance):
    plain = HawkesSpec(1.0, EXP)
    variants = (HawkesSpec(RegimeSpec([[0.0]], [1.0]), EXP), HawkesSpec(1.0, EXP, Identity()))
    ok = True
    for seed in range(10):
        ref = simulate(plain, 500.0, seed).times
        for v in variants:
            ok &= simulate(v, 500.0, seed).times.tobytes() == ref.tobytes()
    acceptance(6, ok, "single-regime and identity-h paths are bitwise equal to the linear engine on 10 seeds")
    assert ok


def test_nonlinear_rate_cross_check(acceptance):
    budget = {"horizon": 2000.0, "n_paths": 100, "seed": 107}
    est = event_rate(HawkesSpec(1.0, EXP, Identity()), budget, force_mc=True)
    ok_identity = abs(est.value - 2.0) <= 3 * est.se
    cap = 0.7
    sat = event_rate(HawkesSpec(1.0, EXP, Saturating(cap)), budget)
    ok_sat = abs(sat.value - cap) <= 3 * sat.se
    ok = ok_identity and ok_sat
    acceptance(7, ok, f"identity-h rate {est.value:.4f}+-{est.se:.4f} vs 2.0; "
                      f"saturated rate {sat.value:.4f}+-{sat.se:.4f} vs {cap}")
    assert ok


def test_goodness_of_fit_loop(acceptance):
    truth = {"lambda": 1.0, "alpha": 0.5, "beta": 1.0}
    spec = HawkesSpec(truth["lambda"], Exponential(truth["alpha"], truth["beta"]))
    horizon, runs = 2000.0, 50
    ks_ok = cover_ok = 0
    for seed in range(runs):
        ev = simulate(spec, horizon, 1000 + seed)
        fit = fit_exp_hawkes(ev, horizon)
        p = fit.params
        resid = time_rescale(ev, HawkesSpec(p["lambda"], Exponential(p["alpha"], p["beta"])))
        ks_ok += stats.kstest(resid, "expon").pvalue > 0.01
        cover_ok += all(abs(p[k] - truth[k]) <= 3 * fit.se[k] for k in truth)
    ok = ks_ok >= 0.9 * runs and cover_ok >= 0.9 * runs
    acceptance(8, ok, f"KS p > 0.01 in {ks_ok}/{runs}; all params within 3 SE in {cover_ok}/{runs}")
    assert ok


def _reference_config(tmp_path):
    doc = {
        "schema_version": 1,
        "model": {
            "s0": 100.0,
            "hawkes": {"base": {"type": "regime", "A": [[-0.2, 0.2], [0.3, -0.3]], "lambdas": [0.5, 1.5]},
                       "kernel": {"type": "exponential", "alpha": 0.5, "beta": 1.0}},
            "marks": {"P": [[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4]], "a": [0.01, 0.0, -0.01]},
        },
    }
    path = tmp_path / "model.json"
    path.write_text(json.dumps(doc))
    nonlinear = json.loads(json.dumps(doc))
    nonlinear["model"]["hawkes"]["nonlinearity"] = {"type": "saturating", "cap": 3.0}
    path_nl = tmp_path / "nonlinear.json"
    path_nl.write_text(json.dumps(nonlinear))
    return str(path), str(path_nl)


def test_cli_determinism(tmp_path, acceptance):
    cfg, cfg_nl = _reference_config(tmp_path)
    events, regimes, prices = (str(tmp_path / f) for f in ("events.csv", "regimes.csv", "prices.csv"))
    assert run_cli(["simulate", "--config", cfg, "--horizon", "3000", "--seed", "9",
                    "--out", events, "--regime-out", regimes]) == 0
    assert run_cli(["simulate-price", "--config", cfg, "--horizon", "3000", "--seed", "9", "--out", prices]) == 0
    commands = {
        "simulate": ["simulate", "--config", cfg, "--horizon", "500", "--seed", "3"],
        "simulate-price": ["simulate-price", "--config", cfg, "--horizon", "500", "--seed", "3"],
        "limits": ["limits", "--config", cfg],
        "limits-mc": ["limits", "--config", cfg_nl, "--mc-horizon", "300", "--paths", "40", "--seed", "3"],
        "verify-lln": ["verify", "--config", cfg, "--mode", "lln", "--n", "300", "--t", "1",
                       "--paths", "60", "--seed", "3"],
        "verify-fclt": ["verify", "--config", cfg, "--mode", "fclt", "--n", "300", "--t", "1",
                        "--paths", "60", "--seed", "3"],
        "fit": ["fit", "--events", events, "--horizon", "3000"],
        "fit-marks": ["fit-marks", "--prices", prices, "--buckets=-inf,-0.005,0.005,inf"],
        "residuals": ["residuals", "--config", cfg, "--events", events, "--horizon", "3000",
                      "--regime-path", regimes],
    }
    takes_workers = {"limits-mc", "verify-lln", "verify-fclt"}
    mismatched = []
    for name, argv in commands.items():
        outputs = []
        for workers in (1, 4):
            out = tmp_path / f"{name}-{workers}.out"
            extra = ["--workers", str(workers)] if name in takes_workers else []
            code = run_cli(argv + extra + ["--out", str(out)])
            assert code in (0, 2), name
            outputs.append(out.read_bytes())
        if outputs[0] != outputs[1]:
            mismatched.append(name)
    ok = not mismatched
    acceptance(9, ok, f"{len(commands)} commands byte-identical across worker counts"
                      + (f"; mismatched: {mismatched}" if mismatched else ""))
    assert ok
