"""Compiled inner loops.

All functions consume a caller-supplied buffer of uniforms on [0, 1) and
report how many they used; when the buffer runs short they return a
negative status and the caller retries with a longer buffer drawn from the
same generator. Since ``Generator.random`` is prefix-stable, the result only
depends on the seed.
"""

import math

import numpy as np
from numba import njit

OK = 0
OUT_OF_UNIFORMS = -1
EVENT_CAP = -2

H_IDENTITY = 0
H_SATURATING = 1
H_SCALED_SOFT = 2


@njit(cache=True, nogil=True)
def _h(x, kind, cap, slope):
    if kind == H_IDENTITY:
        return x
    if x <= 0.0:
        return 0.0
    if kind == H_SATURATING:
        return x if x < cap else cap
    return cap * -math.expm1(-slope * x)


@njit(cache=True, nogil=True)
def chain_path(cum_pi, cum_P, n_steps, initial, u):
    """States of a finite chain; the first state uses ``initial`` if >= 0."""
    out = np.empty(n_steps, dtype=np.int64)
    if n_steps == 0:
        return out
    n = cum_pi.shape[0]
    if initial >= 0:
        s = initial
    else:
        s = np.searchsorted(cum_pi, u[0], side="right")
        if s >= n:
            s = n - 1
    out[0] = s
    for k in range(1, n_steps):
        s = np.searchsorted(cum_P[s], u[k], side="right")
        if s >= n:
            s = n - 1
        out[k] = s
    return out


@njit(cache=True, nogil=True)
def ctmc_path(cum_p0, rates, cum_jump, horizon, u):
    """Jump times and states of a CTMC on ``[0, horizon]``.

    Returns (times, states, n_used_uniforms, status). ``times[0] == 0``.
    """
    n = cum_p0.shape[0]
    cap = u.shape[0] // 2 + 2
    times = np.empty(cap, dtype=np.float64)
    states = np.empty(cap, dtype=np.int64)
    s = np.searchsorted(cum_p0, u[0], side="right")
    if s >= n:
        s = n - 1
    times[0] = 0.0
    states[0] = s
    m = 1
    j = 1
    t = 0.0
    while True:
        q = rates[s]
        if q <= 0.0:
            break
        if j + 1 >= u.shape[0]:
            return times[:m], states[:m], j, OUT_OF_UNIFORMS
        t += -math.log1p(-u[j]) / q
        if t > horizon:
            j += 1
            break
        s2 = np.searchsorted(cum_jump[s], u[j + 1], side="right")
        if s2 >= n:
            s2 = n - 1
        s = s2
        j += 2
        times[m] = t
        states[m] = s
        m += 1
    return times[:m], states[:m], j, OK


@njit(cache=True, nogil=True)
def _power_excitation(kp, hist, lo, hi, t):
    total = 0.0
    for i in range(lo, hi):
        total += kp[0] / (kp[1] + (t - hist[i])) ** kp[2]
    return total


@njit(cache=True, nogil=True)
def thinning(kind, kp, h_kind, h_cap, h_slope, reg_times, reg_states, lambdas,
             horizon, max_events, trunc_tol, u):
    """Ogata thinning for a univariate Hawkes process.

    Background is ``lambdas[state]`` on the piecewise-constant regime path
    ``(reg_times, reg_states)``; a fixed background is a single segment.
    Between refresh points (accepted events and regime switches) the
    intensity is non-increasing, so its current value bounds the future.

    Returns (times, regimes, n_used_uniforms, status).
    """
    cap = u.shape[0] // 2 + 1
    if cap > max_events + 1:
        cap = max_events + 1
    times = np.empty(cap, dtype=np.float64)
    regs = np.empty(cap, dtype=np.int64)
    n_ev = 0
    j = 0
    t = 0.0
    seg = 0
    n_seg = reg_times.shape[0]
    next_switch = reg_times[1] if n_seg > 1 else math.inf
    base = lambdas[reg_states[0]]
    excite = 0.0  # exponential kernel: excitation level at time t
    lo = 0  # power law: first history index still contributing
    while True:
        if kind == 1:
            x = base + excite
        elif kind == 2:
            x = base + _power_excitation(kp, times, lo, n_ev, t)
        else:
            x = base
        bound = _h(x, h_kind, h_cap, h_slope)
        if j + 1 >= u.shape[0]:
            return times[:n_ev], regs[:n_ev], j, OUT_OF_UNIFORMS
        if bound <= 0.0:
            w = math.inf
        else:
            w = -math.log1p(-u[j]) / bound
        u_acc = u[j + 1]
        j += 2
        t_cand = t + w
        if t_cand > next_switch:
            # refresh the bound at the regime switch; candidate discarded
            if kind == 1:
                excite *= math.exp(-kp[1] * (next_switch - t))
            t = next_switch
            seg += 1
            base = lambdas[reg_states[seg]]
            next_switch = reg_times[seg + 1] if seg + 1 < n_seg else math.inf
            continue
        if t_cand > horizon:
            break
        if kind == 1:
            excite *= math.exp(-kp[1] * (t_cand - t))
            x = base + excite
        elif kind == 2:
            if trunc_tol > 0.0:
                while lo < n_ev and kp[0] / (kp[1] + (t_cand - times[lo])) ** kp[2] < trunc_tol:
                    lo += 1
            x = base + _power_excitation(kp, times, lo, n_ev, t_cand)
        else:
            x = base
        t = t_cand
        if u_acc * bound <= _h(x, h_kind, h_cap, h_slope):
            if n_ev >= max_events:
                return times[:n_ev], regs[:n_ev], j, EVENT_CAP
            if n_ev >= cap:
                return times[:n_ev], regs[:n_ev], j, OUT_OF_UNIFORMS
            times[n_ev] = t
            regs[n_ev] = reg_states[seg]
            n_ev += 1
            if kind == 1:
                excite += kp[0]
    return times[:n_ev], regs[:n_ev], j, OK


@njit(cache=True, nogil=True)
def kahan_cumsum(x, start):
    out = np.empty(x.shape[0], dtype=np.float64)
    s = start
    c = 0.0
    for i in range(x.shape[0]):
        y = x[i] - c
        tmp = s + y
        c = (tmp - s) - y
        s = tmp
        out[i] = s
    return out


@njit(cache=True, nogil=True)
def exp_compensator_increments(times, alpha, beta):
    """Excitation part of ``Lambda(t_i) - Lambda(t_{i-1})`` for the exponential kernel."""
    n = times.shape[0]
    out = np.empty(n, dtype=np.float64)
    excite = 0.0  # excitation just after the previous event
    prev = 0.0
    for i in range(n):
        dt = times[i] - prev
        out[i] = excite / beta * -math.expm1(-beta * dt)
        excite = excite * math.exp(-beta * dt) + alpha
        prev = times[i]
    return out


@njit(cache=True, nogil=True)
def exp_loglik_grad(times, horizon, lam, alpha, beta):
    """Log-likelihood and gradient wrt (lam, alpha, beta), O(n)."""
    n = times.shape[0]
    ll = 0.0
    g_lam = 0.0
    g_a = 0.0
    g_b = 0.0
    A = 0.0
    dA = 0.0
    for i in range(n):
        if i > 0:
            dt = times[i] - times[i - 1]
            e = math.exp(-beta * dt)
            dA = e * (dA - dt * (1.0 + A))
            A = e * (1.0 + A)
        rate = lam + alpha * A
        ll += math.log(rate)
        g_lam += 1.0 / rate
        g_a += A / rate
        g_b += alpha * dA / rate
    ll -= lam * horizon
    g_lam -= horizon
    s1 = 0.0  # sum of (1 - exp(-beta (T - t_i)))
    s2 = 0.0  # sum of (T - t_i) exp(-beta (T - t_i))
    for i in range(n):
        r = horizon - times[i]
        e = math.exp(-beta * r)
        s1 += -math.expm1(-beta * r)
        s2 += r * e
    ll -= alpha / beta * s1
    g_a -= s1 / beta
    g_b -= -alpha / beta**2 * s1 + alpha / beta * s2
    return ll, g_lam, g_a, g_b


@njit(cache=True, nogil=True)
def centered_batch_sums(states, values, mean, batch):
    n_b = states.shape[0] // batch
    out = np.empty(n_b, dtype=np.float64)
    for b in range(n_b):
        s = 0.0
        for k in range(b * batch, (b + 1) * batch):
            s += values[states[k]] - mean
        out[b] = s
    return out
