"""Compiled augmented-Lagrangian solver for one start of the constrained problem.

Layout: a law is a flat vector ``p[u * A * B + a * B + b]``; the channel is
``w[k, y]`` with ``k = a * B + b``. Everything is in bits.
"""

import math

import numpy as np
from numba import njit

_TINY = 1e-300
_INV_LN2 = 1.0 / math.log(2.0)
_ARMIJO = 1e-4
_MAX_HALVINGS = 60
_MAX_STEP = 1e6


@njit(cache=True)
def _log2(x):
    return math.log(max(x, _TINY)) * _INV_LN2


@njit(cache=True)
def _xlogx(x):
    if x <= 0.0:
        return 0.0
    return x * math.log(x) * _INV_LN2


@njit(cache=True)
def project_simplex_1d(v, out):
    n = v.size
    u = np.sort(v)[::-1]
    css = 0.0
    theta = 0.0
    for j in range(n):
        css += u[j]
        t = (css - 1.0) / (j + 1)
        if u[j] > t:
            theta = t
    for j in range(n):
        out[j] = max(v[j] - theta, 0.0)


@njit(cache=True)
def evaluate(p, w, nce, n_u, n_a, n_b, mu, rho, cap, grad, want_grad):
    """Return (lagrangian, objective, dependence); fill ``grad`` if asked."""
    k_size = n_a * n_b
    n_y = w.shape[1]
    f = 0.0
    g = 0.0
    py = np.empty(n_y)
    pa = np.empty(n_a)
    pb = np.empty(n_b)
    # first pass: values
    for u in range(n_u):
        base = u * k_size
        pu = 0.0
        for y in range(n_y):
            py[y] = 0.0
        for a in range(n_a):
            pa[a] = 0.0
        for b in range(n_b):
            pb[b] = 0.0
        for a in range(n_a):
            for b in range(n_b):
                k = a * n_b + b
                q = p[base + k]
                pu += q
                pa[a] += q
                pb[b] += q
                f += q * nce[k]
                g += _xlogx(q)
                for y in range(n_y):
                    py[y] += q * w[k, y]
        for y in range(n_y):
            f -= _xlogx(py[y])
        f += _xlogx(pu)
        g += _xlogx(pu)
        for a in range(n_a):
            g -= _xlogx(pa[a])
        for b in range(n_b):
            g -= _xlogx(pb[b])
    t = max(0.0, mu + rho * (g - cap))
    lag = f - (t * t - mu * mu) / (2.0 * rho)
    if want_grad:
        for u in range(n_u):
            base = u * k_size
            pu = 0.0
            for y in range(n_y):
                py[y] = 0.0
            for a in range(n_a):
                pa[a] = 0.0
            for b in range(n_b):
                pb[b] = 0.0
            for a in range(n_a):
                for b in range(n_b):
                    k = a * n_b + b
                    q = p[base + k]
                    pu += q
                    pa[a] += q
                    pb[b] += q
                    for y in range(n_y):
                        py[y] += q * w[k, y]
            lpu = _log2(pu)
            for y in range(n_y):
                py[y] = _log2(py[y]) - lpu
            for a in range(n_a):
                for b in range(n_b):
                    k = a * n_b + b
                    df = nce[k]
                    for y in range(n_y):
                        df -= w[k, y] * py[y]
                    dg = _log2(p[base + k]) + lpu - _log2(pa[a]) - _log2(pb[b])
                    grad[base + k] = df - t * dg
    return lag, f, g


@njit(cache=True)
def _ascend(x, w, nce, n_u, n_a, n_b, mu, rho, cap, max_iter, tol, step):
    d = x.size
    grad = np.empty(d)
    trial = np.empty(d)
    cand = np.empty(d)
    dummy = np.empty(0)
    lag, _, _ = evaluate(x, w, nce, n_u, n_a, n_b, mu, rho, cap, dummy, False)
    it = 0
    done = False
    while it < max_iter:
        it += 1
        evaluate(x, w, nce, n_u, n_a, n_b, mu, rho, cap, grad, True)
        accepted = False
        new_lag = lag
        for _ in range(_MAX_HALVINGS):
            for j in range(d):
                trial[j] = x[j] + step * grad[j]
            project_simplex_1d(trial, cand)
            ascent = 0.0
            for j in range(d):
                ascent += grad[j] * (cand[j] - x[j])
            c_lag, _, _ = evaluate(cand, w, nce, n_u, n_a, n_b, mu, rho, cap, dummy, False)
            if c_lag >= lag + _ARMIJO * ascent:
                accepted = True
                new_lag = c_lag
                break
            step *= 0.5
        if not accepted:
            done = True
            break
        gain = new_lag - lag
        for j in range(d):
            x[j] = cand[j]
        lag = new_lag
        if gain < tol:
            done = True
            break
        step = min(step * 2.0, _MAX_STEP)
    return it, done, step


@njit(cache=True)
def solve_start(x0, w, nce, n_u, n_a, n_b, cap, budget, tol, outer_max, rho0, rho_max, feas_tol, accept_tol):
    """Augmented-Lagrangian ascent from one start; returns (x, converged, iterations).

    Stops early once the strict test (``feas_tol``, ``tol``) passes. Otherwise the
    start still counts as converged if its final state passes at ``accept_tol``;
    the multiplier then only chatters at rounding level.
    """
    x = x0.copy()
    dummy = np.empty(0)
    mu = 0.0
    rho = rho0
    prev_viol = np.inf
    step = 1.0
    used = 0
    converged = False
    inner_done = False
    pos = np.inf
    viol = np.inf
    inner_cap = max(50, budget // 8)
    for _ in range(outer_max):
        it, inner_done, step = _ascend(x, w, nce, n_u, n_a, n_b, mu, rho, cap, inner_cap, tol, step)
        used += it
        step = max(step, 1e-3)
        _, _, g = evaluate(x, w, nce, n_u, n_a, n_b, mu, rho, cap, dummy, False)
        viol = g - cap
        new_mu = max(0.0, mu + rho * viol)
        pos = max(viol, 0.0)
        if pos > 0.25 * prev_viol:
            rho = min(rho * 4.0, rho_max)
        prev_viol = pos
        mu = new_mu
        # feasible and complementary slack
        if inner_done and pos <= feas_tol and mu * abs(viol) < tol:
            converged = True
            break
        if used >= budget:
            break
    if not converged:
        converged = inner_done and pos <= accept_tol and mu * abs(viol) <= accept_tol
    return x, converged, used
