"""Batched projected-gradient ascent on probability simplices.

Every routine works on a stack of independent problems (one per restart)
along axis 0, so restarts advance in lock step without Python loops.
"""

from __future__ import annotations

import numpy as np

ARMIJO = 1e-4
MAX_HALVINGS = 60
MAX_STEP = 1e6


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row (last axis) onto the probability simplex.

    Sorted-threshold method: with ``u`` sorted descending, the threshold is
    ``(sum_{i<=rho} u_i - 1) / rho`` for the largest ``rho`` keeping
    ``u_rho`` above it.
    """
    v = np.asarray(v, dtype=np.float64)
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, v.shape[-1] + 1)
    cond = u * k > css
    rho = v.shape[-1] - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1.0)
    return np.maximum(v - theta, 0.0)


def ascend(x, value, gradient, *, max_iter=5000, tol=1e-9, step=None):
    """Maximize ``value`` row-wise over the simplex by projected gradient.

    ``x`` has shape ``(R, d)``; ``value`` maps it to ``(R,)`` and
    ``gradient`` to ``(R, d)``. Step sizes are per row, halved until the
    Armijo condition holds and doubled after every accepted step. A row
    stops once a sweep gains less than ``tol``.

    Returns ``(x, f, iterations, converged)``.
    """
    x = np.array(x, dtype=np.float64)
    rows = x.shape[0]
    f = value(x)
    step = np.ones(rows) if step is None else np.array(step, dtype=np.float64)
    done = np.zeros(rows, dtype=bool)
    it = 0
    for it in range(1, max_iter + 1):
        g = gradient(x)
        pending = ~done
        new_x = x.copy()
        new_f = f.copy()
        for _ in range(MAX_HALVINGS):
            cand = project_simplex(x + step[:, None] * g)
            cf = value(cand)
            ascent = np.einsum("rd,rd->r", g, cand - x)
            ok = pending & (cf >= f + ARMIJO * ascent)
            new_x[ok] = cand[ok]
            new_f[ok] = cf[ok]
            pending &= ~ok
            if not pending.any():
                break
            step[pending] *= 0.5
        stalled = pending
        gain = new_f - f
        done |= stalled | (gain < tol)
        x, f = new_x, new_f
        step[~done] = np.minimum(step[~done] * 2.0, MAX_STEP)
        if done.all():
            break
    return x, f, it, done
