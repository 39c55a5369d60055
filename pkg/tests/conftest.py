"""Shared fixtures and independent oracles.

The oracles below recompute quantities from plain entropies so tests do not
lean on the code paths they check.
"""

import math

import numpy as np
import pytest

from coopmac import OptimizerConfig, binary_adder_mac, random_mac

LOG2_3 = math.log2(3.0)


def H(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def cmi_by_entropies(table) -> float:
    """I(A;B|U) = H(A,U) + H(B,U) - H(A,B,U) - H(U) for a table [u, a, b]."""
    t = np.asarray(table, dtype=float)
    if t.ndim == 2:
        t = t[None]
    return H(t.sum(axis=2)) + H(t.sum(axis=1)) - H(t) - H(t.sum(axis=(1, 2)))


def rate_by_entropies(probs, kernel) -> float:
    """I(X1,X2;Y|U) = H(Y|U) - H(Y|U,X1,X2) for probs [u, x1, x2], kernel [x1, x2, y]."""
    p = np.asarray(probs, dtype=float)
    joint = p[..., None] * kernel[None]
    return H(joint.sum(axis=(1, 2))) - H(p.sum(axis=(1, 2))) - (H(joint) - H(p))


def adder_symmetric_reference(delta: float) -> float:
    """sigma_1 on the binary adder from the symmetric one-parameter family.

    p = (1/4 + e, 1/4 - e, 1/4 - e, 1/4 + e) has I(X1;X2) = 1 - h2(1/2 + 2e)
    and sum rate H(Y) = h2(1/2 + 2e) + 1/2 + 2e; e is raised until the
    dependence reaches delta or the rate peaks at log2 3.
    """
    from scipy.optimize import brentq

    def h2(x):
        return H([x, 1 - x])

    def dep(e):
        return 1.0 - h2(0.5 + 2 * e)

    def rate(e):
        return h2(0.5 + 2 * e) + 0.5 + 2 * e

    e_peak = 1.0 / 12.0  # uniform output
    if delta >= dep(e_peak):
        return rate(e_peak)
    if delta == 0:
        return 1.5
    e = brentq(lambda e: dep(e) - delta, 0.0, e_peak)
    return rate(e)


def letter_cmi_oracle(p, t, given):
    """I(X1t; X2t | U, X1^T, X2^T) from four marginal entropies.

    Axes: 0 is U, 1..n the letters of X1, n+1..2n those of X2.
    """
    n = p.n
    tensor = p.probs.reshape((p.u_size,) + (p.x1_size,) * n + (p.x2_size,) * n)

    def h(axes):
        drop = tuple(ax for ax in range(tensor.ndim) if ax not in axes)
        return H(tensor.sum(axis=drop))

    c = {0} | {1 + s for s in given} | {1 + n + s for s in given}
    a, b = 1 + t, 1 + n + t
    return h(c | {a}) + h(c | {b}) - h(c | {a, b}) - h(c)


@pytest.fixture(scope="session")
def adder():
    return binary_adder_mac()


@pytest.fixture(scope="session")
def random_channels():
    return [random_mac(seed) for seed in range(5)]


@pytest.fixture(scope="session")
def cfg():
    return OptimizerConfig()
