"""Constructive manipulations of input laws.

* ``dueck_decompose`` extracts a small coordinate set T after which every
  remaining letter pair is nearly conditionally independent.
* ``reduce_cardinality`` re-weights the auxiliary variable onto at most two
  symbols without changing the dependence and without lowering the rate.
* ``concat_distributions`` and ``time_share`` build product and mixture laws.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List

import numpy as np

from coopmac.errors import ResourceError, ValidationError
from coopmac.info import (
    DEFAULT_MAX_ENTRIES,
    DiscreteMac,
    JointInputDist,
    conditional_mutual_information,
    mutual_dependence,
    nth_extension,
)

_PAIR_TOL = 1e-12


@dataclass(frozen=True)
class DueckResult:
    t_set: List[int]
    residual_mi: np.ndarray
    delta_effective: float
    epsilon: float
    n: int

    def certify(self, slack=1e-9) -> bool:
        size_ok = len(self.t_set) <= self.n * self.delta_effective / self.epsilon + slack
        resid_ok = bool(np.all(self.residual_mi <= self.epsilon + slack))
        return size_ok and resid_ok

    def to_dict(self) -> dict:
        return {
            "t_set": list(self.t_set),
            "residual_mi": [float(v) for v in self.residual_mi],
            "delta_effective": self.delta_effective,
            "epsilon": self.epsilon,
            "n": self.n,
        }


def letter_conditional_mi(p: JointInputDist, t: int, given: List[int]) -> float:
    """I(X1t; X2t | U, X1^T, X2^T) with T = ``given`` (0-based letters)."""
    n = p.n
    tensor = p.letter_tensor()
    cond_axes = [0] + [1 + s for s in given] + [1 + n + s for s in given]
    keep = cond_axes + [1 + t, 1 + n + t]
    drop = tuple(ax for ax in range(tensor.ndim) if ax not in keep)
    marg = tensor.sum(axis=drop)
    # summing keeps the remaining axes in ascending order; put (A, B) last
    kept_sorted = sorted(keep)
    perm = [kept_sorted.index(ax) for ax in keep]
    marg = np.transpose(marg, perm)
    table = marg.reshape(-1, p.x1_size, p.x2_size)
    return conditional_mutual_information(table)


def dueck_decompose(p: JointInputDist, epsilon: float) -> DueckResult:
    """Greedy coordinate extraction.

    Each round adds the smallest letter t outside T with
    I(X1t; X2t | U, X1^T, X2^T) > epsilon. Every added letter removes more
    than ``epsilon`` from I(X1^n; X2^n | U), so |T| <= n * delta / epsilon.
    """
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    n = p.n
    t_set: List[int] = []
    while True:
        rest = [t for t in range(n) if t not in t_set]
        violator = next((t for t in rest if letter_conditional_mi(p, t, t_set) > epsilon), None)
        if violator is None:
            break
        t_set.append(violator)
    t_set.sort()
    rest = [t for t in range(n) if t not in t_set]
    residual = np.array([letter_conditional_mi(p, t, t_set) for t in rest])
    return DueckResult(
        t_set=t_set,
        residual_mi=residual,
        delta_effective=mutual_dependence(p) / n,
        epsilon=float(epsilon),
        n=n,
    )


@dataclass(frozen=True)
class CardinalityReduction:
    q_star: np.ndarray
    support: List[int]
    objective_value: float
    constraint_value: float
    original_objective: float
    original_constraint: float

    def to_dict(self) -> dict:
        return {
            "q_star": self.q_star.tolist(),
            "support": list(self.support),
            "objective_value": self.objective_value,
            "constraint_value": self.constraint_value,
            "original_objective": self.original_objective,
            "original_constraint": self.original_constraint,
        }


def per_symbol_scores(p: JointInputDist, mac: DiscreteMac):
    """Dependence and rate of each conditional law p(x1^n, x2^n | u).

    Symbols with p(u) = 0 have no conditional law and get NaN.
    """
    ext = nth_extension(mac, p.n)
    pu = p.pu
    dep = np.full(p.u_size, np.nan)
    rate = np.full(p.u_size, np.nan)
    for u in np.flatnonzero(pu > 0):
        cond = p.probs[u] / pu[u]
        dep[u] = conditional_mutual_information(cond)
        joint = cond.reshape(-1, 1) * ext.input_pairs
        rate[u] = conditional_mutual_information(joint)
    return dep, rate


def reduce_cardinality(p_star: JointInputDist, mac: DiscreteMac) -> CardinalityReduction:
    """Maximize sum_u q(u) rate(u) over weights keeping sum_u q(u) dep(u) fixed.

    The feasible weights form a polytope cut by two equalities, so an optimal
    vertex has at most two nonzero entries. All singleton and pair supports
    are enumerated; a pair's weights are fixed by the two equalities.
    """
    dep, rate = per_symbol_scores(p_star, mac)
    pu = p_star.pu
    live = np.flatnonzero(pu > 0)
    target = float(np.dot(pu[live], dep[live]))
    original = float(np.dot(pu[live], rate[live]))
    scale = max(1.0, abs(target))

    best = None
    for u in live:
        if abs(dep[u] - target) <= 1e-12 * scale:
            cand = (rate[u], {int(u): 1.0})
            if best is None or cand[0] > best[0]:
                best = cand
    for u, v in itertools.combinations(live, 2):
        gap = dep[u] - dep[v]
        if abs(gap) <= 1e-15 * scale:
            continue
        w = (target - dep[v]) / gap
        if not -_PAIR_TOL <= w <= 1 + _PAIR_TOL:
            continue
        w = min(max(w, 0.0), 1.0)
        value = w * rate[u] + (1 - w) * rate[v]
        if best is None or value > best[0]:
            best = (value, {int(u): w, int(v): 1 - w})
    if best is None:
        raise RuntimeError("no feasible vertex found; the input weights are feasible, so this is a bug")

    q = np.zeros(p_star.u_size)
    for u, w in best[1].items():
        q[u] = w
    support = [int(u) for u in np.flatnonzero(q > 0)]
    return CardinalityReduction(
        q_star=q,
        support=support,
        objective_value=float(np.dot(q[live], rate[live])),
        constraint_value=float(np.dot(q[live], dep[live])),
        original_objective=original,
        original_constraint=target,
    )


def reweight(p: JointInputDist, q: np.ndarray) -> JointInputDist:
    """Replace p(u) by q(u), keeping every conditional law p(x | u)."""
    pu = p.pu
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(pu[:, None, None] > 0, p.probs / pu[:, None, None], 0.0)
    return JointInputDist(q[:, None, None] * cond, n=p.n, x1_size=p.x1_size, x2_size=p.x2_size)


def compact_support(p: JointInputDist, mac: DiscreteMac) -> JointInputDist:
    """Reduced law restricted to its (at most two) active auxiliary symbols."""
    red = reduce_cardinality(p, mac)
    full = reweight(p, red.q_star)
    return JointInputDist(full.probs[red.support], n=p.n, x1_size=p.x1_size, x2_size=p.x2_size)


def concat_distributions(
    p_n: JointInputDist, p_m: JointInputDist, max_entries: int = DEFAULT_MAX_ENTRIES
) -> JointInputDist:
    """Law of two independent blocks placed side by side, U = (U0, U1)."""
    if (p_n.x1_size, p_n.x2_size) != (p_m.x1_size, p_m.x2_size):
        raise ValidationError("blocks use different letter alphabets")
    size = p_n.probs.size * p_m.probs.size
    if size > max_entries:
        raise ResourceError(f"concatenation needs {size} entries (cap {max_entries})")
    joint = np.einsum("uab,vcd->uvacbd", p_n.probs, p_m.probs)
    u = p_n.u_size * p_m.u_size
    a = p_n.probs.shape[1] * p_m.probs.shape[1]
    b = p_n.probs.shape[2] * p_m.probs.shape[2]
    return JointInputDist(joint.reshape(u, a, b), n=p_n.n + p_m.n, x1_size=p_n.x1_size, x2_size=p_n.x2_size)


def time_share(p0: JointInputDist, p1: JointInputDist, lam: float) -> JointInputDist:
    """Mixture with V = {0} x U0 + {1} x U1 and P(V1 = 1) = lam."""
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"lambda must lie in [0, 1], got {lam}")
    if p0.n != p1.n or (p0.x1_size, p0.x2_size) != (p1.x1_size, p1.x2_size):
        raise ValidationError("time-shared laws must share blocklength and alphabets")
    probs = np.concatenate([(1.0 - lam) * p0.probs, lam * p1.probs], axis=0)
    return JointInputDist(probs, n=p0.n, x1_size=p0.x1_size, x2_size=p0.x2_size)
