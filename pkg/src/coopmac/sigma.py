"""Mutual-information maximization over MAC input laws.

``sigma_n(delta)`` is the per-letter maximum of I(X1^n, X2^n; Y^n | U) over
laws p(u, x1^n, x2^n) whose dependence I(X1^n; X2^n | U) is at most
``n * delta``. The constrained problem is solved by an augmented Lagrangian
whose inner problems are projected-gradient ascents over the full joint
simplex (compiled, one start at a time); the best feasible start wins.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from coopmac._alkernel import solve_start
from coopmac._optim import ascend
from coopmac.errors import ResourceError, ValidationError
from coopmac.info import (
    DiscreteMac,
    JointInputDist,
    mutual_dependence,
    nth_extension,
    sum_rate_information,
)

_TINY = 1e-300

# Augmented-Lagrangian schedule.
_AL_OUTER = 40
_AL_RHO0 = 50.0
_AL_RHO_MAX = 1e9
_FEAS_TOL = 1e-10
_ACCEPT_TOL = 1e-7


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    max_iterations: int = 5000
    tolerance: float = 1e-9
    grid_resolution: int = 64
    rng_seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not 0 <= self.rng_seed < 2**64:
            raise ValidationError("rng_seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, doc: dict) -> "OptimizerConfig":
        known = {f: doc[f] for f in cls.__dataclass_fields__ if f in doc}
        unknown = set(doc) - set(known)
        if unknown:
            raise ValidationError(f"unknown optimizer option(s): {', '.join(sorted(unknown))}")
        return cls(**known)


@dataclass(frozen=True, eq=False)
class SigmaEvaluation:
    """Per-letter optimum together with the law achieving it."""

    value: float
    argmax: JointInputDist
    delta: float
    n: int
    constraint_slack: float
    restarts_used: int
    converged: bool
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def num(v):
            return float(v) if math.isfinite(v) else None

        return {
            "value": self.value,
            "delta": num(self.delta),
            "n": self.n,
            "constraint_slack": num(self.constraint_slack),
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "argmax": self.argmax.to_dict(),
            **({"meta": self.meta} if self.meta else {}),
        }


def _xlogx(a):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > 0, a * np.log2(np.where(a > 0, a, 1.0)), 0.0)


def _safe_log2(a):
    return np.log2(np.maximum(a, _TINY))


class _Functionals:
    """Objective and dependence of stacked laws ``P[r, u, k]``, k = (x1, x2) x1-major."""

    def __init__(self, ext: DiscreteMac, u_size: int):
        self.w = ext.input_pairs
        self.a = ext.x1_size
        self.b = ext.x2_size
        self.u = u_size
        self.neg_cond_entropy = _xlogx(self.w).sum(axis=1)

    def shape(self, flat):
        return flat.reshape(flat.shape[0], self.u, self.a * self.b)

    def objective(self, p):
        py = p @ self.w
        pu = p.sum(axis=-1)
        return (
            np.einsum("ruk,k->r", p, self.neg_cond_entropy)
            - _xlogx(py).sum(axis=(1, 2))
            + _xlogx(pu).sum(axis=1)
        )

    def objective_grad(self, p):
        py = p @ self.w
        pu = p.sum(axis=-1)
        lr = _safe_log2(py) - _safe_log2(pu)[..., None]
        return self.neg_cond_entropy - lr @ self.w.T

    def _marginals(self, p):
        p4 = p.reshape(p.shape[0], p.shape[1], self.a, self.b)
        return p4, p4.sum(axis=(2, 3)), p4.sum(axis=3), p4.sum(axis=2)

    def dependence(self, p):
        p4, pu, pa, pb = self._marginals(p)
        return (
            _xlogx(p4).sum(axis=(1, 2, 3))
            + _xlogx(pu).sum(axis=1)
            - _xlogx(pa).sum(axis=(1, 2))
            - _xlogx(pb).sum(axis=(1, 2))
        )

    def dependence_grad(self, p):
        p4, pu, pa, pb = self._marginals(p)
        g = (
            _safe_log2(p4)
            + _safe_log2(pu)[..., None, None]
            - _safe_log2(pa)[..., :, None]
            - _safe_log2(pb)[..., None, :]
        )
        return g.reshape(p.shape)

    def independent_part(self, p):
        """p(u) p(x1|u) p(x2|u): same marginals, zero dependence."""
        p4, pu, pa, pb = self._marginals(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = pa[..., :, None] * pb[..., None, :] / pu[..., None, None]
        q = np.nan_to_num(q, nan=0.0, posinf=0.0)
        return q.reshape(p.shape)


def _rngs(cfg: OptimizerConfig, count: int, stream: int):
    return [np.random.default_rng([cfg.rng_seed, stream, r]) for r in range(count)]


# ---------------------------------------------------------------------------
# Unconstrained problems


def _independent_search(ext: DiscreteMac, cfg: OptimizerConfig):
    """Alternating maximization over p(x1) p(x2); returns (p1, p2, values, converged)."""
    fun = _Functionals(ext, 1)
    a, b = ext.x1_size, ext.x2_size
    rngs = _rngs(cfg, cfg.restarts, stream=1)
    p1 = np.array([r.dirichlet(np.ones(a)) for r in rngs])
    p2 = np.array([r.dirichlet(np.ones(b)) for r in rngs])
    # uniform start first; it is optimal for every symmetric channel
    p1[0], p2[0] = 1.0 / a, 1.0 / b

    def joint(q1, q2):
        return np.einsum("ra,rb->rab", q1, q2).reshape(q1.shape[0], 1, a * b)

    def grad_blocks(q1, q2):
        g = fun.objective_grad(joint(q1, q2)).reshape(-1, a, b)
        return g, np.einsum("rab,rb->ra", g, q2), np.einsum("rab,ra->rb", g, q1)

    value = fun.objective(joint(p1, p2))
    budget = cfg.max_iterations
    inner = max(20, min(500, budget // 10))
    converged = False
    while budget > 0:
        p1, _, used1, _ = ascend(
            p1,
            lambda q: fun.objective(joint(q, p2)),
            lambda q: grad_blocks(q, p2)[1],
            max_iter=inner,
            tol=cfg.tolerance * 1e-2,
        )
        p2, new_value, used2, _ = ascend(
            p2,
            lambda q: fun.objective(joint(p1, q)),
            lambda q: grad_blocks(p1, q)[2],
            max_iter=inner,
            tol=cfg.tolerance * 1e-2,
        )
        budget -= max(used1, used2)
        gain = np.max(new_value - value)
        value = new_value
        if gain < cfg.tolerance:
            converged = True
            break
    return p1, p2, value, converged


def _joint_search(ext: DiscreteMac, cfg: OptimizerConfig):
    fun = _Functionals(ext, 1)
    k = ext.x1_size * ext.x2_size
    rngs = _rngs(cfg, cfg.restarts, stream=2)
    x = np.array([r.dirichlet(np.ones(k)) for r in rngs])
    x[0] = 1.0 / k
    x, f, _, done = ascend(
        x,
        lambda q: fun.objective(fun.shape(q)),
        lambda q: fun.objective_grad(fun.shape(q)).reshape(q.shape),
        max_iter=cfg.max_iterations,
        tol=cfg.tolerance * 1e-2,
    )
    return x, f, bool(done.all())


@lru_cache(maxsize=64)
def _anchors_cached(key, n, cfg):
    shape, raw = key
    ext = nth_extension(DiscreteMac(np.frombuffer(raw).reshape(shape)), n)
    p1, p2, ind_vals, ind_ok = _independent_search(ext, cfg)
    i = int(np.argmax(ind_vals))
    jx, j_vals, j_ok = _joint_search(ext, cfg)
    j = int(np.argmax(j_vals))
    return p1[i].copy(), p2[i].copy(), float(ind_vals[i]), ind_ok, jx[j].copy(), float(j_vals[j]), j_ok


def _anchors(mac: DiscreteMac, n: int, cfg: OptimizerConfig):
    """Best product law and best joint law of the n-th extension (cached)."""
    return _anchors_cached(mac.cache_key(), n, cfg)


def _product_dist(p1, p2, n, mac, u_size=1) -> JointInputDist:
    t = np.outer(p1, p2)
    probs = np.repeat(t[None] / u_size, u_size, axis=0)
    return JointInputDist(probs, n=n, x1_size=mac.x1_size, x2_size=mac.x2_size)


def max_mi_independent(mac: DiscreteMac, cfg: OptimizerConfig = OptimizerConfig()) -> SigmaEvaluation:
    """max I(X1, X2; Y) over product inputs p(x1) p(x2)."""
    p1, p2, value, ok, *_ = _anchors(mac, 1, cfg)
    argmax = _product_dist(p1, p2, 1, mac)
    return SigmaEvaluation(
        value=value,
        argmax=argmax,
        delta=0.0,
        n=1,
        constraint_slack=-mutual_dependence(argmax),
        restarts_used=cfg.restarts,
        converged=ok,
    )


def max_mi_joint(mac: DiscreteMac, cfg: OptimizerConfig = OptimizerConfig()) -> SigmaEvaluation:
    """max I(X1, X2; Y) over all joint inputs p(x1, x2) (a concave program)."""
    *_, jx, value, ok = _anchors(mac, 1, cfg)
    argmax = JointInputDist(jx.reshape(1, mac.x1_size, mac.x2_size))
    return SigmaEvaluation(
        value=value,
        argmax=argmax,
        delta=math.inf,
        n=1,
        constraint_slack=math.inf,
        restarts_used=cfg.restarts,
        converged=ok,
    )


def full_knowledge_cin(mac: DiscreteMac, cfg: OptimizerConfig = OptimizerConfig(), margin=1.0):
    """Input-link capacities large enough for the CF to learn both messages."""
    from coopmac.info import CfConfig

    m = max_mi_joint(mac, cfg).value + margin
    return CfConfig(c_in=(m, m), c_out=(0.0, 0.0))


# ---------------------------------------------------------------------------
# Constrained problem


def _repair(fun, p, cap):
    """Mix each row toward its independent part until dependence <= cap."""
    g = fun.dependence(p)
    bad = g > cap
    if not bad.any():
        return p
    pb = p[bad]
    q = fun.independent_part(pb)
    lo = np.zeros(pb.shape[0])
    hi = np.ones(pb.shape[0])
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        gm = fun.dependence((1 - mid)[:, None, None] * pb + mid[:, None, None] * q)
        feasible = gm <= cap
        hi = np.where(feasible, mid, hi)
        lo = np.where(feasible, lo, mid)
    out = p.copy()
    out[bad] = (1 - hi)[:, None, None] * pb + hi[:, None, None] * q
    return out


def _structured_starts(mac, n, u_size, cap, fun, cfg):
    p1, p2, _, _, jx, _, _ = _anchors(mac, n, cfg)
    k = p1.size * p2.size
    prod = np.outer(p1, p2).ravel()
    starts = [np.tile(prod / u_size, (u_size, 1))]
    joint = jx.ravel()
    starts.append(np.tile(joint / u_size, (u_size, 1)))
    g_joint = float(fun.dependence(joint.reshape(1, 1, k))[0])
    if u_size >= 2 and g_joint > 0:
        lam = min(1.0, cap / g_joint)
        ts = np.zeros((u_size, k))
        ts[0] = (1 - lam) * prod
        ts[1] = lam * joint
        starts.append(ts)
    return np.array(starts)


def _random_starts(k, u_size, cfg, count):
    out = []
    for r in _rngs(cfg, count, stream=3):
        alpha = 1.0 if r.random() < 0.5 else 0.3
        out.append(r.dirichlet(np.full(u_size * k, alpha)).reshape(u_size, k))
    return np.array(out).reshape(count, u_size, k)


def _augmented_lagrangian(fun, x, cap, cfg):
    """Refine every start independently; returns (laws, per-start convergence)."""
    rows, u_size, k = x.shape
    out = np.empty_like(x)
    converged = np.zeros(rows, dtype=bool)
    for r in range(rows):
        xr, ok, _ = solve_start(
            x[r].ravel(),
            fun.w,
            fun.neg_cond_entropy,
            u_size,
            fun.a,
            fun.b,
            cap,
            cfg.max_iterations,
            cfg.tolerance * 1e-2,
            _AL_OUTER,
            _AL_RHO0,
            _AL_RHO_MAX,
            _FEAS_TOL,
            _ACCEPT_TOL,
        )
        out[r] = xr.reshape(u_size, k)
        converged[r] = ok
    return out, converged


def sigma_n(
    mac: DiscreteMac,
    n: int,
    delta: float,
    u_size: int = 2,
    cfg: OptimizerConfig = OptimizerConfig(),
    starts: Optional[Sequence[JointInputDist]] = None,
) -> SigmaEvaluation:
    """Per-letter max of I(X1^n,X2^n;Y^n|U) subject to I(X1^n;X2^n|U) <= n*delta.

    ``starts`` are extra initial laws (e.g. a concatenation witness); laws with
    a larger auxiliary alphabet are first reduced to at most two active
    symbols, which keeps their objective and constraint.
    """
    if not delta >= 0 or not math.isfinite(delta):
        raise ValidationError(f"delta must be finite and >= 0, got {delta}")
    if n not in (1, 2):
        raise ResourceError(f"blocklength {n} unsupported (n in {{1, 2}})")
    if u_size < 1:
        raise ValidationError("u_size must be >= 1")
    ext = nth_extension(mac, n)
    k = ext.x1_size * ext.x2_size
    if delta == 0.0:
        p1, p2, value, ok, *_ = _anchors(mac, n, cfg)
        argmax = _product_dist(p1, p2, n, mac, u_size)
        return SigmaEvaluation(
            value=sum_rate_information(argmax, mac) / n,
            argmax=argmax,
            delta=0.0,
            n=n,
            constraint_slack=-mutual_dependence(argmax) / n,
            restarts_used=cfg.restarts,
            converged=ok,
            meta={"method": "product parametrization"},
        )

    cap = n * delta
    fun = _Functionals(ext, u_size)
    x0 = [_structured_starts(mac, n, u_size, cap, fun, cfg)]
    for s in starts or ():
        x0.append(_fit_start(s, mac, u_size, k)[None])
    x0.append(_random_starts(k, u_size, cfg, cfg.restarts))
    x0 = np.concatenate(x0)
    x0 = _repair(fun, x0, cap)

    x, converged = _augmented_lagrangian(fun, x0, cap, cfg)
    x = _repair(fun, x, cap)
    # starts may beat their own refinement when the AL stops early
    x = np.concatenate([x, x0])
    f = fun.objective(x)
    g = fun.dependence(x)
    f = np.where(g <= cap * (1 + 1e-12) + 1e-15, f, -np.inf)
    best = int(np.argmax(f))
    argmax = JointInputDist(
        x[best].reshape(u_size, ext.x1_size, ext.x2_size), n=n, x1_size=mac.x1_size, x2_size=mac.x2_size
    )
    dep = mutual_dependence(argmax)
    return SigmaEvaluation(
        value=sum_rate_information(argmax, mac) / n,
        argmax=argmax,
        delta=float(delta),
        n=n,
        constraint_slack=delta - dep / n,
        restarts_used=int(x0.shape[0]),
        converged=bool(converged[best % x0.shape[0]]),
        meta={"start_index": best % x0.shape[0], "refined": best < x0.shape[0]},
    )


def _fit_start(start: JointInputDist, mac, u_size, k):
    from coopmac.structure import compact_support

    p = start.probs.reshape(start.u_size, k)
    if start.u_size > u_size:
        p = compact_support(start, mac).probs.reshape(-1, k)
    out = np.zeros((u_size, k))
    out[: p.shape[0]] = p[:u_size]
    return out / out.sum()


def sigma1(mac: DiscreteMac, delta: float, cfg: OptimizerConfig = OptimizerConfig()) -> SigmaEvaluation:
    """sigma_1(delta) with a binary auxiliary alphabet, which suffices for n = 1."""
    return sigma_n(mac, 1, delta, u_size=2, cfg=cfg)


# ---------------------------------------------------------------------------
# Grid oracle (testing aid)

_ORACLE_MAX_POINTS = 3_000_000


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    """All points of the k-simplex whose coordinates are multiples of 1/resolution."""
    count = math.comb(resolution + k - 1, k - 1)
    if count > _ORACLE_MAX_POINTS:
        raise ResourceError(f"grid has {count} points (cap {_ORACLE_MAX_POINTS})")
    bars = np.array(list(itertools.combinations(range(resolution + k - 1), k - 1)), dtype=np.int64)
    if k == 1:
        return np.ones((1, 1))
    bars = bars.reshape(-1, k - 1)
    edges = np.concatenate(
        [np.full((bars.shape[0], 1), -1), bars, np.full((bars.shape[0], 1), resolution + k - 1)], axis=1
    )
    return (np.diff(edges, axis=1) - 1) / resolution


def _upper_hull(xs, ys):
    order = np.lexsort((-ys, xs))
    hull = []
    for i in order:
        x, y = xs[i], ys[i]
        if hull and hull[-1][0] == x:
            continue
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append((x, y))
    return np.array(hull)


def brute_force_oracle(mac: DiscreteMac, delta: float, grid_resolution: int = 64) -> float:
    """Exhaustive sigma_1(delta) over a grid of conditional laws p(x1, x2 | u).

    Every grid law gives a point (dependence, sum-rate); mixing two of them
    with weight p(u) traces the chord between them, so the best value at
    ``delta`` is the upper concave envelope of the point cloud read off at
    the largest abscissa not exceeding ``delta``.
    """
    k = mac.x1_size * mac.x2_size
    if k > 9:
        raise ResourceError(f"oracle limited to |X1||X2| <= 9, got {k}")
    pts = simplex_grid(k, grid_resolution)
    fun = _Functionals(mac, 1)
    p = pts[:, None, :]
    f = fun.objective(p)
    g = np.maximum(fun.dependence(p), 0.0)
    hull = _upper_hull(g, f)
    top = int(np.argmax(hull[:, 1]))
    hull = hull[: top + 1]
    if delta >= hull[-1, 0]:
        return float(hull[-1, 1])
    return float(np.interp(delta, hull[:, 0], hull[:, 1]))


def grid_error_estimate(mac: DiscreteMac, grid_resolution: int) -> float:
    """Objective perturbation when a law is rounded to the grid.

    Rounding moves a law by at most ``eta = k / (2 * resolution)`` in L1,
    so entropy continuity bounds the change of I(X1,X2;Y) by
    ``-eta log2(eta / |Y|) + eta log2 |Y|``. The constraint also moves, so
    this is an estimate of the oracle gap rather than a guarantee.
    """
    k = mac.x1_size * mac.x2_size
    eta = min(0.5, k / (2.0 * grid_resolution))
    y = mac.y_size
    return float(-eta * math.log2(eta / y) + eta * math.log2(y))
