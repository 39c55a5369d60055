"""Closed-form and optimizer-backed bounds on the average-error sum-capacity.

``csum_lower`` / ``csum_upper`` sandwich C_sum(C_in*, C_out) between
computable quantities; ``sigma1_modulus`` and ``cin_delta_bound`` are
explicit continuity moduli.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from coopmac.errors import DomainError, ValidationError
from coopmac.info import DiscreteMac
from coopmac.sigma import OptimizerConfig, max_mi_independent, sigma1

MEMBERSHIP_MARGIN = 1e-6


def _check_pair(pair, label) -> Tuple[float, float]:
    if len(pair) != 2:
        raise ValidationError(f"{label} must be a pair")
    a, b = (float(v) for v in pair)
    if not (a >= 0 and b >= 0 and math.isfinite(a) and math.isfinite(b)):
        raise ValidationError(f"{label} entries must be finite and >= 0, got {pair}")
    return a, b


@dataclass
class BoundCurve:
    parameter_name: str
    samples: List[Tuple[float, float, float]] = field(default_factory=list)
    channel_id: str = ""

    def validate(self):
        params = [s[0] for s in self.samples]
        if any(b <= a for a, b in zip(params, params[1:])):
            raise ValidationError("bound curve parameters must be strictly increasing")
        for p, lo, hi in self.samples:
            if lo > hi + 1e-7:
                raise ValidationError(f"lower bound {lo} exceeds upper bound {hi} at {p}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("parameter,lower,upper\n")
        for row in self.samples:
            buf.write(",".join(format_number(v) for v in row) + "\n")
        return buf.getvalue()


def format_number(v: float) -> str:
    return f"{float(v):.9g}"


class BoundValue(NamedTuple):
    value: float
    converged: bool


def csum_lower_detail(
    mac: DiscreteMac, c_out, cfg: OptimizerConfig = OptimizerConfig(), monotone: bool = False
) -> BoundValue:
    """``csum_lower`` together with the convergence flag of the runs behind it."""
    c1, c2 = _check_pair(c_out, "c_out")
    runs = {}

    def sig(d):
        if d not in runs:
            runs[d] = sigma1(mac, d, cfg)
        return runs[d].value

    base = sig(0.0)
    if c1 == 0.0 and c2 == 0.0:
        value = base
    elif not monotone:
        value = max(sig(c1 + c2) - min(c1, c2), base)
    else:
        # best (a, b) <= (c1, c2) with a + b = s loses max(0, s - max(c1, c2));
        # sigma_1 is nondecreasing, so only s in [max, sum] matters, where the
        # target is concave
        hi = max(c1, c2)
        value = max(base, _max_concave(lambda s: sig(s) - (s - hi), hi, c1 + c2))
    return BoundValue(value, all(r.converged for r in runs.values()))


def _max_concave(f: Callable[[float], float], lo: float, hi: float, iters: int = 40) -> float:
    """Golden-section maximum of a concave function on [lo, hi]."""
    best = max(f(lo), f(hi))
    if hi - lo <= 0:
        return best
    # concave and nondecreasing at the right end: the endpoint wins
    if f(hi) >= f(hi - 1e-6 * (hi - lo)):
        return f(hi)
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
    return max(best, f1, f2)


def csum_lower(
    mac: DiscreteMac, c_out, cfg: OptimizerConfig = OptimizerConfig(), monotone: bool = False
) -> float:
    """sigma_1(C1 + C2) - min(C1, C2), never below the no-cooperation value.

    sigma_1 <= sigma, so this stays a valid lower bound. The formula itself
    can fall when one link grows; ``monotone=True`` returns its maximum over
    all c' <= c_out instead, which is still a lower bound because extra link
    capacity can always be left unused.
    """
    return csum_lower_detail(mac, c_out, cfg, monotone).value


def csum_upper_detail(
    mac: DiscreteMac,
    c_out,
    epsilon_grid: Sequence[float] = (1e-3, 1e-2, 0.1, 0.5),
    cfg: OptimizerConfig = OptimizerConfig(),
) -> BoundValue:
    c1, c2 = _check_pair(c_out, "c_out")
    grid = [float(e) for e in epsilon_grid]
    if not grid or any(not e > 0 for e in grid):
        raise ValidationError("epsilon grid must be nonempty and positive")
    delta = c1 + c2
    if delta == 0.0:
        base = sigma1(mac, 0.0, cfg)
        return BoundValue(base.value, base.converged)
    log_inputs = math.log2(mac.x1_size * mac.x2_size)
    runs = [(e, sigma1(mac, e, cfg)) for e in sorted(set(grid) | {delta})]
    value = min(delta / e * log_inputs + r.value for e, r in runs)
    return BoundValue(value, all(r.converged for _, r in runs))


def csum_upper(
    mac: DiscreteMac,
    c_out,
    epsilon_grid: Sequence[float] = (1e-3, 1e-2, 0.1, 0.5),
    cfg: OptimizerConfig = OptimizerConfig(),
) -> float:
    """min over epsilon of (delta/epsilon) log2(|X1||X2|) + sigma_1(epsilon), delta = C1 + C2.

    The grid is augmented with epsilon = delta. At delta = 0 the limit value
    sigma(0) = sigma_1(0) is returned.
    """
    return csum_upper_detail(mac, c_out, epsilon_grid, cfg).value


def sigma1_modulus(mac: DiscreteMac, delta: float) -> float:
    """M(delta) with sigma_1(delta) <= sigma_1(0) + M(delta).

    With s = sqrt(2 delta ln 2):
    M = s log2(|Y|^3 / s) + s log2 |Y|, valid while s < |Y| / e.
    """
    if not delta > 0:
        raise DomainError(f"delta must be > 0, got {delta}")
    y = mac.y_size
    s = math.sqrt(2.0 * delta * math.log(2.0))
    limit = y / math.e
    if s >= limit:
        max_delta = limit**2 / (2.0 * math.log(2.0))
        raise DomainError(
            f"delta={delta} outside the monotone regime: need sqrt(2 delta ln 2) < |Y|/e, "
            f"i.e. delta < {max_delta:.6g}"
        )
    return s * math.log2(y**3 / s) + s * math.log2(y)


def _lambda_star(lo, hi) -> float:
    ratios = [l / h for l, h in zip(lo, hi) if h > 0]
    if not ratios:
        return 1.0
    return min(1.0, min(ratios))


def cin_delta_bound(c_in, c_in_tilde) -> float:
    """Continuity modulus of C_sum in the CF input capacities.

    lambda* = min_i min(C_i, C~_i) / max(C_i, C~_i), with components whose
    maximum is zero skipped (and lambda* = 1 when both are), and
    Delta = (1 - lambda*) (C1 + C2) + (1 - lambda*) (C~1 + C~2).
    """
    a = _check_pair(c_in, "c_in")
    b = _check_pair(c_in_tilde, "c_in_tilde")
    lo = [min(x, y) for x, y in zip(a, b)]
    hi = [max(x, y) for x, y in zip(a, b)]
    lam = _lambda_star(lo, hi)
    return (1.0 - lam) * sum(a) + (1.0 - lam) * sum(b)


def concave_diff_bound(f: Callable[[float], float], x: float, y: float) -> float:
    """f(|x - y|) - f(0), which bounds |f(x) - f(y)| for concave nondecreasing f."""
    if x < 0 or y < 0:
        raise DomainError(f"arguments must be >= 0, got {x}, {y}")
    if abs(x - y) > min(x, y):
        raise DomainError(f"need |x - y| <= min(x, y); got x={x}, y={y}")
    return f(abs(x - y)) - f(0.0)


def check_concave_diff(f: Callable[[float], float], x: float, y: float, slack: float = 0.0):
    """Return ``(|f(x) - f(y)|, bound, holds)``."""
    bound = concave_diff_bound(f, x, y)
    diff = abs(f(x) - f(y))
    return diff, bound, diff <= bound + slack


class ForwardingBounds(NamedTuple):
    in_bound: float
    out_bound: float
    generalized: bool


def forwarding_bounds(c_in, c_out) -> ForwardingBounds:
    """Sum-rate gain caps of pure forwarding: 2 C_in and 2 C_out for equal links.

    Unequal links use component sums instead, flagged as ``generalized``.
    """
    a = _check_pair(c_in, "c_in")
    b = _check_pair(c_out, "c_out")
    generalized = a[0] != a[1] or b[0] != b[1]
    if generalized:
        return ForwardingBounds(a[0] + a[1], b[0] + b[1], True)
    return ForwardingBounds(2.0 * a[0], 2.0 * b[0], False)


@dataclass(frozen=True, eq=False)
class CstarVerdict:
    is_member: bool
    p_ind: Tuple[np.ndarray, np.ndarray]
    p_dep: Optional[np.ndarray]
    margin: float
    i_ind: float
    scores: np.ndarray

    @property
    def label(self) -> str:
        return "member" if self.is_member else "not found"

    def to_dict(self) -> dict:
        return {
            "is_member": self.is_member,
            "verdict": self.label,
            "margin": self.margin,
            "i_ind": self.i_ind,
            "p_ind": [self.p_ind[0].tolist(), self.p_ind[1].tolist()],
            "p_dep": None if self.p_dep is None else self.p_dep.tolist(),
            "scores": self.scores.tolist(),
        }


def dependent_gain(mac: DiscreteMac, p_dep, q_ind) -> float:
    """I_dep(X1,X2;Y) + D(p_dep(y) || q_ind(y)) for a joint input p_dep."""
    from coopmac.info import conditional_mutual_information, kl_divergence

    w = mac.input_pairs
    p = np.asarray(p_dep, dtype=np.float64).ravel()
    mi = conditional_mutual_information(p[:, None] * w)
    return mi + kl_divergence(p @ w, q_ind)


def cstar_test(mac: DiscreteMac, cfg: OptimizerConfig = OptimizerConfig()) -> CstarVerdict:
    """Search for a dependent input law beating the independent optimum.

    For any p_dep, I_dep(X1,X2;Y) + D(p_dep(y)||p_ind(y)) equals
    sum_k p_dep(k) D(W(.|k) || p_ind(y)), a linear function of p_dep, so its
    maximum over laws supported in supp(p_ind(x1)) x supp(p_ind(x2)) sits at
    a point mass on the best input pair.
    """
    ind = max_mi_independent(mac, cfg)
    prod = ind.argmax.probs[0]
    p1, p2 = prod.sum(axis=1), prod.sum(axis=0)
    w = mac.input_pairs
    q = prod.ravel() @ w
    support = (np.outer(p1 > 0, p2 > 0)).ravel()
    scores = np.full(w.shape[0], -np.inf)
    for k in np.flatnonzero(support):
        mask = w[k] > 0
        scores[k] = float(np.sum(w[k, mask] * np.log2(w[k, mask] / q[mask])))
    best = int(np.argmax(scores))
    margin = float(scores[best] - ind.value)
    member = margin > MEMBERSHIP_MARGIN
    p_dep = None
    if member:
        p_dep = np.zeros(w.shape[0])
        p_dep[best] = 1.0
        p_dep = p_dep.reshape(mac.x1_size, mac.x2_size)
    return CstarVerdict(
        is_member=member,
        p_ind=(p1, p2),
        p_dep=p_dep,
        margin=margin,
        i_ind=ind.value,
        scores=scores.reshape(mac.x1_size, mac.x2_size),
    )
