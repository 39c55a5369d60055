"""Finite-alphabet information measures and the channel / input-law types.

All logarithms are base 2. Zero-mass terms are dropped explicitly
(0 log 0 = 0, 0 log 0/0 = 0); probabilities are never floored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from coopmac.errors import DomainError, ResourceError, ValidationError

# Tables deviating from normalization by more than this are rejected;
# smaller deviations are silently renormalized.
REJECT_TOL = 1e-9
NEGATIVE_TOL = 1e-12
DEFAULT_MAX_ENTRIES = 10**7


def validate_table(probs, *, axis=None, name="pmf") -> np.ndarray:
    """Return a clean float64 copy of a probability table.

    With ``axis=None`` the whole table must sum to one; otherwise every
    slice along ``axis`` must.
    """
    arr = np.array(probs, dtype=np.float64)
    if arr.size == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    if arr.min() < -NEGATIVE_TOL:
        raise ValidationError(f"{name} has a negative entry {arr.min():.3e}")
    arr = np.clip(arr, 0.0, None)
    totals = arr.sum(axis=axis, keepdims=axis is not None)
    dev = np.max(np.abs(totals - 1.0))
    if dev > REJECT_TOL:
        raise ValidationError(f"{name} normalization deviates from 1 by {dev:.3e}")
    # leave rounding-level sums alone so stored tables round-trip bit for bit
    totals = np.where(np.abs(totals - 1.0) <= 1e-15, 1.0, totals)
    return arr / totals


def _xlogx(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a, dtype=np.float64)
    pos = a > 0
    out[pos] = a[pos] * np.log2(a[pos])
    return out


def entropy(p) -> float:
    """Shannon entropy in bits."""
    p = validate_table(np.ravel(p))
    return float(max(-_xlogx(p).sum(), 0.0))


def conditional_mutual_information(joint) -> float:
    """I(A;B|U) in bits for a table indexed ``[u, a, b]``.

    A 2-D table is read as ``[a, b]`` with a trivial conditioning variable.
    """
    p = validate_table(joint, name="joint table")
    if p.ndim == 2:
        p = p[None]
    if p.ndim != 3:
        raise ValidationError(f"joint table must be 2-D or 3-D, got {p.ndim}-D")
    pu = p.sum(axis=(1, 2))
    pa = p.sum(axis=2)
    pb = p.sum(axis=1)
    mask = p > 0
    u, a, b = np.nonzero(mask)
    # split logs: the products p(a|u) p(b|u) can underflow for subnormal masses
    logs = np.log2(p[mask]) + np.log2(pu[u]) - np.log2(pa[u, a]) - np.log2(pb[u, b])
    value = np.sum(p[mask] * logs)
    return float(max(value, 0.0))


def kl_divergence(p, q) -> float:
    """D(p||q) in bits; requires supp(p) to be contained in supp(q)."""
    p = validate_table(np.ravel(p), name="p")
    q = validate_table(np.ravel(q), name="q")
    if p.shape != q.shape:
        raise ValidationError(f"alphabet mismatch: {p.size} vs {q.size}")
    bad = np.flatnonzero((p > 0) & (q == 0))
    if bad.size:
        raise DomainError(
            f"support violation: symbol {int(bad[0])} has p={p[bad[0]]:.3e} but q=0"
        )
    mask = p > 0
    return float(max(np.sum(p[mask] * np.log2(p[mask] / q[mask])), 0.0))


def l1_distance(p, q) -> float:
    p = validate_table(np.ravel(p), name="p")
    q = validate_table(np.ravel(q), name="q")
    if p.shape != q.shape:
        raise ValidationError(f"alphabet mismatch: {p.size} vs {q.size}")
    return float(np.abs(p - q).sum())


@dataclass(frozen=True, eq=False)
class DiscreteMac:
    """Memoryless MAC given by the kernel ``p(y | x1, x2)`` indexed ``[x1, x2, y]``.

    Input alphabets of an n-th extension hold sequences in row-major order
    (first time step is the most significant digit).
    """

    kernel: np.ndarray
    name: str = "mac"

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.float64)
        if k.ndim != 3:
            raise ValidationError(f"kernel must be 3-D [x1][x2][y], got {k.ndim}-D")
        k = validate_table(k, axis=2, name="channel kernel")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @property
    def x1_size(self) -> int:
        return self.kernel.shape[0]

    @property
    def x2_size(self) -> int:
        return self.kernel.shape[1]

    @property
    def y_size(self) -> int:
        return self.kernel.shape[2]

    @property
    def input_pairs(self) -> np.ndarray:
        """Kernel as a ``(x1_size * x2_size, y_size)`` matrix, x1 major."""
        return self.kernel.reshape(-1, self.y_size)

    def cache_key(self) -> tuple:
        return (self.kernel.shape, self.kernel.tobytes())


@dataclass(frozen=True)
class CfConfig:
    """CF input and output link capacities in bits per channel use."""

    c_in: Tuple[float, float]
    c_out: Tuple[float, float]

    def __post_init__(self):
        for label, pair in (("c_in", self.c_in), ("c_out", self.c_out)):
            if len(pair) != 2:
                raise ValidationError(f"{label} must be a pair")
            for v in pair:
                if not np.isfinite(v) or v < 0:
                    raise ValidationError(f"{label} entries must be finite and >= 0, got {v}")
        object.__setattr__(self, "c_in", tuple(float(v) for v in self.c_in))
        object.__setattr__(self, "c_out", tuple(float(v) for v in self.c_out))


def nth_extension(mac: DiscreteMac, n: int, max_entries: int = DEFAULT_MAX_ENTRIES) -> DiscreteMac:
    """Kernel of ``p(y^n | x1^n, x2^n) = prod_t p(y_t | x1t, x2t)``."""
    if n < 1:
        raise ValidationError(f"blocklength must be >= 1, got {n}")
    entries = (mac.x1_size * mac.x2_size * mac.y_size) ** n
    if entries > max_entries:
        raise ResourceError(f"extension of order {n} needs {entries} entries (cap {max_entries})")
    if n == 1:
        return mac
    k = mac.kernel
    out = k
    for _ in range(n - 1):
        a, b, y = out.shape
        out = np.einsum("aby,cdz->acbdyz", out, k).reshape(
            a * mac.x1_size, b * mac.x2_size, y * mac.y_size
        )
    return DiscreteMac(out, name=f"{mac.name}^{n}")


@dataclass(frozen=True, eq=False)
class JointInputDist:
    """Input law ``p(u, x1^n, x2^n)`` stored as ``probs[u, x1_seq, x2_seq]``."""

    probs: np.ndarray
    n: int = 1
    x1_size: int = 0
    x2_size: int = 0

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim == 2:
            p = p[None]
        if p.ndim != 3:
            raise ValidationError("probs must be indexed [u, x1_seq, x2_seq]")
        if self.n < 1:
            raise ValidationError(f"blocklength must be >= 1, got {self.n}")
        x1 = self.x1_size or _letter_size(p.shape[1], self.n)
        x2 = self.x2_size or _letter_size(p.shape[2], self.n)
        if x1**self.n != p.shape[1] or x2**self.n != p.shape[2]:
            raise ValidationError(
                f"shape {p.shape[1:]} is not ({x1}^{self.n}, {x2}^{self.n})"
            )
        p = validate_table(p, name="input distribution")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "x1_size", x1)
        object.__setattr__(self, "x2_size", x2)

    @property
    def u_size(self) -> int:
        return self.probs.shape[0]

    @property
    def pu(self) -> np.ndarray:
        return self.probs.sum(axis=(1, 2))

    def letter_tensor(self) -> np.ndarray:
        """Probabilities with one axis per letter: ``[u, x1_1..x1_n, x2_1..x2_n]``."""
        shape = (self.u_size,) + (self.x1_size,) * self.n + (self.x2_size,) * self.n
        return self.probs.reshape(shape)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "u_size": self.u_size,
            "x1_size": self.x1_size,
            "x2_size": self.x2_size,
            "probs": self.probs.tolist(),
        }


def _letter_size(seq_size: int, n: int) -> int:
    size = int(round(seq_size ** (1.0 / n)))
    for cand in (size - 1, size, size + 1):
        if cand >= 1 and cand**n == seq_size:
            return cand
    raise ValidationError(f"{seq_size} is not an {n}-th power")


def mutual_dependence(p: JointInputDist) -> float:
    """I(X1^n; X2^n | U) in bits (not normalized by n)."""
    return conditional_mutual_information(p.probs)


def sum_rate_information(p: JointInputDist, mac: DiscreteMac) -> float:
    """I(X1^n, X2^n; Y^n | U) in bits (not normalized by n)."""
    ext = nth_extension(mac, p.n)
    if ext.kernel.shape[:2] != p.probs.shape[1:]:
        raise ValidationError("input distribution and channel alphabets differ")
    pk = p.probs.reshape(p.u_size, -1)
    joint = pk[:, :, None] * ext.input_pairs[None, :, :]
    return conditional_mutual_information(joint)
