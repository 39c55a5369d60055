"""Built-in channels and the JSON channel file format.

A channel file is a UTF-8 JSON object::

    {"x1_size": 2, "x2_size": 2, "y_size": 3,
     "kernel": [[[1, 0, 0], [0, 1, 0]], [[0, 1, 0], [0, 0, 1]]]}

with ``kernel[x1][x2][y] = p(y | x1, x2)``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from coopmac.errors import ValidationError
from coopmac.info import DiscreteMac


def binary_adder_mac() -> DiscreteMac:
    """Y = X1 + X2 over binary inputs, Y in {0, 1, 2}."""
    k = np.zeros((2, 2, 3))
    for a in range(2):
        for b in range(2):
            k[a, b, a + b] = 1.0
    return DiscreteMac(k, name="binary-adder")


def useless_mac(x1_size=2, x2_size=2, y_size=2) -> DiscreteMac:
    """Output uniform and independent of both inputs."""
    k = np.full((x1_size, x2_size, y_size), 1.0 / y_size)
    return DiscreteMac(k, name="useless")


def first_input_mac(x1_size=2, x2_size=2) -> DiscreteMac:
    """Noiseless Y = X1; the second input is ignored."""
    k = np.zeros((x1_size, x2_size, x1_size))
    for a in range(x1_size):
        k[a, :, a] = 1.0
    return DiscreteMac(k, name="first-input")


def identity_pair_mac(x1_size=2, x2_size=2) -> DiscreteMac:
    """Noiseless Y = (X1, X2)."""
    k = np.eye(x1_size * x2_size).reshape(x1_size, x2_size, -1)
    return DiscreteMac(k, name="identity-pair")


def random_mac(rng, x1_size=2, x2_size=2, y_size=3, concentration=1.0) -> DiscreteMac:
    """Kernel rows drawn i.i.d. from a symmetric Dirichlet."""
    rng = np.random.default_rng(rng)
    k = rng.dirichlet(np.full(y_size, concentration), size=(x1_size, x2_size))
    return DiscreteMac(k, name="random")


def channel_to_dict(mac: DiscreteMac) -> dict:
    return {
        "x1_size": mac.x1_size,
        "x2_size": mac.x2_size,
        "y_size": mac.y_size,
        "kernel": mac.kernel.tolist(),
    }


def parse_channel(doc: dict, name="mac") -> DiscreteMac:
    if not isinstance(doc, dict):
        raise ValidationError("channel document must be a JSON object")
    missing = [f for f in ("x1_size", "x2_size", "y_size", "kernel") if f not in doc]
    if missing:
        raise ValidationError(f"channel document is missing field(s): {', '.join(missing)}")
    sizes = tuple(doc[f] for f in ("x1_size", "x2_size", "y_size"))
    if not all(isinstance(s, int) and s >= 1 for s in sizes):
        raise ValidationError(f"alphabet sizes must be positive integers, got {sizes}")
    try:
        kernel = np.array(doc["kernel"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"kernel is not a rectangular numeric array: {exc}") from None
    if kernel.shape != sizes:
        raise ValidationError(f"kernel shape {kernel.shape} does not match sizes {sizes}")
    return DiscreteMac(kernel, name=name)


def load_channel(path) -> DiscreteMac:
    """Read and validate a channel file.

    JSON syntax errors surface as ``json.JSONDecodeError`` (which carries
    line and column); schema and stochasticity problems as
    ``ValidationError``.
    """
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    return parse_channel(doc, name=path.stem)


def save_channel(mac: DiscreteMac, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(mac)) + "\n", encoding="utf-8")
