"""Command-line front end.

Exit codes: 0 success, 2 malformed input, 3 optimizer did not converge
(best-effort values are still written), 4 a Dueck certificate failed.
Set ``COOPMAC_WORKERS`` to spread grid sweeps over worker processes.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np

from coopmac.bounds import (
    BoundCurve,
    csum_lower_detail,
    csum_upper_detail,
    cstar_test,
    format_number,
)
from coopmac.channels import (
    binary_adder_mac,
    first_input_mac,
    identity_pair_mac,
    load_channel,
    useless_mac,
)
from coopmac.errors import DomainError, ResourceError, ValidationError
from coopmac.info import DiscreteMac, JointInputDist
from coopmac.sigma import OptimizerConfig, full_knowledge_cin, max_mi_independent, max_mi_joint, sigma1
from coopmac.structure import dueck_decompose, letter_conditional_mi

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_CERTIFICATE = 4

WORKERS_ENV = "COOPMAC_WORKERS"

BUILTIN_CHANNELS = {
    "binary-adder": binary_adder_mac,
    "useless": useless_mac,
    "first-input": first_input_mac,
    "identity-pair": identity_pair_mac,
}


def default_slope_grid() -> List[float]:
    """Log-spaced h values over [1e-5, 1e-1], five per decade."""
    return [float(v) for v in np.logspace(-5, -1, 21)]


class InputError(Exception):
    """Bad command-line input; mapped to exit code 2."""


# ---------------------------------------------------------------------------
# helpers


def _round(v):
    """9 significant digits for JSON numbers; non-finite values become null."""
    if isinstance(v, dict):
        return {k: _round(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round(x) for x in v]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(format_number(v)) if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _dumps(doc) -> str:
    return json.dumps(_round(doc), indent=2) + "\n"


def resolve_channel(name: str) -> DiscreteMac:
    if name in BUILTIN_CHANNELS:
        return BUILTIN_CHANNELS[name]()
    path = Path(name)
    try:
        return load_channel(path)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
    except OSError as exc:
        raise InputError(f"cannot read channel file {path}: {exc.strerror}") from None
    except ValidationError as exc:
        raise InputError(f"{path}: {exc}") from None


def build_config(args) -> OptimizerConfig:
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
        except OSError as exc:
            raise InputError(f"cannot read config file {args.config}: {exc.strerror}") from None
        if not isinstance(doc, dict):
            raise InputError(f"{args.config}: config must be a JSON object")
    if args.seed is not None:
        doc["rng_seed"] = args.seed
    if args.restarts is not None:
        doc["restarts"] = args.restarts
    if args.tol is not None:
        doc["tolerance"] = args.tol
    try:
        return OptimizerConfig.from_dict(doc)
    except (TypeError, ValidationError) as exc:
        raise InputError(f"invalid optimizer configuration: {exc}") from None


def parse_grid(text: str, *, positive: bool = False) -> List[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise InputError(f"grid must be a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise InputError("grid must be nonempty")
    if any(not math.isfinite(v) for v in values):
        raise InputError("grid values must be finite")
    if positive and any(v <= 0 for v in values):
        raise InputError("grid values must be > 0")
    if any(v < 0 for v in values):
        raise InputError("grid values must be >= 0")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InputError("grid must be strictly increasing")
    return values


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def ordered_map(fn: Callable, items: Sequence, workers: int) -> list:
    """Map ``fn`` over ``items``; results keep the input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


# Sweep workers live at module level so worker processes can unpickle them.


class _SandwichPoint:
    def __init__(self, mac, cfg, asym, monotone):
        self.mac, self.cfg, self.asym, self.monotone = mac, cfg, asym, monotone

    def __call__(self, h):
        c_out = (0.0, h) if self.asym else (h, h)
        lo = csum_lower_detail(self.mac, c_out, self.cfg, self.monotone)
        hi = csum_upper_detail(self.mac, c_out, cfg=self.cfg)
        return lo.value, hi.value, lo.converged and hi.converged


class _SlopePoint:
    def __init__(self, mac, cfg):
        self.mac, self.cfg = mac, cfg

    def __call__(self, h):
        r = csum_lower_detail(self.mac, (h, h), self.cfg)
        return r.value, r.converged


# ---------------------------------------------------------------------------
# commands


def cmd_capacity(args, mac, cfg):
    ind = max_mi_independent(mac, cfg)
    joint = max_mi_joint(mac, cfg)
    cin = full_knowledge_cin(mac, cfg)
    doc = {
        "channel": args.channel,
        "max_mi_independent": ind.value,
        "max_mi_joint": joint.value,
        "c_in_star": list(cin.c_in),
        "p_independent": ind.argmax.probs[0].tolist(),
        "p_joint": joint.argmax.probs[0].tolist(),
        "converged": ind.converged and joint.converged,
    }
    return _dumps(doc), doc["converged"]


def cmd_sigma1(args, mac, cfg):
    if not (args.delta >= 0 and math.isfinite(args.delta)):
        raise InputError(f"--delta must be finite and >= 0, got {args.delta}")
    res = sigma1(mac, args.delta, cfg)
    doc = {"channel": args.channel, **res.to_dict()}
    return _dumps(doc), res.converged


def cmd_sandwich(args, mac, cfg):
    grid = parse_grid(args.grid)
    rows = ordered_map(_SandwichPoint(mac, cfg, args.asym, args.monotone), grid, worker_count())
    curve = BoundCurve(
        parameter_name="c_out=(0,h)" if args.asym else "c_out=(h,h)",
        samples=[(h, lo, hi) for h, (lo, hi, _) in zip(grid, rows)],
        channel_id=args.channel,
    )
    curve.validate()
    return curve.to_csv(), all(ok for *_, ok in rows)


def cmd_slope_demo(args, mac, cfg):
    grid = parse_grid(args.grid, positive=True) if args.grid else default_slope_grid()
    base = sigma1(mac, 0.0, cfg)
    rows = ordered_map(_SlopePoint(mac, cfg), grid, worker_count())
    lines = ["h,lower_bound,difference_quotient"]
    for h, (lower, _) in zip(grid, rows):
        quotient = (lower - base.value) / h
        lines.append(",".join(format_number(v) for v in (h, lower, quotient)))
    return "\n".join(lines) + "\n", base.converged and all(ok for _, ok in rows)


def cmd_cstar(args, mac, cfg):
    verdict = cstar_test(mac, cfg)
    doc = {"channel": args.channel, **verdict.to_dict()}
    return _dumps(doc), True


def random_joint(mac: DiscreteMac, n: int, u_size: int, rng, product: bool = False) -> JointInputDist:
    """Seeded random p(u, x1^n, x2^n); ``product`` makes X1^n and X2^n independent given U."""
    a, b = mac.x1_size**n, mac.x2_size**n
    if product:
        pu = rng.dirichlet(np.ones(u_size))
        p1 = rng.dirichlet(np.ones(a), size=u_size)
        p2 = rng.dirichlet(np.ones(b), size=u_size)
        probs = pu[:, None, None] * p1[:, :, None] * p2[:, None, :]
    else:
        probs = rng.dirichlet(np.full(u_size * a * b, 0.5)).reshape(u_size, a, b)
    return JointInputDist(probs, n=n, x1_size=mac.x1_size, x2_size=mac.x2_size)


def cmd_dueck_demo(args, mac, cfg):
    if args.seeds < 1:
        raise InputError("--seeds must be >= 1")
    if args.n < 1:
        raise InputError("--n must be >= 1")
    if not args.epsilon > 0:
        raise InputError("--epsilon must be > 0")
    instances = []
    failed = 0
    for i in range(args.seeds):
        rng = np.random.default_rng([cfg.rng_seed, i])
        p = random_joint(mac, args.n, args.u_size, rng, product=args.product)
        res = dueck_decompose(p, args.epsilon)
        rest = [t for t in range(args.n) if t not in res.t_set]
        residual = [letter_conditional_mi(p, t, res.t_set) for t in rest]
        ok = res.certify() and all(r <= args.epsilon + 1e-9 for r in residual)
        failed += not ok
        instances.append(
            {
                "instance": i,
                "t_set": res.t_set,
                "size_bound": args.n * res.delta_effective / args.epsilon,
                "residual_max": max(residual, default=0.0),
                "delta_effective": res.delta_effective,
                "certified": ok,
            }
        )
    doc = {
        "channel": args.channel,
        "n": args.n,
        "epsilon": args.epsilon,
        "u_size": args.u_size,
        "all_certified": failed == 0,
        "instances": instances,
    }
    if failed:
        return _dumps(doc), True, f"{failed} of {args.seeds} Dueck certificates failed"
    return _dumps(doc), True


COMMANDS = {
    "capacity": cmd_capacity,
    "sigma1": cmd_sigma1,
    "sandwich": cmd_sandwich,
    "slope-demo": cmd_slope_demo,
    "cstar": cmd_cstar,
    "dueck-demo": cmd_dueck_demo,
}


# ---------------------------------------------------------------------------
# argument parsing


def _global_flags(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = parser.add_argument_group("global options")
    g.add_argument("--channel", default=d("binary-adder"),
                   help="built-in name (%s) or channel JSON path" % ", ".join(BUILTIN_CHANNELS))
    g.add_argument("--out", default=d(None), help="write the result here instead of stdout")
    g.add_argument("--seed", type=int, default=d(None), help="optimizer RNG seed")
    g.add_argument("--restarts", type=int, default=d(None), help="random restarts per optimization")
    g.add_argument("--tol", type=float, default=d(None), help="optimizer tolerance in bits")
    g.add_argument("--config", default=d(None), help="JSON file with optimizer options")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopmac",
        description="Sum-capacity bounds for two-user MACs with a cooperation facilitator.",
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _global_flags(p, suppress=True)
        return p

    add("capacity", "independent and joint input maxima plus the full-knowledge C_in")
    p = add("sigma1", "evaluate sigma_1(delta)")
    p.add_argument("--delta", type=float, required=True)
    p = add("sandwich", "lower and upper sum-capacity bounds over a c_out grid")
    p.add_argument("--grid", required=True, help="comma-separated h values")
    p.add_argument("--asym", action="store_true", help="use c_out = (0, h) instead of (h, h)")
    p.add_argument("--monotone", action="store_true", help="report the lower bound's monotone envelope")
    p = add("slope-demo", "difference quotients of the lower bound near c_out = 0")
    p.add_argument("--grid", default=None, help="comma-separated h > 0 (default: 1e-5..1e-1, 5 per decade)")
    add("cstar", "test membership in the infinite-slope class")
    p = add("dueck-demo", "Dueck decompositions of seeded random input laws")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--u-size", type=int, default=2)
    p.add_argument("--product", action="store_true", help="draw conditionally independent laws")
    return parser


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        mac = resolve_channel(args.channel)
        result = COMMANDS[args.command](args, mac, cfg)
    except (InputError, ValidationError, DomainError, ResourceError) as exc:
        print(f"coopmac: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text, converged, *failure = result
    try:
        _emit(text, args.out)
    except OSError as exc:
        print(f"coopmac: error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_INPUT
    if failure:
        print(f"coopmac: {failure[0]}", file=sys.stderr)
        return EXIT_CERTIFICATE
    if not converged:
        print("coopmac: warning: optimizer did not converge; values are best effort", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
