"""Command-line front end; every command prints one JSON report on stdout.

Exit codes: 0 when every check passes, 1 on a verification failure, 2 on a
usage error or a violated size guard (the report's ``error.kind`` tells
the two apart).
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

import numpy as np

from filtered_noise import BACKEND, __version__, fock, mfree, suite
from filtered_noise.moments import (
    Leg,
    MissingLabelError,
    MomentModel,
    MomentOrderError,
    MomentSequence,
    Word,
    WorkLimitError,
    clt_limit,
    clt_normalized,
    convolution_power,
    convolution_power_bruteforce,
    filtered_word_moment,
    filtered_word_moment_recursive,
    mfree_sample_moment,
    poisson_limit,
)
from filtered_noise.partitions import (
    MAX_ENUMERATION,
    ColorFilterTuple,
    Filter,
    SetPartition,
    SizeLimitError,
    coarsest_adapted,
    enumerate_adapted,
    enumerate_partitions,
    is_adapted,
)

CONFIG_ENV = "FILTERED_NOISE_CONFIG"

GUARD_ERRORS = (SizeLimitError, WorkLimitError, fock.BasisCapError, fock.TruncationError)
USAGE_ERRORS = (ValueError, KeyError, MissingLabelError, MomentOrderError, OSError,
                json.JSONDecodeError)


@dataclass
class RunConfig:
    d: int = 2
    delta: Fraction = Fraction(1, 2)
    M: int = 3
    n_max: int = 5
    tolerance: float = 1e-9
    limit: int = MAX_ENUMERATION
    basis_cap: int = fock.BASIS_CAP
    seed: int = suite.DEFAULT_SEED

    def validate(self) -> "RunConfig":
        if min(self.d, self.M, self.n_max, self.limit, self.basis_cap) < 1 or self.delta <= 0:
            raise ValueError("truncation parameters and guards must be positive")
        if not 0 < self.tolerance < 1e-3:
            raise ValueError("tolerance must lie in (0, 1e-3)")
        return self

    def truncation(self) -> fock.Truncation:
        return fock.Truncation(self.d, self.delta, self.M, self.n_max, self.basis_cap)


_CASTS = {"d": int, "M": int, "n_max": int, "limit": int, "basis_cap": int, "seed": int,
          "tolerance": float, "delta": Fraction}


def read_config(path: str) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CASTS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = _CASTS[key](value)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    path = args.config or os.environ.get(CONFIG_ENV)
    if path:
        values.update(read_config(path))
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = _CASTS[f.name](flag)
    return RunConfig(**values).validate()


# --------------------------------------------------------------------------- #
#                              JSON helpers                                   #
# --------------------------------------------------------------------------- #

def jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.complexfloating,)):
        return jsonable(complex(x))
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (Filter, SetPartition)):
        return str(x)
    return x


def _cf(args) -> ColorFilterTuple:
    return ColorFilterTuple.parse(args.colors, args.filters)


def _lambdas(items) -> dict[int, Fraction]:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if "=" not in part:
                raise ValueError(f"--lambda expects color=rate, got {part!r}")
            c, lam = part.split("=", 1)
            out[int(c)] = Fraction(lam.strip())
    return out


# --------------------------------------------------------------------------- #
#                                commands                                     #
# --------------------------------------------------------------------------- #

def cmd_partitions(args, cfg):
    cf = _cf(args)
    inputs = {"colors": list(cf.colors), "filters": [str(f) for f in cf.filters]}
    if args.action == "coarsest":
        if not args.blocks:
            raise ValueError("partitions coarsest needs --blocks")
        R = SetPartition.parse(args.blocks)
        inputs["blocks"] = str(R)
        return inputs, {"coarsest": str(coarsest_adapted(R, cf))}, True
    if args.every:
        parts = [R for R in enumerate_partitions(len(cf), limit=cfg.limit)
                 if not args.pairs or R.is_pair_partition()]
        parts = [(R, is_adapted(R, cf)) for R in parts]
    else:
        parts = [(R, True) for R in enumerate_adapted(cf, args.pairs, limit=cfg.limit)]
    inputs["pairs_only"] = args.pairs
    if args.action == "count":
        return inputs, {"count": len(parts), "adapted": sum(a for _, a in parts)}, True
    listed = [{"partition": str(R), "adapted": a} for R, a in parts] if args.every \
        else [str(R) for R, _ in parts]
    return inputs, {"count": len(parts), "partitions": listed}, True


def cmd_moment(args, cfg):
    model = MomentModel.load(args.model)
    labels = [s.strip() for s in args.labels.split(",")]
    cf = _cf(args)
    word = Word.build(labels, cf.colors, cf.filters)
    value = filtered_word_moment(word, model)
    result = {"value": value}
    ok = True
    if args.recursive:
        rec = filtered_word_moment_recursive(word, model)
        result["recursive"] = rec
        ok = rec == value
    return {"model": args.model, "labels": labels, "colors": list(cf.colors),
            "filters": [str(f) for f in cf.filters]}, result, ok


def cmd_convolve(args, cfg):
    cf = _cf(args)
    seq = MomentSequence.parse(args.moments)
    value = convolution_power(args.N, cf, seq)
    result = {"value": value}
    ok = True
    if args.bruteforce:
        brute = convolution_power_bruteforce(args.N, cf, seq)
        result["bruteforce"] = brute
        ok = brute == value
    return {"N": args.N, "colors": list(cf.colors), "filters": [str(f) for f in cf.filters],
            "moments": seq.to_strings()}, result, ok


def cmd_clt(args, cfg):
    cf = _cf(args)
    limit = clt_limit(cf)
    result = {"value": str(limit)}
    inputs = {"colors": list(cf.colors), "filters": [str(f) for f in cf.filters]}
    if args.N:
        seq = MomentSequence.parse(args.moments) if args.moments else \
            MomentSequence.rademacher(len(cf))
        inputs["N"] = args.N
        inputs["moments"] = seq.to_strings()
        norm = clt_normalized(args.N, cf, seq)
        result["normalized"] = norm
        result["error"] = abs(float(norm) - limit)
    return inputs, result, True


def cmd_poisson(args, cfg):
    cf = _cf(args)
    lam = _lambdas(args.lam)
    return ({"colors": list(cf.colors), "filters": [str(f) for f in cf.filters],
             "lambda": {str(k): v for k, v in sorted(lam.items())}},
            {"value": poisson_limit(cf, lam)}, True)


def cmd_mfree(args, cfg):
    lam = Fraction(args.rate) if args.rate is not None else None
    values = {}
    for n in range(1, args.n + 1):
        values[str(n)] = mfree_sample_moment(args.m, n, args.kind, lam)
    inputs = {"m": args.m, "n": args.n, "kind": args.kind}
    if lam is not None:
        inputs["lambda"] = lam
    return inputs, {"moments": values}, True


def _random_vec(rng, d):
    return rng.normal(size=d) + 1j * rng.normal(size=d)


def cmd_fock_verify(args, cfg):
    rng = np.random.default_rng(cfg.seed)
    prng = random.Random(cfg.seed)
    space = fock.build_space(cfg.truncation())
    M = space.M
    checks = args.check or ["commutation", "pairing", "noise"]
    filters = [Filter.all(), Filter.empty()] + [Filter.prefix(r) for r in range(2, M + 2)]
    result = {"basis_size": space.dim}
    ok = True
    if "commutation" in checks:
        worst = 0.0
        cases = 0
        for s in filters:
            for t in filters:
                k, l = prng.randint(1, M), prng.randint(1, M)
                worst = max(worst, fock.verify_commutation(space, s, t, k, l, _random_vec(rng, space.d),
                                                         _random_vec(rng, space.d)))
                cases += 1
        result["commutation"] = {"cases": cases, "residual": worst}
        ok = ok and worst <= cfg.tolerance
    if "pairing" in checks:
        worst = 0.0
        for _ in range(args.samples):
            n = prng.randint(1, min(6, space.n_max))
            legs = [Leg(i, prng.randint(1, min(M, 2)), prng.choice(filters), prng.random() < 0.5)
                    for i in range(n)]
            vectors = {i: _random_vec(rng, space.d) for i in range(n)}
            worst = max(worst, fock.verify_pairing_formula(space, legs, vectors)[2])
        result["pairing"] = {"words": args.samples, "max_abs_diff": worst}
        ok = ok and worst <= cfg.tolerance
    if "noise" in checks:
        worst = 0.0
        cases = 0
        times = [cfg.delta * c for c in range(1, space.d + 1)]
        for n in range(1, min(5, space.n_max) + 1):
            for t in times:
                cf = suite.random_cf(prng, n, M, filters)
                worst = max(worst, fock.verify_noise_moments(space, cf, t)[2])
                cases += 1
        result["noise"] = {"cases": cases, "times": times, "max_abs_diff": worst}
        ok = ok and worst <= max(cfg.tolerance, 1e-8)
    return {"checks": checks, "truncation": _trunc_dict(cfg)}, result, ok


def cmd_mfree_verify(args, cfg):
    rng = np.random.default_rng(cfg.seed)
    space = fock.build_space(cfg.truncation())
    checks = args.check or ["cuntz", "resolution", "decomposition", "semicircle"]
    ms = list(range(1, space.M)) + [None]
    result = {"basis_size": space.dim, "m_inf_realized_as": space.M - 1}
    ok = True
    if "cuntz" in checks:
        res = {str(mfree.MParameter(m)): mfree.verify_cuntz(
            space, m, _random_vec(rng, space.d), _random_vec(rng, space.d)) for m in ms}
        result["cuntz"] = res
        ok = ok and max(res.values()) <= cfg.tolerance
    if "resolution" in checks:
        res = {str(mfree.MParameter(m)): mfree.verify_resolution(space, m) for m in ms}
        result["resolution"] = res
        ok = ok and max(res.values()) <= cfg.tolerance
    if "decomposition" in checks:
        D = [i for i in mfree.d_basis(space)
             if space.grade[i] < space.n_max
             and max(space.colors_of(i), default=0) < space.M - 1]
        sectors = D[:5]
        rep = mfree.verify_decomposition(space, sectors, words=args.samples, seed=cfg.seed)
        result["decomposition"] = {"sectors": [space.describe(i) for i in sectors],
                                   "orthogonality": rep.orthogonality,
                                   "oracle_diff": rep.oracle,
                                   "factor_rel_error": rep.factor,
                                   "nonzero_expectations": rep.nonzero_expectations}
        ok = ok and rep.passed(1e-12, cfg.tolerance, 1e-12)
    if "semicircle" in checks:
        table = {}
        for m in (1, 2, 3):
            for p in (1, 2, 3):
                f_val = mfree.semicircle_moments(m, p)
                c_val = mfree_sample_moment(m, 2 * p)
                table[f"m={m},p={p}"] = {"fock": f_val, "combinatorial": c_val}
                ok = ok and abs(f_val - float(c_val)) <= cfg.tolerance
        result["semicircle"] = table
    return {"checks": checks, "truncation": _trunc_dict(cfg)}, result, ok


def cmd_suite(args, cfg):
    only = [int(x) for x in args.only.split(",")] if args.only else None
    t0 = time.perf_counter()
    crits = suite.run_suite(cfg.seed, only)
    for c in crits:
        print(c.line(), file=sys.stderr)
    total = time.perf_counter() - t0
    result = {"criteria": [asdict(c) for c in crits], "total_seconds": round(total, 3)}
    return {"only": only}, result, all(c.passed for c in crits)


def _trunc_dict(cfg):
    return {"d": cfg.d, "delta": cfg.delta, "M": cfg.M, "n_max": cfg.n_max}


# --------------------------------------------------------------------------- #
#                                 parser                                      #
# --------------------------------------------------------------------------- #

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"key = value file (default: ${CONFIG_ENV})")
    common.add_argument("--seed", type=int)
    common.add_argument("--tolerance", type=float)
    common.add_argument("--d", type=int, help="grid cells")
    common.add_argument("--delta", help="grid cell width, e.g. 1/2")
    common.add_argument("--M", type=int, help="colors")
    common.add_argument("--n-max", dest="n_max", type=int, help="maximum particle number")
    common.add_argument("--limit", type=int, help="enumeration size guard")
    common.add_argument("--basis-cap", dest="basis_cap", type=int)
    common.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")

    p = argparse.ArgumentParser(prog="filtered-noise", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def with_cf(sp):
        sp.add_argument("--colors", required=True, help="comma-separated colors, e.g. 1,1,2")
        sp.add_argument("--filters", required=True,
                        help="comma-separated filters: all, empty, p<r>, {c1,c2}")

    sp = sub.add_parser("partitions", parents=[common], help="list or count adapted partitions")
    sp.add_argument("action", choices=["list", "count", "coarsest"])
    with_cf(sp)
    sp.add_argument("--blocks", help='partition to refine, e.g. "1,3,5|2,4"')
    sp.add_argument("--pairs", action="store_true", help="pair partitions only")
    sp.add_argument("--every", action="store_true",
                    help="include non-adapted partitions, flagged")
    sp.set_defaults(func=cmd_partitions)

    sp = sub.add_parser("moment", parents=[common], help="filtered word moment")
    sp.add_argument("--model", required=True, help='JSON: {"label": ["m1", "m2", ...]}')
    sp.add_argument("--labels", required=True)
    with_cf(sp)
    sp.add_argument("--recursive", action="store_true", help="also run the recursive evaluator")
    sp.set_defaults(func=cmd_moment)

    sp = sub.add_parser("convolve", parents=[common], help="N-fold filtered convolution power")
    sp.add_argument("--N", type=int, required=True)
    with_cf(sp)
    sp.add_argument("--moments", required=True, help="m1,m2,... as integers or p/q")
    sp.add_argument("--bruteforce", action="store_true", help="cross-check over all site tuples")
    sp.set_defaults(func=cmd_convolve)

    sp = sub.add_parser("clt", parents=[common], help="central limit moment")
    with_cf(sp)
    sp.add_argument("--N", type=int, help="also report the normalized power at this N")
    sp.add_argument("--moments", help="m1,m2,... for --N (default: symmetric +-1)")
    sp.set_defaults(func=cmd_clt)

    sp = sub.add_parser("poisson", parents=[common], help="Poisson limit moment")
    with_cf(sp)
    sp.add_argument("--lambda", dest="lam", action="append", required=True,
                    help="color=rate, repeatable or comma-separated")
    sp.set_defaults(func=cmd_poisson)

    sp = sub.add_parser("mfree", parents=[common], help="m-free limit moments 1..n")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--kind", choices=["clt", "poisson"], default="clt")
    sp.add_argument("--rate", help="Poisson rate")
    sp.set_defaults(func=cmd_mfree)

    sp = sub.add_parser("fock-verify", parents=[common], help="Fock-space identity sweeps")
    sp.add_argument("--check", action="append", choices=["commutation", "pairing", "noise"])
    sp.add_argument("--samples", type=int, default=100)
    sp.set_defaults(func=cmd_fock_verify)

    sp = sub.add_parser("mfree-verify", parents=[common], help="m-free operator sweeps")
    sp.add_argument("--check", action="append",
                    choices=["cuntz", "resolution", "decomposition", "semicircle"])
    sp.add_argument("--samples", type=int, default=50)
    sp.set_defaults(func=cmd_mfree_verify)

    sp = sub.add_parser("suite", parents=[common], help="full acceptance battery")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    sp.set_defaults(func=cmd_suite)
    return p


def _emit(report: dict) -> None:
    print(json.dumps(jsonable(report), indent=2))


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    report = {"command": args.command,
              "argv": list(sys.argv[1:] if argv is None else argv),
              "version": __version__,
              "backend": BACKEND}
    t0 = time.perf_counter()
    try:
        cfg = build_config(args)
        report["seed"] = cfg.seed
        inputs, result, ok = args.func(args, cfg)
    except GUARD_ERRORS as exc:
        report["error"] = {"kind": "guard", "type": type(exc).__name__, "message": str(exc)}
        _emit(report)
        print(f"guard violated: {exc}", file=sys.stderr)
        return 2
    except USAGE_ERRORS as exc:
        report["error"] = {"kind": "usage", "type": type(exc).__name__, "message": str(exc)}
        _emit(report)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report["inputs"] = inputs
    report["result"] = result
    report["passed"] = bool(ok)
    if not args.no_timing:
        report["seconds"] = round(time.perf_counter() - t0, 3)
    _emit(report)
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())
