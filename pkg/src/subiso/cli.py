"""Command line front end.

Three subcommands: ``certify`` evaluates the sufficient conditions on a
matrix, ``experiment`` runs the Monte Carlo tail checks, and ``verify``
exercises the standalone probabilistic ingredients.  Every run emits a
single JSON report (stdout or ``--out``) that validates against the
schema shipped as ``report.schema.json``.  Reports are byte-identical
across reruns with the same seed, regardless of ``--threads``; only the
timing block varies.

Exit codes: 0 clean, 1 at least one verdict failed, 2 usage or input
parsing error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time

import numpy as np

from . import certificate, ensembles, montecarlo, oracles
from ._seeds import derive_seed
from .matrix_core import SpectralNormError, read_matrix_csv, warn_if_rank_deficient

__all__ = ["main"]

SCHEMA_VERSION = "1"


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value}")
    return value


def parse_grid(text: str) -> list[float]:
    """Parse ``--grid``: either comma-separated floats or linspace(a,b,k)."""
    body = text.strip()
    if body.startswith("linspace(") and body.endswith(")"):
        inner = body[len("linspace(") : -1]
        parts = inner.split(",")
        if len(parts) != 3:
            raise ValueError(f"linspace takes (start, stop, count), got {text!r}")
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
        if count < 1:
            raise ValueError(f"linspace count must be >= 1, got {count}")
        return [float(x) for x in np.linspace(start, stop, count)]
    values = [float(f) for f in body.split(",") if f.strip()]
    if not values:
        raise ValueError(f"empty grid {text!r}")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("grid values must be sorted ascending")
    return values


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if f == math.inf:
            return "inf"
        if f == -math.inf:
            return "-inf"
        return f
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return obj


def _estimate_dict(est: montecarlo.TailEstimate) -> dict:
    return _jsonable(dataclasses.asdict(est))


def _verdict_dicts(verdicts) -> list[dict]:
    return [
        {"name": v.name, "status": v.status, "lhs": _jsonable(v.lhs), "rhs": _jsonable(v.rhs)}
        for v in verdicts
    ]


def _stats_dict(stats: certificate.CoherenceStats) -> dict:
    return {
        "mu": _jsonable(stats.mu),
        "op_norm": _jsonable(stats.op_norm),
        "op_norm_sq": _jsonable(stats.op_norm_sq),
        "max_col_l2_h": _jsonable(stats.max_col_l2_h),
        "n": stats.n,
        "p": stats.p,
    }


def _load_matrix(args) -> tuple[np.ndarray, str]:
    if args.matrix is not None:
        return read_matrix_csv(args.matrix), str(args.matrix)
    spec = ensembles.parse_gen_spec(args.gen, seed=args.seed)
    return ensembles.gen_matrix(spec), args.gen


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _exit_code(verdicts: list[dict]) -> int:
    return 1 if any(v["status"] == "fail" for v in verdicts) else 0


def cmd_certify(args) -> tuple[dict, int]:
    X, source = _load_matrix(args)
    stats = certificate.coherence(X)
    rank_warned = warn_if_rank_deficient(X)
    results: dict = {"rank_warning": rank_warned}
    verdicts: list[dict] = []
    try:
        params = certificate.TheoremParams(r=args.r, alpha=args.alpha, s=args.s)
        hyp = certificate.check_hypotheses(stats, params)
        tuning = certificate.tune_parameters(stats, params)
    except ValueError as exc:
        verdicts.append(
            {"name": "hypothesis_domain", "status": "out_of_domain", "lhs": None, "rhs": None}
        )
        results["domain_error"] = str(exc)
        hyp = None
        tuning = None
    if hyp is not None:
        results["hypotheses"] = _jsonable(dataclasses.asdict(hyp))
        verdicts.append(
            {
                "name": "coherence_hypothesis",
                "status": "pass" if hyp.mu_ok else "fail",
                "lhs": _jsonable(stats.mu),
                "rhs": _jsonable(hyp.mu_bound),
            }
        )
        verdicts.append(
            {
                "name": "sparsity_hypothesis",
                "status": "pass" if hyp.s_ok else "fail",
                "lhs": _jsonable(float(args.s)),
                "rhs": _jsonable(hyp.s_bound),
            }
        )
        verdicts.append(
            {
                "name": "failure_bound",
                "status": "vacuous" if hyp.vacuous else "pass",
                "lhs": _jsonable(hyp.failure_bound),
                "rhs": 1.0,
            }
        )
    if tuning is not None:
        results["tuning"] = _jsonable(dataclasses.asdict(tuning))
        try:
            env = certificate.chernoff_envelope(
                s=args.s,
                p=stats.p,
                r=tuning.r_prime,
                u_sq=tuning.u_sq,
                v_sq=tuning.v_sq,
                op_norm_sq=stats.op_norm_sq,
                mu=stats.mu,
            )
            results["envelope"] = {
                "value": _jsonable(env),
                "with_outer_factors": _jsonable(
                    certificate.POISSONIZATION_FACTOR * certificate.DECOUPLING_FACTOR * env
                ),
                "at_r": _jsonable(tuning.r_prime),
            }
        except (certificate.EnvelopeDomainError, ValueError) as exc:
            results["envelope"] = None
            verdicts.append(
                {"name": "envelope_domain", "status": "out_of_domain", "lhs": None, "rhs": None}
            )
            results["envelope_domain_error"] = str(exc)
    inputs = {
        "matrix": source,
        "seed": args.seed,
        "r": args.r,
        "alpha": args.alpha,
        "s": args.s,
    }
    return _report("certify", inputs, _stats_dict(stats), results, verdicts), _exit_code(verdicts)


def cmd_experiment(args) -> tuple[dict, int]:
    X, source = _load_matrix(args)
    stats = certificate.coherence(X)
    inputs = {
        "kind": args.kind,
        "matrix": source,
        "seed": args.seed,
        "trials": args.trials,
        "gamma": args.gamma,
    }
    results: dict = {}
    verdicts: list[dict] = []

    if args.kind == "failure":
        if args.s is None or args.grid is None:
            raise ValueError("experiment failure needs --s and --grid")
        grid = parse_grid(args.grid)
        inputs.update({"s": args.s, "grid": grid})
        tails = montecarlo.failure_probability_experiment(
            X, args.s, grid, args.trials, args.seed, gamma=args.gamma, threads=args.threads
        )
        results["tails"] = [_estimate_dict(t) for t in tails]
    elif args.kind == "decoupling":
        if args.delta is None or args.grid is None:
            raise ValueError("experiment decoupling needs --delta and --grid")
        grid = parse_grid(args.grid)
        inputs.update({"delta": args.delta, "grid": grid})
        cmp = montecarlo.decoupling_experiment(
            X, args.delta, grid, args.trials, args.seed, gamma=args.gamma, threads=args.threads
        )
        results.update(
            {
                "constant": cmp.constant,
                "lhs": [_estimate_dict(t) for t in cmp.lhs],
                "rhs": [_estimate_dict(t) for t in cmp.rhs],
            }
        )
        verdicts.extend(_verdict_dicts(cmp.verdicts))
    elif args.kind == "poissonization":
        if args.s is None or args.grid is None:
            raise ValueError("experiment poissonization needs --s and --grid")
        grid = parse_grid(args.grid)
        inputs.update({"s": args.s, "grid": grid})
        cmp = montecarlo.poissonization_experiment(
            X, args.s, grid, args.trials, args.seed, gamma=args.gamma, threads=args.threads
        )
        results.update(
            {
                "constant": cmp.constant,
                "lhs": [_estimate_dict(t) for t in cmp.lhs],
                "rhs": [_estimate_dict(t) for t in cmp.rhs],
            }
        )
        verdicts.extend(_verdict_dicts(cmp.verdicts))
    elif args.kind == "intermediate":
        if args.delta is None:
            raise ValueError("experiment intermediate needs --delta")
        if stats.mu == 0.0:
            raise ValueError(
                "column threshold is degenerate for orthogonal columns (coherence 0)"
            )
        a_prime = args.alpha + 1.0
        log_p = math.log(stats.p)
        u = math.sqrt(a_prime * log_p * stats.op_norm_sq)
        v = math.sqrt(a_prime * log_p) * stats.mu
        inputs.update({"delta": args.delta, "alpha": args.alpha})
        inter = montecarlo.intermediate_tails(
            X,
            args.delta,
            u,
            v,
            args.trials,
            args.seed,
            gamma=args.gamma,
            threads=args.threads,
            stats=stats,
        )
        results.update(
            {
                "u": _jsonable(u),
                "v": _jsonable(v),
                "tail_rh_norm": _estimate_dict(inter.tail_rh_norm),
                "tail_rh_col": _estimate_dict(inter.tail_rh_col),
                "bound_u": _jsonable(inter.bound_u),
                "bound_v": _jsonable(inter.bound_v),
            }
        )
        verdicts.extend(_verdict_dicts(inter.verdicts))
    else:  # pragma: no cover - argparse already constrains choices
        raise ValueError(f"unknown experiment kind {args.kind!r}")

    report = _report("experiment", inputs, _stats_dict(stats), results, verdicts)
    return report, _exit_code(verdicts)


def cmd_verify(args) -> tuple[dict, int]:
    inputs: dict = {
        "kind": args.kind,
        "seed": args.seed,
        "gamma": args.gamma,
    }
    results: dict = {}
    verdicts: list[dict] = []

    if args.kind == "chaos":
        instances: list[oracles.ChaosInstance] = []
        if args.instance is not None:
            inputs["instance"] = str(args.instance)
            instances.append(oracles.read_chaos_csv(args.instance))
        else:
            inputs.update({"instances": args.instances, "size_max": args.size_max})
            if args.size_max < 3:
                raise ValueError(f"--size-max must be >= 3, got {args.size_max}")
            for i in range(args.instances):
                size_rng = np.random.Generator(
                    np.random.Philox(key=derive_seed(args.seed, "verify.chaos.size", i))
                )
                size = int(size_rng.integers(3, args.size_max + 1))
                instances.append(
                    oracles.random_chaos_instance(size, derive_seed(args.seed, "verify.chaos", i))
                )
        rows = []
        max_ratio = 0.0
        max_dev = 0.0
        for inst in instances:
            exact = oracles.chaos_moments_exact(inst)
            formula = oracles.chaos_moments_formula(inst)
            dev = 0.0
            for a, b in ((exact.m2, formula.m2), (exact.m4, formula.m4)):
                scale = max(abs(a), abs(b), 1e-300)
                dev = max(dev, abs(a - b) / scale)
            max_dev = max(max_dev, dev)
            max_ratio = max(max_ratio, exact.ratio)
            rows.append(
                {
                    "size": inst.size,
                    "m2_exact": _jsonable(exact.m2),
                    "m4_exact": _jsonable(exact.m4),
                    "m2_formula": _jsonable(formula.m2),
                    "m4_formula": _jsonable(formula.m4),
                    "ratio": _jsonable(exact.ratio),
                    "relative_deviation": _jsonable(dev),
                }
            )
        results["instances"] = rows
        verdicts.append(
            {
                "name": "chaos_moment_ratio",
                "status": "pass" if max_ratio <= 9.0 * (1.0 + 1e-12) else "fail",
                "lhs": _jsonable(max_ratio),
                "rhs": 9.0,
            }
        )
        verdicts.append(
            {
                "name": "chaos_formula_matches_enumeration",
                "status": "pass" if max_dev <= 1e-10 else "fail",
                "lhs": _jsonable(max_dev),
                "rhs": 1e-10,
            }
        )
    elif args.kind == "chernoff":
        if args.grid is None:
            raise ValueError("verify chernoff needs --grid")
        grid = parse_grid(args.grid)
        inputs.update({"d": args.d, "delta": args.delta, "grid": grid, "trials": args.trials})
        inst = oracles.diagonal_bernoulli_instance(args.d, args.delta)
        res = oracles.chernoff_empirical(
            inst, grid, args.trials, args.seed, gamma=args.gamma, threads=args.threads
        )
        results.update(
            {
                "estimates": [_estimate_dict(e) for e in res.estimates],
                "bounds": [_jsonable(b) for b in res.bounds],
                "norm_cap": inst.norm_cap,
                "mean_norm_cap": inst.mean_norm_cap,
            }
        )
        verdicts.extend(_verdict_dicts(res.verdicts))
    else:  # pragma: no cover
        raise ValueError(f"unknown verify kind {args.kind!r}")

    report = _report("verify", inputs, None, results, verdicts)
    return report, _exit_code(verdicts)


def _report(command: str, inputs: dict, stats: dict | None, results: dict, verdicts) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "stats": stats,
        "results": results,
        "verdicts": list(verdicts),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subiso",
        description="Certify and empirically check quasi-isometry bounds for random column submatrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_matrix_source(p: argparse.ArgumentParser) -> None:
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--matrix", help="path to a CSV matrix file")
        group.add_argument("--gen", help="generator, e.g. gaussian_unit:n=32,p=64 or spikes_sines:n=32")

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--gamma", type=float, default=montecarlo.DEFAULT_GAMMA,
                       help="confidence parameter for upper bounds (default 0.01)")
        p.add_argument("--threads", type=_positive_int, default=1,
                       help="worker threads; results are identical for any value")
        p.add_argument("--out", help="write the JSON report here instead of stdout")

    cert = sub.add_parser("certify", help="evaluate the sufficient conditions on a matrix")
    add_matrix_source(cert)
    cert.add_argument("--r", type=float, required=True, help="target distortion in (0, 1)")
    cert.add_argument("--alpha", type=float, required=True, help="failure-rate exponent, >= 1")
    cert.add_argument("--s", type=_positive_int, required=True, help="subset size")
    cert.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    cert.add_argument("--out", help="write the JSON report here instead of stdout")
    cert.set_defaults(func=cmd_certify)

    exp = sub.add_parser("experiment", help="run a Monte Carlo tail experiment")
    exp.add_argument("--kind", required=True,
                     choices=["failure", "decoupling", "poissonization", "intermediate"])
    add_matrix_source(exp)
    exp.add_argument("--s", type=_nonnegative_int, help="subset size (failure, poissonization)")
    exp.add_argument("--delta", type=float, help="selector rate (decoupling, intermediate)")
    exp.add_argument("--alpha", type=float, default=1.0,
                     help="rate exponent used to tune thresholds (intermediate, default 1)")
    exp.add_argument("--grid", help="thresholds: a,b,c or linspace(a,b,k)")
    exp.add_argument("--trials", type=_positive_int, required=True)
    add_common(exp)
    exp.set_defaults(func=cmd_experiment)

    ver = sub.add_parser("verify", help="check the standalone probabilistic ingredients")
    ver.add_argument("--kind", required=True, choices=["chaos", "chernoff"])
    ver.add_argument("--instance", help="chaos: CSV of i,j,x coefficient triples")
    ver.add_argument("--instances", type=_positive_int, default=50,
                     help="chaos: number of random instances (default 50)")
    ver.add_argument("--size-max", type=_positive_int, default=12,
                     help="chaos: largest random instance size (default 12)")
    ver.add_argument("--d", type=_positive_int, default=64, help="chernoff: dimension (default 64)")
    ver.add_argument("--delta", type=float, default=0.1, help="chernoff: flip rate (default 0.1)")
    ver.add_argument("--grid", help="chernoff: tail levels, a,b,c or linspace(a,b,k)")
    ver.add_argument("--trials", type=_positive_int, default=1000)
    add_common(ver)
    ver.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        report, code = args.func(args)
    except SpectralNormError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except oracles.SummandInvariantError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    # threads rides with timing: an execution detail outside the
    # determinism contract (reports must not depend on it)
    report["timing"] = {
        "wall_seconds": time.perf_counter() - started,
        "threads": getattr(args, "threads", 1),
    }
    _emit(report, args.out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
