"""Command-line interface: model ingestion, free energy, marginals, sweeps, oracles.

Model files are JSON with complex entries as [re, im] pairs, row-major:

    {"name": "xy", "d": 2, "h": [[[0.0, 0.0], ...], ...]}

or, for blocked chains, a unit-cell bond pattern instead of "h":

    {"d": 2, "blocking": {"cell_size": 2, "terms": [h1, h2]}}

All diagnostics go to stderr; data (tables, CSV, matrix dumps) to stdout or
--out. Exit codes: 0 ok, 2 malformed file or arguments, 3 non-Hermitian term,
4 solver non-convergence, 5 resource budget exceeded, 6 invalid marginal size.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import psutil

from .chain import ChainModel, block_sites, ising_model, rescale_to_unit_beta, xy_model
from .errors import HermiticityError, NumericalBreakdownError, ResourceBudgetError
from .operator_core import trace_distance
from .oracles import gibbs_marginal_bruteforce, ising_free_energy, xy_exact
from .states import DensityMatrix
from .transfer import build_E, spectral_radius
from .thermo import (
    choose_L,
    conditional_mutual_information,
    expectation_by_derivative,
    free_energy,
    gibbs_marginal,
    mutual_information,
    two_sided_model,
    unwind_two_sided,
)

EXIT_OK = 0
EXIT_BAD_FILE = 2
EXIT_NON_HERMITIAN = 3
EXIT_NO_CONVERGENCE = 4
EXIT_RESOURCE = 5
EXIT_BAD_K = 6

BUILTIN_MODELS = ("xy", "ising")


class ModelFileError(Exception):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_complex_matrix(obj, what: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{what}: not a numeric nested array ({exc})") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ModelFileError(f"{what}: expected an n x n array of [re, im] pairs, got shape {arr.shape}")
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def _dump_complex_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def load_model(path: str, beta: float) -> ChainModel:
    """Parse a ModelFile and return the chain at the given inverse temperature."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict) or "d" not in doc:
        raise ModelFileError(f"{path}: missing local dimension field 'd'")
    try:
        d = int(doc["d"])
    except (TypeError, ValueError):
        raise ModelFileError(f"{path}: 'd' must be an integer") from None
    has_h = "h" in doc
    has_blocking = isinstance(doc.get("blocking"), dict)
    if has_h == has_blocking:
        raise ModelFileError(f"{path}: give exactly one of 'h' or 'blocking'")
    if has_h:
        h = _parse_complex_matrix(doc["h"], f"{path}: h")
        if h.shape != (d * d, d * d):
            raise ModelFileError(f"{path}: h has dimension {h.shape[0]}, expected d^2 = {d * d}")
        return ChainModel(d, h, beta=beta)
    spec = doc["blocking"]
    if "cell_size" not in spec or "terms" not in spec:
        raise ModelFileError(f"{path}: blocking needs 'cell_size' and 'terms'")
    terms = [_parse_complex_matrix(t, f"{path}: blocking term {i}") for i, t in enumerate(spec["terms"])]
    try:
        cell = int(spec["cell_size"])
    except (TypeError, ValueError):
        raise ModelFileError(f"{path}: cell_size must be an integer") from None
    try:
        return block_sites(terms, cell, local_dim=d, beta=beta)
    except HermiticityError:
        raise
    except ValueError as exc:
        raise ModelFileError(f"{path}: {exc}") from None


def resolve_model(spec: str, beta: float, gamma: float, coupling: float) -> ChainModel:
    if spec == "xy":
        return xy_model(beta, gamma)
    if spec == "ising":
        return ising_model(coupling, beta)
    return load_model(spec, beta)


def dump_marginal(rho: DensityMatrix, name: str | None = None) -> str:
    doc = {
        "d": rho.local_dim,
        "n_sites": rho.n_sites,
        "matrix": _dump_complex_matrix(rho.matrix),
        "eigenvalues": [float(w) for w in rho.eigenvalues()],
        "trace": float(np.trace(rho.matrix).real),
    }
    if name:
        doc["name"] = name
    return json.dumps(doc, indent=1)


def load_marginal(path: str) -> DensityMatrix:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        m = _parse_complex_matrix(doc["matrix"], f"{path}: matrix")
        return DensityMatrix(m, int(doc["n_sites"]), int(doc["d"]))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"{path}: not a marginal dump ({exc})") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_free_energy(args) -> int:
    model = load_model(args.model, args.beta)
    if args.L is not None:
        window = args.L
    else:
        window = choose_L(args.epsilon, beta=args.beta, local_dim=model.local_dim)
        print(f"chose L = {window} for epsilon = {args.epsilon}", file=sys.stderr)
    est = free_energy(model, window, tol=args.tol, max_iter=args.max_iter)
    if not est.converged:
        print(
            f"solver did not converge at L={window}: residual {est.spectral.residual:.3e}, "
            f"gap {est.spectral.hilbert_gap:.3e}",
            file=sys.stderr,
        )
        return EXIT_NO_CONVERGENCE
    sp = est.spectral
    if args.format == "csv":
        lines = [
            "f,L,beta,residual,iterations,wall_time_s",
            ",".join(
                [_fmt(est.value), str(est.L), _fmt(est.beta), _fmt(sp.residual), str(sp.iterations), _fmt(est.wall_time)]
            ),
        ]
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(
            f"free energy per site: {_fmt(est.value)}\n"
            f"L = {est.L}, beta = {_fmt(est.beta)}\n"
            f"residual = {_fmt(sp.residual)}, iterations = {sp.iterations}\n"
            f"wall time = {est.wall_time:.3f} s\n",
            args.out,
        )
    return EXIT_OK


def cmd_marginal(args) -> int:
    model = load_model(args.model, args.beta)
    if args.k >= args.L:
        print(f"k = {args.k} must be smaller than L = {args.L}", file=sys.stderr)
        return EXIT_BAD_K
    target = two_sided_model(model) if args.two_sided else model
    spec = spectral_radius(
        build_E(rescale_to_unit_beta(target), args.L), tol=args.tol, max_iter=args.max_iter
    )
    if not spec.converged:
        print(f"solver did not converge at L={args.L}: residual {spec.residual:.3e}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    rho = gibbs_marginal(target, args.L, args.k, spectral=spec)
    if args.two_sided:
        rho = unwind_two_sided(rho, model.local_dim)
        label = f"two-sided marginal on {rho.n_sites} sites"
    else:
        label = f"one-sided marginal on {rho.n_sites} sites"
    _emit(dump_marginal(rho, name=label) + "\n", args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    a = load_marginal(args.first)
    b = load_marginal(args.second)
    dist = trace_distance(a.matrix, b.matrix)
    _emit(f"{_fmt(dist)}\n", None)
    if args.tol is not None and dist > args.tol:
        print(f"trace distance {dist:.3e} exceeds tolerance {args.tol:.3e}", file=sys.stderr)
        return 1
    return EXIT_OK


def _sweep_values(raw: str) -> list[float]:
    vals = [float(v) for v in raw.split(",") if v.strip()]
    if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
        raise ModelFileError(f"sweep values must be non-empty and strictly increasing, got {raw!r}")
    return vals


def _oracle_value(args, beta: float, gamma: float) -> float:
    if args.oracle == "xy":
        return xy_exact(beta, gamma)
    if args.oracle == "ising":
        return ising_free_energy(args.J, beta)
    raise ValueError("error_vs_oracle requires a registered oracle (--oracle xy|ising)")


def _sweep_point(args, value: float):
    """One sweep point -> (value, residual). Numerical failures propagate to the caller."""
    beta, gamma, window = args.beta, args.gamma, args.L
    if args.param == "beta":
        beta = value
    elif args.param == "L":
        window = int(value)
    elif args.param == "gamma":
        gamma = value
    model = resolve_model(args.model, beta, gamma, args.J)

    q = args.quantity
    if q in ("free_energy", "error_vs_oracle"):
        est = free_energy(model, window, tol=args.tol)
        if not est.converged:
            return None, est.spectral.residual
        if q == "free_energy":
            return est.value, est.spectral.residual
        per_site = est.value / model.block_factor
        return abs(per_site - _oracle_value(args, beta, gamma)), est.spectral.residual
    if q == "energy":
        p = model.h / model.h_norm if model.h_norm > 0 else model.h
        mu = expectation_by_derivative(model, p, window, tol=min(args.tol, 1e-13))
        return model.h_norm * mu, 0.0
    if q in ("mi", "cmi"):
        recast = two_sided_model(model)
        k = args.k if args.k is not None else window - 1
        rho = unwind_two_sided(gibbs_marginal(recast, window, k, tol=args.tol), model.local_dim)
        dist = int(value)
        n = rho.n_sites
        a = (n - 1 - dist) // 2 + 1
        b = a + dist
        if not (1 <= a < b <= n):
            raise ValueError(f"distance {dist} does not fit in the {n}-site marginal")
        if q == "mi":
            return mutual_information(rho.keep([a, b]), 1), 0.0
        return conditional_mutual_information(rho, [a], [b]), 0.0
    raise ValueError(f"unknown quantity {q!r}")


def cmd_sweep(args) -> int:
    values = _sweep_values(args.values)
    if args.quantity in ("mi", "cmi") and args.param != "distance":
        print("mi/cmi sweeps use --param distance", file=sys.stderr)
        return EXIT_BAD_FILE
    if args.param == "gamma" and args.model != "xy":
        print("gamma sweeps use the builtin xy family (model = xy)", file=sys.stderr)
        return EXIT_BAD_FILE
    if args.model not in BUILTIN_MODELS:
        load_model(args.model, args.beta)  # validate the file once; abort before sweeping

    def run(value):
        t0 = time.perf_counter()
        try:
            val, resid = _sweep_point(args, value)
        except Exception:  # per-point failure: flagged row, sweep continues
            return None, math.inf, time.perf_counter() - t0
        return val, resid if val is not None else math.inf, time.perf_counter() - t0

    if args.threads > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(run, values))
    else:
        results = [run(v) for v in values]

    lines = ["param,value,quantity,diagnostic_residual,wall_time_s"]
    for v, (val, resid, wall) in zip(values, results):
        val_txt = "" if val is None else _fmt(val)
        lines.append(",".join([_fmt(v), val_txt, args.quantity, _fmt(resid), _fmt(wall)]))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.which == "ising":
        val = ising_free_energy(args.J, args.beta)
        _emit(f"model,beta,quantity,value\nising,{_fmt(args.beta)},f,{_fmt(val)}\n", args.out)
        return EXIT_OK
    if args.marginal is not None:
        L, m = args.marginal
        rho = gibbs_marginal_bruteforce(xy_model(args.beta, args.gamma), L, m)
        _emit(dump_marginal(rho, name=f"bruteforce rho_({L},{m})") + "\n", args.out)
        return EXIT_OK
    val = xy_exact(args.beta, args.gamma)
    _emit(f"model,beta,gamma,quantity,value\nxy,{_fmt(args.beta)},{_fmt(args.gamma)},beta_f,{_fmt(val)}\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transferkit",
        description="Free energy and Gibbs marginals of infinite translation-invariant 1D quantum chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fe = sub.add_parser("free-energy", help="free energy per site via the transfer map")
    fe.add_argument("model", help="model file (JSON)")
    fe.add_argument("--beta", type=float, required=True)
    group = fe.add_mutually_exclusive_group(required=True)
    group.add_argument("--L", type=int, default=None, help="window size")
    group.add_argument("--epsilon", type=float, default=None, help="target error; picks L automatically")
    fe.add_argument("--tol", type=float, default=1e-12)
    fe.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    fe.add_argument("--format", choices=("table", "csv"), default="table")
    fe.add_argument("--out", default=None)
    fe.set_defaults(func=cmd_free_energy)

    mg = sub.add_parser("marginal", help="Gibbs-state marginal from the leading eigenvector")
    mg.add_argument("model")
    mg.add_argument("--beta", type=float, required=True)
    mg.add_argument("--L", type=int, required=True)
    mg.add_argument("--k", type=int, required=True, help="sites kept (recast sites if --two-sided)")
    mg.add_argument("--two-sided", action="store_true", dest="two_sided")
    mg.add_argument("--tol", type=float, default=1e-12)
    mg.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    mg.add_argument("--out", default=None)
    mg.set_defaults(func=cmd_marginal)

    cp = sub.add_parser("compare", help="trace distance between two marginal dumps")
    cp.add_argument("first")
    cp.add_argument("second")
    cp.add_argument("--tol", type=float, default=None)
    cp.set_defaults(func=cmd_compare)

    sw = sub.add_parser("sweep", help="CSV sweep over beta, L, gamma or distance")
    sw.add_argument("model", help="model file, or builtin family name (xy, ising)")
    sw.add_argument("--param", choices=("beta", "L", "gamma", "distance"), required=True)
    sw.add_argument("--values", required=True, help="comma-separated, strictly increasing")
    sw.add_argument(
        "--quantity", choices=("free_energy", "energy", "mi", "cmi", "error_vs_oracle"), required=True
    )
    sw.add_argument("--beta", type=float, default=1.0)
    sw.add_argument("--gamma", type=float, default=1.0)
    sw.add_argument("--J", type=float, default=1.0)
    sw.add_argument("--L", type=int, default=6)
    sw.add_argument("--k", type=int, default=None)
    sw.add_argument("--tol", type=float, default=1e-12)
    sw.add_argument("--oracle", choices=("xy", "ising"), default=None)
    sw.add_argument("--threads", type=int,
                    default=max(1, psutil.cpu_count(logical=False) or os.cpu_count() or 1),
                    help="sweep-point parallelism cap (default: physical cores)")
    sw.add_argument("--out", default=None)
    sw.set_defaults(func=cmd_sweep)

    orc = sub.add_parser("oracle", help="reference values from the exact solutions")
    orc.add_argument("which", choices=("xy", "ising"))
    orc.add_argument("--beta", type=float, required=True)
    orc.add_argument("--gamma", type=float, default=1.0)
    orc.add_argument("--J", type=float, default=1.0)
    orc.add_argument("--marginal", type=int, nargs=2, metavar=("L", "M"), default=None,
                     help="emit the brute-force marginal rho_(L,M) instead of a value")
    orc.add_argument("--out", default=None)
    orc.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelFileError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BAD_FILE
    except HermiticityError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NON_HERMITIAN
    except ResourceBudgetError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RESOURCE
    except NumericalBreakdownError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BAD_FILE


if __name__ == "__main__":
    sys.exit(main())
