"""Command line entry point.

Exit codes: 0 success, 2 invalid configuration, 3 numeric backend failure,
4 brute-force budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BackendFailure, BudgetExceeded, DependentWignerError, InvalidSpec
from .experiments import (
    ExperimentConfig,
    content_hash,
    load_cumulant_spec,
    output_dir,
    reference_alpha,
    run_condition_check,
    run_convergence,
    run_flow,
    write_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_BACKEND, EXIT_BUDGET = 0, 2, 3, 4


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from exc


def _pair(text: str) -> tuple[int, int]:
    vals = _int_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected two integers 'v,e'")
    return vals[0], vals[1]


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise InvalidSpec("--config is required")
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    if args.bins is not None:
        cfg.bins = args.bins
    return cfg


def cmd_sample(args) -> int:
    from .ensembles import sample_batch, write_matrix

    cfg = _load_config(args)
    out = output_dir(cfg.output_dir)
    grid = args.N or cfg.N_grid
    for N in grid:
        mats = sample_batch(cfg.ensemble, N, args.count or cfg.samples_per_N, cfg.seed, args.workers)
        for i, M in enumerate(mats):
            write_matrix(out / f"matrix_N{N}_{i:04d}.bin", M)
        print(f"N={N}: wrote {len(mats)} matrices to {out}")
    return EXIT_OK


def _read_inputs(paths):
    from .ensembles import read_matrix

    if not paths:
        raise InvalidSpec("no --input matrices given")
    mats = [read_matrix(p) for p in paths]
    sizes = {m.shape[0] for m in mats}
    if len(sizes) != 1:
        raise InvalidSpec(f"input matrices have different sizes {sorted(sizes)}")
    return mats


def cmd_spectrum(args) -> int:
    from .spectral import histogram_table, spectral_sample

    mats = _read_inputs(args.input)
    sample = spectral_sample(mats, [2])
    h = content_hash({"inputs": sorted(str(p) for p in args.input), "bins": args.bins, "alpha": args.alpha})
    out = output_dir(args.out or ".")
    rows = [(b, i, float(x)) for b, lam in enumerate(sample.eigenvalue_batches) for i, x in enumerate(lam)]
    write_csv(out / "eigenvalues.csv", ["matrix", "index", "eigenvalue"], rows, h)
    write_csv(out / "spectrum_histogram.csv",
              ["bin_left", "bin_right", "count", "empirical_density", "semicircle_density"],
              histogram_table(sample, args.alpha, args.bins or 61), h)
    print(f"wrote spectrum of {len(mats)} matrices (N={sample.N}) to {out}")
    return EXIT_OK


def cmd_moments(args) -> int:
    from .spectral import moment_table, spectral_sample

    ks = args.k or [2, 4, 6]
    if args.input:
        mats = _read_inputs(args.input)
        alpha = args.alpha
        h = content_hash({"inputs": sorted(str(p) for p in args.input), "k": ks})
        batches = {mats[0].shape[0]: mats}
        out = output_dir(args.out or ".")
    else:
        from .ensembles import sample_batch

        cfg = _load_config(args)
        alpha = reference_alpha(cfg.ensemble)
        h = cfg.config_hash()
        batches = {N: sample_batch(cfg.ensemble, N, cfg.samples_per_N, cfg.seed, args.workers)
                   for N in cfg.N_grid}
        out = output_dir(cfg.output_dir)
    rows = []
    for N, mats in batches.items():
        for row in moment_table(spectral_sample(mats, ks), alpha):
            rows.append((N,) + row)
    write_csv(out / "moments.csv", ["N", "k", "estimate", "stderr", "semicircle", "z_score"], rows, h)
    for row in rows:
        print("N={} k={} estimate={:.6g} stderr={:.3g} semicircle={:.6g} z={:.3g}".format(*row))
    return EXIT_OK


def cmd_check_cumulants(args) -> int:
    spec = load_cumulant_spec(args.spec)
    v, e = args.limits
    report = run_condition_check(spec, v, e, args.N, args.out or ".")
    failed = report.failures()
    print(f"{len(report.records)} graphs checked, {len(failed)} violate the scaling conditions")
    for r in failed:
        print(f"  {r.classification} {r.graph.edges} slope {r.slope:.3f} ({r.verdict})")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import DEFAULT_BUDGET, asymptotic_trend, exact_trace_moment

    spec = load_cumulant_spec(args.spec)
    grid = sorted(args.N)
    budget = args.budget or DEFAULT_BUDGET
    for N in grid:
        for k in args.k:
            if N**k > budget:
                raise BudgetExceeded(f"N={N}, k={k}: N^k exceeds the budget {budget}")
    rows = []
    for k in args.k:
        if len(grid) > 1:
            limit, values = asymptotic_trend(spec, k, grid, budget=budget, workers=args.workers)
        else:
            values = {grid[0]: exact_trace_moment(spec, grid[0], k, budget=budget)}
            limit = ""
        for N in grid:
            rows.append((N, k, values[N], limit))
    h = content_hash({"spec": spec.to_dict(), "N": grid, "k": args.k})
    path = write_csv(output_dir(args.out or ".") / "oracle.csv", ["N", "k", "exact", "extrapolated"], rows, h)
    print(path.read_text(), end="")
    return EXIT_OK


def cmd_flow(args) -> int:
    spec = load_cumulant_spec(args.spec)
    series, report = run_flow(spec, args.orders, args.truncation, args.out or ".")
    for p, c in series:
        print(f"1/z^{p}: {c}")
    print(f"bound propagation: hypotheses_hold={report.hypotheses_hold} passed={report.passed}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = _load_config(args)
    summary = run_convergence(cfg, args.workers)
    for N, entry in summary["results"].items():
        zs = " ".join(f"k={k}:z={m['z_score']:.2f}" for k, m in entry["moments"].items())
        print(f"N={N} KS={entry['ks_distance']:.4f} {zs}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dependent-wigner", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--bins", type=int)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="draw matrices and write them as binary files")
    p.add_argument("--N", type=_int_list, help="sizes (default: config N_grid)")
    p.add_argument("--count", type=int)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues and histogram of stored matrices")
    p.add_argument("--input", nargs="+", type=Path)
    p.add_argument("--alpha", type=float, default=1.0)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("moments", parents=[common], help="trace moments vs the semicircle")
    p.add_argument("--input", nargs="+", type=Path)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--k", type=_int_list)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("check-cumulants", parents=[common], help="graph-by-graph scaling conditions")
    p.add_argument("--spec", required=True)
    p.add_argument("--limits", type=_pair, default=(4, 4), help="max vertices,max edges")
    p.add_argument("--N", type=_int_list, default=[8, 16, 32, 64, 128, 256])
    p.set_defaults(func=cmd_check_cumulants)

    p = sub.add_parser("oracle", parents=[common], help="exact finite-N trace moments")
    p.add_argument("--spec", required=True)
    p.add_argument("--N", type=_int_list, required=True)
    p.add_argument("--k", type=_int_list, required=True)
    p.add_argument("--budget", type=int)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("flow", parents=[common], help="Green-function series from the replica flow")
    p.add_argument("--spec", required=True)
    p.add_argument("--orders", type=int, default=9, help="highest power of 1/z")
    p.add_argument("--truncation", type=_pair, help="max vertices,max edges")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("convergence", parents=[common], help="full sample/spectrum/moment pipeline")
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (BackendFailure, np.linalg.LinAlgError) as exc:
        print(f"numeric backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (InvalidSpec, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DependentWignerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
