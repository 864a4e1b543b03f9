"""Command-line surface for the sampling library and evaluation harness.

Subcommands: sample, tv, gibbs-kdpp, mixture, coverage, diagnose.  Every
subcommand is deterministic under --seed, writes delimited output plus a
JSON sidecar with full provenance, and optionally renders a figure next
to the output when --plot is given.  Exit codes: 1 configuration error,
2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import subprocess
import sys
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import diagnostics, reporting, synthetic
from .dual_sampler import (
    build_map,
    phase1_kdpp,
    phase2_sample,
    sample_dpp_from_dual,
    write_sample_sets,
)
from .errors import ConfigError, ContDppError, DomainError, NumericError
from .exact_reference import estimate_tv, write_tv_rows
from .feature_maps import dual_representation, map_to_dict
from .kernels import KernelSpec, QualitySpec, SimilaritySpec, kernel_from_dict
from .mixture_model import (
    MixtureModelSpec,
    compute_metrics,
    run_mog,
    standardize,
    write_mixture_chain,
)
from .numerics import RngStream
from .schur_gibbs import run_chains


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with the config code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _git_describe():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    try:
        return f"contdpp {version('contdpp')}"
    except PackageNotFoundError:
        return "contdpp (unversioned)"


def _provenance(args):
    config = {k: v for k, v in vars(args).items() if k != "func"}
    return {"provenance": _git_describe(), "config": config, "seed": args.seed}


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _load_kernel(path):
    with open(path) as fh:
        return kernel_from_dict(json.load(fh))


# --- sample ------------------------------------------------------------------

def _cmd_sample(args):
    kernel = _load_kernel(args.kernel)
    rng = RngStream(args.seed)
    dmap = build_map(kernel, args.method, args.rank, rng)
    dual = dual_representation(dmap)
    sets = []
    for _ in range(args.n_sets):
        if args.k is None:
            sets.append(sample_dpp_from_dual(dual, rng))
        else:
            vectors = phase1_kdpp(dual, args.k, rng)
            sets.append(phase2_sample(dual, vectors, rng))
    sidecar = _provenance(args)
    sidecar["map"] = map_to_dict(dmap)
    write_sample_sets(args.out, sets, kernel.dim, sidecar=sidecar)
    if args.plot:
        reporting.plot_sample_sets(args.out + ".png", sets)
    return 0


# --- tv ----------------------------------------------------------------------

def _tv_job(job):
    kernel, method, rank, k, n_samples, seed, stream = job
    return estimate_tv(kernel, method, rank, k, n_samples, RngStream(seed, stream))


def _cmd_tv(args):
    from dataclasses import replace as dc_replace
    import multiprocessing

    jobs = []
    stream = 0
    for sigma2 in args.sigma2:
        kernel = KernelSpec(
            quality=QualitySpec(center=np.zeros(args.d),
                                cov=np.full(args.d, args.rho2)),
            similarity=SimilaritySpec(cov=np.full(args.d, sigma2)),
            dim=args.d,
        )
        for method in args.methods:
            for _ in range(args.replicates):
                jobs.append((kernel, method, args.rank, args.k,
                             args.n_samples, args.seed, stream))
                stream += 1
    if args.threads > 1:
        with multiprocessing.Pool(args.threads) as pool:
            results = pool.map(_tv_job, jobs)
    else:
        results = [_tv_job(job) for job in jobs]
    # aggregate replicates of each (sigma2, method) into one row
    rows = []
    by_key = {}
    for est in results:
        key = (est.config["sigma2"], est.config["method"])
        by_key.setdefault(key, []).append(est)
    for key in sorted(by_key):
        group = by_key[key]
        means = np.array([e.mean for e in group])
        if len(group) > 1:
            stderr = float(means.std(ddof=1) / np.sqrt(len(group)))
        else:
            stderr = group[0].std_error
        rows.append(dc_replace(
            group[0],
            mean=float(means.mean()),
            std_error=stderr,
            n_samples=sum(e.n_samples for e in group),
        ))
    write_tv_rows(args.out, rows)
    _write_json(args.out + ".json", _provenance(args))
    if args.plot:
        reporting.plot_tv_sweep(args.out + ".png", rows)
    return 0


# --- gibbs-kdpp --------------------------------------------------------------

def _cmd_gibbs(args):
    kernel = _load_kernel(args.kernel)
    chains = run_chains(
        kernel, args.k, args.chains, args.n_cycles, args.burn_in, args.thin,
        args.seed, processes=args.threads,
    )
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["chain", "cycle", "point_index"]
                        + [f"x{l + 1}" for l in range(kernel.dim)])
        for chain_id, chain in enumerate(chains):
            for cycle, points in enumerate(chain):
                for idx, point in enumerate(points):
                    writer.writerow([chain_id, cycle, idx]
                                    + [repr(float(c)) for c in point])
    _write_json(args.out + ".json", _provenance(args))
    if args.plot and len(chains) and len(chains[0]):
        reporting.plot_chain_trace(args.out + ".png", chains[0])
    return 0


# --- mixture -----------------------------------------------------------------

def _cmd_mixture(args):
    rng = RngStream(args.seed)
    labels = None
    if args.data is not None:
        raw = np.loadtxt(args.data, delimiter=",", skiprows=1, ndmin=1)
        data = np.asarray(raw, dtype=float).ravel()
    else:
        data, labels = synthetic.make_synthetic(args.synthetic, args.n, rng)
    data, _, _ = standardize(data)
    heldout = None
    if args.heldout_fraction > 0:
        n_held = max(1, int(round(args.heldout_fraction * len(data))))
        perm = rng.permutation(len(data))
        heldout = data[perm[:n_held]]
        keep = perm[n_held:]
        data = data[keep]
        if labels is not None:
            labels = labels[keep]
    spec = MixtureModelSpec(
        n_components=args.components, prior_kind=args.prior,
        gamma0sq=args.gamma0sq,
    )
    chain = run_mog(data, spec, args.n_iter, args.burn_in, args.thin, rng)
    metrics = compute_metrics(chain, data, true_labels=labels, heldout=heldout)
    write_mixture_chain(args.out, chain, metrics=metrics, sidecar=_provenance(args))
    if args.plot:
        reporting.plot_mixture_fit(args.out + ".png", data, chain)
    return 0


# --- coverage ----------------------------------------------------------------

def _cmd_coverage(args):
    rng = RngStream(args.seed)
    points, _ = synthetic.make_synthetic(args.synthetic, args.n, rng)
    points = np.atleast_2d(points)
    d = points.shape[1]
    kernel = KernelSpec(
        quality=QualitySpec(center=points.mean(axis=0),
                            cov=points.var(axis=0, ddof=1)),
        similarity=SimilaritySpec(cov=np.full(d, args.sigma2)),
        dim=d,
    )
    dual = dual_representation(build_map(kernel, args.method, args.rank, rng))
    vectors = phase1_kdpp(dual, args.k, rng)
    dpp_sample = phase2_sample(dual, vectors, rng)
    eps, curve_dpp, curve_iid = diagnostics.coverage_experiment(
        points, dpp_sample, rng
    )
    diagnostics.write_coverage_csv(args.out, eps, curve_dpp, curve_iid)
    _write_json(args.out + ".json", _provenance(args))
    if args.plot:
        reporting.plot_coverage_curves(args.out + ".png", eps, curve_dpp, curve_iid)
    return 0


# --- diagnose ----------------------------------------------------------------

def read_chain_csv(path):
    """Chains from a gibbs-kdpp CSV; returns {chain_id: (T, k, d) array}."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = len(header) - 3
        rows = [(int(r[0]), int(r[1]), int(r[2]),
                 [float(c) for c in r[3:]]) for r in reader]
    chains = {}
    for chain_id, cycle, idx, coords in rows:
        chains.setdefault(chain_id, {}).setdefault(cycle, {})[idx] = coords
    out = {}
    for chain_id, cycles in chains.items():
        n_cycles = max(cycles) + 1
        k = max(cycles[0]) + 1
        arr = np.empty((n_cycles, k, d))
        for cycle, pts in cycles.items():
            for idx, coords in pts.items():
                arr[cycle, idx] = coords
        out[chain_id] = arr
    return out


def _cmd_diagnose(args):
    chains = read_chain_csv(args.chain)
    per_chain = {}
    for chain_id, arr in sorted(chains.items()):
        per_chain[str(chain_id)] = {
            "m": diagnostics.average_movement(arr),
            "alpha": diagnostics.ess_alpha(arr, truncation=args.truncation),
        }
    payload = _provenance(args)
    payload["chains"] = per_chain
    payload["mean_m"] = float(np.mean([v["m"] for v in per_chain.values()]))
    payload["mean_alpha"] = float(
        np.mean([v["alpha"] for v in per_chain.values()])
    )
    _write_json(args.out, payload)
    return 0


# --- parser ------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True)
    sub.add_argument("--plot", action="store_true",
                     help="render a PNG figure next to the output")


def build_parser():
    parser = _Parser(prog="contdpp",
                     description="continuous DPP sampling and evaluation")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("sample", parents=[], help="draw DPP / k-DPP samples")
    p.add_argument("--kernel", required=True, help="kernel spec JSON path")
    p.add_argument("--method", choices=["rff", "nystrom"], required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n-sets", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_sample)

    p = subs.add_parser("tv", help="total-variation sweep")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--rho2", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, nargs="+", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--rank", type=int, default=50)
    p.add_argument("--methods", nargs="+", choices=["rff", "nystrom"],
                   default=["rff", "nystrom"])
    p.add_argument("--n-samples", type=int, default=200)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_tv)

    p = subs.add_parser("gibbs-kdpp", help="Schur-complement Gibbs chains")
    p.add_argument("--kernel", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n-cycles", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_gibbs)

    p = subs.add_parser("mixture", help="repulsive Gaussian mixture sampler")
    p.add_argument("--prior", choices=["iid", "dpp"], required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--data", help="single-column CSV with header 'y'")
    group.add_argument("--synthetic", choices=["poor-sep", "well-sep"])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--components", type=int, default=6)
    p.add_argument("--gamma0sq", type=float, default=1.0)
    p.add_argument("--n-iter", type=int, default=10000)
    p.add_argument("--burn-in", type=int, default=5000)
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--heldout-fraction", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=_cmd_mixture)

    p = subs.add_parser("coverage", help="coverage-rate experiment")
    p.add_argument("--synthetic", choices=["rare-mode"], default="rare-mode")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--rank", type=int, default=60)
    p.add_argument("--method", choices=["rff", "nystrom"], default="rff")
    p.add_argument("--sigma2", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=_cmd_coverage)

    p = subs.add_parser("diagnose", help="mixing diagnostics for a chain CSV")
    p.add_argument("--chain", required=True, help="gibbs-kdpp output CSV")
    p.add_argument("--truncation", choices=["displayed", "geyer"],
                   default="displayed")
    _add_common(p)
    p.set_defaults(func=_cmd_diagnose)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ContDppError as exc:  # safety net for future error kinds
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
