"""Command-line front end.

Subcommands (one verb per library capability):

  gen      sample a dataset from a distribution config     -> dataset CSV
  interp   build the bump interpolant of a dataset         -> interpolant CSV
  norm     exact W^{k,p} norm of a stored interpolant
  check    structural battery: packing, in-degree, interpolation, norm bound
  risk     excess-risk estimates for a dataset's bump interpolant
  sweep    run a config-driven experiment sweep            -> CSV + summary
  moduli   build and cache the reference-moduli table

Exit codes: 0 success, 1 at least one contract failed, 2 invalid usage or
config.  Commands that sample require an explicit --seed; reruns with the
same seed and config are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import experiments, geometry, interpolant, model, risk
from .bump import load_moduli, reference_moduli, save_moduli
from .errors import SobolabError

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_USAGE = 2


def _seed_type(raw):
    value = int(raw)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _add_common(sub, seed=False, out=False, fmt=False):
    sub.add_argument("--config", required=True, metavar="PATH",
                     help="config file (sections [params], [distribution], [sweep])")
    if seed:
        sub.add_argument("--seed", required=True, type=_seed_type, metavar="U64",
                         help="master seed; required for commands that sample")
    if out:
        sub.add_argument("--out", required=True, metavar="DIR",
                         help="output directory (created if absent)")
    sub.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                     metavar="N", help="worker threads (results independent of N)")
    if fmt:
        sub.add_argument("--format", choices=("csv", "json-lines"),
                         default="csv", help="row output format")


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_moduli_or_build(args, params):
    cache = getattr(args, "moduli", None)
    if cache:
        moduli = load_moduli(cache)
        if moduli.params != params:
            raise SobolabError(
                f"moduli cache {cache} built for {moduli.params}, config says {params}"
            )
        return moduli
    return reference_moduli(params)


def cmd_gen(args):
    params, spec = config_mod.load_distribution(args.config)
    ds = model.sample(spec, args.n, args.seed)
    out = _outdir(args) / f"dataset_n{args.n}_seed{args.seed}.csv"
    geometry.save_dataset(ds, out)
    print(f"wrote {ds.n} points in d={params.d} to {out}")
    return EXIT_OK


def cmd_interp(args):
    params, _ = config_mod.load_distribution(args.config)
    ds = geometry.load_dataset(args.data)
    radii = geometry.nn_radii(ds)
    f = interpolant.build(ds, radii, args.shrink, params)
    out = _outdir(args) / f"interpolant_shrink{args.shrink!r}.csv"
    interpolant.save_interpolant(f, out)
    print(f"wrote {f.n}-bump interpolant (shrink={args.shrink}) to {out}")
    return EXIT_OK


def cmd_norm(args):
    f = interpolant.load_interpolant(args.interp)
    moduli = _load_moduli_or_build(args, f.params)
    norm = interpolant.sobolev_norm(f, moduli)
    print(f"W^{{{f.params.k},{f.params.p}}} norm: {norm!r}")
    return EXIT_OK


def cmd_check(args):
    params, _ = config_mod.load_distribution(args.config)
    ds = geometry.load_dataset(args.data)
    if ds.dim != params.d:
        raise SobolabError(f"dataset d={ds.dim} but config says d={params.d}")
    radii = geometry.nn_radii(ds)
    failures = 0

    packing = geometry.check_packing(ds, radii)
    print(f"packing: {len(packing)} violations")
    failures += len(packing)

    tau = geometry.kissing_number(ds.dim)
    degrees = geometry.in_degrees(geometry.nn_graph(ds))
    worst = int(degrees.max())
    print(f"in-degree: max {worst} (bound {tau})")
    failures += int(worst > tau)

    moduli = _load_moduli_or_build(args, params)
    f = interpolant.build(ds, radii, 1.0, params)
    resid = float(np.max(np.abs(interpolant.evaluate(f, ds.points) - ds.labels)))
    print(f"interpolation: max residual {resid:.3e} "
          f"(tolerance {interpolant.INTERPOLATION_TOL:g})")
    failures += int(resid > interpolant.INTERPOLATION_TOL)

    norm_p = interpolant.sobolev_norm(f, moduli) ** params.p
    bound = interpolant.min_norm_upper_bound(ds, radii, moduli)
    print(f"norm bound: norm^p = {norm_p:.6g} <= {bound:.6g}")
    failures += int(norm_p > bound)

    print("all checks passed" if failures == 0 else f"{failures} check(s) failed")
    return EXIT_OK if failures == 0 else EXIT_CONTRACT


def cmd_risk(args):
    params, spec = config_mod.load_distribution(args.config)
    ds = geometry.load_dataset(args.data)
    radii = geometry.nn_radii(ds)
    f = interpolant.build(ds, radii, args.shrink, params)
    mc = risk.excess_risk_mc(f, spec, args.mc_samples, args.seed,
                             threads=args.threads)
    print(f"excess risk (monte-carlo): {mc.mean!r} +- {mc.stderr!r} "
          f"[{mc.samples} samples]")
    try:
        sa = risk.excess_risk_semianalytic(f, spec)
        agree = "agrees" if mc.within(sa.mean) else "DISAGREES"
        print(f"excess risk (semi-analytic): {sa.mean!r} ({agree} within 3 stderr)")
    except SobolabError:
        pass
    bayes = risk.bayes_risk_mc(spec, args.mc_samples, args.seed,
                               threads=args.threads)
    print(f"bayes risk (monte-carlo): {bayes.mean!r} +- {bayes.stderr!r}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = config_mod.load_sweep(args.config, seed_override=args.seed)
    result = experiments.run(cfg, _outdir(args), fmt=args.format,
                             threads=args.threads)
    for contract in result.contracts:
        status = "pass" if contract.passed else "FAIL"
        print(f"[{status}] {contract.name}: observed {contract.observed!r} "
              f"(target {contract.target})")
    print(f"summary written to {Path(args.out) / (cfg.config_id + '_summary.json')}")
    return EXIT_OK if result.all_passed else EXIT_CONTRACT


def cmd_moduli(args):
    params, _ = config_mod.load_distribution(args.config)
    moduli = reference_moduli(params)
    out = _outdir(args) / f"moduli_k{params.k}_p{params.p!r}_d{params.d}.txt"
    save_moduli(moduli, out)
    print(f"wrote {len(moduli.table)} moduli to {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sobolab",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", help="sample a dataset")
    _add_common(s, seed=True, out=True)
    s.add_argument("-n", type=int, required=True, help="sample size (>= 2)")
    s.set_defaults(handler=cmd_gen)

    s = sub.add_parser("interp", help="build a bump interpolant")
    _add_common(s, out=True)
    s.add_argument("--data", required=True, metavar="CSV", help="dataset file")
    s.add_argument("--shrink", type=float, default=1.0)
    s.set_defaults(handler=cmd_interp)

    s = sub.add_parser("norm", help="exact Sobolev norm of an interpolant")
    _add_common(s)
    s.add_argument("--interp", required=True, metavar="CSV",
                   help="interpolant file")
    s.add_argument("--moduli", metavar="PATH", help="moduli cache to reuse")
    s.set_defaults(handler=cmd_norm)

    s = sub.add_parser("check", help="structural invariant battery")
    _add_common(s)
    s.add_argument("--data", required=True, metavar="CSV", help="dataset file")
    s.add_argument("--moduli", metavar="PATH", help="moduli cache to reuse")
    s.set_defaults(handler=cmd_check)

    s = sub.add_parser("risk", help="excess-risk estimates")
    _add_common(s, seed=True)
    s.add_argument("--data", required=True, metavar="CSV", help="dataset file")
    s.add_argument("--shrink", type=float, default=1.0)
    s.add_argument("--mc-samples", type=int, default=200_000)
    s.set_defaults(handler=cmd_risk)

    s = sub.add_parser("sweep", help="run a config-driven sweep")
    _add_common(s, seed=True, out=True, fmt=True)
    s.set_defaults(handler=cmd_sweep)

    s = sub.add_parser("moduli", help="build the reference-moduli cache")
    _add_common(s, out=True)
    s.set_defaults(handler=cmd_moduli)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize others
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        return args.handler(args)
    except SobolabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
