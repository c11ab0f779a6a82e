"""Command-line front end.

Exit codes: 0 success, 1 runtime failure or violated tolerance, 2 usage
error or malformed input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _accel, analytic, estimation, generators, records
from .goldenring import TAU, GoldenRational

log = logging.getLogger("quasidiff")

SYSTEMS = ("crystal", "fibonacci", "tm", "rs", "bernoulli", "rs-bernoulli", "random-fibonacci")
ANALYTIC = ("fibonacci", "crystal", "tm-distribution", "tm-riesz", "rs", "random-fibonacci")
ESTIMATES = ("periodogram", "ensemble", "autocorrelation", "scaling")


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# argument helpers


def _basis(text):
    rows = [[float(v) for v in r.split(",")] for r in text.split(";")]
    return np.array(rows)


def _motif_entry(text):
    pos, _, wgt = text.partition(":")
    return tuple(float(v) for v in pos.split(",")), complex(wgt.replace(" ", "") or "1")


def _crystal_spec(args):
    basis = _basis(args.basis) if args.basis else np.eye(2)
    if args.motif:
        motif = tuple(_motif_entry(m) for m in args.motif)
    elif basis.shape[0] == 2:
        motif = (((0.0, 0.0), 1.0), ((0.5, 0.5), 1.0))
    else:
        motif = (((0.0,) * basis.shape[0], 1.0),)
    return generators.CrystalSpec(basis, motif)


def _cps(args):
    lo, hi = args.window if args.window else ("-1", "-1+1*tau")
    return generators.CPSSpec(GoldenRational.coerce(lo), GoldenRational.coerce(hi))


def _grid(args, default_min=0.0, default_max=1.0, default_n=1001):
    kmin = default_min if args.kmin is None else args.kmin
    kmax = default_max if args.kmax is None else args.kmax
    n = default_n if args.grid is None else args.grid
    if not kmin < kmax:
        raise UsageError("need kmin < kmax")
    if n < 2:
        raise UsageError("grid needs at least 2 points")
    return np.linspace(kmin, kmax, n)


def _points(args):
    if args.at:
        return np.unique(np.asarray(args.at, dtype=np.float64))
    return _grid(args)


def _random_spec(args, default_p=0.5):
    p = default_p if args.p is None else args.p
    count = args.count if args.count is not None else args.n
    return generators.RandomSpec(args.seed, p, count)


# --------------------------------------------------------------------------
# commands


def cmd_generate(args, out: Path):
    system = args.system
    if system == "crystal":
        if args.radius is None:
            raise UsageError("crystal needs --radius")
        comb = generators.gen_crystal_patch(_crystal_spec(args), args.radius)
    elif system == "fibonacci":
        if not args.range:
            raise UsageError("fibonacci needs --range LO HI")
        comb = generators.gen_fibonacci_model_set(_cps(args), tuple(args.range))
    elif system == "tm":
        if args.n is None:
            raise UsageError("tm needs --n")
        comb = generators.gen_thue_morse(args.n)
    elif system == "rs":
        rng = _int_range(args)
        comb = generators.gen_rudin_shapiro(rng)
    elif system in ("bernoulli", "rs-bernoulli"):
        spec = _random_spec(args)
        rng = _int_range(args) if args.range else None
        gen = generators.gen_bernoulli if system == "bernoulli" else generators.gen_rs_bernoulli
        comb = gen(spec, rng)
    else:
        spec = _random_spec(args, default_p=1 / TAU)
        comb = generators.gen_random_fibonacci_tiling(spec)
    name = args.name or system
    csv_path = records.write_comb(out / f"{name}.csv", comb)
    return [csv_path], {"comb": records.comb_info(comb)}


def _int_range(args):
    if args.range:
        try:
            return int(args.range[0]), int(args.range[1])
        except ValueError as exc:
            raise UsageError("integer range expected") from exc
    if args.n is not None:
        return 0, args.n
    raise UsageError("need --range START STOP or --n")


def cmd_analytic(args, out: Path):
    system = args.system
    name = args.name or system
    extra = {}
    if system == "fibonacci":
        cps = _cps(args)
        kmax = 20.0 if args.kmax is None else args.kmax
        kmin = 0.0 if args.kmin is None else args.kmin
        if args.threshold is not None:
            thr = args.threshold
        else:
            thr = args.threshold_frac * cps.density**2
        spec = analytic.model_set_spectrum(cps, max(abs(kmin), abs(kmax)), thr)
        keep = (spec.pp_k >= kmin) & (spec.pp_k <= kmax)
        spec = analytic.SpectralMeasure(pp_k=spec.pp_k[keep], pp_intensity=spec.pp_intensity[keep])
        paths = [records.write_pp(out / f"{name}.csv", spec)]
        extra = {"formula": "model-set intensity (dens/volW)^2 |1_W^(-k*)|^2", "threshold": thr,
                 "peaks": int(keep.sum())}
    elif system == "crystal":
        kmax = 5.0 if args.kmax is None else args.kmax
        spec = analytic.crystal_diffraction(_crystal_spec(args), kmax)
        paths = [records.write_pp(out / f"{name}.csv", spec)]
        extra = {"formula": "dens^2 |mu^(k)|^2 on the dual lattice", "peaks": len(spec.pp_k)}
    elif system == "tm-distribution":
        dist = analytic.tm_distribution(args.N, args.gridsize, args.M, tol=args.tol)
        paths = [records.write_sc(out / f"{name}.csv", dist),
                 records.write_curve(out / f"{name}-fourier.csv", ["k", "F"], [dist.grid, dist.alt_values])]
        extra = {"formula": "Riesz product distribution function", "truncation": dist.meta,
                 "discrepancy": dist.discrepancy, "strictly_increasing": dist.strictly_increasing,
                 "min_cell_mass": float(dist.increments.min())}
    elif system == "tm-riesz":
        grid = _grid(args)
        dens = analytic.tm_riesz_partial(grid, args.N)
        paths = [records.write_ac(out / f"{name}.csv", grid, dens)]
        extra = {"formula": "partial Riesz product", "N": args.N}
    elif system == "rs":
        grid = _grid(args)
        spec = analytic.rs_diffraction(grid)
        paths = [records.write_ac(out / f"{name}.csv", spec.ac_k, spec.ac_density)]
        extra = {"formula": "Lebesgue measure"}
    else:
        grid = _grid(args, 0.0, 20.0, 4001)
        spec = analytic.random_fibonacci_spectrum(grid)
        paths = [records.write_ac(out / f"{name}.csv", spec.ac_k, spec.ac_density),
                 records.write_pp(out / f"{name}-bragg.csv", spec)]
        extra = {"formula": "random Fibonacci tiling density h(k) plus Bragg peak at 0"}
    return paths, extra


def cmd_estimate(args, out: Path):
    kind = args.kind
    name = args.name or kind
    if kind == "periodogram":
        if not args.comb:
            raise UsageError("periodogram needs --comb FILE")
        comb = records.read_comb(args.comb)
        if args.at_peaks:
            ref = records.read_table(args.at_peaks)
            k, inten = ref.pp_k, ref.pp_intensity
            if args.kmin is not None or args.kmax is not None:
                lo = -np.inf if args.kmin is None else args.kmin
                hi = np.inf if args.kmax is None else args.kmax
                sel = (k >= lo) & (k <= hi)
                k, inten = k[sel], inten[sel]
            if args.top:
                k = k[np.argsort(-inten, kind="stable")[: args.top]]
            grid = np.sort(k)
        else:
            grid = _points(args)
        est = estimation.periodogram(comb, grid, args.mode)
        path = records.write_estimate(out / f"{name}.csv", est)
        return [path], {"normalization": est.normalization, "volume": est.volume, "realizations": 1,
                        "input_digest": records.digest(args.comb)}
    if kind == "ensemble":
        if args.family not in estimation.ENSEMBLE_FAMILIES:
            raise UsageError(f"--family must be one of {estimation.ENSEMBLE_FAMILIES}")
        default_p = 1 / TAU if args.family == "random-fibonacci" else 0.5
        spec = _random_spec(args, default_p)
        if spec.count is None:
            raise UsageError("ensemble needs --count")
        grid = _points(args)
        est = estimation.ensemble_periodogram(args.family, spec, grid, args.realizations, args.mode)
        path = records.write_estimate(out / f"{name}.csv", est)
        return [path], {"normalization": est.normalization, "volume": est.volume,
                        "realizations": est.realizations, "master_seed": spec.seed}
    if kind == "autocorrelation":
        if not args.comb:
            raise UsageError("autocorrelation needs --comb FILE")
        comb = records.read_comb(args.comb)
        table = estimation.autocorrelation(comb, args.maxdist)
        path = records.write_autocorrelation(out / f"{name}.csv", table)
        return [path], {"volume": table.volume, "entries": len(table.coefficients)}
    # scaling
    if args.k is None or not args.sizes:
        raise UsageError("scaling needs --k and --sizes")
    fam = _scaling_family(args)
    slope = estimation.scaling_exponent(fam, args.k)
    path = out / f"{name}.json"
    path.write_text(json.dumps({"k": args.k, "slope": slope, "sizes": args.sizes, "system": args.family},
                               indent=2) + "\n", encoding="utf-8")
    print(f"slope {slope:.6f}")
    return [path], {"slope": slope}


def _scaling_family(args):
    fam = args.family
    if fam == "tm":
        return [generators.gen_thue_morse(n) for n in args.sizes]
    if fam == "rs":
        return [generators.gen_rudin_shapiro((0, 2**n)) for n in args.sizes]
    if fam == "fibonacci":
        cps = _cps(args)
        return [generators.gen_fibonacci_model_set(cps, (0, 2**n)) for n in args.sizes]
    raise UsageError("scaling --family must be tm, rs or fibonacci")


def cmd_compare(args, out: Path):
    est = records.read_table(args.estimate)
    ref = records.read_table(args.reference)
    if not isinstance(est, estimation.DiffractionEstimate):
        # two analytic files: compare their sampled values directly
        est = _as_estimate(est)
    lo = -np.inf if args.kmin is None else args.kmin
    hi = np.inf if args.kmax is None else args.kmax
    if isinstance(ref, analytic.SpectralMeasure) and ref.sc_k.size and not ref.ac_k.size:
        ref = _as_estimate(ref)
    if isinstance(ref, analytic.SpectralMeasure) and ref.has_pp and est.normalization != "bragg":
        est = estimation.DiffractionEstimate(est.grid, est.values, "bragg", est.volume, est.realizations)
    value = estimation.compare(est, ref, (lo, hi), args.metric, [tuple(e) for e in args.exclude or ()])
    ok = args.tolerance is None or value <= args.tolerance
    report = {"schema_version": records.SCHEMA_VERSION, "metric": args.metric, "value": value,
              "tolerance": args.tolerance, "pass": ok, "region": [args.kmin, args.kmax],
              "exclude": args.exclude or [],
              "inputs": {str(args.estimate): records.digest(args.estimate),
                         str(args.reference): records.digest(args.reference)}}
    path = out / f"{args.name or 'compare'}.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{args.metric} = {value:.6g}" + (f" (tolerance {args.tolerance:g}: {'PASS' if ok else 'FAIL'})"
                                           if args.tolerance is not None else ""))
    return None, report


def _as_estimate(spec: analytic.SpectralMeasure) -> estimation.DiffractionEstimate:
    if spec.ac_k.size:
        return estimation.DiffractionEstimate(spec.ac_k, spec.ac_density, "ac", 1.0)
    if spec.has_pp:
        return estimation.DiffractionEstimate(spec.pp_k, spec.pp_intensity, "bragg", 1.0)
    return estimation.DiffractionEstimate(spec.sc_k, spec.sc_F, "ac", 1.0)


def cmd_reproduce(args, out: Path):
    doc = records.read_manifest(args.manifest)
    argv = doc.get("argv")
    if not argv:
        raise UsageError("manifest carries no argv")
    with tempfile.TemporaryDirectory() as tmp:
        code = main(list(argv) + ["--out", tmp, "--quiet"])
        if code != 0:
            raise RuntimeError(f"re-run exited with code {code}")
        fresh = {name: records.digest(Path(tmp) / name) for name in doc["outputs"]}
    same = fresh == doc["outputs"]
    for name, dig in doc["outputs"].items():
        print(f"{name}: {'identical' if fresh[name] == dig else 'DIFFERENT'}")
    return None, {"reproduced": same}


COMMANDS = {"generate": cmd_generate, "analytic": cmd_analytic, "estimate": cmd_estimate,
            "compare": cmd_compare, "reproduce": cmd_reproduce}


# --------------------------------------------------------------------------


def _top_parser():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--quiet", action="store_true")
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="quasidiff", parents=[_top_parser()],
        description="Point sets with aperiodic order, their diffraction, and brute-force cross-checks.",
        epilog="--out defaults to $QUASIDIFF_OUTDIR or the current directory.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--name", help="output file stem")
        sp.add_argument("--kmin", type=float)
        sp.add_argument("--kmax", type=float)
        sp.add_argument("--grid", type=int, help="number of grid points")
        sp.add_argument("--window", nargs=2, metavar=("LO", "HI"),
                        help="model-set window (LO, HI], decimals or a+b*tau literals")
        sp.add_argument("--basis", help="lattice basis rows, e.g. '1,0;0,1' (columns are generators)")
        sp.add_argument("--motif", nargs="+", help="motif entries 'x,y:weight' in fractional coordinates")

    g = sub.add_parser("generate", help="write a comb CSV and manifest")
    g.add_argument("system", choices=SYSTEMS)
    common(g)
    g.add_argument("--n", type=int, help="Thue-Morse order, or number of sites")
    g.add_argument("--range", nargs=2, metavar=("LO", "HI"))
    g.add_argument("--p", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int)
    g.add_argument("--radius", type=float)

    a = sub.add_parser("analytic", help="evaluate a closed-form diffraction measure")
    a.add_argument("system", choices=ANALYTIC)
    common(a)
    a.add_argument("--threshold", type=float)
    a.add_argument("--threshold-frac", type=float, default=0.001,
                   help="threshold as a fraction of the central intensity")
    a.add_argument("--N", type=int, default=16, help="Riesz product depth")
    a.add_argument("--M", type=int, default=2**14, help="Fourier series cutoff")
    a.add_argument("--gridsize", type=int, default=2**14 + 1)
    a.add_argument("--tol", type=float, default=1e-3)

    e = sub.add_parser("estimate", help="periodogram / autocorrelation estimates")
    e.add_argument("kind", choices=ESTIMATES)
    common(e)
    e.add_argument("--comb", type=Path)
    e.add_argument("--at-peaks", type=Path, help="evaluate at the peak positions of a k,intensity file")
    e.add_argument("--top", type=int, help="keep only the strongest N peaks")
    e.add_argument("--at", type=float, nargs="+", metavar="K", help="explicit wavenumbers instead of a grid")
    e.add_argument("--mode", choices=("ac", "bragg"), default="ac")
    e.add_argument("--family")
    e.add_argument("--p", type=float)
    e.add_argument("--n", type=int)
    e.add_argument("--count", type=int)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--realizations", type=int, default=100)
    e.add_argument("--maxdist", type=float)
    e.add_argument("--k", type=float)
    e.add_argument("--sizes", type=int, nargs="+", help="log2 patch sizes for scaling fits")

    c = sub.add_parser("compare", help="score an estimate against a reference")
    c.add_argument("estimate", type=Path)
    c.add_argument("reference", type=Path)
    c.add_argument("--name")
    c.add_argument("--metric", choices=("L1rel", "maxrel"), default="L1rel")
    c.add_argument("--tolerance", type=float)
    c.add_argument("--kmin", type=float)
    c.add_argument("--kmax", type=float)
    c.add_argument("--exclude", type=float, nargs=2, action="append", metavar=("A", "B"))

    r = sub.add_parser("reproduce", help="re-run a manifest and compare output digests")
    r.add_argument("manifest", type=Path)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    top, rest = _top_parser().parse_known_args(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(rest)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if top.quiet else logging.INFO, format="%(message)s")
    if top.threads:
        _accel.set_threads(top.threads)
    out = top.out or records.default_outdir()
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths, extra = COMMANDS[args.command](args, out)
    except (UsageError, ValueError, TypeError, FileNotFoundError) as exc:
        print(f"quasidiff: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"quasidiff: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.command == "compare":
        return 0 if extra["pass"] else 1
    if args.command == "reproduce":
        return 0 if extra["reproduced"] else 1
    params = {k: v for k, v in vars(args).items() if k not in ("command", "out", "threads", "quiet")}
    stem = Path(paths[0]).with_suffix(".json") if paths[0].suffix != ".json" else paths[0].with_name(
        paths[0].stem + "-manifest.json")
    records.write_manifest(stem, args.command, params, paths, argv=rest,
                           numba=_accel.USING_NUMBA, **extra)
    if not top.quiet:
        for p in paths:
            print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
