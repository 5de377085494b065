"""Batch front-end: generation, warping, baselines, validation, benchmarks.

Every subcommand writes a manifest.json beside its outputs recording the
resolved parameters, input checksums, and tool version; `replay` re-runs a
manifest and reproduces the outputs bit for bit.  All randomness flows from
--seed through named streams; there is no global RNG state.

Exit codes: 0 success, 1 data error, 2 usage error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiments, rng
from .baselines import PriorSpec, generate_prior, warp_interp
from .errors import InvalidArgumentError, NoiseWarpError
from .grids import sample_noise, upsample_conditional
from .io import file_sha256, read_flo, read_grid, write_grid, write_png_preview
from .warp import WarpConfig, warp_sequence

EXIT_DATA = 1
EXIT_VALIDATION = 3


def _write_manifest(out: Path, subcommand: str, params: dict, inputs: dict, outputs):
    manifest = {
        "tool": "noisewarp",
        "version": __version__,
        "subcommand": subcommand,
        "params": params,
        "inputs": {str(k): v for k, v in sorted(inputs.items())},
        "outputs": sorted(outputs),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_flows(params):
    """Per-frame step flows from a .flo directory or a synthetic spec."""
    if params.get("flows"):
        paths = sorted(Path(params["flows"]).glob("*.flo"))
        if not paths:
            raise InvalidArgumentError(f"no .flo files in {params['flows']}")
        flows = [read_flo(p) for p in paths]
        inputs = {str(p): file_sha256(p) for p in paths}
        return flows, inputs
    if params.get("synthetic"):
        g = read_grid(params["grid"]) if params.get("grid") else None
        w = params.get("width") or (g.width if g else None)
        h = params.get("height") or (g.height if g else None)
        step = experiments.parse_flow_spec(params["synthetic"], w, h)
        return [step] * params["frames"], {}
    raise InvalidArgumentError("either --flows or --synthetic is required")


def _write_sequence(out: Path, results, preview: bool, with_masks: bool):
    names = []
    for i, res in enumerate(results):
        name = f"frame_{i:04d}.grid"
        write_grid(res.noise if hasattr(res, "noise") else res, out / name)
        names.append(name)
        if with_masks and hasattr(res, "undefined_mask"):
            mname = f"mask_{i:04d}.npy"
            with open(out / mname, "wb") as fh:
                np.lib.format.write_array(
                    fh, res.undefined_mask.astype(np.uint8), version=(1, 0)
                )
            names.append(mname)
        if preview:
            pname = f"frame_{i:04d}.png"
            write_png_preview(res.noise if hasattr(res, "noise") else res, out / pname)
            names.append(pname)
    return names


def cmd_gen(params, out: Path):
    key = rng.RngKey(params["seed"])
    names = []
    for i in range(params["count"]):
        g = sample_noise(
            params["width"], params["height"], params["channels"],
            key.child(rng.BASE_NOISE, i),
        )
        name = f"noise_{i:04d}.grid"
        write_grid(g, out / name)
        names.append(name)
        if params["preview"]:
            write_png_preview(g, out / f"noise_{i:04d}.png")
            names.append(f"noise_{i:04d}.png")
    return names, {}


def cmd_upsample(params, out: Path):
    g = read_grid(params["grid"])
    up = upsample_conditional(g, params["n"], rng.RngKey(params["seed"]))
    write_grid(up, out / "upsampled.grid")
    names = ["upsampled.grid"]
    if params["preview"]:
        write_png_preview(up, out / "upsampled.png")
        names.append("upsampled.png")
    return names, {params["grid"]: file_sha256(params["grid"])}


def cmd_warp(params, out: Path):
    g = read_grid(params["grid"])
    flows, inputs = _load_flows(params)
    inputs[params["grid"]] = file_sha256(params["grid"])
    cfg = WarpConfig(key=rng.RngKey(params["seed"]), k=params["k"], s=params["s"])
    results = warp_sequence(g, flows, cfg)
    names = _write_sequence(out, results, params["preview"], with_masks=True)
    return names, inputs


def cmd_baseline(params, out: Path):
    inputs = {}
    if params.get("prior"):
        spec = PriorSpec(
            kind=params["prior"],
            key=rng.RngKey(params["seed"]),
            alpha=params["alpha"],
            threshold=params["threshold"],
        )
        shape = (params["width"], params["height"], params["channels"])
        seq = generate_prior(spec, params["frames"], shape)
    else:
        g = read_grid(params["grid"])
        inputs[params["grid"]] = file_sha256(params["grid"])
        flows, flow_inputs = _load_flows(params)
        inputs.update(flow_inputs)
        # Interpolation baselines warp incrementally, one step at a time.
        seq = [g]
        for step in flows:
            seq.append(warp_interp(seq[-1], step, params["scheme"]))
    names = _write_sequence(out, seq, params["preview"], with_masks=False)
    return names, inputs


def cmd_validate(params, out: Path):
    report = experiments.run_validation(
        method=params["method"],
        trials=params["trials"],
        k=params["k"],
        s=params["s"],
        seed=params["seed"],
    )
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(
            f"[{status}] {params['method']}.{c['name']}: "
            f"observed {c['observed']:.6g}, expected {c['expected']:.6g} "
            f"(tolerance {c['tolerance']:.6g})"
        )
    if not report["passed"]:
        raise _ValidationFailure("validation checks failed")
    return ["report.json"], {}


def cmd_covariance(params, out: Path):
    result = experiments.covariance_experiment(
        method=params["method"],
        trials=params["trials"],
        k=params["k"],
        s=params["s"],
        seed=params["seed"],
        shift=tuple(params["shift"]),
        patch=tuple(params["patch"]) if params.get("patch") else None,
    )
    with open(out / "covariance.json", "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "covariance.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["matrix", "row", "col", "value"])
        for mat in ("covariance", "cross_covariance_near", "cross_covariance_far"):
            m = result[mat]
            for i, row in enumerate(m):
                for j, v in enumerate(row):
                    wr.writerow([mat, i, j, repr(float(v))])
    return ["covariance.json", "covariance.csv"], {}


def cmd_ablate_k(params, out: Path):
    step = experiments.parse_flow_spec(
        params["synthetic"], params["width"], params["height"]
    )
    k_values = params["k_list"]
    table = experiments.undefined_ratio_table(
        step, params["frames"], k_values, params["s"], params["seed"]
    )
    with open(out / "ablate_k.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k", "frame", "undefined_ratio"])
        for i, k in enumerate(k_values):
            for f in range(table.shape[1]):
                wr.writerow([k, f + 1, repr(float(table[i, f]))])
    return ["ablate_k.csv"], {}


def cmd_bench(params, out: Path):
    rows = experiments.bench_grid(
        params["k_list"],
        params["s_list"],
        params["frames"],
        params["width"],
        params["height"],
        params["seed"],
        params["flow"],
    )
    with open(out / "bench.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(
            ["k", "s", "frames", "wall_per_frame", "cpu_per_frame",
             "undefined_ratio_last"]
        )
        for r in rows:
            wr.writerow(
                [r["k"], r["s"], r["frames"], repr(r["wall_per_frame"]),
                 repr(r["cpu_per_frame"]), repr(r["undefined_ratio_last"])]
            )
    return ["bench.csv"], {}


_RUNNERS = {
    "gen": cmd_gen,
    "upsample": cmd_upsample,
    "warp": cmd_warp,
    "baseline": cmd_baseline,
    "validate": cmd_validate,
    "covariance": cmd_covariance,
    "ablate_k": cmd_ablate_k,
    "bench": cmd_bench,
}


class _ValidationFailure(Exception):
    pass


def _run(subcommand: str, params: dict, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    names, inputs = _RUNNERS[subcommand](params, out)
    _write_manifest(out, subcommand, params, inputs, names)
    return 0


def _int_list(text: str):
    return [int(v) for v in text.split(",") if v != ""]


def _float_pair(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers")
    return parts


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="noisewarp",
        description="Distribution-preserving Gaussian noise warping toolkit",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add_common(p, seed=True):
        p.add_argument("--out", required=True, help="output directory")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--preview", action="store_true",
                       help="also write PNG previews")

    p = sub.add_parser("gen", help="sample seeded level-0 noise grids")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--count", type=int, default=1)
    add_common(p)

    p = sub.add_parser("upsample", help="conditional upsampling of a grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--n", type=int, required=True,
                   help="per-axis subdivision (power of two)")
    add_common(p)

    p = sub.add_parser("warp", help="warp a grid through a flow sequence")
    p.add_argument("--grid", required=True)
    p.add_argument("--flows", help="directory of .flo files (lexicographic order)")
    p.add_argument("--synthetic", help="synthetic step-flow spec, e.g. "
                   "'swirl:strength=2.5+zoom:factor=1.02'")
    p.add_argument("--frames", type=int, default=1,
                   help="frame count for --synthetic")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--s", type=int, default=4)
    add_common(p)

    p = sub.add_parser("baseline", help="comparison schemes and priors")
    p.add_argument("--grid")
    p.add_argument("--scheme", choices=experiments.INTERP_SCHEMES)
    p.add_argument("--flows")
    p.add_argument("--synthetic")
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--prior", choices=[k for k in experiments.PRIOR_KINDS
                                       if k != "residual"])
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=0.1)
    add_common(p)

    p = sub.add_parser("validate", help="statistical suite for one method")
    p.add_argument("--method", required=True,
                   choices=experiments.VALIDATE_METHODS)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--s", type=int, default=4)
    add_common(p)

    p = sub.add_parser("covariance",
                       help="covariance / cross-covariance matrices as data")
    p.add_argument("--method", default="intnoise",
                   choices=experiments.WARP_METHODS)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--s", type=int, default=4)
    p.add_argument("--shift", type=_float_pair, default=[3.6, 0.0])
    p.add_argument("--patch", type=_int_list, default=None,
                   help="y0,x0,h,w window (default: centered 4x4)")
    add_common(p)

    p = sub.add_parser("ablate_k",
                       help="undefined-pixel ratio per (k, frame) table")
    p.add_argument("--synthetic", required=True)
    p.add_argument("--frames", type=int, default=24)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--k-list", dest="k_list", type=_int_list,
                   default=[0, 1, 2, 3, 4])
    p.add_argument("--s", type=int, default=4)
    add_common(p)

    p = sub.add_parser("bench", help="timing grid over (k, s)")
    p.add_argument("--frames", type=int, default=24)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--k-list", dest="k_list", type=_int_list,
                   default=[0, 1, 2, 3, 4])
    p.add_argument("--s-list", dest="s_list", type=_int_list,
                   default=[1, 2, 3, 4])
    p.add_argument("--flow", default="swirl:strength=3.0")
    add_common(p)

    p = sub.add_parser("replay", help="re-run a manifest bit-exactly")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "replay":
            with open(args.manifest) as fh:
                manifest = json.load(fh)
            if manifest.get("tool") != "noisewarp":
                raise InvalidArgumentError(f"{args.manifest} is not a noisewarp manifest")
            return _run(
                manifest["subcommand"], manifest["params"], Path(args.out)
            )
        params = {
            k: v for k, v in vars(args).items() if k not in ("subcommand", "out")
        }
        return _run(args.subcommand, params, Path(args.out))
    except _ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NoiseWarpError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
