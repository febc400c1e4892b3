"""Command line entry point: ``lfdeblur <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data or format error, 3 solver
divergence. Diagnostics go to stderr; machine-readable output is JSON on
stdout or in the named files.
"""

import argparse
import json
import sys

import numpy as np

from . import io as lfio
from .core import LightField, epipolar_slice, refocus, rmse, subaperture
from .forward import ExposureConfig, MotionPath, blur
from .fourier import deconvolve_inplane, rasterize_kernel, recover_texture
from .solver import SolverConfig, SolverDivergence, blind_deblur
from .synth import demo_scene

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def cmd_synth(args):
    dims = tuple(args.dims)
    lf = demo_scene(args.kind, dims, depths=args.depths, seed=args.seed)
    lfio.write_lfz(lf, args.output)


def cmd_blur(args):
    lf = lfio.read_lfz(args.input)
    path = lfio.read_path_json(args.path)
    path.check_bounds(lf.nu)
    lfio.write_lfz(blur(lf, path, ExposureConfig(args.time_samples)), args.output)


def cmd_deconv_inplane(args):
    lf = lfio.read_lfz(args.input)
    path = lfio.read_path_json(args.path)
    kernel = rasterize_kernel(path, ExposureConfig(args.time_samples), (lf.nv, lf.nu))
    lfio.write_lfz(deconvolve_inplane(lf, kernel, args.wiener_eps), args.output)


def cmd_recover_texture(args):
    lf = lfio.read_lfz(args.input)
    if not (0 < args.zmin < args.zmax):
        raise UsageError("need 0 < --zmin < --zmax")
    if args.slopes < 1:
        raise UsageError("--slopes must be >= 1")
    depths = np.linspace(args.zmin, args.zmax, args.slopes)
    rec = recover_texture(lf, 1.0 / depths)
    lfio.write_png(args.output, rec.texture)
    if args.weights:
        lfio.write_json(args.weights, {
            "depths": depths.tolist(),
            "slopes": (1.0 / depths).tolist(),
            "weights": rec.weights.tolist(),
            "zeta": rec.zeta,
            "depth": rec.depth,
            "uniform": rec.uniform,
        })


def cmd_deblur_blind(args):
    lf = lfio.read_lfz(args.input)
    cfg = SolverConfig.from_dict(_load_json(args.config)) if args.config else SolverConfig()
    try:
        rep = blind_deblur(lf, cfg)
    except SolverDivergence as err:
        if args.report:
            lfio.write_json(args.report, err.report.to_dict())
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    lfio.write_lfz(rep.final_lf, args.output)
    if args.path_out:
        lfio.write_path_json(args.path_out, rep.final_path)
    if args.report:
        doc = rep.to_dict()
        doc["config"] = cfg.to_dict()
        lfio.write_json(args.report, doc)
    return EXIT_OK


def cmd_metrics(args):
    a = lfio.read_lfz(args.a)
    b = lfio.read_lfz(args.b)
    if a.dims != b.dims:
        raise ValueError(f"light field dims differ: {a.dims} vs {b.dims}")
    if args.central_view:
        value = rmse(subaperture(a, a.nu // 2, a.nv // 2), subaperture(b, b.nu // 2, b.nv // 2))
    else:
        value = rmse(a, b)
    print(json.dumps({"rmse": value}))


def cmd_view(args):
    lf = lfio.read_lfz(args.input)
    if args.sub is not None:
        img = subaperture(lf, *args.sub)
    elif args.epi is not None:
        img = epipolar_slice(lf, *args.epi)
    else:
        img = refocus(lf, args.refocus)
    lfio.write_png(args.output, img)


def build_parser():
    p = _Parser(prog="lfdeblur", description="Light field motion blur tools.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("synth", help="render a synthetic scene")
    s.add_argument("--kind", choices=["plane", "two-plane", "checker-scene"], required=True)
    s.add_argument("--dims", type=int, nargs=4, metavar=("NY", "NX", "NV", "NU"), required=True)
    s.add_argument("--depths", type=float, nargs="+")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("blur", help="apply the motion blur forward model")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("--path", required=True)
    s.add_argument("--time-samples", type=int, default=32)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_blur)

    s = sub.add_parser("deconv-inplane", help="Wiener deconvolution for in-plane motion")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("--path", required=True)
    s.add_argument("--wiener-eps", type=float, default=1e-3)
    s.add_argument("--time-samples", type=int, default=32)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_deconv_inplane)

    s = sub.add_parser("recover-texture", help="blind texture of a plane under out-of-plane motion")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("--zmin", type=float, required=True)
    s.add_argument("--zmax", type=float, required=True)
    s.add_argument("--slopes", type=int, default=32)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--weights")
    s.set_defaults(func=cmd_recover_texture)

    s = sub.add_parser("deblur-blind", help="joint light field and camera path estimation")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("--config")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--path-out")
    s.add_argument("--report")
    s.set_defaults(func=cmd_deblur_blind)

    s = sub.add_parser("metrics", help="RMSE between two light fields, as JSON")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--central-view", action="store_true")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("view", help="export a view, epipolar slice or refocused image")
    s.add_argument("-i", "--input", required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--sub", type=int, nargs=2, metavar=("U", "V"))
    g.add_argument("--epi", type=int, nargs=2, metavar=("Y", "V"))
    g.add_argument("--refocus", type=float, metavar="S")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_view)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(str(err), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as err:  # --help
        return EXIT_OK if not err.code else EXIT_USAGE
    try:
        code = args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, IndexError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
