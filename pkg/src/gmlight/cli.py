"""``gmlight`` command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 solver did not converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, hdr_io
from .decompose import DEFAULT_FRACTION, IlluminationParams, decompose
from .errors import FormatError, NonConvergenceError
from .fixtures import KINDS, depth_fixture, make_fixture
from .metrics import gmd, report
from .ot import SinkhornConfig, geometric_cost, sinkhorn_gml, sinkhorn_unbalanced_gml, spherical_cost
from .projection import DEFAULT_ANGULAR_SIZE, ProjectionConfig, progressive_maps, reproject, spatially_varying_map
from .sphere import AnchorSet, generate_anchors

log = logging.getLogger("gmlight")

EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str, count: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got {text!r}")
    return vals


def _vec3(text):
    return _floats(text, 3)


def _pair(text):
    return _floats(text, 2)


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})", exc.pos) from None


def _load_params(path) -> IlluminationParams:
    return IlluminationParams.from_dict(_read_json(path))


def _load_anchors(path, n: int) -> AnchorSet:
    if path is None:
        return generate_anchors(n)
    anchors = AnchorSet.from_dict(_read_json(path))
    if anchors.n != n:
        raise ValueError(f"{path} holds {anchors.n} anchors, expected {n}")
    return anchors


def _write_text(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _params_json(params: IlluminationParams) -> str:
    return json.dumps(params.to_dict()) + "\n"


def _sig6(x):
    return None if x is None else float(format(x, ".6g"))


# -- subcommands -------------------------------------------------------------


def cmd_anchors(args) -> int:
    _write_text(args.out, generate_anchors(args.n).to_json())
    return 0


def cmd_decompose(args) -> int:
    pano = hdr_io.load(args.pano)
    depth = hdr_io.load(args.depth) if args.depth else None
    anchors = _load_anchors(args.anchors, args.n)
    params = decompose(pano, anchors, depth, args.fraction, weighted=args.weighted)
    if params.degenerate:
        log.warning("no light energy found; distribution set to uniform")
    _write_text(args.out, _params_json(params))
    return 0


def _projection_cfg(args) -> ProjectionConfig:
    schedule = args.schedule if args.schedule else (args.s,)
    return ProjectionConfig(args.width, args.height, args.s, schedule)


def _level_paths(out: Path, count: int) -> list[Path]:
    if count == 1:
        return [out]
    return [out.with_name(f"{out.stem}_{k}{out.suffix}") for k in range(count)]


def cmd_project(args) -> int:
    params = _load_params(args.params)
    anchors = _load_anchors(args.anchors, params.n)
    cfg = _projection_cfg(args)
    maps = progressive_maps(params, anchors, cfg)
    for pano, path in zip(maps, _level_paths(Path(args.out), len(maps))):
        hdr_io.save(pano, path)
    return 0


def cmd_reproject(args) -> int:
    params = _load_params(args.params)
    anchors = _load_anchors(args.anchors, params.n)
    cfg = ProjectionConfig.single(args.width, args.height, args.s)
    hdr_io.save(spatially_varying_map(params, anchors, args.offset, cfg, args.falloff), args.out)
    if args.params_out or args.anchors_out:
        moved, moved_anchors = reproject(params, anchors, args.offset, args.falloff)
        if args.params_out:
            _write_text(args.params_out, _params_json(moved))
        if args.anchors_out:
            _write_text(args.anchors_out, moved_anchors.to_json())
    return 0


def _sinkhorn_cfg(args) -> SinkhornConfig:
    return SinkhornConfig(
        epsilon=args.epsilon,
        max_iterations=args.max_iterations,
        tolerance=args.tolerance,
        kl_weight=getattr(args, "rho", 1.0),
    )


def cmd_gml(args) -> int:
    pa = _load_params(args.a)
    pb = _load_params(args.b)
    if pa.n != pb.n:
        raise ValueError(f"parameter files disagree on anchor count ({pa.n} vs {pb.n})")
    anchors = _load_anchors(args.anchors, pa.n)
    du, dv = pa.depth, pb.depth
    if args.shared_depth == "a":
        dv = du
    elif args.shared_depth == "b":
        du = dv
    cost = spherical_cost(anchors) if args.spherical_cost else geometric_cost(anchors, du, dv)
    cfg = _sinkhorn_cfg(args)
    if args.unbalanced:
        res = sinkhorn_unbalanced_gml(pa.depth, pb.depth, cost, cfg)
    else:
        res = sinkhorn_gml(pa.distribution, pb.distribution, cost, cfg)
    sys.stdout.write(json.dumps({"value": res.value, "converged": res.converged, "iterations": res.iterations}) + "\n")
    if not res.converged:
        log.error("solver stopped after %d iterations with marginal error %.3g", res.iterations, res.marginal_error)
        return EXIT_SOLVER
    return 0


def _load_depth_pair(a, b):
    if (a is None) != (b is None):
        log.warning("only one depth map given; falling back to unit depths")
        return None, None
    if a is None:
        return None, None
    return hdr_io.load(a), hdr_io.load(b)


def cmd_gmd(args) -> int:
    a = hdr_io.load(args.a)
    b = hdr_io.load(args.b)
    anchors = AnchorSet.from_dict(_read_json(args.anchors)) if args.anchors else generate_anchors(args.n)
    da, db = _load_depth_pair(args.depth_a, args.depth_b)
    value = gmd(a, b, anchors, da, db, _sinkhorn_cfg(args))
    sys.stdout.write(json.dumps({"gmd": _sig6(value)}) + "\n")
    return 0


def cmd_metrics(args) -> int:
    pred = hdr_io.load(args.pred)
    gt = hdr_io.load(args.gt)
    anchors = None
    if args.anchors:
        anchors = AnchorSet.from_dict(_read_json(args.anchors))
    dp, dg = _load_depth_pair(args.depth_pred, args.depth_gt)
    rep = report(pred, gt, anchors, dp, dg, _sinkhorn_cfg(args))
    out = {k: _sig6(v) for k, v in rep.to_dict().items()}
    if out["gmd"] is None:
        del out["gmd"]
    sys.stdout.write(json.dumps(out) + "\n")
    return 0


def cmd_fixture(args) -> int:
    pano = make_fixture(args.kind, args.width, args.height, args.value, args.dir, args.dir2, args.value2)
    hdr_io.save(pano, args.out)
    if args.depth_out:
        if args.depth_constant is None and args.depth_linear is None:
            raise UsageError("--depth-out needs --depth-constant or --depth-linear")
        depth = depth_fixture(args.width, args.height, args.depth_constant, args.depth_linear)
        hdr_io.save(depth, args.depth_out)
    return 0


# -- parser ------------------------------------------------------------------


def _add_solver_flags(p, epsilon=1e-4):
    p.add_argument("--epsilon", type=float, default=epsilon)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--max-iterations", type=int, default=10000)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gmlight", description="Geometric light distributions and optimal-transport losses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("anchors", help="write a Fibonacci anchor lattice as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_anchors, inputs=())

    p = sub.add_parser("decompose", help="panorama -> illumination parameters")
    p.add_argument("--pano", required=True)
    p.add_argument("--depth")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--anchors", help="anchor JSON (default: Fibonacci lattice of size --n)")
    p.add_argument("--fraction", type=float, default=DEFAULT_FRACTION)
    p.add_argument("--weighted", action="store_true", help="weight pixels by solid angle")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose, inputs=("pano", "depth", "anchors"))

    for name, func in (("project", cmd_project), ("reproject", cmd_reproject)):
        p = sub.add_parser(name, help="render Gaussian map(s) from parameters")
        p.add_argument("--params", required=True)
        p.add_argument("--anchors")
        p.add_argument("--width", type=int, default=256)
        p.add_argument("--height", type=int, default=128)
        p.add_argument("--s", type=float, default=DEFAULT_ANGULAR_SIZE)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func, inputs=("params", "anchors"))
    sub.choices["project"].add_argument(
        "--schedule", type=_floats, help="comma-separated coarse-to-fine angular sizes; writes OUT_k.pfm per level"
    )
    rp = sub.choices["reproject"]
    rp.add_argument("--offset", type=_vec3, required=True)
    rp.add_argument("--falloff", choices=["linear", "inverse-square"], default="linear")
    rp.add_argument("--params-out")
    rp.add_argument("--anchors-out")

    p = sub.add_parser("gml", help="geometric mover's loss between two parameter files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--anchors")
    p.add_argument("--unbalanced", action="store_true", help="compare depth vectors as unnormalised measures")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--spherical-cost", action="store_true")
    p.add_argument("--shared-depth", choices=["a", "b"])
    _add_solver_flags(p)
    p.set_defaults(func=cmd_gml, inputs=("a", "b", "anchors"))

    p = sub.add_parser("gmd", help="geometric mover's distance between two panoramas")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--anchors")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--depth-a")
    p.add_argument("--depth-b")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_gmd, inputs=("a", "b", "anchors", "depth_a", "depth_b"))

    p = sub.add_parser("metrics", help="compare a predicted panorama with ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--anchors")
    p.add_argument("--depth-pred")
    p.add_argument("--depth-gt")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_metrics, inputs=("pred", "gt", "anchors", "depth_pred", "depth_gt"))

    p = sub.add_parser("fixture", help="write a synthetic test panorama")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--value", type=float, default=1.0)
    p.add_argument("--dir", type=_vec3, default=(0.0, 0.0, 1.0))
    p.add_argument("--dir2", type=_vec3, default=(1.0, 0.0, 0.0))
    p.add_argument("--value2", type=float)
    p.add_argument("--depth-constant", type=float)
    p.add_argument("--depth-linear", type=_pair, metavar="TOP,BOTTOM")
    p.add_argument("--depth-out")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixture, inputs=())
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    missing = [getattr(args, k) for k in args.inputs if getattr(args, k) and not Path(getattr(args, k)).is_file()]
    if missing:
        print(f"gmlight: input file not found: {missing[0]}", file=sys.stderr)
        return EXIT_DATA
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gmlight: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"gmlight: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (FormatError, ValueError, OSError) as exc:
        print(f"gmlight: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
