"""Command-line entry point: generate, validate, snapshot, bench, serve.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 runtime error.
All diagnostics go to standard error; `bench` writes its CSV to standard
output unless ``--out`` is given.  The engine configuration comes from
``--config`` or the ``GENOMELENS_CONFIG`` environment variable.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

from .config import CONFIG_ENV_VAR, EngineConfig, load_config
from .gssio import GssError, load_dataset, write_dataset
from .model import STORED_LEVELS, validate
from .raster import camera_for, render, write_image
from .renderlist import InstanceCapError, assemble
from .scale import CameraScaleConfig, ScaleParam, distance_from_scale
from .scope import default_focus, set_focus_chromosome, set_focus_fiber
from .service import DEFAULT_PORT, DEFAULT_VIEWPORT, serve
from .synth import CapacityError, GenParams, generate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def _fail(message: str, code: int) -> int:
    print(f"genomelens: {message}", file=sys.stderr)
    return code


def _manifest_path(data: str) -> Path:
    path = Path(data)
    if path.is_dir():
        return path / "manifest.json"
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genomelens",
        description="Multi-scale 3D genome visualization engine.",
    )
    parser.add_argument(
        "--config",
        metavar="PATH",
        default=None,
        help=f"JSON engine-config file (default: ${CONFIG_ENV_VAR} if set)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthesize a GSS-lite dataset")
    gen.add_argument("--chromosomes", type=int, required=True, help="number of chromosomes")
    gen.add_argument("--loci", type=int, required=True, help="loci per chromosome")
    gen.add_argument("--fibers", type=int, required=True, help="fibers per locus")
    gen.add_argument("--nucleosomes", type=int, required=True, help="nucleosomes per fiber")
    gen.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    gen.add_argument(
        "--nucleus-radius", type=float, default=3000.0, help="nucleus radius in nm (default: 3000)"
    )
    gen.add_argument("--out", required=True, metavar="DIR", help="output dataset directory")

    val = sub.add_parser("validate", help="validate a GSS-lite dataset")
    val.add_argument("manifest", help="manifest.json path or dataset directory")

    snap = sub.add_parser("snapshot", help="render one headless frame to a PPM image")
    snap.add_argument("--data", required=True, metavar="DIR", help="dataset directory or manifest.json")
    snap.add_argument("--scale", type=float, required=True, help="scale parameter s in [0, 7]")
    snap.add_argument("--focus-chromosome", type=int, required=True, help="focus chromosome index")
    snap.add_argument(
        "--focus-fiber", type=int, default=None, help="focus fiber index (default: chromosome median)"
    )
    snap.add_argument("--width", type=int, default=800, help="image width in pixels (default: 800)")
    snap.add_argument("--height", type=int, default=600, help="image height in pixels (default: 600)")
    snap.add_argument("--out", required=True, metavar="FILE", help="output PPM path")

    bench = sub.add_parser("bench", help="sweep s and report instance counts and assembly times")
    bench.add_argument("--data", required=True, metavar="DIR", help="dataset directory or manifest.json")
    bench.add_argument(
        "--steps", type=int, default=29, help="number of s samples across [0, 7] (default: 29)"
    )
    bench.add_argument(
        "--focus-chromosome", type=int, default=None, help="focus chromosome (default: dataset default)"
    )
    bench.add_argument("--out", default="-", metavar="FILE", help="CSV output path (default: stdout)")

    srv = sub.add_parser("serve", help="run the WebSocket session service")
    srv.add_argument("--data", required=True, metavar="DIR", help="dataset directory or manifest.json")
    srv.add_argument("--port", type=int, default=DEFAULT_PORT, help=f"TCP port (default: {DEFAULT_PORT})")
    srv.add_argument("--host", default="127.0.0.1", help="bind address (default: 127.0.0.1)")
    srv.add_argument(
        "--width", type=int, default=DEFAULT_VIEWPORT[0],
        help=f"session viewport width (default: {DEFAULT_VIEWPORT[0]})",
    )
    srv.add_argument(
        "--height", type=int, default=DEFAULT_VIEWPORT[1],
        help=f"session viewport height (default: {DEFAULT_VIEWPORT[1]})",
    )
    return parser


def _cmd_generate(args: argparse.Namespace, config: EngineConfig) -> int:
    for name in ("chromosomes", "loci", "fibers", "nucleosomes"):
        if getattr(args, name) < 1:
            return _fail(f"--{name} must be at least 1", EXIT_USAGE)
    if args.nucleus_radius <= 0:
        return _fail("--nucleus-radius must be positive", EXIT_USAGE)
    params = GenParams(
        chromosomes=args.chromosomes,
        loci_per_chromosome=args.loci,
        fibers_per_locus=args.fibers,
        nucleosomes_per_fiber=args.nucleosomes,
        nucleus_radius=args.nucleus_radius,
        seed=args.seed,
    )
    dataset = generate(params, config)
    manifest = write_dataset(dataset, args.out)
    counts = " ".join(
        f"{level.name.lower()}={len(dataset.tables[level])}" for level in STORED_LEVELS
    )
    print(f"wrote {manifest.path} ({counts})")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace, config: EngineConfig) -> int:
    try:
        dataset = load_dataset(_manifest_path(args.manifest))
    except GssError as exc:
        return _fail(str(exc), EXIT_VALIDATION)
    report = validate(dataset)
    print(report.to_text())
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _cmd_snapshot(args: argparse.Namespace, config: EngineConfig) -> int:
    if not 0.0 <= args.scale <= 7.0:
        return _fail("--scale must be within [0, 7]", EXIT_USAGE)
    if args.width < 1 or args.height < 1:
        return _fail("--width and --height must be at least 1", EXIT_USAGE)
    if args.focus_chromosome < 0:
        return _fail("--focus-chromosome must be non-negative", EXIT_USAGE)
    if args.focus_fiber is not None and args.focus_fiber < 0:
        return _fail("--focus-fiber must be non-negative", EXIT_USAGE)
    dataset = load_dataset(_manifest_path(args.data))
    try:
        if args.focus_fiber is not None:
            focus = set_focus_fiber(dataset, args.focus_fiber)
            if focus.chromosome != args.focus_chromosome:
                return _fail(
                    f"fiber {args.focus_fiber} is not on chromosome {args.focus_chromosome}",
                    EXIT_USAGE,
                )
        else:
            focus = set_focus_chromosome(dataset, args.focus_chromosome)
    except IndexError as exc:
        return _fail(str(exc), EXIT_USAGE)
    rlist = assemble(dataset, ScaleParam(args.scale), focus, config)
    distance = distance_from_scale(args.scale, CameraScaleConfig.from_engine(config))
    camera = camera_for(
        focus.focus_point, distance, args.width, args.height, fov_deg=config.fov_deg
    )
    image = render(rlist, camera)
    write_image(image, args.out)
    print(
        f"wrote {args.out} ({args.width}x{args.height}, "
        f"row {rlist.row}, {rlist.total_instances()} instances)"
    )
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace, config: EngineConfig) -> int:
    if args.steps < 2:
        return _fail("--steps must be at least 2", EXIT_USAGE)
    if args.focus_chromosome is not None and args.focus_chromosome < 0:
        return _fail("--focus-chromosome must be non-negative", EXIT_USAGE)
    dataset = load_dataset(_manifest_path(args.data))
    try:
        if args.focus_chromosome is None:
            focus = default_focus(dataset)
        else:
            focus = set_focus_chromosome(dataset, args.focus_chromosome)
    except IndexError as exc:
        return _fail(str(exc), EXIT_USAGE)
    rows = []
    for i in range(args.steps):
        s = 7.0 * i / (args.steps - 1)
        start = time.perf_counter()
        rlist = assemble(dataset, ScaleParam(s), focus, config)
        elapsed_ms = (time.perf_counter() - start) * 1e3
        overlay = sum(len(b) for b in rlist.batches if b.role == "overlay_detail")
        rows.append((f"{s:.6g}", rlist.row, rlist.total_instances(), overlay, f"{elapsed_ms:.3f}"))
    stream = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        writer = csv.writer(stream)
        writer.writerow(["s", "row", "instances_total", "instances_overlay", "assemble_ms"])
        writer.writerows(rows)
    finally:
        if stream is not sys.stdout:
            stream.close()
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace, config: EngineConfig) -> int:
    if not 1 <= args.port <= 65535:
        return _fail("--port must be within [1, 65535]", EXIT_USAGE)
    if args.width < 1 or args.height < 1:
        return _fail("--width and --height must be at least 1", EXIT_USAGE)
    dataset = load_dataset(_manifest_path(args.data))
    print(f"serving on ws://{args.host}:{args.port}/ws", file=sys.stderr)
    serve(
        dataset,
        config,
        host=args.host,
        port=args.port,
        viewport=(args.width, args.height),
    )
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "validate": _cmd_validate,
    "snapshot": _cmd_snapshot,
    "bench": _cmd_bench,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
    except Exception as exc:
        return _fail(f"cannot load config: {exc}", EXIT_USAGE)
    try:
        return _COMMANDS[args.command](args, config)
    except KeyboardInterrupt:
        return EXIT_OK
    except (GssError, CapacityError, InstanceCapError, OSError, ValueError) as exc:
        return _fail(str(exc), EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
