"""Command line front end.

    rsimp simplify -i in.ply -o out.ply --vertices 800 --checkpoint s.rsimp-ckpt
    rsimp refine   -i in.ply --checkpoint s.rsimp-ckpt -o out2.ply --vertices 2000
    rsimp cluster  -i in.ply -o out.ply --vertices 800
    rsimp measure  -a in.ply -b out.ply --samples 100000 --seed 7
    rsimp bench    --bench-sizes 5000,10000,20000,40000 --vertices 400
    rsimp info     -i in.ply

Reports go to standard output as ``key=value`` lines.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import time

from . import checkpoint as ckpt
from . import shapes
from .errors import RsimpError
from .mesh import bounding_box, validate
from .meshio import read_mesh, write_mesh
from .metro import DEFAULT_SEED, mean_error
from .simplify import refine, refine_to_faces, simplify, simplify_to_faces
from .vclust import cluster_simplify, resolution_for_target

log = logging.getLogger("rsimp")


def target_faces_to_vertices(target_faces: int) -> int:
    """First vertex estimate for a face target (V = F/2 + 2 on closed meshes)."""
    if target_faces < 1:
        raise ValueError(f"target face count must be >= 1, got {target_faces}")
    return target_faces // 2 + 2


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}")


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsimp", description="Coarse-to-fine mesh simplification.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def targets(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--vertices", type=_positive, help="output vertex count")
        g.add_argument("--faces", type=_positive, help="output face count")
        p.add_argument("--time-budget", type=float, metavar="MS",
                       help="stop splitting after this many milliseconds")

    def output(p, required=True):
        p.add_argument("-o", "--output", required=required)
        p.add_argument("--format", choices=("obj", "ply"))
        p.add_argument("--ascii", action="store_true", help="write ASCII instead of binary PLY")

    p = sub.add_parser("simplify", help="simplify a mesh")
    p.add_argument("-i", "--input", required=True)
    output(p)
    targets(p)
    p.add_argument("--checkpoint", metavar="PATH", help="save the final state here")
    p.add_argument("--resume", metavar="PATH", help="continue from this saved state")
    p.add_argument("--no-topology-check", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("refine", help="continue a saved simplification")
    p.add_argument("-i", "--input", required=True)
    output(p)
    targets(p)
    p.add_argument("--checkpoint", metavar="PATH",
                   help="state to load (unless --resume is given) and to update")
    p.add_argument("--resume", metavar="PATH", help="state to load")

    p = sub.add_parser("cluster", help="uniform vertex clustering baseline")
    p.add_argument("-i", "--input", required=True)
    output(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--resolution", type=_positive)
    g.add_argument("--vertices", type=_positive)

    p = sub.add_parser("measure", help="mean surface distance between two meshes")
    p.add_argument("-a", "--original", "-i", "--input", dest="original", required=True)
    p.add_argument("-b", "--simplified", dest="simplified", required=True)
    p.add_argument("--samples", type=_positive)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--json", metavar="PATH", help="also write the report as JSON")

    p = sub.add_parser("bench", help="timing table on procedural tori")
    p.add_argument("--bench-sizes", type=_int_list, default=[5000, 10000, 20000, 40000],
                   help="input face counts at fixed output size")
    p.add_argument("--vertices", type=_positive, default=400, help="fixed output vertex count")
    p.add_argument("--bench-outputs", type=_int_list, default=[],
                   help="output vertex counts at fixed input size")
    p.add_argument("--bench-input", type=_positive, default=20000,
                   help="input face count used with --bench-outputs")
    p.add_argument("--repeat", type=_positive, default=3, help="report the fastest of N runs")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("info", help="structural report for a mesh")
    p.add_argument("-i", "--input", required=True)
    return parser


def _emit(out, **fields):
    for key, value in fields.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        out.write(f"{key}={value}\n")


def _seconds(ms):
    return None if ms is None else ms / 1000.0


def _write_output(args, mesh):
    write_mesh(mesh, args.output, args.format, binary=not args.ascii)


def _report_run(out, state, result, elapsed, rounds=None):
    stats = state.last_run
    _emit(out, vertices=result.n_vertices, faces=result.n_faces, splits=state.splits,
          stopped_by=stats.stopped_by, fallbacks=result.fallbacks,
          split_ms=stats.loop_seconds * 1e3, post_ms=stats.post_seconds * 1e3,
          elapsed_ms=elapsed * 1e3)
    if rounds is not None:
        _emit(out, rounds=rounds)


def _cmd_simplify(args, clock, out):
    if args.vertices is None and args.faces is None and args.time_budget is None:
        raise ValueError("give --vertices, --faces or --time-budget")
    mesh = read_mesh(args.input)
    budget = _seconds(args.time_budget)
    start = clock()
    resume = getattr(args, "resume", None) or (args.checkpoint if args.command == "refine" else None)
    rounds = None
    if resume:
        state = ckpt.load_checkpoint(resume, mesh)
        if args.faces is not None:
            state, result, rounds = refine_to_faces(state, mesh, args.faces, budget, clock=clock)
        else:
            target = args.vertices if args.vertices is not None else mesh.n_vertices
            state, result = refine(state, mesh, target, budget, clock=clock)
    else:
        topo = not getattr(args, "no_topology_check", False)
        if args.faces is not None:
            state, result, rounds = simplify_to_faces(mesh, args.faces, budget,
                                                      topology_check=topo, clock=clock)
        else:
            target = args.vertices if args.vertices is not None else mesh.n_vertices
            state, result = simplify(mesh, target, budget, topology_check=topo, clock=clock)
    elapsed = clock() - start
    _write_output(args, result)
    if args.checkpoint:
        ckpt.save_checkpoint(state, args.checkpoint)
    _report_run(out, state, result, elapsed, rounds)


def _cmd_cluster(args, clock, out):
    mesh = read_mesh(args.input)
    start = clock()
    resolution = args.resolution or resolution_for_target(mesh, args.vertices)
    result = cluster_simplify(mesh, resolution)
    elapsed = clock() - start
    _write_output(args, result)
    _emit(out, resolution=resolution, vertices=result.n_vertices, faces=result.n_faces,
          elapsed_ms=elapsed * 1e3)


def _cmd_measure(args, clock, out):
    original = read_mesh(args.original)
    simplified = read_mesh(args.simplified)
    report = mean_error(original, simplified, args.samples, args.seed)
    out.write(report.to_text() + "\n")
    if args.json:
        from .meshio import _atomic_write
        _atomic_write(args.json, (report.to_json() + "\n").encode())


def _best_time(fn, repeat, clock):
    best = math.inf
    result = None
    for _ in range(repeat):
        t0 = clock()
        result = fn()
        best = min(best, clock() - t0)
    return best, result


def _cmd_bench(args, clock, out):
    rows = []
    for n_in in args.bench_sizes:
        mesh = shapes.torus_with_faces(n_in)
        rows.append(_bench_row(mesh, args.vertices, args.repeat, clock))
    if args.bench_outputs:
        mesh = shapes.torus_with_faces(args.bench_input)
        for n_out in args.bench_outputs:
            rows.append(_bench_row(mesh, n_out, args.repeat, clock))
    out.write(f"{'algorithm':<10} {'input_faces':>11} {'target':>7} "
              f"{'out_vertices':>12} {'out_faces':>9} {'seconds':>9}\n")
    for row in rows:
        for name, n_in, target, result, seconds in row:
            out.write(f"{name:<10} {n_in:>11} {target:>7} {result.n_vertices:>12} "
                      f"{result.n_faces:>9} {seconds:>9.4f}\n")


def _bench_row(mesh, target, repeat, clock):
    t_rs, (_, rs) = _best_time(lambda: simplify(mesh, target), repeat, clock)
    resolution = resolution_for_target(mesh, rs.n_vertices)
    t_vc, vc = _best_time(lambda: cluster_simplify(mesh, resolution), repeat, clock)
    return [("rsimp", mesh.n_faces, target, rs, t_rs),
            ("vcluster", mesh.n_faces, target, vc, t_vc)]


def _cmd_info(args, clock, out):
    mesh = read_mesh(args.input)
    for line in validate(mesh).lines():
        out.write(line + "\n")
    _emit(out, bbox_diagonal=bounding_box(mesh).diagonal, total_area=mesh.total_area)


COMMANDS = {
    "simplify": _cmd_simplify,
    "refine": _cmd_simplify,
    "cluster": _cmd_cluster,
    "measure": _cmd_measure,
    "bench": _cmd_bench,
    "info": _cmd_info,
}


def run(args, clock=time.perf_counter, stdout=None, stderr=None) -> int:
    """Execute a parsed command; returns the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if args.command == "refine" and not (args.checkpoint or args.resume):
        stderr.write("rsimp: error: refine needs --checkpoint or --resume\n")
        return 2
    try:
        COMMANDS[args.command](args, clock, stdout)
    except (RsimpError, OSError, ValueError) as exc:
        stderr.write(f"rsimp: error: {exc}\n")
        return 1
    return 0


def main(argv=None, stdout=None, stderr=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="rsimp: %(levelname)s: %(message)s", stream=stderr or sys.stderr)
    return run(args, stdout=stdout, stderr=stderr)


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
