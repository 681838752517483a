"""``primdecomp`` command line: decompose, metrics, cost.

Exit codes: 0 ok, 2 missing input file, 64 bad flag, 65 malformed input
data, 70 internal invariant breach.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .decomposer import DecomposeConfig, IntersectionSampling, decompose, enclosure_violations
from .mesh import MeshError, deduplicate_vertices, parse_obj
from .metrics import DEFAULT_SAMPLES, byte_cost, one_way_distance, point_mesh_distances, sample_surface
from .primitives import KIND_NAMES, ConfigError
from .serialize import PrimitiveSetFile, SchemaError, dumps, export_mtl, export_obj, loads

EXIT_OK = 0
EXIT_NOINPUT = 2
EXIT_USAGE = 64
EXIT_DATAERR = 65
EXIT_SOFTWARE = 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_float(s: str) -> float:
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


def _seed(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _weights(s: str) -> dict[str, float]:
    out = {}
    for item in filter(None, s.split(",")):
        k, sep, v = item.partition("=")
        if not sep or k.strip() not in KIND_NAMES:
            raise argparse.ArgumentTypeError(f"bad weight entry {item!r}; expected kind=value")
        out[k.strip()] = float(v)
    return out


def _kinds(s: str) -> frozenset:
    kinds = frozenset(k.strip() for k in s.split(",") if k.strip())
    unknown = kinds - set(KIND_NAMES)
    if unknown or not kinds:
        raise argparse.ArgumentTypeError(f"unknown kinds {sorted(unknown)}; choose from {','.join(KIND_NAMES)}")
    return kinds


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="primdecomp", description="Decompose a mesh into enclosing convex primitives.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("decompose", help="fit at most N primitives around an OBJ mesh")
    d.add_argument("--input", required=True, help="input OBJ")
    d.add_argument("--target", required=True, type=_positive_int, help="maximum primitive count N")
    d.add_argument("--max-excess-volume", type=float, default=math.inf, help="merge cost cap, fraction of bbox volume")
    d.add_argument("--weights", type=_weights, default={}, help="per-kind volume weights, kind=value,...")
    d.add_argument("--kinds", type=_kinds, default=frozenset(KIND_NAMES), help="enabled kinds, comma separated")
    d.add_argument("--tangent-eps", type=_nonneg_float, default=0.0, help="weight of the in-plane tangent term")
    d.add_argument("--dedup-eps", type=_nonneg_float, default=0.0, help="vertex weld distance (0 = exact)")
    d.add_argument("--min-extent", type=float, default=1e-3, help="lower clamp on fitted lengths")
    d.add_argument("--isect-cost", type=_positive_int, default=None, metavar="SAMPLES",
                   help="subtract sampled overlap volume in merge costs")
    d.add_argument("--seed", type=_seed, default=0)
    d.add_argument("--no-cull", action="store_true", help="keep primitives enclosed by others")
    d.add_argument("--out", help="primitive-set JSON output")
    d.add_argument("--mesh-out", help="quantized OBJ output (an .mtl is written beside it)")
    d.add_argument("--segments", type=_positive_int, default=32, help="segments for curved primitives")
    d.add_argument("--figure", help="write a PNG of the decomposition")

    m = sub.add_parser("metrics", help="one-way distance from a collider to its input")
    m.add_argument("--input", required=True, help="input OBJ")
    m.add_argument("--collider", required=True, help="primitive JSON or OBJ")
    m.add_argument("--samples", type=_positive_int, default=DEFAULT_SAMPLES)
    m.add_argument("--seed", type=_seed, default=0)
    m.add_argument("--segments", type=_positive_int, default=32)
    m.add_argument("--out", help="write the report JSON here")
    m.add_argument("--figure", help="write a PNG histogram of distances")

    c = sub.add_parser("cost", help="storage bytes of a primitive-set JSON")
    c.add_argument("--collider", required=True)
    return p


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise _Exit(EXIT_NOINPUT, f"no such file: {path}")
    except IsADirectoryError:
        raise _Exit(EXIT_NOINPUT, f"is a directory: {path}")


def _load_mesh(path: str):
    data = _read_bytes(path)
    try:
        return parse_obj(data), data
    except MeshError as exc:
        raise _Exit(EXIT_DATAERR, f"{path}: {exc}")


def _load_set(path: str) -> PrimitiveSetFile:
    data = _read_bytes(path)
    try:
        return loads(data)
    except SchemaError as exc:
        raise _Exit(EXIT_DATAERR, f"{path}: {exc}")


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def cmd_decompose(args) -> int:
    mesh, data = _load_mesh(args.input)
    try:
        config = DecomposeConfig(
            target_primitives=args.target,
            max_excess_volume=args.max_excess_volume,
            weights=args.weights,
            tangent_epsilon=args.tangent_eps,
            kinds=args.kinds,
            intersection=None if args.isect_cost is None else IntersectionSampling(args.isect_cost, args.seed),
            cull=not args.no_cull,
            min_extent=args.min_extent,
        )
    except ConfigError as exc:
        raise UsageError(str(exc))
    t0 = time.perf_counter()
    mesh = deduplicate_vertices(mesh, args.dedup_eps)
    if mesh.n_faces == 0:
        raise _Exit(EXIT_DATAERR, f"{args.input}: no usable faces")
    prov = {"input": os.path.basename(args.input), "input_sha256": hashlib.sha256(data).hexdigest(),
            "dedup_epsilon": args.dedup_eps}
    pset = decompose(mesh, config=config, provenance=prov)
    wall = time.perf_counter() - t0
    bad = enclosure_violations(mesh, pset)
    if bad:
        raise _Exit(EXIT_SOFTWARE, f"enclosure check failed for {len(bad)} (primitive, vertex) pairs, first {bad[:5]}")
    if args.out:
        _write(args.out, dumps(PrimitiveSetFile.from_set(pset)))
    prims = pset.primitives
    if args.mesh_out:
        mtl = Path(args.mesh_out).with_suffix(".mtl")
        _write(args.mesh_out, export_obj(prims, args.segments, mtllib=mtl.name))
        _write(str(mtl), export_mtl())
    if args.figure:
        from .plotting import decomposition_figure

        decomposition_figure(mesh, prims, args.figure, title=os.path.basename(args.input))
    cost = byte_cost(pset)
    counts = " ".join(f"{k}={n}" for k, n in pset.kind_counts().items() if n)
    print(f"faces={mesh.n_faces} primitives={len(pset)} {counts}")
    print(f"total_bytes={cost.total_bytes} wall_time={wall:.3f}s")
    return EXIT_OK


def cmd_metrics(args) -> int:
    target, _ = _load_mesh(args.input)
    if args.collider.lower().endswith(".json"):
        source = _load_set(args.collider).to_primitives()
    else:
        source, _ = _load_mesh(args.collider)
    try:
        S = sample_surface(source, args.samples, args.seed, args.segments)
        report = one_way_distance(S, target, seed=args.seed)
    except ValueError as exc:
        raise _Exit(EXIT_DATAERR, str(exc))
    text = _json(report.to_dict())
    sys.stdout.write(text)
    if args.out:
        _write(args.out, text)
    if args.figure:
        from .plotting import distance_figure

        distance_figure(point_mesh_distances(S, target), report.bbox_diagonal, args.figure)
    return EXIT_OK


def cmd_cost(args) -> int:
    f = _load_set(args.collider)
    sys.stdout.write(_json(byte_cost([r.kind for r in f.primitives]).to_dict()))
    return EXIT_OK


_COMMANDS = {"decompose": cmd_decompose, "metrics": cmd_metrics, "cost": cmd_cost}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"primdecomp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _Exit as exc:
        print(f"primdecomp: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
