"""Command-line front end: build, query, sample, merge, info, eval.

Point streams are text: one point per row, coordinates separated by commas
or whitespace, '#' lines and blank lines skipped. Input/output paths accept
'-' for stdin/stdout. Builds are streaming: rows are parsed and folded into
the sketch in bounded chunks, never materialized in full.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

import argparse
import os
import sys

import numpy as np

from .errors import DSketchError
from .evaluation import SCENARIOS, rows_to_csv
from .partition import AlignedGrid, LshGrid, RegularGrid
from .sketch import DEFAULT_DEPTH, DEFAULT_HEAP_SIZE, DEFAULT_WIDTH, DensitySketch

_CHUNK_ROWS = 8192


class DataError(DSketchError):
    """Malformed input rows (carries the offending line number)."""


def _open_input(path):
    return sys.stdin if path == "-" else open(path, "r")


def _open_output(path):
    return sys.stdout if path in (None, "-") else open(path, "w")


def _iter_rows(stream, skip_header=False):
    """Yield (line_number, tokens) for data-bearing lines."""
    pending_skip = skip_header
    for lineno, line in enumerate(stream, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if pending_skip:
            pending_skip = False
            continue
        yield lineno, s.replace(",", " ").split()


def _parse_point(tokens, lineno):
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise DataError(f"line {lineno}: could not parse numeric values") from None


def _make_partitioner(args, dim):
    if args.scheme == "regular":
        return RegularGrid(dim, args.width)
    if args.scheme == "aligned":
        if args.widths is None:
            raise DataError("--widths is required for the aligned scheme")
        widths = [float(t) for t in args.widths.split(",")]
        if len(widths) != dim:
            raise DataError(
                f"--widths has {len(widths)} entries but the data has dimension {dim}"
            )
        return AlignedGrid(widths)
    return LshGrid(dim, args.width, args.seed)


def _labeled_path(path, label):
    root, ext = os.path.splitext(path)
    return f"{root}.{label}{ext}" if ext else f"{path}.{label}"


def _new_sketch(args, dim):
    return DensitySketch(
        _make_partitioner(args, dim),
        depth=args.K,
        width=args.R,
        heap_size=args.H,
        seed=args.seed,
        recovery=args.recovery,
    )


def cmd_build(args) -> int:
    label_col = args.label_column
    sketches: dict[str, DensitySketch] = {}
    pending: dict[str, list] = {}
    dim = None

    def flush(label):
        rows = pending[label]
        if rows:
            sketches[label].insert_many(np.array(rows, dtype=np.float64))
            pending[label] = []

    stream = _open_input(args.input)
    try:
        for lineno, tokens in _iter_rows(stream, args.skip_header):
            if label_col is not None:
                if label_col >= len(tokens):
                    raise DataError(
                        f"line {lineno}: no label column {label_col} in a "
                        f"{len(tokens)}-field row"
                    )
                label = tokens[label_col]
                tokens = tokens[:label_col] + tokens[label_col + 1 :]
            else:
                label = ""
            point = _parse_point(tokens, lineno)
            if dim is None:
                dim = args.dim if args.dim else len(point)
            if len(point) != dim:
                raise DataError(
                    f"line {lineno}: expected {dim} values, got {len(point)}"
                )
            if label not in sketches:
                sketches[label] = _new_sketch(args, dim)
                pending[label] = []
            pending[label].append(point)
            if len(pending[label]) >= _CHUNK_ROWS:
                flush(label)
        for label in pending:
            flush(label)
    finally:
        if stream is not sys.stdin:
            stream.close()

    if not sketches:
        raise DataError("input contains no data rows")
    for label, ds in sorted(sketches.items()):
        path = args.output if label == "" else _labeled_path(args.output, label)
        with open(path, "wb") as f:
            f.write(ds.to_bytes())
        tag = f" label={label}" if label else ""
        print(
            f"built{tag}: n={ds.n} d={ds.partitioner.dim} "
            f"heap_bins={len(ds.heap)} capture_ratio={ds.capture_ratio():.6f}",
            file=sys.stderr,
        )
    return 0


def _load_sketch(path) -> DensitySketch:
    with open(path, "rb") as f:
        return DensitySketch.from_bytes(f.read())


def cmd_query(args) -> int:
    ds = _load_sketch(args.sketch)
    dim = ds.partitioner.dim
    out = _open_output(args.output)
    stream = _open_input(args.points)
    try:
        batch, rows_done = [], 0

        def flush():
            nonlocal batch
            if batch:
                for v in ds.density_many(np.array(batch, dtype=np.float64)):
                    out.write(f"{v:.17g}\n")
                batch = []

        for lineno, tokens in _iter_rows(stream, args.skip_header):
            point = _parse_point(tokens, lineno)
            if len(point) != dim:
                raise DataError(
                    f"line {lineno}: query has {len(point)} values, sketch dimension is {dim}"
                )
            batch.append(point)
            rows_done += 1
            if len(batch) >= _CHUNK_ROWS:
                flush()
        flush()
    finally:
        if stream is not sys.stdin:
            stream.close()
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_sample(args) -> int:
    if args.count < 0:
        raise DataError("sample count must be >= 0")
    ds = _load_sketch(args.sketch)
    out = _open_output(args.output)
    try:
        if args.count:
            rng = np.random.default_rng(args.seed)
            points = ds.sample_many(args.count, rng)
            for row in points:
                out.write(",".join(f"{v:.17g}" for v in row) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_merge(args) -> int:
    merged = _load_sketch(args.a).merge(_load_sketch(args.b))
    with open(args.output, "wb") as f:
        f.write(merged.to_bytes())
    print(
        f"merged: n={merged.n} heap_bins={len(merged.heap)} "
        f"capture_ratio={merged.capture_ratio():.6f}",
        file=sys.stderr,
    )
    return 0


def cmd_info(args) -> int:
    ds = _load_sketch(args.sketch)
    info = ds.summary()
    info["serialized_bytes"] = os.path.getsize(args.sketch)
    for key, value in info.items():
        print(f"{key}: {value}")
    return 0


def cmd_eval(args) -> int:
    rows = SCENARIOS[args.scenario](seed=args.seed)
    out = _open_output(args.output)
    try:
        out.write(rows_to_csv(rows))
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsk",
        description="Streaming mergeable density sketches over numeric point streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sketch_params(p):
        p.add_argument("--scheme", choices=("regular", "aligned", "lsh"),
                       default="regular")
        p.add_argument("-w", "--width", type=float, default=1.0,
                       help="cell width (regular and lsh schemes)")
        p.add_argument("--widths", help="comma list of per-axis widths (aligned)")
        p.add_argument("--dim", type=int,
                       help="data dimension (required for lsh, else inferred)")
        p.add_argument("-K", type=int, default=DEFAULT_DEPTH,
                       help="count-sketch rows")
        p.add_argument("-R", type=int, default=DEFAULT_WIDTH,
                       help="count-sketch row width")
        p.add_argument("-H", type=int, default=DEFAULT_HEAP_SIZE,
                       help="heap capacity (top bins retained)")
        p.add_argument("--recovery", choices=("mean", "median"), default="mean")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("build", help="build a sketch from a point stream")
    p.add_argument("input", help="input path or - for stdin")
    p.add_argument("-o", "--output", required=True, help="sketch file to write")
    add_sketch_params(p)
    p.add_argument("--skip-header", action="store_true",
                   help="skip the first data-bearing line")
    p.add_argument("--label-column", type=int,
                   help="0-based column holding a class label; builds one sketch "
                        "per label, written as suffixed files")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="density estimates at query points")
    p.add_argument("sketch")
    p.add_argument("points", help="query points path or - for stdin")
    p.add_argument("-o", "--output")
    p.add_argument("--skip-header", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("sample", help="draw synthetic points from a sketch")
    p.add_argument("sketch")
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("merge", help="merge two compatible sketches")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("info", help="print sketch summary")
    p.add_argument("sketch")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("eval", help="run a verification scenario, emit CSV")
    p.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DSketchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
