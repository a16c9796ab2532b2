"""Plain-text readers and writers for measures, grid fields, flows and tables.

All formats are line oriented; ``#`` starts a comment, blank lines are
ignored, and numbers are written with 17 significant digits so a write/read
round trip is exact.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .content import GridField
from .errors import FormatError, PreconditionError
from .measures import ArcPiece, BoxPiece, TestMeasure, VectorMeasure
from .smirnov import FlowGraph, grid_edges, grid_flow


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _floats(tokens, path, no):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise FormatError(f"expected numbers, got {' '.join(tokens)!r}", path, no) from exc


def _read(path_or_text, is_text=False):
    if is_text:
        return path_or_text, None
    p = Path(path_or_text)
    try:
        return p.read_text(), str(p)
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", str(p)) from exc


def _dim_header(lines, path):
    try:
        no, line = next(lines)
    except StopIteration:
        raise FormatError("empty file; expected 'dim=<d>'", path) from None
    key, _, val = line.partition("=")
    if key.strip() != "dim" or not val.strip().isdigit() or int(val) < 1:
        raise FormatError(f"expected 'dim=<d>', got {line!r}", path, no)
    return int(val)


def dumps_segments(F: VectorMeasure, loops=None) -> str:
    """Segment soup: ``dim=<d>`` then one ``tail... head... weight`` line per segment.

    ``loops`` (a list of segment counts) inserts ``# loop k`` separators.
    """
    out = [f"dim={F.dim}"]
    starts = set()
    if loops is not None:
        starts = {int(s) for s in np.cumsum([0] + list(loops))[:-1]}
    k = 0
    for i in range(len(F)):
        if i in starts:
            out.append(f"# loop {k}")
            k += 1
        out.append(" ".join(fmt(v) for v in (*F.tails[i], *F.heads[i], F.weights[i])))
    return "\n".join(out) + "\n"


def loads_segments(text: str, path=None) -> VectorMeasure:
    lines = _lines(text)
    d = _dim_header(lines, path)
    tails, heads, weights = [], [], []
    for no, line in lines:
        tok = line.split()
        if len(tok) != 2 * d + 1:
            raise FormatError(f"expected {2 * d + 1} numbers per segment, got {len(tok)}", path, no)
        v = _floats(tok, path, no)
        tails.append(v[:d])
        heads.append(v[d:2 * d])
        weights.append(v[-1])
    try:
        return VectorMeasure(d, np.array(tails).reshape(-1, d), np.array(heads).reshape(-1, d), np.array(weights))
    except PreconditionError as exc:
        raise FormatError(str(exc), path) from exc


def read_segments(path) -> VectorMeasure:
    text, p = _read(path)
    return loads_segments(text, p)


def dumps_test_measure(nu: TestMeasure) -> str:
    out = [f"dim={nu.dim}"]
    for p in nu.pieces:
        if isinstance(p, ArcPiece):
            out.append("arc " + " ".join(fmt(v) for v in (*p.tail, *p.head, p.density)))
        else:
            out.append("box " + " ".join(fmt(v) for v in (*p.lo, *p.hi, p.density)))
    return "\n".join(out) + "\n"


def loads_test_measure(text: str, path=None) -> TestMeasure:
    lines = _lines(text)
    d = _dim_header(lines, path)
    pieces = []
    for no, line in lines:
        kind, *tok = line.split()
        if kind not in ("arc", "box"):
            raise FormatError(f"expected 'arc' or 'box', got {kind!r}", path, no)
        if len(tok) != 2 * d + 1:
            raise FormatError(f"{kind} needs {2 * d + 1} numbers, got {len(tok)}", path, no)
        v = _floats(tok, path, no)
        try:
            cls = ArcPiece if kind == "arc" else BoxPiece
            pieces.append(cls(np.array(v[:d]), np.array(v[d:2 * d]), v[-1]))
        except PreconditionError as exc:
            raise FormatError(str(exc), path, no) from exc
    return TestMeasure(d, tuple(pieces))


def read_test_measure(path) -> TestMeasure:
    text, p = _read(path)
    return loads_test_measure(text, p)


def dumps_grid_field(g: GridField) -> str:
    """Header ``dim h n_1 .. n_d o_1 .. o_d``, then one cell per line in row-major order."""
    head = [fmt(g.dim), fmt(g.spacing), *(fmt(n) for n in g.extents), *(fmt(o) for o in g.origin)]
    vals = g.values.reshape(int(np.prod(g.extents)), -1)
    body = (" ".join(fmt(v) for v in row) for row in vals)
    return " ".join(head) + "\n" + "\n".join(body) + "\n"


def loads_grid_field(text: str, path=None) -> GridField:
    lines = _lines(text)
    try:
        no, line = next(lines)
    except StopIteration:
        raise FormatError("empty grid file", path) from None
    tok = line.split()
    try:
        d = int(tok[0])
        h = float(tok[1])
        extents = tuple(int(t) for t in tok[2:2 + d])
    except (ValueError, IndexError) as exc:
        raise FormatError("header must be 'dim h n_1 .. n_d [origin]'", path, no) from exc
    if len(extents) != d or len(tok) not in (2 + d, 2 + 2 * d):
        raise FormatError("header must be 'dim h n_1 .. n_d [origin]'", path, no)
    origin = _floats(tok[2 + d:], path, no) if len(tok) == 2 + 2 * d else [0.0] * d
    rows = []
    width = None
    for no, line in lines:
        v = _floats(line.split(), path, no)
        if width is None:
            width = len(v)
        elif len(v) != width:
            raise FormatError(f"expected {width} values per cell, got {len(v)}", path, no)
        rows.append(v)
    n = int(np.prod(extents))
    if len(rows) != n:
        raise FormatError(f"expected {n} cells, found {len(rows)}", path)
    vals = np.array(rows).reshape(extents + ((width,) if width != 1 else ()))
    try:
        return GridField(d, np.array(origin), h, extents, vals)
    except PreconditionError as exc:
        raise FormatError(str(exc), path) from exc


def read_grid_field(path) -> GridField:
    text, p = _read(path)
    return loads_grid_field(text, p)


def dumps_grid_flow(shape, flows, h=1.0) -> str:
    """``grid d n_1 .. n_d h`` then ``node_index axis flow`` for every nonzero edge."""
    tails, _, axes = grid_edges(shape)
    out = ["grid " + " ".join([fmt(len(shape)), *(fmt(n) for n in shape), fmt(h)])]
    for t, a, f in zip(tails, axes, np.asarray(flows)):
        if f != 0:
            out.append(f"{int(t)} {int(a)} {fmt(f)}")
    return "\n".join(out) + "\n"


def loads_grid_flow(text: str, path=None) -> FlowGraph:
    lines = _lines(text)
    try:
        no, line = next(lines)
    except StopIteration:
        raise FormatError("empty flow file", path) from None
    tok = line.split()
    try:
        if tok[0] != "grid":
            raise ValueError
        d = int(tok[1])
        shape = tuple(int(t) for t in tok[2:2 + d])
        h = float(tok[2 + d])
        if len(tok) != 3 + d:
            raise ValueError
    except (ValueError, IndexError) as exc:
        raise FormatError("header must be 'grid d n_1 .. n_d h'", path, no) from exc
    tails, _, axes = grid_edges(shape)
    lookup = {(int(t), int(a)): i for i, (t, a) in enumerate(zip(tails, axes))}
    integer = True
    entries = []
    for no, line in lines:
        tok = line.split()
        if len(tok) != 3:
            raise FormatError("expected 'node_index axis flow'", path, no)
        try:
            node, axis = int(tok[0]), int(tok[1])
        except ValueError as exc:
            raise FormatError("node index and axis must be integers", path, no) from exc
        if (node, axis) not in lookup:
            raise FormatError(f"no lattice edge leaves node {node} along axis {axis}", path, no)
        try:
            val = int(tok[2])
        except ValueError:
            val = _floats(tok[2:], path, no)[0]
            integer = False
        entries.append((lookup[(node, axis)], val))
    flows = np.zeros(len(tails), dtype=np.int64 if integer else float)
    for idx, val in entries:
        flows[idx] += val
    return grid_flow(shape, flows, h)


def read_grid_flow(path) -> FlowGraph:
    text, p = _read(path)
    return loads_grid_flow(text, p)


def write_csv(path, header, rows) -> None:
    """RFC-style CSV with a header row and 17-significant-digit numbers."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def write_text(path, text: str) -> None:
    Path(path).write_text(text)
