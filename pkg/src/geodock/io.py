"""
Plain-text file formats.

Ligand library (``.lgd``), one block per ligand::

    ligand NAME
    atoms 3
    0.0 0.0 0.0 0.7
    1.5 0.0 0.0 0.7
    2.0 1.4 0.0 0.7
    bonds 2
    0 1
    1 2
    rotamers 1
    0 1
    end

Pocket (``.pkt``)::

    origin 0.0 0.0 0.0
    spacing 1.0
    dims 2 2 2
    0.0 0.1
    ...

followed by ``nx * ny * nz`` values, x fastest. Blank lines and ``#``
comments are ignored in both. Floats are written with ``repr`` so that a
parse/serialize round trip is exact.
"""
from __future__ import annotations

import csv
from typing import IO, Iterable

import numpy as np

from .errors import LigandValidationError, ParseError, PocketRangeError
from .molecule import Ligand, make_ligand, validate_ligand
from .scoring import Pocket

RESULT_COLUMNS = (
    "ligand_name",
    "best_score",
    "best_restart_id",
    "score_calls",
    "align_seconds",
    "optimize_seconds",
)
METRICS_COLUMNS = (
    "workers",
    "devices",
    "lane_width",
    "mode",
    "ligands",
    "wall_seconds",
    "throughput",
    "device_utilization",
    "mean_lane_wait",
    "lane_errors",
)


def _lines(stream: IO[str] | str):
    text = stream if isinstance(stream, str) else stream.read()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line.split()


def _float(tok, lineno):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", lineno) from None


def _int(tok, lineno):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"not an integer: {tok!r}", lineno) from None


class _Reader:
    def __init__(self, stream):
        self._it = _lines(stream)
        self.lineno = 0

    def next(self, what):
        try:
            self.lineno, toks = next(self._it)
        except StopIteration:
            raise ParseError(f"unexpected end of file, expected {what}", self.lineno + 1) from None
        return toks

    def keyword(self, key, nargs):
        toks = self.next(f"'{key}'")
        if toks[0] != key or len(toks) != nargs + 1:
            raise ParseError(f"expected '{key}' with {nargs} value(s), got {' '.join(toks)!r}", self.lineno)
        return toks[1:]

    def pairs(self, key):
        (count,) = self.keyword(key, 1)
        out = []
        for _ in range(_int(count, self.lineno)):
            toks = self.next(f"{key} entry")
            if len(toks) != 2:
                raise ParseError(f"expected 'i j', got {' '.join(toks)!r}", self.lineno)
            out.append((_int(toks[0], self.lineno), _int(toks[1], self.lineno)))
        return out


def parse_ligand_library(stream) -> list[Ligand]:
    """Parse a ``.lgd`` library. Every returned ligand passes validation."""
    reader = _Reader(stream)
    library = []
    while True:
        try:
            reader.lineno, toks = next(reader._it)
        except StopIteration:
            return library
        if toks[0] != "ligand" or len(toks) < 2:
            raise ParseError(f"expected 'ligand NAME', got {' '.join(toks)!r}", reader.lineno)
        name = " ".join(toks[1:])
        (count,) = reader.keyword("atoms", 1)
        coords, radii = [], []
        for _ in range(_int(count, reader.lineno)):
            vals = reader.next("atom line")
            if len(vals) != 4:
                raise ParseError(f"expected 'x y z radius', got {' '.join(vals)!r}", reader.lineno)
            x, y, z, r = (_float(v, reader.lineno) for v in vals)
            coords.append((x, y, z))
            radii.append(r)
        bonds = reader.pairs("bonds")
        rotamers = reader.pairs("rotamers")
        reader.keyword("end", 0)
        ligand = make_ligand(name, np.array(coords).reshape(-1, 3), radii, bonds, rotamers)
        problems = validate_ligand(ligand)
        if problems:
            raise LigandValidationError(name, problems)
        library.append(ligand)


def format_ligand(ligand: Ligand) -> str:
    out = [f"ligand {ligand.name}", f"atoms {ligand.n_atoms}"]
    for (x, y, z), r in zip(ligand.coords.tolist(), ligand.radii.tolist()):
        out.append(f"{x!r} {y!r} {z!r} {r!r}")
    out.append(f"bonds {len(ligand.bonds)}")
    out.extend(f"{i} {j}" for i, j in ligand.bonds)
    out.append(f"rotamers {len(ligand.rotamers)}")
    out.extend(f"{rot.bond[0]} {rot.bond[1]}" for rot in ligand.rotamers)
    out.append("end")
    return "\n".join(out) + "\n"


def write_ligand_library(library: Iterable[Ligand], stream: IO[str]) -> None:
    for ligand in library:
        stream.write(format_ligand(ligand))


def parse_pocket(stream) -> Pocket:
    reader = _Reader(stream)
    origin = [_float(t, reader.lineno) for t in reader.keyword("origin", 3)]
    (spacing,) = reader.keyword("spacing", 1)
    spacing = _float(spacing, reader.lineno)
    dims = [_int(t, reader.lineno) for t in reader.keyword("dims", 3)]
    if spacing <= 0:
        raise ParseError(f"spacing must be positive, got {spacing!r}", reader.lineno)
    if min(dims) < 2:
        raise ParseError(f"every dimension must be >= 2, got {dims}", reader.lineno)
    expected = dims[0] * dims[1] * dims[2]
    values = []
    for lineno, toks in reader._it:
        for tok in toks:
            v = _float(tok, lineno)
            if not 0.0 <= v <= 1.0:
                raise PocketRangeError(f"field value {tok} outside [0, 1]", lineno)
            values.append(v)
    if len(values) != expected:
        raise ParseError(f"expected {expected} values, got {len(values)}")
    return Pocket(tuple(origin), spacing, tuple(dims), np.array(values))


def format_pocket(pocket: Pocket) -> str:
    ox, oy, oz = pocket.origin
    nx, ny, nz = pocket.dims
    out = [f"origin {ox!r} {oy!r} {oz!r}", f"spacing {pocket.spacing!r}", f"dims {nx} {ny} {nz}"]
    vals = pocket.values.tolist()
    for start in range(0, len(vals), nx):
        out.append(" ".join(repr(v) for v in vals[start:start + nx]))
    return "\n".join(out) + "\n"


def write_pocket(pocket: Pocket, stream: IO[str]) -> None:
    stream.write(format_pocket(pocket))


def _writer(stream):
    return csv.writer(stream, lineterminator="\n")


def write_results(results, stream: IO[str], timings: bool = False) -> None:
    """Per-ligand results CSV in input order.

    Timing columns stay empty unless ``timings`` is set, which keeps the
    file byte-identical across runs and schedules.
    """
    w = _writer(stream)
    w.writerow(RESULT_COLUMNS)
    for r in results:
        w.writerow([
            r.ligand_name,
            format(r.best_score, ".9g"),
            r.best_restart_id,
            r.score_calls,
            format(r.align_seconds, ".6f") if timings else "",
            format(r.optimize_seconds, ".6f") if timings else "",
        ])


def write_metrics(metrics, stream: IO[str]) -> None:
    """One-row run summary followed by nothing else; see ``METRICS_COLUMNS``."""
    w = _writer(stream)
    w.writerow(METRICS_COLUMNS)
    w.writerow([
        metrics.n_workers,
        metrics.n_devices,
        metrics.lane_width,
        metrics.mode,
        metrics.n_ligands,
        format(metrics.wall_time, ".6f"),
        format(metrics.throughput, ".6g"),
        format(metrics.device_utilization, ".6g"),
        format(metrics.mean_lane_wait, ".6g"),
        len(metrics.errors),
    ])


def write_rows(rows, columns, stream: IO[str]) -> None:
    w = _writer(stream)
    w.writerow(columns)
    for row in rows:
        w.writerow([row[c] for c in columns])
