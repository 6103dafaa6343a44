import io
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geodock.docking import DockParams, dock_ligand
from geodock.errors import LigandValidationError, ParseError, PocketRangeError
from geodock.io import (
    METRICS_COLUMNS,
    RESULT_COLUMNS,
    format_ligand,
    format_pocket,
    parse_ligand_library,
    parse_pocket,
    write_ligand_library,
    write_metrics,
    write_results,
)
from geodock.pipeline import NodeConfig, run_screening
from geodock.synth import make_library, make_pocket
from geodock.testkit import reference_dock

GOLDEN = Path(__file__).parent / "golden"
GOLDEN_PARAMS = DockParams(n_restarts=4, num_repetitions=2, rotation_steps=(6, 6, 4), dihedral_steps=12, seed=5)

TWO_ATOMS = """\
# a comment line
ligand pair
atoms 2
0.0 0.0 0.0 0.7
1.5 0.0 0.0 0.7   # trailing comment
bonds 1
0 1
rotamers 0
end
"""

RING = """\
ligand ringy
atoms 3
0 0 0 0.5
1.5 0 0 0.5
0.75 1.3 0 0.5
bonds 3
0 1
1 2
2 0
rotamers 1
0 1
end
"""


def pocket_text(values):
    return "origin 0 0 0\nspacing 1.0\ndims 2 2 2\n" + " ".join(values) + "\n"


def test_empty_library():
    assert parse_ligand_library("") == []
    assert parse_ligand_library("# nothing here\n\n") == []


def test_two_atom_record():
    (lig,) = parse_ligand_library(io.StringIO(TWO_ATOMS))
    assert lig.name == "pair" and lig.n_atoms == 2 and lig.bonds == ((0, 1),) and lig.rotamers == ()
    assert lig.radii.tolist() == [0.7, 0.7]


def test_ring_rotamer_names_ligand_and_bond():
    with pytest.raises(LigandValidationError) as info:
        parse_ligand_library(RING)
    msg = str(info.value)
    assert "ringy" in msg and "(0, 1)" in msg and "rotamer does not disconnect graph" in msg


@pytest.mark.parametrize("text,line", [
    ("ligand x\natoms 1\n0 0 zero 1\nbonds 0\nrotamers 0\nend\n", 3),
    ("ligand x\natoms 1\n0 0 0\nbonds 0\nrotamers 0\nend\n", 3),
    ("ligand x\natoms 1\n0 0 0 1\nbond 0\nrotamers 0\nend\n", 4),
    ("molecule x\n", 1),
    ("ligand x\natoms 2\n0 0 0 1\n", 4),
])
def test_malformed_lines_report_line_numbers(text, line):
    with pytest.raises(ParseError) as info:
        parse_ligand_library(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_pocket_examples():
    p = parse_pocket(pocket_text(["0.5"] * 8))
    assert p.dims == (2, 2, 2) and p.values.tolist() == [0.5] * 8
    with pytest.raises(ParseError, match="expected 8 values"):
        parse_pocket(pocket_text(["0.5"] * 7))
    with pytest.raises(PocketRangeError):
        parse_pocket(pocket_text(["0.5"] * 7 + ["1.5"]))


def test_pocket_header_errors():
    with pytest.raises(ParseError):
        parse_pocket("origin 0 0\nspacing 1\ndims 2 2 2\n")
    with pytest.raises(ParseError):
        parse_pocket("origin 0 0 0\nspacing -1\ndims 2 2 2\n" + "0 " * 8)


@given(st.integers(0, 10**6), st.integers(1, 9), st.integers(0, 3))
def test_library_round_trip(seed, n_atoms, n_rot):
    lib = make_library(3, n_atoms, min(n_rot, max(n_atoms - 2, 0)), seed)
    buf = io.StringIO()
    write_ligand_library(lib, buf)
    text = buf.getvalue()
    again = parse_ligand_library(text)
    assert "".join(format_ligand(lig) for lig in again) == text
    for a, b in zip(lib, again):
        assert a.coords.tobytes() == b.coords.tobytes() and a.radii.tobytes() == b.radii.tobytes()
        assert a.bonds == b.bonds and a.rotamers == b.rotamers


def test_round_trip_normalizes_whitespace():
    messy = "  ligand   pair\natoms 2\n 0.0   0.0 0.0 0.7\n1.5 0 0 0.7\n\nbonds 1\n0   1\nrotamers 0\nend"
    text = format_ligand(parse_ligand_library(messy)[0])
    assert text == format_ligand(parse_ligand_library(text)[0])
    assert text.splitlines()[2] == "0.0 0.0 0.0 0.7"


@given(st.integers(0, 10**6))
def test_pocket_round_trip(seed):
    pocket = make_pocket(seed, dims=(3, 4, 5), spacing=0.375)
    text = format_pocket(pocket)
    again = parse_pocket(text)
    assert again.values.tobytes() == pocket.values.tobytes()
    assert format_pocket(again) == text


def test_results_csv_shapes(pocket):
    buf = io.StringIO()
    write_results([], buf)
    assert buf.getvalue() == ",".join(RESULT_COLUMNS) + "\n"
    lib = make_library(3, 6, 1, seed=0)
    params = DockParams(n_restarts=2, rotation_steps=(2, 2, 2), dihedral_steps=4)
    results = [dock_ligand(lig, pocket, params) for lig in lib]
    one, two = io.StringIO(), io.StringIO()
    write_results(results, one)
    write_results([dock_ligand(lig, pocket, params) for lig in lib], two)
    lines = one.getvalue().splitlines()
    assert len(lines) == 4 and [ln.split(",")[0] for ln in lines[1:]] == [lig.name for lig in lib]
    assert one.getvalue() == two.getvalue()
    assert "\r" not in one.getvalue()


def test_results_with_timings(pocket):
    lig = make_library(1, 5, 1, seed=0)[0]
    res = dock_ligand(lig, pocket, DockParams(n_restarts=1, rotation_steps=(2, 2, 2), dihedral_steps=3))
    buf = io.StringIO()
    write_results([res], buf, timings=True)
    row = buf.getvalue().splitlines()[1].split(",")
    assert float(row[4]) >= 0 and float(row[5]) >= 0


def test_metrics_csv(pocket):
    lib = make_library(2, 5, 1, seed=0)
    _, m = run_screening(lib, pocket, DockParams(n_restarts=1, rotation_steps=(2, 2, 2), dihedral_steps=3),
                         NodeConfig(n_workers=2, n_devices=1))
    buf = io.StringIO()
    write_metrics(m, buf)
    header, row = buf.getvalue().splitlines()
    assert header.split(",") == list(METRICS_COLUMNS)
    assert row.split(",")[:5] == ["2", "1", "1", "real", "2"]


def test_golden_inputs_round_trip():
    lib_text = (GOLDEN / "library.lgd").read_text()
    pkt_text = (GOLDEN / "pocket.pkt").read_text()
    assert "".join(format_ligand(lig) for lig in parse_ligand_library(lib_text)) == lib_text
    assert format_pocket(parse_pocket(pkt_text)) == pkt_text


def test_golden_results_match_oracle():
    lib = parse_ligand_library((GOLDEN / "library.lgd").read_text())
    pocket = parse_pocket((GOLDEN / "pocket.pkt").read_text())
    buf = io.StringIO()
    write_results([reference_dock(lig, pocket, GOLDEN_PARAMS) for lig in lib], buf)
    assert buf.getvalue() == (GOLDEN / "results.csv").read_text()


def test_generated_coordinates_are_finite():
    lib = parse_ligand_library((GOLDEN / "library.lgd").read_text())
    assert all(np.all(np.isfinite(lig.coords)) for lig in lib)
