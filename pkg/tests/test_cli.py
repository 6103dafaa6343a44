import csv
import re
from pathlib import Path

import pytest

from geodock.cli import build_parser, main, profile_table
from geodock.docking import DockParams, count_score_calls
from geodock.io import parse_ligand_library, parse_pocket
from geodock.molecule import validate_ligand
from geodock.pipeline import NodeConfig

GOLDEN = Path(__file__).parent / "golden"
FAST = ["--restarts", "3", "--reps", "1", "--rot-steps", "4,4,2", "--dihedral-steps", "6"]


@pytest.fixture
def inputs(tmp_path):
    lib, pkt = tmp_path / "lib.lgd", tmp_path / "pocket.pkt"
    assert main(["gen", "--ligands", "4", "--atoms", "6", "--rotamers", "2", "--dims", "10,10,10",
                 "--seed", "1", "--out", str(lib), "--pocket", str(pkt)]) == 0
    return lib, pkt


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def help_defaults(command, monkeypatch):
    monkeypatch.setenv("COLUMNS", "200")
    text = build_parser()._subparsers._group_actions[0].choices[command].format_help()
    flat = " ".join(text.split())
    return dict(re.findall(r"(--[a-z-]+) [A-Z_,]+ (?:(?!--).)*?\(default ([^)]*)\)", flat))


def test_help_defaults_match_golden(monkeypatch):
    expected = {}
    for line in (GOLDEN / "help_defaults.txt").read_text().splitlines():
        command, flag, value = line.split(" ", 2)
        expected.setdefault(command, {})[flag] = value
    for command, flags in expected.items():
        assert help_defaults(command, monkeypatch) == flags


def test_parser_defaults_are_library_defaults():
    args = build_parser().parse_args(["dock", "--pocket", "p", "--ligands", "l"])
    d = DockParams()
    assert (args.restarts, args.reps, args.rot_steps, args.dihedral_steps, args.clash, args.seed) == (
        d.n_restarts, d.num_repetitions, d.rotation_steps, d.dihedral_steps, d.clash_factor, d.seed)
    node = NodeConfig(n_workers=1)
    assert (args.devices, args.lane_width, args.t_align, args.t_opt, args.t_align_cpu) == (
        node.n_devices, node.lane_width, node.t_align_device, node.t_opt_cpu, node.t_align_cpu)


def test_dock_with_defaults(inputs, tmp_path):
    lib, pkt = inputs
    out = tmp_path / "res.csv"
    assert main(["dock", "--pocket", str(pkt), "--ligands", str(lib), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 4
    assert all(int(r["score_calls"]) == count_score_calls(DockParams(), 2) for r in rows)


def test_missing_pocket(inputs, capsys):
    lib, _ = inputs
    assert main(["dock", "--pocket", "/nonexistent/p.pkt", "--ligands", str(lib)]) == 2
    assert "cannot open" in capsys.readouterr().err


def test_invalid_library_exit_code(tmp_path, inputs, capsys):
    _, pkt = inputs
    bad = tmp_path / "bad.lgd"
    bad.write_text("ligand x\natoms 1\n0 0 nope 1\n")
    assert main(["dock", "--pocket", str(pkt), "--ligands", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_metrics_records_node(inputs, tmp_path):
    lib, pkt = inputs
    out, met = tmp_path / "r.csv", tmp_path / "m.csv"
    assert main(["dock", "--pocket", str(pkt), "--ligands", str(lib), "--out", str(out), "--metrics", str(met),
                 "--workers", "8", "--devices", "1", *FAST]) == 0
    (row,) = read_csv(met)
    assert row["workers"] == "8" and row["devices"] == "1" and row["ligands"] == "4"


def test_results_identical_across_worker_counts(inputs, tmp_path):
    lib, pkt = inputs
    blobs = []
    for workers, devices in [(1, 0), (3, 1), (8, 2)]:
        out = tmp_path / f"r{workers}.csv"
        assert main(["dock", "--pocket", str(pkt), "--ligands", str(lib), "--out", str(out),
                     "--workers", str(workers), "--devices", str(devices), *FAST]) == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]


def test_bench_synthetic_plateau(tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--mode", "synthetic", "--sweep-workers", "1..16", "--sweep-devices", "1..1",
                 "--t-align", "1", "--t-opt", "6", "--out", str(out)]) == 0
    tps = [float(r["throughput"]) for r in read_csv(out)]
    assert len(tps) == 16
    assert all(b >= a for a, b in zip(tps, tps[1:]))
    for t in tps[6:]:
        assert t == pytest.approx(1.0, rel=0.05)


def test_bench_four_devices(tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--mode", "synthetic", "--sweep-workers", "1..16", "--sweep-devices", "4..4",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert float(rows[-1]["throughput"]) >= 0.9 * 16 / 7


def test_bench_real_mode(inputs, tmp_path):
    lib, pkt = inputs
    out = tmp_path / "bench.csv"
    assert main(["bench", "--pocket", str(pkt), "--ligands", str(lib), "--sweep-workers", "1..2",
                 "--sweep-devices", "0..1", "--out", str(out), *FAST]) == 0
    rows = read_csv(out)
    assert [(r["workers"], r["devices"]) for r in rows] == [("1", "0"), ("2", "0"), ("1", "1"), ("2", "1")]


@pytest.mark.parametrize("span", ["0..3", "5..2", "x"])
def test_bench_bad_ranges(span, capsys):
    with pytest.raises(SystemExit) as info:
        main(["bench", "--mode", "synthetic", "--sweep-workers", span])
    assert info.value.code == 2


def test_workers_zero_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["dock", "--pocket", "p", "--ligands", "l", "--workers", "0"])
    assert info.value.code == 2


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as info:
        main(["gen", "--out", "a", "--pocket", "b", "--colour", "red"])
    assert info.value.code == 2


def test_profile_zero_rotamers(tmp_path):
    lib, pkt = tmp_path / "l.lgd", tmp_path / "p.pkt"
    main(["gen", "--ligands", "1", "--atoms", "3", "--rotamers", "0", "--dims", "8,8,8",
          "--out", str(lib), "--pocket", str(pkt)])
    rows = profile_table(parse_ligand_library(lib.read_text()), parse_pocket(pkt.read_text()),
                         DockParams(n_restarts=2, rotation_steps=(4, 4, 2)))
    by = {r["function"]: r for r in rows}
    assert by["Score"]["visits"] == 0 and by["Rotate"]["visits"] == 0
    assert sum(r["percent_time"] for r in rows) == pytest.approx(100.0, abs=0.1)


def test_profile_default_params(inputs, capsys, tmp_path):
    lib, pkt = inputs
    out = tmp_path / "profile.csv"
    assert main(["profile", "--pocket", str(pkt), "--ligands", str(lib), "--out", str(out)]) == 0
    rows = read_csv(out)
    align = int(rows[1]["visits"])
    optimize = int(rows[5]["visits"])
    assert align + optimize == count_score_calls(DockParams(), 2)
    assert all(r["visits"] == r["expected_visits"] for r in rows)
    assert sum(float(r["percent_time"]) for r in rows) == pytest.approx(100.0, abs=0.1)
    assert "score calls (total)" in capsys.readouterr().out


def test_gen_is_deterministic(tmp_path):
    paths = []
    for run in ("a", "b"):
        lib, pkt = tmp_path / f"{run}.lgd", tmp_path / f"{run}.pkt"
        assert main(["gen", "--ligands", "1500", "--seed", "7", "--dims", "6,6,6",
                     "--out", str(lib), "--pocket", str(pkt)]) == 0
        paths.append((lib, pkt))
    (la, pa), (lb, pb) = paths
    assert la.read_bytes() == lb.read_bytes() and pa.read_bytes() == pb.read_bytes()
    library = parse_ligand_library(la.read_text())
    assert len(library) == 1500
    assert all(validate_ligand(lig) == [] for lig in library)


def test_gen_single_atoms(tmp_path):
    lib, pkt = tmp_path / "l.lgd", tmp_path / "p.pkt"
    assert main(["gen", "--ligands", "3", "--atoms", "1", "--dims", "4,4,4",
                 "--out", str(lib), "--pocket", str(pkt)]) == 0
    library = parse_ligand_library(lib.read_text())
    assert [(lig.n_atoms, len(lig.rotamers)) for lig in library] == [(1, 0)] * 3


def test_golden_files_regenerate(tmp_path):
    lib, pkt, res = tmp_path / "library.lgd", tmp_path / "pocket.pkt", tmp_path / "results.csv"
    assert main(["gen", "--ligands", "5", "--atoms", "7", "--rotamers", "2", "--dims", "8,8,8",
                 "--spacing", "1.5", "--seed", "3", "--out", str(lib), "--pocket", str(pkt)]) == 0
    assert main(["dock", "--pocket", str(pkt), "--ligands", str(lib), "--restarts", "4", "--reps", "2",
                 "--rot-steps", "6,6,4", "--dihedral-steps", "12", "--seed", "5", "--workers", "3",
                 "--devices", "2", "--out", str(res)]) == 0
    for name in ("library.lgd", "pocket.pkt", "results.csv"):
        assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes()
