import csv
import json

import pytest

from heislat.cli import RESULT_FIELDS, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def strip_wall(rows):
    return [{k: v for k, v in r.items() if k != "wall_ms"} for r in rows]


def test_count_matches_oracle(capsys):
    code, out, _ = run(capsys, "count", "--n", "1", "--alpha", "4", "--Q", "5",
                       "--delta", "1/2", "--center", "0,0,0")
    assert code == 0 and out.strip() == "656"
    code, out, _ = run(capsys, "count", "--n", "1", "--alpha", "4", "--Q", "5",
                       "--delta", "1/2", "--center", "0,0,0", "--counter", "naive")
    assert code == 0 and out.strip() == "656"


def test_bound(capsys):
    code, out, _ = run(capsys, "bound", "--n", "1", "--alpha", "4", "--Q", "10", "--delta", "0.01")
    assert code == 0 and float(out) == 100.0


def test_error_term(capsys):
    code, out, _ = run(capsys, "error-term", "--n", "1", "--alpha", "4", "--Q", "3")
    assert code == 0 and float(out) > 0


def test_csv_header_exact(tmp_path, capsys):
    out_csv = tmp_path / "row.csv"
    code, _, _ = run(capsys, "count", "--n", "1", "--alpha", "4", "--Q", "5",
                     "--delta", "1/2", "--center", "0,0,0", "--out", str(out_csv))
    assert code == 0
    header = out_csv.read_text(encoding="utf-8").splitlines()[0]
    assert header == ",".join(RESULT_FIELDS)
    assert "\r" not in out_csv.read_text(encoding="utf-8")


def test_sweep_fit_roundtrip(tmp_path, capsys):
    out_csv = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", "--n", "1", "--alpha", "4", "--Q", "6,8,12",
                     "--delta-rule", "1/Q", "--samples", "40", "--seed", "42",
                     "--out", str(out_csv))
    assert code == 0
    rows = read_csv(out_csv)
    assert len(rows) == 3
    for r in rows:
        assert float(r["ratio"]) == pytest.approx(
            float(r["normalized"]) / float(r["bound_rhs"])
        )
    code, out, _ = run(capsys, "fit", str(out_csv))
    assert code == 0 and out.startswith("slope ")


def test_sweep_deterministic_rerun(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--n", "1", "--alpha", "2", "--Q", "4,6", "--delta", "1/2",
            "--samples", "35", "--seed", "3"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--threads", "8"]) == 0
    capsys.readouterr()
    assert strip_wall(read_csv(a)) == strip_wall(read_csv(b))


def test_sweep_requires_one_delta(capsys):
    code, _, err = run(capsys, "sweep", "--n", "1", "--alpha", "4", "--Q", "4,6",
                       "--samples", "35", "--seed", "3")
    assert code == 2 and "delta" in err


def test_rank_check_json(tmp_path, capsys):
    report = tmp_path / "rank.json"
    code, out, _ = run(capsys, "rank-check", "--n", "1", "--alpha", "4",
                       "--samples", "10", "--seed", "1", "--json", str(report))
    assert code == 0 and "PASSED" in out and "seed 1" in out
    data = json.loads(report.read_text())
    assert data["passed"] is True and data["alpha"] == 4


def test_energy_subcommand(tmp_path, capsys):
    out_csv = tmp_path / "e.csv"
    code, out, _ = run(capsys, "energy", "--q", "4", "--tau", "1.2", "--t", "2",
                       "--pairs", "20000", "--seed", "7", "--out", str(out_csv))
    assert code == 0 and out.startswith("energy ") and "seed 7" in out
    (row,) = read_csv(out_csv)
    assert row["experiment_id"] == "energy" and float(row["normalized"]) > 0


def test_config_file_defaults(tmp_path, capsys):
    cfg = tmp_path / "cfg"
    cfg.write_text("samples = 35\nseed = 5\n", encoding="utf-8")
    code, out, _ = run(capsys, "avg-count", "--n", "1", "--alpha", "2", "--Q", "4",
                       "--delta", "1/2", "--config", str(cfg))
    assert code == 0 and "seed 5" in out


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "cfg"
    cfg.write_text("bogus = 1\n", encoding="utf-8")
    code, _, err = run(capsys, "avg-count", "--n", "1", "--alpha", "2", "--Q", "4",
                       "--delta", "1/2", "--config", str(cfg))
    assert code == 2 and "bogus" in err


def test_validation_error_exit_code(capsys):
    code, _, err = run(capsys, "count", "--n", "1", "--alpha", "4", "--Q", "5",
                       "--delta", "6", "--center", "0,0,0")
    assert code == 2 and "error" in err


def test_unknown_subcommand(capsys):
    assert main(["nosuch"]) == 2
    capsys.readouterr()


def test_unknown_flag(capsys):
    assert main(["bound", "--n", "1", "--alpha", "4", "--Q", "10", "--delta", "0.01", "--zzz", "1"]) == 2
    capsys.readouterr()
