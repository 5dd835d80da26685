import csv
import io
import os
import subprocess
import sys

import pytest

from postings_bench import cli


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_model_million(capsys):
    code, out, err = _run(capsys, "model", "--max-length", "1000000")
    assert code == 0
    rows = out.splitlines()
    assert rows[0].startswith("l,oracle,")
    assert len(rows) == 1001
    fbb = next(line for line in err.splitlines() if line.startswith("FBB\t"))
    assert fbb.split("\t")[1] == "2000"


def test_model_single_row(capsys, tmp_path):
    out_file = tmp_path / "m.csv"
    code, out, _ = _run(capsys, "model", "--max-length", "1", "--out", str(out_file))
    assert code == 0 and "summary at l=1" in out
    rows = list(csv.DictReader(out_file.open()))
    assert len(rows) == 1 and rows[0]["fbb_cost"] == "3"


def test_model_rejects_zero(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["model", "--max-length", "0"])
    assert e.value.code == 2


def test_model_unwritable(capsys, tmp_path):
    code, _, err = _run(capsys, "model", "--max-length", "5", "--out", str(tmp_path / "no" / "x.csv"))
    assert code == 1 and "cannot write" in err


def test_generate_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for p in (a, b):
        code, out, _ = _run(capsys, "generate", "--postings", "100000", "--vocab", "100000",
                            "--seed", "42", "--out", str(p))
        assert code == 0 and "postings=" in out
    assert a.read_bytes() == b.read_bytes() and a.stat().st_size > 0


def test_generate_zero(capsys, tmp_path):
    p = tmp_path / "z.txt"
    code, out, _ = _run(capsys, "generate", "--postings", "0", "--out", str(p))
    assert code == 0 and p.read_bytes() == b""
    assert "records=0\tpostings=0\tdistinct_terms=0" in out


def test_generate_default_ratio(capsys, tmp_path):
    p = tmp_path / "d.txt"
    code, out, _ = _run(capsys, "generate", "--postings", "300000", "--out", str(p))
    fields = dict(kv.split("=") for kv in out.split())
    assert 2.5 <= int(fields["postings"]) / int(fields["records"]) <= 3.5


def test_generate_seed_env(capsys, tmp_path, monkeypatch):
    p1, p2, p3 = (tmp_path / n for n in ("1", "2", "3"))
    monkeypatch.setenv("POSTINGS_BENCH_SEED", "5")
    _run(capsys, "generate", "--postings", "2000", "--out", str(p1))
    _run(capsys, "generate", "--postings", "2000", "--seed", "5", "--out", str(p2))
    monkeypatch.delenv("POSTINGS_BENCH_SEED")
    _run(capsys, "generate", "--postings", "2000", "--out", str(p3))
    assert p1.read_bytes() == p2.read_bytes() != p3.read_bytes()


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.txt"
    p.write_bytes(b"a b\nb c\n")
    return p


def test_index_tiny(capsys, tiny):
    checksums = {}
    for method in ("fbb", "sqa"):
        code, out, _ = _run(capsys, "index", "--corpus", str(tiny), "--method", method)
        assert code == 0
        lines = out.splitlines()
        header, row = lines[0].split("\t"), lines[1].split("\t")
        assert row[header.index("Postings(M)")] == "0.00000400"
        checksums[method] = lines[2]
    # a:[0] + b:[0,1] + c:[1] with term ordinals 0,1,2 -> 0 + (1+2) + 3
    assert checksums["fbb"] == checksums["sqa"] == "checksum\t6"


def test_index_csv(capsys, tiny):
    code, out, _ = _run(capsys, "index", "--corpus", str(tiny), "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1
    assert rows[0]["postings"] == "4" and rows[0]["checksum"] == "6" and rows[0]["corpus"] == "tiny"


def test_index_missing_file(capsys, tmp_path):
    missing = tmp_path / "absent.txt"
    code, _, err = _run(capsys, "index", "--corpus", str(missing))
    assert code == 1 and str(missing) in err


def test_index_arena_exhaustion_is_reported(capsys, tiny):
    code, _, err = _run(capsys, "index", "--corpus", str(tiny), "--block-bytes", "6")
    assert code == 1 and "error" in err


def test_bench_rows(capsys, tiny):
    code, out, _ = _run(capsys, "bench", "--corpus", str(tiny), "--runs", "5", "--method", "fbb,sqa")
    assert code == 0
    lines = out.splitlines()
    table = [line.split("\t") for line in lines[1:13]]
    assert sum(r[0].isdigit() for r in table) == 10
    assert sum(r[0] == "mean" for r in table) == 2
    # ditto columns: Records, |V|, Postings agree across methods
    assert {tuple(r[3:6]) for r in table} == {tuple(table[0][3:6])}
    assert any(line.startswith("backend\t") for line in lines)


def test_bench_single_run_mean_equals_run(capsys, tiny):
    code, out, _ = _run(capsys, "bench", "--corpus", str(tiny), "--runs", "1", "--method", "sqa",
                        "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["run"] for r in rows] == ["1", "mean"]
    strip = lambda r: {k: v for k, v in r.items() if k != "run"}
    assert strip(rows[0]) == strip(rows[1])


def test_bench_bad_method():
    with pytest.raises(SystemExit) as e:
        cli.main(["bench", "--method", "fbb,heap"])
    assert e.value.code == 2


def test_module_entry_point(tiny):
    env = dict(os.environ)
    res = subprocess.run([sys.executable, "-m", "postings_bench", "index", "--corpus", str(tiny)],
                         capture_output=True, text=True, env=env, check=False)
    assert res.returncode == 0 and "checksum\t6" in res.stdout
