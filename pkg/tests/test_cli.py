import io

import pytest

from hypstrata.algebra import TautClass
from hypstrata.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_graph_counts():
    assert run("graphs", "-g", "0", "-n", "5", "--count")[:2] == (0, "26\n")
    assert run("graphs", "-g", "2", "-n", "0", "--count")[:2] == (0, "7\n")


def test_graph_records_listed():
    code, text, _ = run("graphs", "-g", "2", "-n", "1", "--filter", "ct")
    assert code == 0
    lines = text.splitlines()
    assert lines and all(line.startswith("G g=2 n=1 ") for line in lines)
    assert all("h1=0" in line for line in lines)


def test_tilde_filter_contains_compact_type():
    ct = set(run("graphs", "-g", "2", "-n", "2", "--filter", "ct")[1].splitlines())
    tilde = set(run("graphs", "-g", "2", "-n", "2", "--filter", "tilde")[1].splitlines())
    assert ct < tilde


def test_class_file_is_deterministic(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert run("--out", str(first), "class", "phigamma", "-n", "2")[0] == 0
    assert run("--out", str(second), "class", "phigamma", "-n", "2")[0] == 0
    a = (first / "phigamma-n2.cls").read_bytes()
    b = (second / "phigamma-n2.cls").read_bytes()
    assert a == b
    cls = TautClass.loads(a.decode())
    assert len(cls) == 1


def test_class_to_stdout_round_trips():
    code, text, _ = run("class", "hyp-ct", "-n", "1")
    assert code == 0
    assert TautClass.loads(text).dumps() == text


def test_out_of_range_is_a_usage_error():
    code, _, err = run("class", "hyp-tilde", "-n", "0")
    assert code == 2
    assert "1 <= n <= 4" in err


def test_unknown_suite_rejected():
    with pytest.raises(SystemExit):
        run("verify", "--suite", "nonsense")


def test_table_written_back(tmp_path):
    table = tmp_path / "psi.table"
    code, _, _ = run("--table", str(table), "verify", "--suite", "trees")
    assert code == 0
    assert table.exists() and table.read_text().startswith("I ")
    # a second run reuses the table
    before = table.read_text()
    assert run("--table", str(table), "verify", "--suite", "trees")[0] == 0
    assert table.read_text() == before


def test_rebuilt_table_passes_audit(tmp_path):
    table = tmp_path / "fresh.table"
    code, _, err = run("--table", str(table), "--rebuild-table", "graphs", "-g", "1", "-n", "1", "--count")
    assert code == 0, err
    assert table.exists()


def test_verify_writes_report(tmp_path):
    code, text, _ = run("--out", str(tmp_path), "verify", "--suite", "trees")
    assert code == 0
    assert "PASS" in text
    assert (tmp_path / "report.txt").exists()
    assert (tmp_path / "summary.json").exists()
