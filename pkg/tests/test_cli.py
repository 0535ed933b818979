import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from hofa.cli import run
from hofa.cumulants import TensorSequence
from hofa.symtensor import SymTensor


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def moment_file(tmp_path):
    seq = TensorSequence(
        2, 4,
        {
            2: SymTensor(2, 2, [1, Fraction(1, 2), 3]),
            3: SymTensor(2, 3, [0, Fraction(-1, 3), 1, 2]),
            4: SymTensor(2, 4, [3, 0, Fraction(5, 7), 1, 4]),
        },
        zero_mean=True,
    )
    path = tmp_path / "moments.json"
    path.write_text(json.dumps(seq.to_json(), indent=2) + "\n")
    return path


def test_dim_json():
    code, out, _ = call("dim", "--k", "3", "--p", "3", "--m", "1", "--json")
    assert code == 0
    obj = json.loads(out)
    assert {k: obj[k] for k in ("M", "N", "dim", "codim")} == {"M": 11, "N": 16, "dim": 11, "codim": 5}


def test_roots_no_root():
    code, out, _ = call("roots", "--k", "3", "--m", "9")
    assert code == 0 and "no-root" in out
    obj = json.loads(call("roots", "--k", "3", "--m", "2", "--json")[1])
    assert obj["regime"] == "one-root" and obj["root_count"] == len(obj["roots"]) == 1


def test_polya():
    code, out, _ = call("polya", "--k", "3", "--m", "12", "--json")
    obj = json.loads(out)
    assert code == 0 and obj["positive_roots"] == 0 and obj["certificate"]["exponent"] >= 1
    code, out, _ = call("polya", "--k", "3", "--m", "3", "--json")
    assert code == 0 and json.loads(out)["certificate"] is None


def test_convert_round_trip_is_byte_identical(moment_file, tmp_path):
    original = moment_file.read_text()
    cum = tmp_path / "cum.json"
    back = tmp_path / "back.json"
    assert call("convert", str(moment_file), "--to", "cumulants", "--out", str(cum))[0] == 0
    assert call("convert", str(cum), "--to", "moments", "--out", str(back))[0] == 0
    assert back.read_text() == original
    assert call("convert", str(moment_file), "--to", "canonical")[1] == original
    TensorSequence.from_json(json.loads(cum.read_text()))


@pytest.mark.parametrize(
    "payload, field",
    [
        ("{not json", "invalid JSON"),
        ('{"p": 2, "max_order": 2, "zero_mean": true}', "tensors"),
        ('{"p": 2, "max_order": 2, "zero_mean": true, "tensors": [{"p": 2, "order": 2, "scalar": "rational", '
         '"entries": [{"idx": [2, 1], "val": "1/1"}]}]}', r"tensors[0].entries[0].idx"),
        ('{"p": 2, "max_order": 2, "zero_mean": true, "tensors": [{"p": 2, "order": 2, "scalar": "rational", '
         '"entries": [{"idx": [1, 1], "val": "x"}]}]}', r"tensors[0].entries[0].val"),
    ],
)
def test_convert_malformed(tmp_path, payload, field):
    bad = tmp_path / "bad.json"
    bad.write_text(payload)
    code, out, err = call("convert", str(bad), "--to", "cumulants")
    assert code == 2 and out == ""
    assert field in err


def test_sweep_csv(tmp_path):
    code, out, _ = call("sweep", "--k-range", "2..3", "--p-range", "1..4", "--m-range", "1..2", "--csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["k", "p", "m", "M", "N", "dim", "codim", "h_value"]
    assert len(rows) == 2 * 4 * 2
    row = next(r for r in rows if (r["k"], r["p"], r["m"]) == ("3", "3", "1"))
    assert (row["M"], row["N"], row["dim"], row["codim"], row["h_value"]) == ("11", "16", "11", "5", "30")

    path = tmp_path / "sweep.csv"
    code, _, _ = call("sweep", "--k-range", "3", "--p-range", "2..4", "--m-range", "1..3", "--with-rank",
                      "--csv", "--out", str(path), "--jobs", "2")
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0])[-1] == "rank_observed"
    assert next(r for r in rows if (r["p"], r["m"]) == ("2", "3"))["rank_observed"] == ""


def test_sweep_json_echoes_seed():
    code, out, _ = call("sweep", "--k-range", "3", "--p-range", "3", "--m-range", "1", "--with-rank",
                        "--seed", "17", "--json")
    obj = json.loads(out)
    assert obj["seed"] == 17 and obj["rows"][0]["rank_observed"] == 10


def test_rank_reports_and_exit_codes():
    # p = m + 1: no claim is made, so concordant methods exit 0
    code, out, _ = call("rank", "--k", "3", "--p", "3", "--m", "2", "--json", "--seed", "4")
    obj = json.loads(out)
    assert code == 0 and obj["seed"] == 4 and not obj["certifiable"] and obj["methods_agree"]
    # certifiable cell: the observed rank is compared with min{M, N}
    code, out, _ = call("rank", "--k", "3", "--p", "5", "--m", "2", "--json", "--trials", "1")
    obj = json.loads(out)
    assert code == (0 if obj["all_match"] else 1)
    assert {r["method"] for r in obj["reports"]} == {"svd", "modp", "exact"}


def test_simulate_json():
    code, out, _ = call("simulate", "--k", "3", "--p", "3", "--m", "1", "--samples", "20000", "--seed", "9", "--json")
    obj = json.loads(out)
    assert code == 0 and obj["seed"] == 9 and obj["status"] in ("pass", "warn")
    assert set(obj["orders"]) == {"2", "3"} and len(obj["loading"]) == 3


@pytest.mark.parametrize(
    "argv, code",
    [
        ([], 2),
        (["bogus"], 2),
        (["dim", "--k", "3", "--p", "3"], 2),
        (["dim", "--k", "x", "--p", "3", "--m", "1"], 2),
        (["dim", "--k", "1", "--p", "3", "--m", "1"], 2),
        (["dim", "--k", "3", "--p", "2", "--m", "4"], 0),
        (["rank", "--k", "3", "--p", "2", "--m", "4"], 2),
        (["rank", "--k", "3", "--p", "3", "--m", "2", "--method", "exact"], 2),
        (["rank", "--k", "3", "--p", "3", "--m", "1", "--trials", "0"], 2),
        (["roots", "--k", "2", "--m", "1"], 2),
        (["polya", "--k", "3", "--m", "40"], 0),
        (["sweep", "--k-range", "3..2", "--p-range", "1", "--m-range", "1"], 2),
        (["simulate", "--k", "3", "--p", "3", "--m", "1", "--samples", "0"], 2),
        (["convert", "/nonexistent.json", "--to", "moments"], 2),
    ],
)
def test_exit_code_matrix(argv, code):
    assert call(*argv)[0] == code


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hofa", "dim", "--k", "2", "--p", "4", "--m", "1", "--json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["dim"] == 9
