import csv
import io
import json

import pytest

from dense_goldbach.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def doc(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def test_local_check_exhaustive(capsys):
    code, d = doc(capsys, "local-check", "--m", "15", "--exhaustive")
    assert code == 0 and d["status"] == "pass"
    assert d["result"]["violations"] == [] and d["result"]["sharp_witness_found"]
    assert d["config"]["m"] == 15 and d["command"] == "local-check"


def test_local_check_sampled(capsys):
    code, d = doc(capsys, "local-check", "--m", "105", "--sample", "2000", "--seed", "42")
    assert code == 0
    assert d["result"]["pairs_checked"] == 2000 and d["result"]["seed"] == 42


@pytest.mark.parametrize("m", ["9", "12"])
def test_local_check_rejects_modulus(capsys, m):
    code, out, err = run(capsys, "local-check", "--m", m)
    assert code == 2 and "m" in err and out == ""


def test_local_check_refuses_large_exhaustive(capsys):
    code, _, err = run(capsys, "local-check", "--m", "105", "--exhaustive")
    assert code == 2 and "refused" in err


def test_usage_error(capsys):
    assert main(["no-such-command"]) == 2
    capsys.readouterr()


def test_goldbach_scan_csv(capsys):
    code, out, _ = run(capsys, "goldbach-scan", "--subset", "counterexample", "--m", "15", "--limit", "10000", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    by = {int(r["residue"]): int(r["exceptional"]) for r in rows}
    assert by[1] == len(range(16, 10_001, 30))


def test_goldbach_scan_sidecar(capsys, tmp_path):
    side = tmp_path / "ex.txt"
    code, d = doc(capsys, "goldbach-scan", "--subset", "explicit", "--primes", "2", "3", "--limit", "100", "--sidecar", str(side))
    assert code == 0
    assert [int(x) for x in side.read_text().split()] == [n for n in range(4, 101, 2) if n not in (4, 6)]
    assert "sidecar" not in d["config"]


def test_counterexample(capsys):
    code, d = doc(capsys, "counterexample", "--m", "3", "--limit", "10000")
    assert code == 0 and all(c["passed"] for c in d["checks"])
    assert d["result"]["local_set"] == [1]
    by = d["result"]["scan"]["by_residue"]
    assert by["1"] == len([n for n in range(4, 10_001, 2) if n % 3 == 1])


def test_transfer_demo_intervals(capsys):
    code, d = doc(capsys, "transfer-demo", "--family", "intervals", "--N", "2003")
    assert code == 0 and d["result"]["alpha"] == 0
    assert d["result"]["hypotheses"]["passed"]


def test_transfer_demo_prime_requires_force(capsys):
    code, _, err = run(capsys, "transfer-demo", "--family", "prime", "--N", "5000")
    assert code == 2 and "--force" in err
    code, d = doc(capsys, "transfer-demo", "--family", "prime", "--N", "5000", "--force")
    assert code == 0 and d["result"]["forced"] and d["result"]["alpha"] == 0


def test_transfer_demo_counterexample_missed_class(capsys):
    # N divisible by 15 keeps the wrap-around mod N compatible with classes mod 15
    code, d = doc(
        capsys, "transfer-demo", "--family", "prime", "--subset", "counterexample", "--m", "15",
        "--N", "29985", "--force",
    )
    assert code == 0
    assert d["result"]["alpha"] >= 1 / 15 - 1e-3
    by = d["result"]["exceptional_by_class"]
    assert by["1"] == 29985 // 15


def test_density_profile(capsys):
    code, d = doc(
        capsys, "density-profile", "--subset", "intervals", "--alpha", "3", "--cutoffs", "10000", "300000",
        "--W", "1", "6", "--expect", "0.3333", "--tol", "0.1",
    )
    assert code == 0 and d["result"]["heights"] == [30000, 900000]
    assert 0.3 < d["result"]["minimum_over_sweep"] < 0.4


def test_density_profile_all_primes(capsys):
    code, d = doc(capsys, "density-profile", "--limit", "10000", "--W", "2", "6")
    assert code == 0
    assert all(row["density"] == 1.0 for row in d["result"]["table"])


def test_sieve_cache_and_reuse(capsys, tmp_path):
    code, d = doc(capsys, "sieve-cache", "--limit", "20000", "--cache-dir", str(tmp_path))
    assert code == 0 and (tmp_path / "primes-20000.bin").exists()
    assert d["result"]["prime_count"] == 2262
    code, d2 = doc(capsys, "goldbach-scan", "--limit", "10000", "--cache-dir", str(tmp_path))
    assert code == 0 and d2["result"]["exceptional_evens"]["count"] == 0


def test_sieve_cache_needs_dir(capsys, monkeypatch):
    monkeypatch.delenv("DENSE_GOLDBACH_CACHE", raising=False)
    code, _, err = run(capsys, "sieve-cache", "--limit", "100")
    assert code == 2


def test_rerun_from_report_is_identical(capsys, tmp_path):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    assert main(["transfer-demo", "--family", "random", "--N", "997", "--fractions", "0.9", "0.85", "--seed", "5", "--out", str(first)]) == 0
    assert main(["transfer-demo", "--config", str(first), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    d = json.loads(first.read_text())
    assert d["config"]["seed"] == 5 and len(d["input_hash"]) == 64


def test_config_for_other_command_rejected(capsys, tmp_path):
    first = tmp_path / "a.json"
    assert main(["local-check", "--m", "3", "--out", str(first)]) == 0
    assert main(["goldbach-scan", "--config", str(first)]) == 2
    capsys.readouterr()
