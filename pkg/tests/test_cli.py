import json
import subprocess
import sys

import pytest

from rbmat.catalog import build_operator
from rbmat.cli import main
from rbmat.matop import LinearOperator


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    return code, json.loads(out)


def test_verify_all_q(capsys):
    code, rep = run_json(capsys, "verify", "Q*")
    assert code == 0 and rep["passed"]
    assert len({i["id"] for i in rep["items"]}) == 24
    assert len(rep["items"]) == 53


def test_verify_r1_notes_zero_unit_image(capsys):
    code, out, _ = run(capsys, "verify", "R1")
    assert code == 0
    assert "R(1)=0" in out
    _, rep = run_json(capsys, "verify", "R1")
    assert rep["items"][0]["skew_symmetric"] and rep["items"][0]["unit_image_zero"]


def test_verify_example1_n6(capsys):
    code, rep = run_json(capsys, "verify", "Example1", "--n", "6")
    assert code == 0
    assert [i["nilpotency_index"] for i in rep["items"]] == [11]


def test_verify_params_override(capsys):
    code, rep = run_json(capsys, "verify", "Q5", "--params", "kappa=-1,beta=1/2")
    assert code == 0
    assert [i["params"] for i in rep["items"]] == [{"kappa": "-1", "beta": "1/2"}]


def test_verify_over_other_domains(capsys):
    for dom in ("Qi", "Qsqrt:2", "Fp:7"):
        code, rep = run_json(capsys, "verify", "R*", "--domain", dom)
        assert code == 0 and rep["items"][0]["domain"] == dom


def test_verify_failure_exit_code(capsys):
    # beta = -1 is out of range, so this is a usage error, not a failed verdict
    code, _, err = run(capsys, "verify", "Q5", "--params", "kappa=0,beta=-1")
    assert code == 2 and "beta" in err


@pytest.mark.parametrize("argv", [
    ["verify", "Z*"],
    ["verify", "Q1", "--domain", "R"],
    ["verify", "Q5", "--params", "kappa"],
    ["verify", "Q2", "--params", "beta=2"],
    ["fingerprint", "Q2", "--domain", "Fp:7"],
    ["derive", "section9"],
    ["conjugate", "Theta99", "Q2"],
    ["conjugate", "Theta13", "missing.json"],
    ["bogus"],
    [],
])
def test_usage_errors(capsys, argv):
    assert main(argv) == 2


def test_bad_thread_env(capsys, monkeypatch):
    monkeypatch.setenv("RBMAT_THREADS", "many")
    assert main(["verify", "Q2"]) == 2


def test_fingerprint_rows(capsys):
    _, rep = run_json(capsys, "fingerprint", "Q2")
    assert rep["items"][0]["fingerprint"]["dim_im"] == 1
    _, rep = run_json(capsys, "fingerprint", "Q13", "--params", "kappa=0")
    assert rep["items"][0]["fingerprint"]["radical_dim"] == 2


def test_fingerprint_distinct_l_family(capsys):
    code, rep = run_json(capsys, "fingerprint", "L[1-4]", "--distinct")
    assert code == 0 and rep["collisions"] == []
    assert rep["matrix"] == [".xxx", "x.xx", "xx.x", "xxx."]


def test_fingerprint_distinct_flags_collisions(capsys):
    # L3 and the joined form at kappa = 0 are the same operator
    code, rep = run_json(capsys, "fingerprint", "L3,L34", "--distinct")
    assert code == 1
    assert ["L3", "L34[kappa=0]"] in rep["collisions"]


def test_fingerprint_human_table(capsys):
    code, out, _ = run(capsys, "fingerprint", "L*")
    assert code == 0
    assert "pairwise distinctness" in out and "colliding pair" in out


def test_claims(capsys):
    code, rep = run_json(capsys, "claims")
    assert all(c["verdict"] for c in rep["items"])
    assert len([c for c in rep["items"] if c["claim"].startswith("R")]) == 7
    assert all(p["ok"] for p in rep["block_projections"])
    assert code == (0 if rep["nilindex_partition"]["ok"] else 1)
    assert rep["passed"] == (code == 0)


def test_derive_dump(capsys, tmp_path):
    out = tmp_path / "sys.json"
    code, text, _ = run(capsys, "derive", "section4-21par", "--out", str(out))
    assert code == 0 and "distinct equations" in text
    data = json.loads(out.read_text())
    assert not any("a13" in e["poly"] for e in data["equations"])
    code, _, _ = run(capsys, "derive", "section4-stage1", "--out", str(out))
    data = json.loads(out.read_text())
    assert any(e["poly"] == "a13*b32" and e["pair"] == ["e13", "e32"] for e in data["equations"])


def test_derive_fit_and_check_roundtrip(capsys, tmp_path):
    fits = tmp_path / "fits.json"
    code, _, _ = run(capsys, "derive", "section4-21par", "--fit", "Q[2-9],Q1?,Q2?",
                     "--out", str(fits))
    assert code == 0
    assert len(json.loads(fits.read_text())) == 52
    code, rep = run_json(capsys, "derive", "section4-21par", "--check", str(fits))
    assert code == 0
    assert all(x["allZero"] for x in rep["items"])


def test_derive_fit_reports_nofit(capsys):
    code, rep = run_json(capsys, "derive", "section4-21par", "--fit", "Q1")
    assert code == 1 and rep["no_fit"] == ["Q1"]


def test_derive_check_failure(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"b13": "1", "c13": "1"}))
    assert main(["derive", "section4-21par", "--check", str(bad)]) == 2
    capsys.readouterr()
    code, rep = run_json(capsys, "derive", "section4-21par", "--check", str(bad),
                         "--default-zero")
    assert code == 1
    assert rep["items"][0]["allZero"] is False
    assert rep["items"][0]["firstNonzero"]


def test_conjugate_catalog_ref(capsys):
    code, rep = run_json(capsys, "conjugate", "Theta13", "R8")
    assert code == 0
    L = LinearOperator.from_json(rep["operator"])
    assert L.differences(build_operator("Q22", kappa=-1, mu=0)) == []


def test_conjugate_json_file_and_extension(capsys, tmp_path):
    src = tmp_path / "op.json"
    from rbmat.catalog import build_automorphism
    from rbmat.matop import conjugate
    src.write_text(json.dumps(conjugate(build_operator("R4"),
                                        build_automorphism("Theta13")).to_json()))
    code, out, _ = run(capsys, "conjugate", "phi", str(src), "--args", "0,0,1*i,0",
                       "--domain", "Qi")
    assert code == 0
    L = LinearOperator.from_json(json.loads(out))
    assert L.domain.label == "Qi"
    target = -build_operator("Q14")  # the match is up to sign
    assert L.differences(LinearOperator.from_json({**target.to_json(), "domain": "Qi"})) == []


def test_conjugate_inner(capsys):
    code, out, _ = run(capsys, "conjugate", "inner", "SectionP:q=2", "--args", "1 0 -2;0 1 0;0 0 1")
    assert code == 0
    L = LinearOperator.from_json(json.loads(out))
    assert L.differences(build_operator("Q1")) == []


def test_json_is_deterministic(capsys, monkeypatch):
    _, a, _ = run(capsys, "verify", "Q2?", "--json")
    _, b, _ = run(capsys, "verify", "Q2?", "--json")
    assert a == b
    monkeypatch.setenv("RBMAT_THREADS", "2")
    _, c, _ = run(capsys, "verify", "Q2?", "--json")
    assert a == c


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "L*", "--json", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["command"] == "verify"


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "rbmat.cli", "verify", "L1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "1/1 passed" in proc.stdout
