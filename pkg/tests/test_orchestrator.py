import json

import pytest

from sinelab import orchestrator as orc


def _files(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*"))
            if p.is_file() and p.name != "report.json"}


@pytest.mark.parametrize("cmd", ["sample", "bands", "verify-det", "clt", "tails", "deviations",
                                 "completeness"])
def test_defaults_are_valid(cmd):
    assert orc.validate(orc.make_config(cmd)) == []


def test_validation_reports_lines():
    text = "[deviations]\nm = 2\n# comment\ntheta = 3.0\n"
    bad = orc.validate(orc.make_config("deviations", text, "user.ini"))
    assert any("m = 2" in b and "line 2" in b for b in bad)
    assert any("theta" in b and "line 4" in b for b in bad)
    with pytest.raises(orc.ConfigError):
        orc.run(orc.make_config("deviations", text, "user.ini"))


def test_parse_errors_carry_line_numbers():
    with pytest.raises(orc.ConfigError) as exc:
        orc.parse_config("[clt]\nn = 256\nthis line is broken\n", "x.ini")
    assert exc.value.lineno == 3 and "x.ini:3" in str(exc.value)
    with pytest.raises(orc.ConfigError) as exc:
        orc.make_config("clt", "[nope]\nk = 1\n")
    assert exc.value.lineno == 2
    params, lines = orc.parse_config("[deviations]\nT = 32\nlambdas = 0.5, 1\n")
    assert params["deviations"] == {"T": 32, "lambdas": [0.5, 1]}
    assert lines[("deviations", "lambdas")] == 3


def test_sample_is_byte_identical(tmp_path):
    reps = []
    for name in ("a", "b"):
        reps.append(orc.run(orc.make_config("sample", "[sample]\ncount = 2\n", out=tmp_path / name)))
    assert _files(tmp_path / "a") == _files(tmp_path / "b")
    rep = reps[0]
    assert rep["exit_code"] == 0 and rep["passed"] == rep["total"] == 2
    for key in ("schema_version", "command", "config", "build", "checks", "wall_time"):
        assert key in rep
    on_disk = json.loads((tmp_path / "a" / "sample" / "report.json").read_text())
    assert on_disk["checks"] == rep["checks"]
    assert (tmp_path / "a" / "sample" / "samples.csv").read_text().startswith("index,count,L\n")


def test_report_aggregation(tmp_path):
    orc.run(orc.make_config("sample", out=tmp_path))
    orc.run(orc.make_config("bands", "[bands]\ncases = 3\n", out=tmp_path))
    summary = orc.run(orc.make_config("report", out=tmp_path))
    assert set(summary["suites"]) == {"sample", "bands"}
    assert summary["exit_code"] == 0
    assert json.loads((tmp_path / "summary.json").read_text()) == summary


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("SINELAB_OUT", str(tmp_path / "env"))
    cfg = orc.make_config("sample", out=tmp_path / "flag")
    assert cfg.output_dir == tmp_path / "env"


def test_verify_det_with_zero_symbol(tmp_path):
    text = "[verify-det]\nphi_plus = zero\nxi_n = 128\ngap_s = 1\n"
    rep = orc.run(orc.make_config("verify-det", text, out=tmp_path))
    names = {c["name"]: c for c in rep["checks"]}
    assert rep["exit_code"] == 0, rep["gating_failures"]
    assert all(c["relerr"] == 0.0 for n, c in names.items() if n.startswith(("widom_", "bogc_"))
               and "relerr" in c)


def test_gate_exploratory_off_skips_exploratory(tmp_path):
    rep = orc.run(orc.make_config("completeness", out=tmp_path, gate="exploratory-off"))
    assert rep["checks"] and all(c["gating"] for c in rep["checks"])
    assert rep["exit_code"] == 0


def test_suite_exception_writes_partial_report(tmp_path, monkeypatch):
    def boom(cfg, out):
        raise RuntimeError("broken suite")
    monkeypatch.setitem(orc.SUITES, "tails", boom)
    rep = orc.run(orc.make_config("tails", out=tmp_path))
    assert rep["exit_code"] == 1 and "broken suite" in rep["error"]
    assert json.loads((tmp_path / "tails" / "report.json").read_text())["error"] == rep["error"]


def test_main_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[deviations]\nm = 2\n")
    assert orc.main(["deviations", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert orc.main(["sample", "--out", str(tmp_path), "--seed", "5"]) == 0
    assert "PASS roundtrip_0" in capsys.readouterr().out
