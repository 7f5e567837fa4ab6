import csv
import json

import pytest

from jamming.cli import main, parse_grid


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_fluid_command(tmp_path, capsys):
    assert main(["fluid", "--c", "1", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "fluid_summary.json").read_text())
    assert f"{summary['T_star']:.6f}" == "0.693147"
    assert summary["sigma2"] == pytest.approx(0.125)
    rows = read_csv(tmp_path / "fluid.csv")
    assert list(rows[0]) == ["t", "z_er", "l", "u", "m"]
    for row in rows:
        assert float(row["l"]) <= float(row["z_er"]) + 1e-9 <= float(row["u"]) + 2e-9


def test_fluid_brackets_er_constant(tmp_path):
    assert main(["fluid", "--c", "1.4", "--out", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "fluid_summary.json").read_text())
    assert s["T_lower"] <= 0.6253 <= s["T_upper"]


@pytest.mark.parametrize("c", ["0", "-1"])
def test_fluid_rejects_nonpositive_c(tmp_path, capsys, c):
    assert main(["fluid", "--c", c, "--out", str(tmp_path)]) != 0
    assert "c must be > 0" in capsys.readouterr().err


def test_unwritable_output_fails(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["fluid", "--c", "1", "--out", str(blocker / "sub")]) != 0
    assert "error" in capsys.readouterr().err


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "er-chain", "c": 0.0, "n": 100, "seed": 3}))
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "trace.csv")
    assert [int(r["Z"]) for r in rows] == list(range(101))
    assert main(["simulate", "--config", str(cfg), "--n", "20", "--out", str(out)]) == 0
    assert len(read_csv(out / "trace.csv")) == 21


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"cc": 1.0}))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) != 0
    assert "cc" in capsys.readouterr().err


def test_rsa_trace_is_sandwiched_and_reproducible(tmp_path):
    args = ["figure1", "--n", "400", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("trace.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = read_csv(tmp_path / "a" / "trace.csv")
    assert list(rows[0]) == ["step", "Z", "U", "L", "area_S", "r_tilde", "alpha"]
    assert all(int(r["L"]) <= int(r["Z"]) <= int(r["U"]) for r in rows)
    s = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert s["T_U"] <= s["T_Z"] <= s["T_L"]


def test_figure2_table(tmp_path):
    assert main(["figure2", "--grid", "0.05,1.0", "--n", "300", "--reps", "5", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "figure2.csv")
    assert list(rows[0]) == ["c", "T_lower", "T_upper", "T_er", "rsa_mean", "ci_low", "ci_high"]
    small = rows[0]
    c = float(small["c"])
    assert float(small["T_upper"]) - float(small["T_lower"]) <= 10 * c * c
    for r in rows:
        assert float(r["ci_low"]) <= float(r["rsa_mean"]) <= float(r["ci_high"])


def test_clt_and_envelope_commands(tmp_path):
    assert main(["clt", "--n", "500", "--reps", "30", "--out", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "clt_summary.json").read_text())
    assert s["reps"] == 30 and 0 <= s["ks_pvalue"] <= 1
    assert len(read_csv(tmp_path / "clt_samples.csv")) == 30
    assert main(["envelope", "--n", "500", "--reps", "10", "--out", str(tmp_path)]) == 0
    e = json.loads((tmp_path / "envelope_summary.json").read_text())
    assert e["bound"]["omega_N"] > 0


def test_floats_use_nine_significant_digits(tmp_path):
    main(["fluid", "--c", "1", "--dt", "0.1", "--out", str(tmp_path)])
    row = read_csv(tmp_path / "fluid.csv")[1]
    assert row["z_er"] == format(2 * (1 - 2.718281828459045 ** -0.1), ".9g")


def test_parse_grid():
    assert parse_grid("0.25:1:0.25") == (0.25, 0.5, 0.75, 1.0)
    assert parse_grid("1,2") == (1.0, 2.0)
    with pytest.raises(ValueError):
        parse_grid("0:1:0")
