import json
import re

import pytest

from umpcodes import cli
from umpcodes.na import NaClass, NaProblem, na_min_snr

SMALL_FLAGS = ["--family", "ztcc", "--n", "32", "--k0", "6", "--k1", "12",
               "--generators", "117,127,155,171/133,171", "--eps0", "1e-2", "--eps1", "5e-2",
               "--batch-size", "500", "--max-frames", "5000"]


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_na_two_classes(capsys):
    code, out, _ = run(["na", "--n", "128", "--class", "32:1e-5", "--class", "64:1e-3"], capsys)
    assert code == 0
    ref = na_min_snr(NaProblem(128, (NaClass(32, 1e-5), NaClass(64, 1e-3))))
    snr = float(re.search(r"Es/N0\* = (\S+) dB", out).group(1))
    assert snr == pytest.approx(ref.esn0_db, abs=1e-4)
    lams = [float(x) for x in re.findall(r"lambda = (\S+),", out)]
    assert lams == pytest.approx(list(ref.lambdas), rel=1e-5)
    assert "C = " in out and "V = " in out


def test_na_single_class_has_unit_weight(capsys):
    code, out, _ = run(["na", "--n", "128", "--class", "64:1e-3"], capsys)
    assert code == 0
    assert re.search(r"lambda = 1,", out)


def test_na_writes_json(tmp_path, capsys):
    prefix = str(tmp_path / "na")
    run(["na", "--n", "64", "--class", "16:1e-3", "--class", "24:1e-2", "--out", prefix], capsys)
    d = json.load(open(prefix + ".json"))
    assert d["n"] == 64 and len(d["lambdas"]) == 2


@pytest.mark.parametrize("argv", [
    ["na", "--n", "128", "--class", "32-1e-5"],
    ["na", "--n", "128", "--class", "32:0.7"],
    ["na", "--n", "128"],
])
def test_na_rejects_bad_input(argv, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code != 0


def test_intersect_zero_and_searched_offsets(capsys):
    flags = ["--family", "ztcc", "--n", "32", "--k0", "4", "--k1", "12"]
    code, out, _ = run(["intersect", *flags], capsys)
    assert code == 0 and out.startswith("nonempty")
    code, out, _ = run(["intersect", *flags, "--search-offsets", "--show-offsets"], capsys)
    assert code == 0 and out.startswith("empty")
    assert re.search(r"v0 = [01]{32}", out)


def test_intersect_matrix_file(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"g0": ["1100", "0011"], "g1": ["1111"], "v0": "0000", "v1": "1100"}))
    code, out, _ = run(["intersect", "--matrices", str(path)], capsys)
    assert code == 0 and out.startswith("nonempty")
    path.write_text(json.dumps({"g0": ["1100", "0011"], "g1": ["1111"], "v0": "0000", "v1": "0001"}))
    code, out, _ = run(["intersect", "--matrices", str(path)], capsys)
    assert out.startswith("empty")
    path.write_text(json.dumps({"g0": ["1100"], "g1": ["1111"], "v0": "0010", "v1": "0000"}))
    code, out, _ = run(["intersect", "--matrices", str(path)], capsys)
    assert out.startswith("empty")


def test_intersect_length_mismatch(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"g0": ["1100"], "g1": ["11110"]}))
    with pytest.raises(SystemExit) as info:
        cli.main(["intersect", "--matrices", str(path)])
    assert info.value.code == 2
    assert "mismatch" in capsys.readouterr().err


def test_simulate_overlap_reports_floor(tmp_path, capsys):
    prefix = str(tmp_path / "sim")
    code, out, err = run(["simulate", "--n", "32", "--k0", "4", "--k1", "12", "--overlap", "--esn0-db", "9",
                          "--max-frames", "4000", "--batch-size", "2000", "--out", prefix], capsys)
    assert code == 0
    assert "predicted class-0 floor |A|/M0 = 0.0625" in out
    assert err.startswith("config:")
    summary = json.load(open(prefix + ".json"))
    assert summary["predicted_floor"] == 0.0625
    assert summary["config"]["overlap"] is True


def test_min_snr_reproducible(tmp_path, capsys):
    outputs = []
    for i in range(2):
        prefix = str(tmp_path / f"run{i}")
        code, out, _ = run(["min-snr", *SMALL_FLAGS, "--bracket=-4,6", "--seed", "3", "--out", prefix], capsys)
        assert code == 0 and "min Es/N0" in out
        outputs.append(open(prefix + ".csv").read())
    assert outputs[0] == outputs[1]
    assert outputs[0].startswith("# config=")


def test_min_snr_bad_bracket_exits_nonzero(tmp_path, capsys):
    code, _, err = run(["min-snr", *SMALL_FLAGS, "--bracket=-12,-10", "--out", str(tmp_path / "x")], capsys)
    assert code == 1 and "bracket" in err


def test_config_file_precedence(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n": 64, "k0": 10, "k1": 20, "seed": 11, "eps1": 0.05}))
    code, _, err = run(["intersect", "--config", str(path), "--k1", "28"], capsys)
    assert code == 0
    cfg = json.loads(err.split("config:", 1)[1])
    assert (cfg["n"], cfg["k0"], cfg["k1"], cfg["seed"], cfg["eps1"]) == (64, 10, 28, 11, 0.05)
    path.write_text(json.dumps({"n": 64, "bogus": 1}))
    with pytest.raises(SystemExit):
        cli.main(["intersect", "--config", str(path)])


def test_max_rate(tmp_path, capsys):
    code, out, _ = run(["max-rate", "--family", "polar", "--n", "32", "--list-size", "8", "--eps0", "1e-2",
                        "--eps1", "5e-2", "--esn0-db", "3", "--max-frames", "3000",
                        "--out", str(tmp_path / "mr")], capsys)
    assert code == 0
    assert re.search(r"R0\* = [0-9.]+, R1\* = [0-9.]+", out)
