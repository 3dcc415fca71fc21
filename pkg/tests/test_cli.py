import csv
import json
import math
import subprocess
import sys

import pytest

from nlevel.cli import (EXIT_NONCONVERGENCE, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, Report,
                        RunConfig, parse_zero_file, read_config, run, write_config)
from nlevel.errors import DuplicateDiscriminant, MalformedLine, NonAscendingOrdinate

from conftest import CURVE_37A


def _json(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def test_rmt_density_falling_factorial(capsys):
    code, rep = _json(capsys, ["rmt-density", "--group", "so", "--dim", "5", "--order", "2",
                               "--test-fn", "one"])
    assert code == EXIT_OK
    assert abs(rep["result"]["value"] - 20) < 1e-9
    assert rep["provenance"]["operation"] == "rmtdensity.density_contour"


def test_rmt_mc_symplectic_trace(capsys):
    code, rep = _json(capsys, ["rmt-mc", "--group", "usp", "--dim", "4", "--test-fn", "cos:2",
                               "--samples", "20000", "--seed", "3"])
    assert code == EXIT_OK
    r = rep["result"]
    assert abs(r["value"] + 0.5) < 4 * r["stderr"]


def test_exit_codes(capsys, tmp_path):
    assert run(["no-such-command"]) == EXIT_USAGE
    assert run(["rmt-density", "--dim", "x"]) == EXIT_USAGE
    assert run(["rmt-density", "--dim", "0"]) == EXIT_VALIDATION
    assert run(["nt-density", "--test-fn", "gauss:1"]) == EXIT_VALIDATION
    assert run(["rmt-density", "--test-fn", "bogus:1"]) == EXIT_VALIDATION
    assert run(["rmt-density", "--config", str(tmp_path / "missing.cfg")]) == EXIT_USAGE
    code = run(["nt-density", "--family", "dirichlet", "--test-fn", "gauss:1", "--panels", "2"])
    assert code == EXIT_NONCONVERGENCE
    code = run(["restricted-density", "--dim", "8", "--test-fn", "fejer:1.9", "--q", "1"])
    assert code == EXIT_NONCONVERGENCE
    capsys.readouterr()


def test_residue_check_passes_and_reports(capsys):
    code, rep = _json(capsys, ["residue-check", "--group", "usp", "--dim", "4",
                               "--alpha", "0.3+0.2j,0.1-0.4j"])
    assert code == EXIT_OK and rep["result"]["pass"]
    code, rep = _json(capsys, ["residue-check", f"--family={CURVE_37A}", "--X", "300",
                               "--p-max", "300", "--alpha", "0.05+0.3j", "--beta", "0.1j"])
    assert code == EXIT_OK and rep["result"]["relative_error"] < 1e-6


def test_config_round_trip(tmp_path, capsys):
    cfg = RunConfig(command="rmt-density", group="usp", N=4, n=2, test_fn="cos:1*cos:2",
                    offset=0.25, alpha="0.1+0.2j")
    path = tmp_path / "run.cfg"
    write_config(cfg, path)
    assert read_config(path) == cfg
    code, rep = _json(capsys, ["rmt-density", "--config", str(path), "--dim", "3"])
    assert code == EXIT_OK
    assert rep["config"]["N"] == 3 and rep["config"]["group"] == "usp"
    path.write_text("group=so\nbogus=1\n")
    assert run(["rmt-density", "--config", str(path)]) == EXIT_VALIDATION


def test_zero_file_parsing(tmp_path):
    good = tmp_path / "z.txt"
    good.write_text("# zeros\nd=5\n1.5\n2.25\n\nd=8\n0.75\n")
    db = parse_zero_file(good)
    assert sorted(db.blocks) == [5, 8] and list(db.blocks[5]) == [1.5, 2.25]
    empty = tmp_path / "e.txt"
    empty.write_text("# nothing\n")
    assert parse_zero_file(empty).metadata["empty"]
    cases = [("1.0\n", MalformedLine), ("d=5\nabc\n", MalformedLine),
             ("d=5\n-1.0\n", MalformedLine), ("d=5\n2.0\n1.0\n", NonAscendingOrdinate),
             ("d=5\n1.0\nd=5\n2.0\n", DuplicateDiscriminant), ("d=5\r\n1.0\r\n", MalformedLine),
             ("d=5\n1.00000000000000000001\n", MalformedLine)]
    for i, (text, err) in enumerate(cases):
        bad = tmp_path / f"bad{i}.txt"
        bad.write_bytes(text.encode())
        with pytest.raises(err):
            parse_zero_file(bad)


def test_nt_empirical_command(tmp_path, capsys):
    z = tmp_path / "z.txt"
    z.write_text("d=5\n1.0\n2.0\nd=8\n3.0\n")
    code, rep = _json(capsys, ["nt-empirical", "--zeros", str(z), "--order", "2",
                               "--test-fn", "gauss:100"])
    assert code == EXIT_OK
    assert abs(rep["result"]["value"] - 2 * math.exp(-5 / 20000)) < 1e-14
    bad = tmp_path / "bad.txt"
    bad.write_text("d=5\n2.0\n1.0\n")
    assert run(["nt-empirical", "--zeros", str(bad)]) == EXIT_VALIDATION


@pytest.mark.parametrize("n,rows", [(1, 3), (2, 9)])
def test_csv_term_rows(tmp_path, n, rows):
    out = tmp_path / "r.csv"
    assert run(["rmt-density", "--dim", "3", "--order", str(n), "--test-fn", "cos:1",
                "--format", "csv", "--output", str(out)]) == EXIT_OK
    body = list(csv.reader(out.open()))
    assert body[0] == ["term_K", "term_L", "term_M", "value_re", "value_im"]
    assert len(body) == 1 + rows + 1 and body[-1][0] == "summary"


def test_json_round_trip_is_byte_stable(tmp_path):
    out = tmp_path / "r.json"
    assert run(["rmt-density", "--dim", "3", "--order", "2", "--test-fn", "cos:1",
                "--output", str(out)]) == EXIT_OK
    text = out.read_text()
    assert Report.from_json(text).to_json() == text


@pytest.mark.parametrize("argv", [
    ["rmt-mc", "--group", "so", "--dim", "3", "--order", "2", "--test-fn", "cos:1",
     "--samples", "4000", "--seed", "11"],
    ["ratios-check", "--group", "usp", "--dim", "2", "--alpha", "0.3", "--beta", "0.4",
     "--samples", "4000", "--seed", "5"],
])
def test_threads_do_not_change_reports(tmp_path, argv):
    outs = []
    for t in (1, 8):
        path = tmp_path / f"t{t}.json"
        run(argv + ["--threads", str(t), "--output", str(path)])
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nlevel", "kernel-density", "--group", "usp",
                           "--test-fn", "gauss:1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["value"] > 0
