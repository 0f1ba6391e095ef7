from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from brickwall.circuits import grid_cnot_count, import_qasm, load_circuit
from brickwall.cli import main, parse_config
from brickwall.errors import ConfigError

from conftest import dense_circuit


def _run(tmp_path, text, command, *extra, name="run.toml"):
    cfg = tmp_path / name
    cfg.write_text(text)
    out = tmp_path / "out"
    return main([command, "--config", str(cfg), "--out", str(out), *extra]), out


ISING4 = """
[target]
family = "ising"
n = 4
tau = 0.1
steps = 2
"""

FAST = """
[optimizer]
max_iters = 150
lr = 0.01
restarts = 1
init = "seeded"
"""


def test_build_ising_round_trip(tmp_path):
    code, out = _run(tmp_path, ISING4, "build")
    assert code == 0
    for name in ("circuit.json", "circuit.qasm", "ee_trace.json", "manifest.json"):
        assert (out / name).exists()
    c = load_circuit(out / "circuit.json")
    back = import_qasm(out / "circuit.qasm")
    assert np.allclose(dense_circuit(back), dense_circuit(c), atol=1e-12)
    trace = json.loads((out / "ee_trace.json").read_text())
    assert trace["steps"] == [0, 1, 2] and trace["state_ee"][0] == 0


def test_build_haar_is_byte_identical(tmp_path):
    text = '[target]\nfamily = "haar"\nn = 6\ndepth = 3\nseed = 7\n'
    blobs = []
    for k in range(2):
        code, out = _run(tmp_path, text, "build")
        assert code == 0
        assert not (out / "circuit.qasm").exists()
        blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        for p in out.iterdir():
            p.unlink()
    assert blobs[0] == blobs[1]


def test_build_qft_operator_ee_converges(tmp_path):
    final = {}
    for n in (6, 8, 10):
        code, out = _run(tmp_path, f'[target]\nfamily = "qft"\nn = {n}\n', "build")
        assert code == 0
        ee = json.loads((out / "ee_trace.json").read_text())["operator_ee"]
        assert len(ee) == 2 * n
        final[n] = ee[-1]
    assert 0 < final[10] < 1
    assert abs(final[10] - final[8]) < abs(final[8] - final[6]) < 0.05


def test_compile_identity_state(tmp_path):
    text = ('[target]\nfamily = "identity"\nn = 4\n[plan]\nmode = "state"\nd_optim = 1\n'
            '[optimizer]\nmax_iters = 50\nrestarts = 1\ninit = "identity"\n')
    code, out = _run(tmp_path, text, "compile")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["F_optim"] >= 1 - 1e-6
    lines = (out / "compiled.qasm").read_text().splitlines()
    ops = {ln.split("(")[0].split()[0] for ln in lines[3:] if ln and not ln.startswith("//")}
    assert ops <= {"u3", "cx"}


def test_compile_grid_reports_cnot_formula(tmp_path):
    text = ('[target]\nfamily = "ising"\ngrid = [4, 3]\ntau = 0.1\nsteps = 1\n'
            '[plan]\nmode = "state"\nd_optim = 2\n' + FAST.replace("150", "20"))
    code, out = _run(tmp_path, text, "compile")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    enumerated = sum(ln.startswith("cx ") for ln in (out / "compiled.qasm").read_text().splitlines())
    assert rep["n_cnot"] == rep["n_cnot_formula"] == enumerated == grid_cnot_count(4, 3, 2)
    assert rep["F_all"] == pytest.approx(rep["F_optim"] * rep["F_noise"])


def _numbers(out):
    rep = json.loads((out / "report.json").read_text())
    for p in rep["parts"]:
        p.pop("wall_time")
    return rep


def test_compile_is_reproducible(tmp_path):
    text = ISING4 + "[plan]\nd_optim = 2\n" + FAST
    _, out = _run(tmp_path, text, "compile", "--seed", "3")
    first = _numbers(out)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seeds"] == [3]
    _, out = _run(tmp_path, text, "compile", "--seed", "3")
    assert _numbers(out) == first


def test_compile_multi_part(tmp_path):
    text = ISING4.replace("steps = 2", "steps = 4") + "[plan]\nd_target = [2, 2]\nd_optim = 2\n" + FAST
    code, out = _run(tmp_path, text, "compile")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert [p["mode"] for p in rep["parts"]] == ["state", "unitary"]
    assert (out / "compiled_part0.qasm").exists() and (out / "compiled_part1.qasm").exists()
    assert rep["gamma"] == pytest.approx(3 * 4 / 4)


def test_sweep_noise_free_and_report(tmp_path, capsys):
    text = ISING4 + "[plan]\ndepths = [1, 2]\n" + FAST + "[noise]\neps = 0.0\n"
    code, out = _run(tmp_path, text, "sweep")
    assert code == 0
    with (out / "sweep.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert {"d_optim", "n_cnot", "F_optim", "F_noise", "F_all"} <= set(rows[0])
    for r in rows:
        assert r["F_all"] == r["F_optim"]
    capsys.readouterr()
    assert main(["report", "--out", str(out)]) == 0
    assert "d_max" in capsys.readouterr().out


def test_sweep_multiple_eps(tmp_path):
    text = ISING4 + "[plan]\ndepths = [1, 2]\n" + FAST + "[noise]\neps = [0.0, 0.01]\n"
    code, out = _run(tmp_path, text, "sweep")
    assert code == 0
    assert (out / "sweep_eps0.csv").exists() and (out / "sweep_eps0.01.csv").exists()
    rep = json.loads((out / "report.json").read_text())
    assert [s["eps2"] for s in rep["sweeps"]] == [0.0, 0.01]


def test_sweep_qft_baseline_rows(tmp_path):
    text = ('[target]\nfamily = "qft"\nn = 4\n[plan]\ndepths = [1]\n[sweep]\n'
            'aqft_baseline = true\n' + FAST)
    code, out = _run(tmp_path, text, "sweep")
    assert code == 0
    with (out / "sweep.csv").open() as fh:
        kinds = [r["kind"] for r in csv.DictReader(fh)]
    assert kinds.count("aqft") == 3


def test_unknown_key_reports_line(tmp_path, capsys):
    code, _ = _run(tmp_path, ISING4 + "[optimizer]\nmax_iter = 3\n", "build")
    assert code == 2
    err = capsys.readouterr().err
    assert "line 8" in err and "optimizer.max_iter" in err


def test_config_errors():
    with pytest.raises(ConfigError) as exc:
        parse_config('[target]\nfamily = "ising"\nn = 4\n')
    assert "tau" in str(exc.value)
    with pytest.raises(ConfigError):
        parse_config('[target]\nfamily = "qft"\ngrid = [2, 2]\n')
    with pytest.raises(ConfigError):
        parse_config('[bogus]\nx = 1\n')
    with pytest.raises(ConfigError):
        parse_config('[target]\nfamily = "qft"\nn = 4\n[noise]\neps = 1.0\n')
    cfg = parse_config('{"target": {"family": "qft", "n": 4}}', "json")
    assert cfg.get("target", "n") == 4


def test_exit_codes(tmp_path):
    assert main(["build", "--config", str(tmp_path / "missing.toml")]) == 3
    assert main(["frobnicate"]) == 2
    assert main(["build"]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[target\n")
    assert main(["build", "--config", str(bad)]) == 2
    assert main(["build", "--config", str(bad), "--eps", "1.5"]) == 2
