import json

import numpy as np
import pytest

from qsim.cli import main, parse_noise_spec, UsageError
from qsim.fermion import fermion_to_pauli
from qsim.formats import bundled_text, parse_fermion_file, parse_pauli_file


@pytest.fixture
def files(tmp_path):
    """Bundled toy inputs copied into a scratch directory, plus a built circuit and Hamiltonian."""
    for name in ("toy4.ferm", "toy4.amp", "toy8.amp"):
        (tmp_path / name).write_text(bundled_text(name))
    assert main(["transform", "--mapping", "jw", "--in", str(tmp_path / "toy4.ferm"),
                 "--out", str(tmp_path / "toy4.pauli"), "--json", str(tmp_path / "t.json")]) == 0
    assert main(["ucc", "--amps", str(tmp_path / "toy4.amp"), "--mapping", "jw",
                 "--out", str(tmp_path / "toy4.circ"), "--json", str(tmp_path / "u.json")]) == 0
    return tmp_path


def load(path):
    return json.loads(path.read_text())


def test_transform_round_trip(files):
    n, h = parse_pauli_file((files / "toy4.pauli").read_text())
    _, f = parse_fermion_file(bundled_text("toy4.ferm"))
    want = fermion_to_pauli(f, "jw", 4)
    assert n == 4
    assert len((h - want).simplify(1e-12)) == 0
    summary = load(files / "t.json")
    assert summary["command"] == "transform" and len(summary["inputs"]["fermion"]) == 40


def test_ucc_summary(files):
    s = load(files / "u.json")
    assert s["reference"] == 0b0011 and s["electrons"] == 2 and s["gate_count"] > 0
    assert "# reference 0b0011" in (files / "toy4.circ").read_text()


def run_args(files, csv, seed="7", extra=()):
    return ["run", "--circuit", str(files / "toy4.circ"), "--ham", str(files / "toy4.pauli"),
            "--mapping", "jw", "--noise", "scenario=t1tphi,M=1e3", "--traj", "40",
            "--seed", seed, "--csv", str(files / csv), "--json", str(files / (csv + ".json")),
            *extra]


def test_run_is_deterministic(files):
    assert main(run_args(files, "a.csv")) == 0
    assert main(run_args(files, "b.csv", extra=["--threads", "3"])) == 0
    assert (files / "a.csv").read_bytes() == (files / "b.csv").read_bytes()
    assert main(run_args(files, "c.csv", seed="8")) == 0
    assert (files / "a.csv").read_bytes() != (files / "c.csv").read_bytes()


def test_run_json_fields(files):
    assert main(run_args(files, "a.csv")) == 0
    s = load(files / "a.csv.json")
    assert s["seeds"] == {"master_seed": 7}
    assert set(s["inputs"]) == {"circuit", "ham"}
    assert set(s["results"]) == {"energy", "particle_number"}
    energy = s["results"]["energy"]
    assert energy["trajectory_count"] == 40 and energy["gate_count"] == s["gate_count"]
    assert energy["mean_error"] == pytest.approx(energy["noisy_mean"] - energy["pristine_value"])
    assert s["config"]["noise"]["M1"] == 1e3
    assert s["outputs"]["csv"] and s["version"]
    header = (files / "a.csv").read_text().splitlines()[0]
    assert header == "traj_id,energy,particle_number"


def test_noise_spec_options():
    model, opts = parse_noise_spec("M1=100,M2=50,mode=single,fuse_idle=on,traj=12,seed=0x10")
    assert (model.M1, model.M2) == (100.0, 50.0)
    assert opts["fuse_idle"] and not opts["antithetic"]
    assert opts["num_trajectories"] == 12 and opts["master_seed"] == 16
    model, opts = parse_noise_spec(None)
    assert model.is_noiseless and opts == {}
    for bad in ("M=1e3", "scenario=relax", "colour=red", "scenario=t1tphi,M=abc"):
        with pytest.raises(UsageError):
            parse_noise_spec(bad)


def test_exit_codes(files, capsys):
    assert main(["run", "--circuit", str(files / "toy4.circ")] + ["--bogus"]) == 2
    assert main(["run", "--circuit", str(files / "toy4.circ"), "--noise", "M=1"]) == 2
    # T2 > 2 T1 is rejected while reading the noise spec
    assert main(["run", "--circuit", str(files / "toy4.circ"), "--mapping", "jw",
                 "--noise", "M1=1,M2=5", "--traj", "2"]) == 2
    assert main(["run", "--circuit", str(files / "missing.circ")]) == 1
    err = capsys.readouterr().err
    assert "qsim run" in err


def test_sweep_csv(files):
    out = files / "sweep.csv"
    assert main(["sweep", "--circuit", str(files / "toy4.circ"), "--ham", str(files / "toy4.pauli"),
                 "--mapping", "jw", "--scenarios", "relax:inf,dephase:1e4", "--traj", "10",
                 "--csv", str(out), "--json", str(files / "s.json")]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("scenario,M,M1,M2,observable")
    assert len(lines) == 5
    rows = load(files / "s.json")["rows"]
    assert rows[0]["mean_error"] == 0.0 and rows[0]["M"] == "inf"


def test_qft(tmp_path):
    out = tmp_path / "amps.npy"
    assert main(["qft", "--n", "8", "--input", "0x2b", "--out", str(out),
                 "--json", str(tmp_path / "q.json")]) == 0
    s = load(tmp_path / "q.json")
    assert s["max_abs_deviation_sampled"] <= 1e-10 and s["magnitude_spread"] <= 1e-12
    amps = np.load(out)
    want = np.exp(2j * np.pi * 0x2b * np.arange(256) / 256) / 16
    assert np.max(np.abs(amps - want)) <= 1e-10


def test_calibrate_small(tmp_path):
    assert main(["calibrate", "--M1", "20", "--M2", "20", "--steps", "60", "--traj", "2000",
                 "--csv", str(tmp_path / "c.csv"), "--json", str(tmp_path / "c.json")]) == 0
    s = load(tmp_path / "c.json")
    assert s["relative_error_M1"] <= 0.1 and s["relative_error_M2"] <= 0.1
    assert len((tmp_path / "c.csv").read_text().splitlines()) == 61


def test_gate_error(tmp_path):
    assert main(["gate-error", "--n", "8", "--json", str(tmp_path / "g.json")]) == 0
    s = load(tmp_path / "g.json")
    assert s["particle_error"] > 0 and s["config"]["excitations"] == [[0, 2], [1, 7]]
    assert main(["gate-error", "--n", "6"]) == 1


def test_dist_run_matches_run(files):
    base = ["--circuit", str(files / "toy4.circ"), "--mapping", "jw",
            "--noise", "scenario=relax,M=500", "--traj", "6", "--seed", "3"]
    assert main(["run", *base, "--csv", str(files / "r.csv"), "--json", str(files / "r.json")]) == 0
    assert main(["dist-run", "--ranks", "2", *base, "--chunk", "2",
                 "--csv", str(files / "d.csv"), "--json", str(files / "d.json")]) == 0
    single = np.loadtxt(files / "r.csv", delimiter=",", skiprows=1)
    dist = np.loadtxt(files / "d.csv", delimiter=",", skiprows=1)
    assert single.shape == (6, 2) and np.max(np.abs(single - dist)) <= 1e-12
    d = load(files / "d.json")
    assert d["exchange"]["messages"][0] > 0
    assert main(["dist-run", "--ranks", "3", *base]) == 2


def test_mtrot_bracket_failure_is_runtime_error(files, capsys):
    # one single excitation: no Trotter error at either eta, so no crossing
    (files / "one.amp").write_text("modes 4\nelectrons 2\nsingle 0 2 0.1\n")
    assert main(["mtrot", "--amps", str(files / "one.amp"), "--ferm", str(files / "toy4.ferm"),
                 "--lo", "3", "--hi", "5", "--traj", "200"]) == 1
    assert "no crossing" in capsys.readouterr().err
