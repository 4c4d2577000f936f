"""Command-line front end.

Every subcommand prints (or writes) a JSON summary with the configuration,
seeds and content hashes of its inputs.  Exit status: 0 success, 1 runtime
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import Circuit, content_hash, parse_circuit
from .fermion import Mapping, fermion_to_pauli
from .formats import parse_fermion_file, parse_pauli_file, write_pauli_file
from .noise import NoiseMode, NoiseModel, NoiseScenario, ScenarioKind, TrajectoryConfig, run_trajectories
from .pauli import PauliSum, fmt_float

log = logging.getLogger("qsim")


class UsageError(Exception):
    pass


# -- helpers -------------------------------------------------------------------

def _read(path: str) -> tuple[str, str]:
    data = Path(path).read_bytes()
    return data.decode(), content_hash(data)


def _num(v):
    """JSON-safe float: non-finite values become strings."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {k: _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    return v


def _emit(summary: dict, path: str | None):
    text = json.dumps(_num(summary), indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    return str(v)


def write_csv(path: str, header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())
    return content_hash(buf.getvalue().encode())


NOISE_KEYS = {"scenario", "M", "M1", "M2", "mode", "fuse_idle", "antithetic", "traj", "seed"}
_TRUE = ("1", "true", "yes", "on")


def parse_noise_spec(spec: str | None) -> tuple[NoiseModel, dict]:
    """``scenario=t1tphi,M=1e6`` or ``M1=..,M2=..`` plus ``mode``, ``fuse_idle``,
    ``antithetic``, ``traj`` and ``seed``.  Returns the model and config overrides."""
    if not spec or spec == "none":
        return NoiseModel(), {}
    fields = {}
    for part in spec.split(","):
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in NOISE_KEYS:
            raise UsageError(f"bad noise field {part!r}; expected one of {sorted(NOISE_KEYS)}")
        fields[key] = val.strip()
    try:
        if "scenario" in fields:
            if "M" not in fields:
                raise UsageError("scenario needs M=<coherence parameter>")
            model = NoiseScenario(ScenarioKind(fields["scenario"]), float(fields["M"])).model()
        elif "M1" in fields or "M2" in fields:
            model = NoiseModel(float(fields.get("M1", "inf")), float(fields.get("M2", "inf")))
        else:
            raise UsageError("noise spec needs scenario=..,M=.. or M1=..,M2=..")
        opts = {"mode": NoiseMode(fields.get("mode", "three")),
                "fuse_idle": fields.get("fuse_idle", "off").lower() in _TRUE,
                "antithetic": fields.get("antithetic", "off").lower() in _TRUE}
        if "traj" in fields:
            opts["num_trajectories"] = int(fields["traj"])
        if "seed" in fields:
            opts["master_seed"] = int(fields["seed"], 0)
    except ValueError as exc:
        raise UsageError(f"bad noise spec {spec!r}: {exc}") from None
    return model, opts


def _load_circuit(path: str) -> tuple[Circuit, dict, str]:
    text, digest = _read(path)
    circ, headers = parse_circuit(text)
    return circ, headers, digest


def _reference(headers: dict, override: str | None) -> int:
    raw = override if override is not None else headers.get("reference", "0")
    return int(raw, 0)


def _observables(args, circ: Circuit, headers: dict, hashes: dict) -> dict[str, PauliSum]:
    obs = {}
    if args.ham:
        text, hashes["ham"] = _read(args.ham)
        n, h = parse_pauli_file(text)
        if n != circ.num_qubits:
            raise ValueError(f"Hamiltonian has {n} qubits, circuit {circ.num_qubits}")
        obs["energy"] = h.assert_hermitian()
    mapping = args.mapping or headers.get("mapping")
    if mapping and not getattr(args, "no_particle_number", False):
        from .experiments import particle_number_observable
        obs["particle_number"] = particle_number_observable(circ.num_qubits, Mapping(mapping))
    if not obs:
        raise UsageError("nothing to measure: pass --ham or a circuit/--mapping for the particle number")
    return obs


def _model_dict(model: NoiseModel) -> dict:
    return {"M1": model.M1, "M2": model.M2, "px": model.px, "py": model.py, "pz": model.pz,
            "stddevs": list(model.s)}


# -- subcommands ---------------------------------------------------------------

def cmd_transform(args) -> dict:
    text, digest = _read(args.input)
    n, f = parse_fermion_file(text)
    h = fermion_to_pauli(f, Mapping(args.mapping), n)
    out = write_pauli_file(h)
    Path(args.out).write_text(out)
    return {"command": "transform", "mapping": args.mapping, "modes": n, "terms": len(h),
            "inputs": {"fermion": digest}, "outputs": {"pauli": content_hash(out.encode())}}


def cmd_ucc(args) -> dict:
    from .ucc import build_ucc_circuit, parse_amplitude_file

    text, digest = _read(args.amps)
    amps = parse_amplitude_file(text)
    uc = build_ucc_circuit(amps, Mapping(args.mapping), args.eta, args.cutoff)
    out = uc.to_text()
    Path(args.out).write_text(out)
    return {"command": "ucc", "mapping": args.mapping, "eta": args.eta, "cutoff": args.cutoff,
            "qubits": amps.n_modes, "electrons": amps.n_electrons, "gate_count": uc.gate_count,
            "reference": uc.reference, "inputs": {"amplitudes": digest},
            "outputs": {"circuit": content_hash(out.encode())}}


def _traj_config(args, opts: dict) -> TrajectoryConfig:
    kw = {"num_trajectories": args.traj, "master_seed": args.seed, "workers": args.threads}
    kw.update(opts)
    return TrajectoryConfig(**kw)


def cmd_run(args) -> dict:
    from .experiments import estimator_report
    from .noise import pristine_values

    hashes = {}
    circ, headers, hashes["circuit"] = _load_circuit(args.circuit)
    model, opts = parse_noise_spec(args.noise)
    cfg = _traj_config(args, opts)
    obs = _observables(args, circ, headers, hashes)
    ref = _reference(headers, args.reference)
    t0 = time.perf_counter()
    res = run_trajectories(circ, ref, model, obs, cfg)
    pristine = pristine_values(circ, ref, obs)
    elapsed = time.perf_counter() - t0
    summary = {"command": "run", "config": {"trajectories": cfg.num_trajectories,
                                             "mode": cfg.mode.value, "fuse_idle": cfg.fuse_idle,
                                             "antithetic": cfg.antithetic, "reference": ref,
                                             "noise": _model_dict(model)},
               "seeds": {"master_seed": cfg.master_seed}, "inputs": hashes,
               "gate_count": circ.gate_count, "qubits": circ.num_qubits,
               "results": {k: estimator_report(k, o, pristine, res, circ.gate_count).as_dict()
                           for k, o in obs.items()},
               "elapsed_seconds": elapsed}
    if args.csv:
        rows = ([j, *res.values[j]] for j in range(res.num_trajectories))
        summary["outputs"] = {"csv": write_csv(args.csv, ["traj_id", *res.names], rows)}
    return summary


def _parse_scenarios(text: str) -> list[NoiseScenario]:
    out = []
    for part in text.split(","):
        kind, sep, m = part.partition(":")
        if not sep:
            raise UsageError(f"scenario {part!r} must look like kind:M")
        try:
            out.append(NoiseScenario(ScenarioKind(kind.strip()), float(m)))
        except ValueError as exc:
            raise UsageError(f"bad scenario {part!r}: {exc}") from None
    return out


def cmd_sweep(args) -> dict:
    from .experiments import SWEEP_COLUMNS, noise_sweep

    hashes = {}
    circ, headers, hashes["circuit"] = _load_circuit(args.circuit)
    scenarios = _parse_scenarios(args.scenarios)
    obs = _observables(args, circ, headers, hashes)
    _, opts = parse_noise_spec(f"M1=inf,{args.options}" if args.options else None)
    cfg = _traj_config(args, opts)
    h = obs.pop("energy", None)
    number = obs.get("particle_number")
    if h is None:
        h, number = number, None
    rows, _ = noise_sweep(circ, _reference(headers, args.reference), h, scenarios, cfg, number)
    summary = {"command": "sweep", "config": {"trajectories": cfg.num_trajectories,
                                               "mode": cfg.mode.value, "antithetic": cfg.antithetic,
                                               "scenarios": args.scenarios},
               "seeds": {"master_seed": cfg.master_seed}, "inputs": hashes,
               "gate_count": circ.gate_count, "rows": rows}
    if args.csv:
        summary["outputs"] = {"csv": write_csv(args.csv, SWEEP_COLUMNS,
                                               ([r[c] for c in SWEEP_COLUMNS] for r in rows))}
    return summary


def cmd_calibrate(args) -> dict:
    from .experiments import calibrate

    res = calibrate(args.M1, args.M2, args.steps, args.traj, args.seed, NoiseMode(args.mode))
    e1, e2 = res.relative_errors()
    summary = {"command": "calibrate",
               "config": {"M1": args.M1, "M2": args.M2, "steps": args.steps,
                          "trajectories": args.traj, "mode": args.mode},
               "seeds": {"master_seed": args.seed},
               "fitted_M1": res.fitted_M1, "fitted_M2": res.fitted_M2,
               "relative_error_M1": e1, "relative_error_M2": e2}
    if args.csv:
        rows = zip(res.times, res.z_curve, res.x_curve)
        summary["outputs"] = {"csv": write_csv(args.csv, ["step", "mean_Z", "mean_X"], rows)}
    return summary


def cmd_mtrot(args) -> dict:
    from .experiments import find_m_trot
    from .ucc import parse_amplitude_file

    hashes = {}
    text, hashes["amplitudes"] = _read(args.amps)
    amps = parse_amplitude_file(text)
    text, hashes["fermion"] = _read(args.ferm)
    _, f = parse_fermion_file(text)
    h = fermion_to_pauli(f, Mapping(args.mapping), amps.n_modes)
    cfg = TrajectoryConfig(args.traj, args.seed, args.threads, antithetic=not args.plain)
    res = find_m_trot(amps, Mapping(args.mapping), h, ScenarioKind(args.scenario),
                      (args.lo, args.hi), cfg)
    return {"command": "mtrot", "config": {"mapping": args.mapping, "scenario": args.scenario,
                                           "log10_bounds": [args.lo, args.hi],
                                           "trajectories": args.traj, "antithetic": cfg.antithetic},
            "seeds": {"master_seed": args.seed}, "inputs": hashes,
            "M_trot": res.m_trot, "log10_M_trot": math.log10(res.m_trot),
            "log10_bracket": list(res.log10_bracket), "exact_energy": res.exact_energy,
            "evaluations": [list(e) for e in res.evaluations]}


def cmd_gate_error(args) -> dict:
    from .experiments import GateErrorSpec, gate_error_experiment

    spec = GateErrorSpec(args.n, args.theta1, args.theta2, args.h_eps, args.yb_eps,
                         args.cnot_angle, args.cnot_errors)
    res = gate_error_experiment(spec, args.threads)
    return {"command": "gate-error",
            "config": {"n": spec.n, "theta1": spec.theta1, "theta2": spec.theta2,
                       "h_overrotation": spec.h_overrotation, "yb_overrotation": spec.yb_overrotation,
                       "cnot_angle": spec.cnot_angle, "cnot_errors": spec.cnot_errors,
                       "overrotation_model": "excess rotation about the gate's own axis; "
                                             "H as a pi rotation about (X+Z)/sqrt(2)",
                       "excitations": [list(e) for e in spec.excitations]},
            "particle_number": res.particle_number, "particle_error": res.particle_error,
            "gate_count": res.gate_count, "errored_cnots": res.errored_cnots}


def cmd_qft(args) -> dict:
    from .statevec import init_basis_state, run_circuit
    from .ucc import qft_circuit

    circ = qft_circuit(args.n)
    t0 = time.perf_counter()
    state = run_circuit(init_basis_state(args.n, args.input), circ, workers=args.threads)
    elapsed = time.perf_counter() - t0
    amps = state.amplitudes
    # analytic: amplitude y = exp(2 pi i x y / N) / sqrt(N)
    sample = np.unique(np.linspace(0, len(amps) - 1, min(len(amps), 4096)).astype(np.int64))
    expect = np.exp(2j * np.pi * ((args.input * sample) % len(amps)) / len(amps)) / math.sqrt(len(amps))
    summary = {"command": "qft", "config": {"n": args.n, "input": args.input},
               "gate_count": circ.gate_count, "elapsed_seconds": elapsed,
               "max_abs_deviation_sampled": float(np.max(np.abs(amps[sample] - expect))),
               "magnitude_spread": float(np.ptp(np.abs(amps))),
               "norm": float(np.vdot(amps, amps).real)}
    if args.out:
        np.save(args.out, amps)
    return summary


def cmd_dist_run(args) -> dict:
    from .dist import TcpTransport, distributed_run_circuit, distributed_trajectories, gather
    from .dist.engine import Partition, run_inproc, run_tcp_local
    from .noise import TrajectoryPlan, observable_table

    ranks = args.ranks
    if ranks < 1 or ranks & (ranks - 1):
        raise UsageError("--ranks must be a power of two")
    p = ranks.bit_length() - 1
    hashes = {}
    circ, headers, hashes["circuit"] = _load_circuit(args.circuit)
    model, opts = parse_noise_spec(args.noise)
    cfg = _traj_config(args, opts)
    obs = _observables(args, circ, headers, hashes)
    names, strings, coeffs = observable_table(obs, circ.num_qubits)
    ref = _reference(headers, args.reference)
    plan = TrajectoryPlan(circ, model, cfg)
    count = 1 if model.is_noiseless else cfg.num_trajectories

    def body(tr):
        part = Partition(circ.num_qubits, p, tr.rank, tr, args.chunk)
        vals = distributed_trajectories(part, plan, ref, strings, range(count))
        return vals, part.exchange_counts()

    t0 = time.perf_counter()
    if args.transport == "inproc":
        results = run_inproc(p, body)
    elif args.peers:
        peers = [(h, int(pt)) for h, pt in (x.rsplit(":", 1) for x in args.peers.split(","))]
        if len(peers) != ranks or args.rank is None:
            raise UsageError("--peers needs one host:port per rank and --rank")
        tr = TcpTransport(args.rank, peers)
        try:
            results = [None] * ranks
            results[args.rank] = body(tr)
        finally:
            tr.close()
    else:
        results = run_tcp_local(p, body)
    elapsed = time.perf_counter() - t0
    mine = next(r for r in results if r is not None)
    string_values = mine[0]
    if count < cfg.num_trajectories:
        string_values = np.repeat(string_values, cfg.num_trajectories, axis=0)
    values = (string_values[:, None, :] * coeffs[None, :, :]).sum(axis=2)
    summary = {"command": "dist-run",
               "config": {"ranks": ranks, "transport": args.transport, "chunk": args.chunk,
                          "trajectories": cfg.num_trajectories, "noise": _model_dict(model)},
               "seeds": {"master_seed": cfg.master_seed}, "inputs": hashes,
               "gate_count": circ.gate_count,
               "means": {n: float(np.mean(values[:, k])) for k, n in enumerate(names)},
               "exchange": {"messages": [r[1][0] for r in results if r is not None],
                            "amplitudes": [r[1][1] for r in results if r is not None]},
               "elapsed_seconds": elapsed}
    if args.csv:
        rows = ([j, *values[j]] for j in range(values.shape[0]))
        summary["outputs"] = {"csv": write_csv(args.csv, ["traj_id", *names], rows)}
    return summary


# -- argument parsing -----------------------------------------------------------

def _add_traj(p, default=10_000):
    p.add_argument("--traj", type=int, default=default, help="number of trajectories")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default QSIM_THREADS or 1)")


def _add_obs(p):
    p.add_argument("--ham", help="Pauli-sum observable file")
    p.add_argument("--mapping", choices=[m.value for m in Mapping],
                   help="mapping for the particle-number observable (default: circuit header)")
    p.add_argument("--reference", help="initial basis state, e.g. 0b0011 (default: circuit header)")
    p.add_argument("--csv", help="write per-trajectory / per-row CSV here")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", help="write the JSON summary to this file instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")
    ap = argparse.ArgumentParser(prog="qsim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"qsim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    _orig = sub.add_parser

    def add_parser(name, **kw):
        return _orig(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("transform", help="map a fermionic operator to a Pauli sum")
    p.add_argument("--mapping", choices=[m.value for m in Mapping], required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("ucc", help="build a Trotterized UCC circuit from cluster amplitudes")
    p.add_argument("--amps", required=True)
    p.add_argument("--mapping", choices=[m.value for m in Mapping], default="jw")
    p.add_argument("--eta", type=int, default=1)
    p.add_argument("--cutoff", type=float, default=1e-5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ucc)

    p = sub.add_parser("run", help="noisy trajectory ensemble for one circuit")
    p.add_argument("--circuit", required=True)
    p.add_argument("--noise", help="e.g. scenario=t1tphi,M=1e6 or M1=1e5,M2=5e4,mode=single")
    _add_obs(p)
    _add_traj(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="energy / particle-number errors over noise scenarios")
    p.add_argument("--circuit", required=True)
    p.add_argument("--scenarios", required=True, help="comma list of kind:M, e.g. relax:1e5,dephase:1e5")
    p.add_argument("--options", help="noise options: mode=..,fuse_idle=..,antithetic=..")
    _add_obs(p)
    _add_traj(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="fit decay times of an idle qubit under noise gates")
    p.add_argument("--M1", type=float, required=True)
    p.add_argument("--M2", type=float, required=True)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--mode", choices=[m.value for m in NoiseMode], default="three")
    p.add_argument("--csv")
    _add_traj(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("mtrot", help="coherence parameter where eta=1 and eta=2 errors match")
    p.add_argument("--amps", required=True)
    p.add_argument("--ferm", required=True, help="fermionic Hamiltonian")
    p.add_argument("--mapping", choices=[m.value for m in Mapping], default="jw")
    p.add_argument("--scenario", choices=[k.value for k in ScenarioKind], default="t1tphi")
    p.add_argument("--lo", type=float, default=2.0, help="log10 lower bound of M")
    p.add_argument("--hi", type=float, default=10.0, help="log10 upper bound of M")
    p.add_argument("--plain", action="store_true", help="disable antithetic sampling")
    _add_traj(p)
    p.set_defaults(func=cmd_mtrot)

    p = sub.add_parser("gate-error", help="particle-number error from systematic gate errors")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta1", type=float, default=0.1)
    p.add_argument("--theta2", type=float, default=0.1)
    p.add_argument("--h-eps", type=float, default=1e-4)
    p.add_argument("--yb-eps", type=float, default=1e-4)
    p.add_argument("--cnot-angle", type=float, default=math.pi + 1e-3)
    p.add_argument("--cnot-errors", choices=["all", "fourth", "none"], default="all")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_gate_error)

    p = sub.add_parser("qft", help="run the quantum Fourier transform on a basis state")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--input", type=lambda s: int(s, 0), default=0)
    p.add_argument("--out", help="save amplitudes as .npy")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_qft)

    p = sub.add_parser("dist-run", help="run a circuit distributed over 2^p ranks")
    p.add_argument("--ranks", type=int, required=True)
    p.add_argument("--transport", choices=["inproc", "tcp"], default="inproc")
    p.add_argument("--circuit", required=True)
    p.add_argument("--noise")
    p.add_argument("--chunk", type=int, default=1 << 18, help="amplitudes per exchange message")
    p.add_argument("--rank", type=int, help="(tcp) run only this rank")
    p.add_argument("--peers", help="(tcp) host:port for every rank, comma separated")
    _add_obs(p)
    _add_traj(p, default=1)
    p.set_defaults(func=cmd_dist_run)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        summary = args.func(args)
    except UsageError as exc:
        print(f"qsim {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("failure", exc_info=True)
        print(f"qsim {args.command}: error: {exc}", file=sys.stderr)
        return 1
    summary["version"] = __version__
    _emit(summary, args.json)
    return 0


if __name__ == "__main__":
    sys.exit(main())
