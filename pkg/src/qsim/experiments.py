"""Estimators and experiment procedures: energy and particle-number errors under
noise, error widths, Trotter/noise trade-off and systematic gate errors.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import curve_fit

from . import gates as G
from .circuit import Circuit, GateOp
from .dm_oracle import dense_matrix_of, exp_pauli_sum
from .fermion import Mapping, fermion_to_pauli, number_operator
from .noise import (
    NoiseModel,
    NoiseMode,
    NoiseScenario,
    ScenarioKind,
    TrajectoryConfig,
    TrajectoryResult,
    noise_matrices,
    pristine_values,
    run_trajectories,
    standard_error,
    trajectory_rng,
)
from .pauli import PauliString, PauliSum
from .statevec import StateVector, expectation_pauli, init_basis_state, run_circuit, z_expectations
from .ucc import (
    ClusterAmplitudes,
    TrotterPlan,
    build_ucc_circuit,
    hartree_fock_reference,
    single_excitation,
    synthesize_exponential,
    trotterize,
    ucc_generator_blocks,
)

CHEMICAL_ACCURACY = 1.6e-3   # Hartree, 1 kcal/mol


# -- estimators ----------------------------------------------------------------

def _term_values(source: StateVector | TrajectoryResult, h: PauliSum) -> tuple[np.ndarray, np.ndarray]:
    """(weights w_g, <O_g>) for every Pauli term of ``h``."""
    h.assert_hermitian()
    items = list(h.items())
    w = np.array([c.real for _, c in items])
    if isinstance(source, StateVector):
        if source.num_qubits != h.num_qubits:
            raise ValueError("observable and state sizes differ")
        vals = np.array([source.norm_squared() if s.is_identity else expectation_pauli(source, s)
                         for s, _ in items])
    else:
        means = source.term_means()
        index = {s: k for k, s in enumerate(source.strings)}
        missing = [str(s) for s, _ in items if s not in index]
        if missing:
            raise KeyError(f"ensemble lacks terms {missing[:3]}")
        vals = np.array([means[index[s]] for s, _ in items])
    return w, vals


def energy_estimate(source: StateVector | TrajectoryResult, h: PauliSum) -> float:
    """sum_g w_g <O_g>; trajectory-averaged for an ensemble."""
    w, v = _term_values(source, h)
    return float(np.dot(w, v))


def pristine_variance(state: StateVector, h: PauliSum) -> float:
    """sigma_p^2 = sum_g (w_g^2 - <H_g>^2); identity terms contribute zero."""
    w, v = _term_values(state, h)
    return float(np.sum(w * w - (w * v) ** 2))


def noisy_variance(ensemble: TrajectoryResult, h: PauliSum) -> float:
    w, v = _term_values(ensemble, h)
    return float(np.sum(w * w - (w * v) ** 2))


def particle_number_observable(n: int, mapping: Mapping | str = Mapping.JW) -> PauliSum:
    return fermion_to_pauli(number_operator(n), mapping, n).simplify()


@dataclass(frozen=True)
class EstimatorReport:
    name: str
    pristine_value: float
    noisy_mean: float
    mean_error: float
    sigma_p: float
    sigma_noisy: float
    error_width: float
    per_gate_error: float
    trajectory_count: int
    standard_error: float
    error_stddev: float          # sample std of the per-trajectory error
    gate_count: int

    @property
    def within_chemical_accuracy(self) -> bool:
        return abs(self.mean_error) <= CHEMICAL_ACCURACY

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["within_chemical_accuracy"] = self.within_chemical_accuracy
        return d


def estimator_report(name: str, h: PauliSum, pristine: TrajectoryResult, noisy: TrajectoryResult,
                     gate_count: int) -> EstimatorReport:
    p_val = energy_estimate(pristine, h)
    n_val = energy_estimate(noisy, h)
    sp = math.sqrt(max(noisy_variance(pristine, h), 0.0))
    sn = math.sqrt(max(noisy_variance(noisy, h), 0.0))
    # per-trajectory values of h, same weights as the estimator
    w, _ = _term_values(noisy, h)
    index = {s: k for k, s in enumerate(noisy.strings)}
    cols = [index[s] for s, _ in h.items()]
    per_traj = noisy.string_values[:, cols] @ w if cols else np.zeros(noisy.num_trajectories)
    err = per_traj - p_val
    mean_err = n_val - p_val
    return EstimatorReport(
        name=name, pristine_value=p_val, noisy_mean=n_val, mean_error=mean_err,
        sigma_p=sp, sigma_noisy=sn, error_width=sn - sp,
        per_gate_error=mean_err / gate_count if gate_count else float("nan"),
        trajectory_count=noisy.num_trajectories,
        standard_error=standard_error(per_traj, noisy.antithetic),
        error_stddev=float(np.std(err, ddof=1)) if len(err) > 1 else 0.0,
        gate_count=gate_count)


def per_gate_normalize(report: EstimatorReport, gate_count: int) -> EstimatorReport:
    if gate_count < 1:
        raise ValueError("gate count must be at least 1")
    return dataclasses.replace(
        report, mean_error=report.mean_error / gate_count,
        error_width=report.error_width / gate_count,
        standard_error=report.standard_error / gate_count,
        error_stddev=report.error_stddev / gate_count,
        per_gate_error=report.mean_error / gate_count)


# -- noise sweeps --------------------------------------------------------------

SWEEP_COLUMNS = [
    "scenario", "M", "M1", "M2", "observable", "pristine_value", "noisy_mean", "mean_error",
    "standard_error", "sigma_p", "sigma_noisy", "width_energy_estimator", "stddev_particle_error",
    "per_gate_error", "mean_error_times_M", "within_chemical_accuracy", "trajectories", "gate_count",
]


def noise_sweep(circuit: Circuit, reference: int, h: PauliSum,
                scenarios: Sequence[NoiseScenario | tuple[str, float]],
                cfg: TrajectoryConfig = TrajectoryConfig(),
                number_op: PauliSum | None = None) -> tuple[list[dict], list[tuple[EstimatorReport, ...]]]:
    """Energy (and optionally particle-number) reports for each scenario."""
    observables = {"energy": h}
    if number_op is not None:
        observables["particle_number"] = number_op
    pristine = pristine_values(circuit, reference, observables)
    gc = circuit.gate_count
    rows, reports = [], []
    for sc in scenarios:
        sc = sc if isinstance(sc, NoiseScenario) else NoiseScenario(ScenarioKind(sc[0]), float(sc[1]))
        model = sc.model()
        noisy = run_trajectories(circuit, reference, model, observables, cfg)
        reps = tuple(estimator_report(name, obs, pristine, noisy, gc) for name, obs in observables.items())
        reports.append(reps)
        for rep in reps:
            energy = rep.name == "energy"
            rows.append({
                "scenario": ScenarioKind(sc.kind).value, "M": sc.M, "M1": model.M1, "M2": model.M2,
                "observable": rep.name, "pristine_value": rep.pristine_value,
                "noisy_mean": rep.noisy_mean, "mean_error": rep.mean_error,
                "standard_error": rep.standard_error, "sigma_p": rep.sigma_p,
                "sigma_noisy": rep.sigma_noisy,
                "width_energy_estimator": rep.error_width if energy else float("nan"),
                "stddev_particle_error": float("nan") if energy else rep.error_stddev,
                "per_gate_error": rep.per_gate_error,
                "mean_error_times_M": rep.mean_error * sc.M if math.isfinite(sc.M) else float("nan"),
                "within_chemical_accuracy": rep.within_chemical_accuracy,
                "trajectories": rep.trajectory_count, "gate_count": gc,
            })
    return rows, reports


# -- Trotter / noise trade-off ---------------------------------------------------

class BracketError(ValueError):
    pass


@dataclass(frozen=True)
class MTrotResult:
    m_trot: float
    log10_bracket: tuple[float, float]
    evaluations: list[tuple[float, float, float]]   # (log10 M, error eta=1, error eta=2)
    exact_energy: float


def exact_ucc_energy(amps: ClusterAmplitudes, mapping: Mapping | str, h: PauliSum) -> float:
    """<H> for exp(T - T^dagger)|HF> with the dense exponential (small n only)."""
    blocks = ucc_generator_blocks(amps, mapping)
    gen = PauliSum(amps.n_modes)
    for b in blocks:
        gen = gen + b
    ref = hartree_fock_reference(amps.n_electrons, amps.n_modes, mapping)
    psi = exp_pauli_sum(gen)[:, ref]
    return float(np.real(np.vdot(psi, dense_matrix_of(h) @ psi)))


def find_m_trot(amps: ClusterAmplitudes, mapping: Mapping | str, h: PauliSum,
                kind: ScenarioKind | str = ScenarioKind.RELAXATION_DEPHASING,
                log10_bounds: tuple[float, float] = (2.0, 10.0),
                cfg: TrajectoryConfig = TrajectoryConfig(antithetic=True),
                tol_decades: float = 0.05) -> MTrotResult:
    """Coherence parameter where eta=1 and eta=2 total errors coincide (bisection in log10 M)."""
    exact = exact_ucc_energy(amps, mapping, h)
    circs = {eta: build_ucc_circuit(amps, mapping, eta) for eta in (1, 2)}
    evals = []

    def diff(logm: float) -> float:
        model = NoiseScenario(ScenarioKind(kind), 10.0 ** logm).model()
        errs = []
        for eta in (1, 2):
            uc = circs[eta]
            res = run_trajectories(uc.circuit, uc.reference, model, {"energy": h}, cfg)
            errs.append(abs(res.mean("energy") - exact))
        evals.append((logm, errs[0], errs[1]))
        return errs[0] - errs[1]

    lo, hi = log10_bounds
    f_lo, f_hi = diff(lo), diff(hi)
    if f_lo == 0:
        return MTrotResult(10.0 ** lo, (lo, lo), evals, exact)
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f"no crossing of the eta=1 and eta=2 error curves in 1e{lo}..1e{hi}")
    while hi - lo > tol_decades:
        mid = 0.5 * (lo + hi)
        f_mid = diff(mid)
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return MTrotResult(10.0 ** (0.5 * (lo + hi)), (lo, hi), evals, exact)


# -- systematic gate errors -------------------------------------------------------

@dataclass(frozen=True)
class GateErrorSpec:
    n: int
    theta1: float = 0.1
    theta2: float = 0.1
    h_overrotation: float = 1e-4
    yb_overrotation: float = 1e-4
    cnot_angle: float = math.pi + 1e-3
    cnot_errors: str = "all"        # all | fourth | none

    def __post_init__(self):
        if self.n < 4 or self.n % 4:
            raise ValueError(f"qubit count must be a positive multiple of 4, got {self.n}")
        if self.cnot_errors not in ("all", "fourth", "none"):
            raise ValueError(f"cnot_errors must be all, fourth or none, got {self.cnot_errors!r}")

    @property
    def excitations(self) -> tuple[tuple[int, int], tuple[int, int]]:
        q = self.n // 4
        return (0, q), (q - 1, self.n - 1)


@dataclass(frozen=True)
class GateErrorResult:
    spec: GateErrorSpec
    particle_number: float
    particle_error: float          # |<N> - n/4|
    gate_count: int
    errored_cnots: int


def gate_error_ops(spec: GateErrorSpec) -> tuple[list[GateOp], int]:
    """Two sequential JW single excitations with systematic errors substituted."""
    n = spec.n
    ideal: list[GateOp] = []
    for (i, p), theta in zip(spec.excitations, (spec.theta1, spec.theta2)):
        img = fermion_to_pauli(single_excitation(n, i, p), Mapping.JW, n)
        for term in img.simplify(0.0).terms:
            ops, _ = synthesize_exponential(term.coeff.imag * theta, term.string)
            ideal.extend(ops)
    if spec.cnot_errors == "all":
        faulty = {k for k, o in enumerate(ideal) if o.name == "CNOT"}
    elif spec.cnot_errors == "fourth":
        fourth = [k for k, o in enumerate(ideal) if o.name == "RZ"][3]
        faulty, k = set(), fourth - 1
        while k >= 0 and ideal[k].name == "CNOT":
            faulty.add(k)
            k -= 1
    else:
        faulty = set()
    h_gate = G.over_rotated_h(spec.h_overrotation)
    yb = G.over_rotated_rx(math.pi / 2, spec.yb_overrotation)
    ybdg = G.over_rotated_rx(-math.pi / 2, spec.yb_overrotation)
    crx = G.cnot_rotation(spec.cnot_angle)
    out = []
    for k, o in enumerate(ideal):
        if o.name == "H":
            o = GateOp("U", h_gate, o.target)
        elif o.name == "YB":
            o = GateOp("U", yb, o.target)
        elif o.name == "YBDG":
            o = GateOp("U", ybdg, o.target)
        elif k in faulty:
            o = GateOp("CU", crx, o.target, o.control)
        out.append(o)
    return out, len(faulty)


def gate_error_experiment(spec: GateErrorSpec, workers: int | None = None) -> GateErrorResult:
    """Noise-free run with systematic gate errors; returns the particle-number error."""
    ops, nfaulty = gate_error_ops(spec)
    circ = Circuit(spec.n)
    circ.extend(ops)
    q = spec.n // 4
    state = init_basis_state(spec.n, (1 << q) - 1)
    run_circuit(state, circ, workers=workers)
    norm = state.norm_squared()
    z = z_expectations(state)
    # <N> / <psi|psi>, meaningful even if a supplied gate is not unitary
    number = (0.5 * spec.n * norm - 0.5 * float(np.sum(z))) / norm
    del state
    return GateErrorResult(spec, number, abs(number - q), circ.gate_count, nfaulty)


def linear_fit_r2(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """(slope, intercept, R^2) of an ordinary least-squares line."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


# -- calibration -------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationResult:
    M1: float
    M2: float
    fitted_M1: float
    fitted_M2: float
    times: np.ndarray
    z_curve: np.ndarray     # <Z>(t) from |0>
    x_curve: np.ndarray     # <X>(t) from |+>

    def relative_errors(self) -> tuple[float, float]:
        return abs(self.fitted_M1 / self.M1 - 1), abs(self.fitted_M2 / self.M2 - 1)


def _fit_decay(t: np.ndarray, y: np.ndarray, guess: float) -> float:
    (m,), _ = curve_fit(lambda tt, mm: np.exp(-tt / mm), t, y, p0=[guess])
    return float(m)


def calibrate(M1: float, M2: float, steps: int = 200, num_trajectories: int = 10_000,
              seed: int = 0, mode: NoiseMode | str = NoiseMode.THREE) -> CalibrationResult:
    """Single idle qubit under noise gates; fit exp(-t/M) to <Z>(t) and <X>(t)."""
    model = NoiseModel(M1, M2)
    s = np.asarray(model.s)
    angles = np.empty((num_trajectories, steps, 3))
    for j in range(num_trajectories):
        angles[j] = trajectory_rng(seed, j).standard_normal((steps, 3))
    angles *= s
    z_state = np.zeros((num_trajectories, 2), dtype=np.complex128)
    z_state[:, 0] = 1
    x_state = np.full((num_trajectories, 2), 1 / math.sqrt(2), dtype=np.complex128)
    zc = np.empty(steps)
    xc = np.empty(steps)
    for t in range(steps):
        u = noise_matrices(angles[:, t], mode)
        z_state = np.einsum("tij,tj->ti", u, z_state)
        x_state = np.einsum("tij,tj->ti", u, x_state)
        zc[t] = np.mean(np.abs(z_state[:, 0]) ** 2 - np.abs(z_state[:, 1]) ** 2)
        xc[t] = np.mean(2 * np.real(np.conj(x_state[:, 0]) * x_state[:, 1]))
    times = np.arange(1, steps + 1, dtype=float)
    return CalibrationResult(M1, M2, _fit_decay(times, zc, M1 if math.isfinite(M1) else 1e3),
                             _fit_decay(times, xc, M2 if math.isfinite(M2) else 1e3),
                             times, zc, xc)
