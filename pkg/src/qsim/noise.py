"""Pauli-twirling noise: error probabilities from coherence parameters, Gaussian
noise-gate sampling and Monte Carlo trajectory ensembles.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as K
from .circuit import Circuit, compile_ops
from .gates import Gate1Q
from .pauli import PauliString, PauliSum
from .statevec import StateVector, apply_1q, pauli_phase

INF = math.inf


class InvalidScenarioError(ValueError):
    pass


class NoiseMode(str, Enum):
    THREE = "three"
    SINGLE = "single"


def _decay(m: float) -> float:
    """1 - exp(-1/M), exact for M = inf and accurate for large M."""
    return 0.0 if math.isinf(m) else -math.expm1(-1.0 / m)


def derive_probabilities(m1: float, m2: float) -> tuple[float, float, float]:
    if not (m1 > 0 and m2 > 0):
        raise InvalidScenarioError(f"coherence parameters must be positive, got M1={m1}, M2={m2}")
    pxy = _decay(m1) / 4
    pz = _decay(m2) / 2 - pxy
    if pz < -1e-15:
        raise InvalidScenarioError(f"T2 > 2 T1 (M1={m1}, M2={m2}) gives negative pz={pz}")
    return pxy, pxy, max(pz, 0.0)


def stddevs(px: float, py: float, pz: float) -> tuple[float, float, float]:
    out = []
    for p in (px, py, pz):
        if not 0 <= p < 1:
            raise InvalidScenarioError(f"probability {p} outside [0, 1): angle spread diverges")
        out.append(math.sqrt(-math.log1p(-p)))
    return tuple(out)


@dataclass(frozen=True)
class NoiseModel:
    M1: float = INF
    M2: float = INF
    probs: tuple[float, float, float] = field(init=False)
    s: tuple[float, float, float] = field(init=False)

    def __post_init__(self):
        if not math.isinf(self.M1) and self.M2 > 2 * self.M1:
            raise InvalidScenarioError(f"T2 <= 2 T1 violated: M1={self.M1}, M2={self.M2}")
        probs = derive_probabilities(self.M1, self.M2)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "s", stddevs(*probs))

    @property
    def px(self):
        return self.probs[0]

    @property
    def py(self):
        return self.probs[1]

    @property
    def pz(self):
        return self.probs[2]

    @property
    def is_noiseless(self) -> bool:
        return not any(self.s)


class ScenarioKind(str, Enum):
    RELAXATION_DEPHASING = "t1tphi"
    PURE_RELAXATION = "relax"
    PURE_DEPHASING = "dephase"


@dataclass(frozen=True)
class NoiseScenario:
    kind: ScenarioKind
    M: float

    def coherence(self) -> tuple[float, float]:
        """(M1, M2) from 1/T2 = 1/Tphi + 1/(2 T1)."""
        kind = ScenarioKind(self.kind)
        m = float(self.M)
        if math.isinf(m):
            return INF, INF
        if kind is ScenarioKind.RELAXATION_DEPHASING:
            t1 = tphi = m
        elif kind is ScenarioKind.PURE_RELAXATION:
            t1, tphi = m, INF
        else:
            t1, tphi = INF, m
        inv_t2 = 1 / tphi + 1 / (2 * t1)
        return t1, (INF if inv_t2 == 0 else 1 / inv_t2)

    def model(self) -> NoiseModel:
        return NoiseModel(*self.coherence())


# -- noise gates ----------------------------------------------------------------

def noise_matrices(nu: np.ndarray, mode: NoiseMode | str = NoiseMode.THREE) -> np.ndarray:
    """Stack of noise unitaries for angle triples ``nu[..., (x, y, z)]``."""
    nu = np.asarray(nu, dtype=float)
    shape = nu.shape[:-1]
    nu = nu.reshape(-1, 3)
    e = nu.shape[0]
    if NoiseMode(mode) is NoiseMode.THREE:
        cx, sx = np.cos(nu[:, 0]), np.sin(nu[:, 0])
        cy, sy = np.cos(nu[:, 1]), np.sin(nu[:, 1])
        cz, sz = np.cos(nu[:, 2]), np.sin(nu[:, 2])
        rxm = np.empty((e, 2, 2), dtype=np.complex128)
        rxm[:, 0, 0] = rxm[:, 1, 1] = cx
        rxm[:, 0, 1] = rxm[:, 1, 0] = -1j * sx
        rym = np.empty((e, 2, 2), dtype=np.complex128)
        rym[:, 0, 0] = rym[:, 1, 1] = cy
        rym[:, 0, 1] = -sy
        rym[:, 1, 0] = sy
        rzm = np.zeros((e, 2, 2), dtype=np.complex128)
        rzm[:, 0, 0] = cz - 1j * sz
        rzm[:, 1, 1] = cz + 1j * sz
        out = rxm @ rym @ rzm
    else:
        r = np.linalg.norm(nu, axis=1)
        c = np.cos(r)
        sinc = np.where(r > 0, np.sin(r) / np.where(r > 0, r, 1.0), 1.0)
        ax, ay, az = (nu * sinc[:, None]).T
        out = np.empty((e, 2, 2), dtype=np.complex128)
        out[:, 0, 0] = c - 1j * az
        out[:, 1, 1] = c + 1j * az
        out[:, 0, 1] = -1j * ax - ay
        out[:, 1, 0] = -1j * ax + ay
    return out.reshape(*shape, 2, 2)


def sample_noise_gate(rng: np.random.Generator, s: Sequence[float],
                      mode: NoiseMode | str = NoiseMode.THREE) -> Gate1Q:
    nu = rng.standard_normal(3) * np.asarray(s, dtype=float)
    return Gate1Q(noise_matrices(nu, mode))


def fuse_idle_noise(rng: np.random.Generator, span: int, s: Sequence[float],
                    mode: NoiseMode | str = NoiseMode.THREE) -> Gate1Q:
    """One gate standing in for ``span`` idle noise steps (angle spread grows as sqrt(span))."""
    if span < 1:
        raise ValueError("idle span must be at least one step")
    return sample_noise_gate(rng, np.asarray(s, dtype=float) * math.sqrt(span), mode)


def apply_noise_step(state: StateVector, model: NoiseModel, rng: np.random.Generator,
                     mode: NoiseMode | str = NoiseMode.THREE) -> StateVector:
    if model.is_noiseless:
        return state
    for q in range(state.num_qubits):
        apply_1q(state, sample_noise_gate(rng, model.s, mode), q)
    return state


# -- trajectories ----------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryConfig:
    num_trajectories: int = 10_000
    master_seed: int = 0
    workers: int | None = None
    mode: NoiseMode = NoiseMode.THREE
    fuse_idle: bool = False
    antithetic: bool = False

    def __post_init__(self):
        if self.num_trajectories < 1:
            raise ValueError("need at least one trajectory")
        if self.antithetic and self.num_trajectories % 2:
            raise ValueError("antithetic sampling needs an even trajectory count")
        object.__setattr__(self, "mode", NoiseMode(self.mode))

    def resolved_workers(self) -> int:
        if self.workers:
            return self.workers
        env = os.environ.get("QSIM_THREADS")
        return max(1, int(env)) if env else 1


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based stream keyed by a 128-bit hash of (seed, trajectory index)."""
    ss = np.random.SeedSequence(entropy=master_seed & (2**64 - 1), spawn_key=(index,))
    return np.random.Generator(np.random.Philox(key=ss.generate_state(2, np.uint64)))


class TrajectoryPlan:
    """Interleaves circuit gates with per-step noise slots.

    Without idle fusion every time step is followed by one noise gate per
    qubit.  With fusion, a qubit's noise accumulates until the next gate that
    touches it (or the end of the circuit) and is applied as a single gate.
    """

    def __init__(self, circuit: Circuit, model: NoiseModel, cfg: TrajectoryConfig):
        self.circuit = circuit
        self.model = model
        self.cfg = cfg
        n = circuit.num_qubits
        seq_ops: list = []   # GateOp or (qubit, span)
        if model.is_noiseless:
            seq_ops = list(circuit.ops)
        elif not cfg.fuse_idle:
            for step in circuit.steps():
                seq_ops.extend(step)
                seq_ops.extend((q, 1) for q in range(n))
        else:
            pending = [0] * n
            for step in circuit.steps():
                for op in step:
                    for q in op.qubits:
                        if pending[q]:
                            seq_ops.append((q, pending[q]))
                            pending[q] = 0
                    seq_ops.append(op)
                pending = [p + 1 for p in pending]
            seq_ops.extend((q, pending[q]) for q in range(n) if pending[q])
        gate_pos = [i for i, o in enumerate(seq_ops) if not isinstance(o, tuple)]
        noise = [(i, o) for i, o in enumerate(seq_ops) if isinstance(o, tuple)]
        total = len(seq_ops)
        self.mats = np.zeros((total, 2, 2), dtype=np.complex128)
        self.targets = np.empty(total, dtype=np.int64)
        self.controls = np.full(total, -1, dtype=np.int64)
        if gate_pos:
            gm, gt, gc = compile_ops([seq_ops[i] for i in gate_pos])
            self.mats[gate_pos] = gm
            self.targets[gate_pos] = gt
            self.controls[gate_pos] = gc
        self.noise_pos = np.array([i for i, _ in noise], dtype=np.int64)
        self.targets[self.noise_pos] = [q for _, (q, _) in noise]
        spans = np.array([t for _, (_, t) in noise], dtype=float)
        self.noise_scale = np.sqrt(spans)[:, None] * np.asarray(model.s)[None, :]

    @property
    def num_noise_gates(self) -> int:
        return len(self.noise_pos)

    def angles(self, index: int) -> np.ndarray:
        """Gaussian angles for trajectory ``index`` (antithetic pairs share draws)."""
        if self.cfg.antithetic:
            rng = trajectory_rng(self.cfg.master_seed, index // 2)
            sign = -1.0 if index % 2 else 1.0
        else:
            rng = trajectory_rng(self.cfg.master_seed, index)
            sign = 1.0
        return sign * rng.standard_normal((self.num_noise_gates, 3)) * self.noise_scale

    def ops_for(self, index: int, out: np.ndarray | None = None) -> np.ndarray:
        mats = self.mats.copy() if out is None else out
        if self.num_noise_gates:
            mats[self.noise_pos] = noise_matrices(self.angles(index), self.cfg.mode)
        return mats


@dataclass
class TrajectoryResult:
    names: list[str]
    values: np.ndarray            # (T, n_observables)
    strings: list[PauliString]
    string_values: np.ndarray     # (T, n_strings), identity strings included
    coeffs: np.ndarray            # (n_observables, n_strings) real weights
    antithetic: bool = False

    @property
    def num_trajectories(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def mean(self, name: str) -> float:
        return float(_shifted_mean(self.column(name)))

    def std(self, name: str) -> float:
        v = self.column(name)
        return float(np.std(v, ddof=1)) if len(v) > 1 else 0.0

    def stderr(self, name: str) -> float:
        return standard_error(self.column(name), self.antithetic)

    def term_means(self) -> np.ndarray:
        return _shifted_mean(self.string_values)


def _shifted_mean(v: np.ndarray) -> np.ndarray:
    """Mean taken relative to the first row: exact when all rows agree."""
    return v[0] + (v - v[0]).mean(axis=0)


def standard_error(v: np.ndarray, antithetic: bool = False) -> float:
    v = np.asarray(v, dtype=float)
    if antithetic:
        v = 0.5 * (v[0::2] + v[1::2])
    if len(v) < 2:
        return 0.0
    return float(np.std(v, ddof=1) / math.sqrt(len(v)))


def observable_table(observables: Mapping[str, PauliSum] | Sequence[PauliSum], n: int):
    if not isinstance(observables, Mapping):
        observables = {f"obs{i}": o for i, o in enumerate(observables)}
    strings: dict[PauliString, int] = {}
    for h in observables.values():
        if h.num_qubits != n:
            raise ValueError(f"observable on {h.num_qubits} qubits, circuit has {n}")
        for s in h.simplify(0.0).items():
            strings.setdefault(s[0], len(strings))
    coeffs = np.zeros((len(observables), len(strings)))
    for k, h in enumerate(observables.values()):
        for s, c in h.items():
            coeffs[k, strings[s]] += c.real
    return list(observables), list(strings), coeffs


def run_trajectories(circuit: Circuit, reference: int, model: NoiseModel,
                     observables: Mapping[str, PauliSum] | Sequence[PauliSum],
                     cfg: TrajectoryConfig = TrajectoryConfig()) -> TrajectoryResult:
    """Noisy Monte Carlo ensemble; trajectory j depends only on (seed, j)."""
    n = circuit.num_qubits
    names, strings, coeffs = observable_table(observables, n)
    plan = TrajectoryPlan(circuit, model, cfg)
    xs = np.array([s.x for s in strings], dtype=np.int64)
    zs = np.array([s.z for s in strings], dtype=np.int64)
    phases = np.array([pauli_phase(s) for s in strings], dtype=np.complex128)
    total = cfg.num_trajectories
    string_values = np.empty((total, len(strings)))

    def work(lo: int, hi: int):
        psi = np.empty(1 << n, dtype=np.complex128)
        buf = plan.mats.copy()
        for j in range(lo, hi):
            mats = plan.ops_for(j, buf)
            string_values[j] = K.run_trajectory(psi, mats, plan.targets, plan.controls,
                                                reference, xs, zs, phases)

    if model.is_noiseless:
        work(0, 1)
        string_values[1:] = string_values[0]
    else:
        workers = min(cfg.resolved_workers(), total)
        if workers == 1:
            work(0, total)
        else:
            edges = np.linspace(0, total, workers + 1).astype(int)
            with ThreadPoolExecutor(workers) as ex:
                for f in [ex.submit(work, a, b) for a, b in zip(edges[:-1], edges[1:])]:
                    f.result()
    values = (string_values[:, None, :] * coeffs[None, :, :]).sum(axis=2)
    return TrajectoryResult(names, values, strings, string_values, coeffs, cfg.antithetic)


def pristine_values(circuit: Circuit, reference: int,
                    observables: Mapping[str, PauliSum] | Sequence[PauliSum]) -> TrajectoryResult:
    """Single noise-free run in the same record layout."""
    return run_trajectories(circuit, reference, NoiseModel(), observables,
                            TrajectoryConfig(num_trajectories=1))
