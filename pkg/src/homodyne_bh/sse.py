"""Homodyne stochastic Schrodinger equation and its master-equation average.

The linear SSE

    d psi = [-i H - (gamma/2) M^2] psi dt + M psi I dt,
    I dt  = 2 gamma <M> dt + sqrt(gamma) dW,

is integrated in the Ito sense with ``<M>`` taken on the normalized
pre-step state, and the state is renormalized after each step. Its
ensemble average obeys ``d rho = -i[H, rho] dt - (gamma/2)[M, [M, rho]] dt``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
import scipy.sparse as sp

from .operators import (
    ComplexSparseOperator,
    ConfigurationError,
    MicroscopicParams,
    build_effective_hamiltonian,
    map_physical_params,
)

TRAJECTORY_HEADER = ("t", "dW", "signal", "expectation")
DENSE_LIMIT = 256
Scheme = Literal["euler_maruyama", "heun_predictor_corrector"]


class NumericalBlowupError(FloatingPointError):
    """Non-finite or vanishing state; carries the step, time and trajectory index."""

    def __init__(self, message: str, step: int, time: float = np.nan, index: int | None = None):
        super().__init__(message)
        self.step = step
        self.time = time
        self.index = index


class IntegratorError(RuntimeError):
    """Deterministic integrator left its tolerance band."""


def default_dt(gamma: float, h_norm: float) -> float:
    """``min(1e-3, 0.1/gamma, 0.1/||H||)`` ignoring vanishing rates."""
    dt = 1e-3
    if gamma > 0:
        dt = min(dt, 0.1 / gamma)
    if h_norm > 0:
        dt = min(dt, 0.1 / h_norm)
    return dt


def operator_norm_bound(op) -> float:
    m = op.matrix if isinstance(op, ComplexSparseOperator) else op
    if sp.issparse(m):
        return float(np.asarray(abs(m).sum(axis=1)).max(initial=0.0))
    return float(np.abs(np.asarray(m)).sum(axis=1).max(initial=0.0))


@dataclass
class SimConfig:
    """Integration settings for one trajectory or an ensemble.

    ``dt=None`` selects :func:`default_dt`. ``burn_in`` is the initial
    time window excluded from analysis; ``snapshot_stride`` of 0 disables
    state snapshots.
    """

    dt: float | None = None
    t_final: float = 1.0
    gamma: float = 0.01
    scheme: Scheme = "euler_maruyama"
    normalize_every_step: bool = True
    seed: int = 0
    snapshot_stride: int = 0
    corrections: bool = False
    burn_in: float = 0.0

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.gamma < 0:
            raise ConfigurationError(f"gamma must be non-negative, got {self.gamma}")
        if self.scheme not in ("euler_maruyama", "heun_predictor_corrector"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.dt is not None and self.t_final < self.dt:
            raise ConfigurationError("t_final must be at least dt")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")

    def resolve_dt(self, H) -> float:
        return self.dt if self.dt is not None else default_dt(self.gamma, operator_norm_bound(H))

    def n_steps(self, dt: float) -> int:
        return int(round(self.t_final / dt))


# ---------------------------------------------------------------------------
# random streams


def trajectory_rng(master_seed: int, index: int = 0) -> np.random.Generator:
    """Generator whose stream depends only on ``(master_seed, index)``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def wiener_increments(seed: int, n_steps: int, dt: float, index: int = 0) -> np.ndarray:
    """I.i.d. ``Normal(0, dt)`` increments for trajectory ``index``."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return np.sqrt(dt) * trajectory_rng(seed, index).standard_normal(n_steps)


# ---------------------------------------------------------------------------
# stepping kernel


def _as_matrix(op, dense: bool):
    m = op.matrix if isinstance(op, ComplexSparseOperator) else op
    if dense:
        return m.toarray() if sp.issparse(m) else np.asarray(m, dtype=complex)
    return sp.csr_matrix(m, dtype=complex)


class SSEKernel:
    """Batched stepper acting on states stored as columns of a ``(dim, batch)`` array."""

    def __init__(self, H, M0, gamma: float, dt: float, scheme: Scheme = "euler_maruyama",
                 normalize: bool = True):
        dim = (H.matrix if isinstance(H, ComplexSparseOperator) else H).shape[0]
        dense = dim <= DENSE_LIMIT
        self.H = _as_matrix(H, dense)
        self.M = _as_matrix(M0, dense)
        if self.H.shape != self.M.shape:
            raise ConfigurationError(f"H {self.H.shape} and M0 {self.M.shape} differ in shape")
        self.M2 = self.M @ self.M
        self.A = -1j * self.H - 0.5 * gamma * self.M2
        self.gamma = gamma
        self.sqrt_gamma = np.sqrt(gamma)
        self.dt = dt
        self.scheme = scheme
        self.normalize = normalize

    @staticmethod
    def _expect(psi: np.ndarray, Mpsi: np.ndarray) -> np.ndarray:
        num = np.einsum("ij,ij->j", psi.conj(), Mpsi).real
        return num / np.einsum("ij,ij->j", psi.conj(), psi).real

    def expectation(self, psi: np.ndarray) -> np.ndarray:
        return self._expect(psi, self.M @ psi)

    def step(self, psi: np.ndarray, dW: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Advance every column by one step; returns ``(new_psi, <M>_pre)``."""
        dt = self.dt
        Mpsi = self.M @ psi
        m = self._expect(psi, Mpsi)
        noise = (self.sqrt_gamma * dW) * Mpsi
        drift = self.A @ psi + (2.0 * self.gamma * m) * Mpsi
        if self.scheme == "euler_maruyama":
            new = psi + drift * dt + noise
        else:
            pred = psi + drift * dt + noise
            Mpred = self.M @ pred
            drift_pred = self.A @ pred + (2.0 * self.gamma * self._expect(pred, Mpred)) * Mpred
            new = psi + 0.5 * (drift + drift_pred) * dt + noise
        if self.normalize:
            new = new / np.sqrt(np.einsum("ij,ij->j", new.conj(), new).real)
        return new, m


def _check_finite(psi: np.ndarray, step: int, dt: float, indices=None) -> None:
    norms = np.einsum("ij,ij->j", psi.conj(), psi).real
    bad = ~np.isfinite(norms) | (norms <= 1e-300)
    if np.any(bad):
        col = int(np.argmax(bad))
        index = None if indices is None else int(indices[col])
        who = "" if index is None else f"trajectory {index}: "
        raise NumericalBlowupError(
            f"{who}state became non-finite or vanished at step {step} (t={step * dt:.6g})",
            step, step * dt, index,
        )


def sse_step(psi, H_eff, M0, gamma: float, dt: float, dW: float,
             scheme: Scheme = "euler_maruyama", normalize: bool = True) -> np.ndarray:
    """One SSE step for a single state vector."""
    kern = SSEKernel(H_eff, M0, gamma, dt, scheme, normalize)
    new, _ = kern.step(np.asarray(psi, dtype=complex)[:, None], np.array([dW]))
    _check_finite(new, 0, dt)
    return new[:, 0]


# ---------------------------------------------------------------------------
# records


@dataclass
class TrajectoryRecord:
    """Sampled trajectory; entry ``k`` refers to the pre-step state at ``times[k]``."""

    times: np.ndarray
    dW: np.ndarray
    signal: np.ndarray
    expectation: np.ndarray
    seed: int = 0
    index: int = 0
    gamma: float = 0.0
    dt: float = 0.0
    snapshots: np.ndarray | None = None
    snapshot_times: np.ndarray | None = None
    final_state: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.dW) == len(self.signal) == len(self.expectation) == n):
            raise ValueError("times, dW, signal and expectation must have equal lengths")

    def after(self, burn_in: float) -> "TrajectoryRecord":
        keep = self.times >= burn_in
        return TrajectoryRecord(
            self.times[keep], self.dW[keep], self.signal[keep], self.expectation[keep],
            self.seed, self.index, self.gamma, self.dt,
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_HEADER)
            for row in zip(self.times, self.dW, self.signal, self.expectation):
                w.writerow([repr(float(x)) for x in row])

    @classmethod
    def read_csv(cls, path, **meta) -> "TrajectoryRecord":
        with open(path, newline="", encoding="ascii") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != TRAJECTORY_HEADER:
                raise ValueError(f"unexpected trajectory header {header}")
            data = np.array([[float(x) for x in row] for row in reader]).reshape(-1, 4)
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3], **meta)


def signal_from(expectation: np.ndarray, dW: np.ndarray, gamma: float, dt: float) -> np.ndarray:
    """Homodyne current ``2 gamma <M> + sqrt(gamma) dW / dt``."""
    return 2.0 * gamma * expectation + np.sqrt(gamma) * dW / dt


# ---------------------------------------------------------------------------
# drivers


def prepare_hamiltonian(H_atm: ComplexSparseOperator, M0: ComplexSparseOperator,
                        cfg: SimConfig, micro: MicroscopicParams | None = None) -> ComplexSparseOperator:
    """Hamiltonian used by the integrator, with optional correction terms.

    The rescaled observable is ``Mr = Mr_scale * M0``.
    """
    if not cfg.corrections:
        return H_atm
    if micro is None:
        raise ConfigurationError("corrections need MicroscopicParams")
    Mr = M0.scaled(map_physical_params(micro).Mr_scale)
    return build_effective_hamiltonian(H_atm, Mr, micro, include_corrections=True)


@dataclass
class EnsembleResult:
    """Batched ensemble output; rows follow trajectory indices."""

    indices: np.ndarray
    times: np.ndarray
    dW: np.ndarray
    expectation: np.ndarray
    final_states: np.ndarray
    gamma: float
    dt: float
    seed: int

    @property
    def signal(self) -> np.ndarray:
        return signal_from(self.expectation, self.dW, self.gamma, self.dt)

    def record(self, row: int) -> TrajectoryRecord:
        return TrajectoryRecord(
            self.times, self.dW[row], self.signal[row], self.expectation[row],
            self.seed, int(self.indices[row]), self.gamma, self.dt,
            final_state=self.final_states[row],
        )


def run_ensemble(
    psi0: np.ndarray,
    H_eff,
    M0,
    cfg: SimConfig,
    indices: Sequence[int] | int = 1,
    dW: np.ndarray | None = None,
    record_every: int = 1,
) -> EnsembleResult:
    """Integrate a batch of trajectories in lock-step.

    Trajectory ``k`` draws its increments from ``trajectory_rng(cfg.seed, k)``
    unless ``dW`` of shape ``(batch, n_steps)`` is supplied.
    ``record_every`` thins the stored expectation and dW samples (dW is
    summed over the thinned window).
    """
    indices = np.arange(indices) if np.isscalar(indices) else np.asarray(indices, dtype=int)
    psi0 = np.asarray(psi0, dtype=complex)
    norm0 = np.linalg.norm(psi0)
    if abs(norm0 - 1.0) > 1e-10:
        raise ConfigurationError(f"initial state must be normalized (norm {norm0})")
    dt = cfg.resolve_dt(H_eff)
    n = cfg.n_steps(dt)
    kern = SSEKernel(H_eff, M0, cfg.gamma, dt, cfg.scheme, cfg.normalize_every_step)
    B = len(indices)
    if dW is None:
        dW = np.stack([wiener_increments(cfg.seed, n, dt, int(k)) for k in indices]) if B else np.zeros((0, n))
    dW = np.asarray(dW, dtype=float).reshape(B, n)
    n_rec = n // record_every
    exp = np.empty((B, n_rec))
    dW_rec = dW[:, : n_rec * record_every].reshape(B, n_rec, record_every).sum(axis=2)
    psi = np.repeat(psi0[:, None], B, axis=1)
    for s in range(n):
        psi, m = kern.step(psi, dW[:, s])
        if s % record_every == 0 and s // record_every < n_rec:
            exp[:, s // record_every] = m
        if s % 256 == 255:
            _check_finite(psi, s, dt, indices)
    _check_finite(psi, n, dt, indices)
    times = np.arange(n_rec) * dt * record_every
    return EnsembleResult(indices, times, dW_rec, exp, psi.T.copy(), cfg.gamma, dt * record_every, cfg.seed)


def integrate_trajectory(psi0, H_eff, M0, cfg: SimConfig, index: int = 0,
                         dW: np.ndarray | None = None) -> TrajectoryRecord:
    """Single trajectory with snapshots every ``cfg.snapshot_stride`` steps."""
    psi = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ConfigurationError("initial state must be normalized")
    dt = cfg.resolve_dt(H_eff)
    n = cfg.n_steps(dt)
    kern = SSEKernel(H_eff, M0, cfg.gamma, dt, cfg.scheme, cfg.normalize_every_step)
    dW = wiener_increments(cfg.seed, n, dt, index) if dW is None else np.asarray(dW, dtype=float)
    if dW.shape != (n,):
        raise ConfigurationError(f"dW must have shape ({n},), got {dW.shape}")
    exp = np.empty(n)
    snaps, snap_t = [], []
    col = psi[:, None]
    for s in range(n):
        if cfg.snapshot_stride and s % cfg.snapshot_stride == 0:
            snaps.append(col[:, 0].copy())
            snap_t.append(s * dt)
        col, m = kern.step(col, dW[s : s + 1])
        exp[s] = m[0]
        if not np.all(np.isfinite(col)):
            raise NumericalBlowupError(
                f"trajectory {index}: non-finite state at step {s} (t={s * dt:.6g})", s, s * dt, index
            )
    _check_finite(col, n, dt, [index])
    times = np.arange(n) * dt
    return TrajectoryRecord(
        times, dW, signal_from(exp, dW, cfg.gamma, dt), exp, cfg.seed, index, cfg.gamma, dt,
        np.array(snaps) if snaps else None, np.array(snap_t) if snaps else None, col[:, 0],
    )


# ---------------------------------------------------------------------------
# master-equation oracle


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, M: np.ndarray, gamma: float) -> np.ndarray:
    comm = M @ rho - rho @ M
    return -1j * (H @ rho - rho @ H) - 0.5 * gamma * (M @ comm - comm @ M)


def lindblad_step(rho, H, M0, gamma: float, dt: float, trace_tol: float = 1e-10) -> np.ndarray:
    """One classical RK4 step of the double-commutator master equation."""
    H = _as_matrix(H, True)
    M = _as_matrix(M0, True)
    rho = np.asarray(rho, dtype=complex)
    k1 = lindblad_rhs(rho, H, M, gamma)
    k2 = lindblad_rhs(rho + 0.5 * dt * k1, H, M, gamma)
    k3 = lindblad_rhs(rho + 0.5 * dt * k2, H, M, gamma)
    k4 = lindblad_rhs(rho + dt * k3, H, M, gamma)
    new = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    drift = abs(np.trace(new) - np.trace(rho))
    if not drift <= trace_tol:
        raise IntegratorError(f"trace drifted by {drift:.3e} in one step")
    return new


def lindblad_evolve(rho0, H, M0, gamma: float, dt: float, n_steps: int) -> np.ndarray:
    H = _as_matrix(H, True)
    M = _as_matrix(M0, True)
    rho = np.asarray(rho0, dtype=complex)
    for _ in range(n_steps):
        rho = lindblad_step(rho, H, M, gamma, dt)
    return rho


def ensemble_average(states: np.ndarray, times: Sequence[np.ndarray] | None = None) -> np.ndarray:
    """Mean projector over trajectories.

    ``states`` is ``(n_traj, dim)`` for one time or ``(n_traj, n_t, dim)``
    for a trajectory of density matrices. ``times``, if given, holds each
    trajectory's grid and must agree across trajectories.
    """
    states = np.asarray(states, dtype=complex)
    if times is not None:
        ref = np.asarray(times[0])
        for t in times[1:]:
            if np.shape(t) != ref.shape or not np.array_equal(t, ref):
                raise ValueError("trajectories do not share a time grid")
    if states.ndim == 2:
        psi = states / np.linalg.norm(states, axis=1, keepdims=True)
        return np.einsum("ki,kj->ij", psi, psi.conj()) / len(psi)
    psi = states / np.linalg.norm(states, axis=2, keepdims=True)
    return np.einsum("kti,ktj->tij", psi, psi.conj()) / states.shape[0]


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    d = np.asarray(rho) - np.asarray(sigma)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))
