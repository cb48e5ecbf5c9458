"""Ground states of the Bose-Hubbard Hamiltonian and the coherence sweep."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .fock import FockBasis, enumerate_basis
from .operators import (
    BoseHubbardParams,
    ComplexSparseOperator,
    ConfigurationError,
    MeasurementSpec,
    build_bose_hubbard,
    build_measurement_operator,
)

DENSE_CUTOFF = 512
SWEEP_HEADER = ("u_over_j", "order_parameter", "energy", "residual")


class ConvergenceError(RuntimeError):
    """Iterative eigensolver failed; ``residual`` holds the last residual norm."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class EigenResult:
    energy: float
    state: np.ndarray
    residual: float
    gap: float = np.nan


def _norm_estimate(H: ComplexSparseOperator) -> float:
    # max absolute row sum bounds the spectral norm
    return float(np.asarray(abs(H.matrix).sum(axis=1)).max(initial=0.0))


def _dense_ground_state(H: ComplexSparseOperator) -> EigenResult:
    vals, vecs = sla.eigh(H.to_dense(), subset_by_index=[0, min(1, H.dim - 1)])
    psi = vecs[:, 0]
    res = float(np.linalg.norm(H.matrix @ psi - vals[0] * psi))
    gap = float(vals[1] - vals[0]) if vals.size > 1 else np.inf
    return EigenResult(float(vals[0]), psi, res, gap)


def lanczos_ground_state(
    H: ComplexSparseOperator,
    krylov_dim: int = 60,
    tol: float = 1e-10,
    max_restarts: int = 200,
    seed: int = 0,
) -> EigenResult:
    """Restarted Lanczos with full reorthogonalization.

    Each cycle builds an orthonormal Krylov basis from the current Ritz
    vector and restarts from the new lowest Ritz vector. Convergence is
    declared when ``||H psi - E psi|| <= tol * max(1, ||H||)``.
    """
    dim = H.dim
    m = min(krylov_dim, dim)
    scale = max(1.0, _norm_estimate(H))
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    res = np.inf
    for _ in range(max_restarts):
        V = np.zeros((dim, m), dtype=complex)
        alpha = np.zeros(m)
        beta = np.zeros(m)
        V[:, 0] = v
        k_used = m
        for j in range(m):
            w = H.matrix @ V[:, j]
            alpha[j] = np.vdot(V[:, j], w).real
            # two passes of classical Gram-Schmidt against the whole basis
            for _pass in range(2):
                w -= V[:, : j + 1] @ (V[:, : j + 1].conj().T @ w)
            if j + 1 < m:
                b = np.linalg.norm(w)
                if b < 1e-14 * scale:
                    k_used = j + 1
                    break
                beta[j] = b
                V[:, j + 1] = w / b
        T_vals, T_vecs = sla.eigh_tridiagonal(alpha[:k_used], beta[: k_used - 1])
        v = V[:, :k_used] @ T_vecs[:, 0]
        v /= np.linalg.norm(v)
        energy = float(T_vals[0])
        res = float(np.linalg.norm(H.matrix @ v - energy * v))
        if res <= tol * scale or k_used < m:
            gap = float(T_vals[1] - T_vals[0]) if k_used > 1 else np.inf
            return EigenResult(energy, v, res, gap)
    raise ConvergenceError(
        f"Lanczos did not converge after {max_restarts} restarts (residual {res:.3e})", res
    )


def ground_state(H: ComplexSparseOperator, method: str = "auto", **kw) -> EigenResult:
    """Lowest eigenpair of a Hermitian operator.

    ``method`` is ``"dense"``, ``"lanczos"`` or ``"auto"`` (dense below
    ``DENSE_CUTOFF``). The reported ``gap`` is exact for the dense solver
    and a Ritz estimate for Lanczos.
    """
    if not H.hermitian:
        raise ConfigurationError("ground_state requires an operator flagged Hermitian")
    if H.dim < 1:
        raise ConfigurationError("empty operator")
    if method == "auto":
        method = "dense" if H.dim < DENSE_CUTOFF else "lanczos"
    if method == "dense":
        return _dense_ground_state(H)
    if method == "lanczos":
        return lanczos_ground_state(H, **kw)
    raise ValueError(f"unknown method {method!r}")


def order_parameter(psi: np.ndarray, M: ComplexSparseOperator, N: int) -> float:
    """``|<psi|M|psi>| / N`` for a unit-norm state."""
    return abs(np.vdot(psi, M.matrix @ psi)) / N


@dataclass(frozen=True)
class SweepRow:
    u_over_j: float
    order_parameter: float
    energy: float
    residual: float


@dataclass
class SweepResult:
    rows: list[SweepRow]

    @property
    def u_over_j(self) -> np.ndarray:
        return np.array([r.u_over_j for r in self.rows])

    @property
    def values(self) -> np.ndarray:
        return np.array([r.order_parameter for r in self.rows])

    def normalized(self) -> np.ndarray:
        """Order parameter divided by its value at the first grid point."""
        v = self.values
        return v / v[0]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_HEADER)
            for r in self.rows:
                w.writerow([repr(float(v)) for v in (r.u_over_j, r.order_parameter, r.energy, r.residual)])


def read_sweep_csv(path) -> SweepResult:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SWEEP_HEADER:
            raise ValueError(f"unexpected sweep header {header}")
        return SweepResult([SweepRow(*map(float, row)) for row in reader])


def order_parameter_sweep(
    template: BoseHubbardParams,
    u_over_j_grid: Sequence[float] | Iterable[float],
    spec: MeasurementSpec | None = None,
    basis: FockBasis | None = None,
    method: str = "auto",
) -> SweepResult:
    """Ground-state coherence ``|<M_coh>_0| / N`` on a grid of ``U/J`` with ``J = 1``."""
    grid = [float(u) for u in u_over_j_grid]
    if not grid:
        raise ValueError("u_over_j grid is empty")
    if any(u <= 0 or not np.isfinite(u) for u in grid):
        raise ValueError("u_over_j values must be positive and finite")
    spec = spec or MeasurementSpec(kind="coherence")
    basis = basis or enumerate_basis(template.L, template.N)
    M = build_measurement_operator(spec, basis, template.boundary)
    # H(U) = H(J=1, U=0) + U * onsite, assembled once
    hop = build_bose_hubbard(replace(template, J=1.0, U=0.0), basis)
    n = basis.states.astype(float)
    onsite = 0.5 * np.sum(n * (n - 1.0), axis=1)
    rows = []
    for u in grid:
        H = ComplexSparseOperator(hop.matrix + sp.diags(onsite * u), hermitian=True)
        try:
            res = ground_state(H, method=method)
        except ConvergenceError as exc:
            raise ConvergenceError(f"U/J={u}: {exc}", exc.residual) from exc
        rows.append(SweepRow(u, order_parameter(res.state, M, template.N), res.energy, res.residual))
    return SweepResult(rows)

