"""Sparse many-body operators on a fixed-N Fock basis.

Builds the Bose-Hubbard Hamiltonian, the monitored observables
(coherence, population or a custom bilinear ``sum_jk M_jk b_j^+ b_k``),
the cavity coupling matrix from mode-function overlaps, and the mapping
from the microscopic homodyne parameters to the SSE parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np
import scipy.sparse as sp

from .fock import FockBasis

HERMITIAN_RTOL = 1e-12


class ConfigurationError(ValueError):
    """Operator inputs inconsistent with the basis or with each other."""


class ParameterError(ValueError):
    """Physical parameters outside their admissible range."""


@dataclass(frozen=True)
class ComplexSparseOperator:
    """Sparse complex matrix on a Fock basis.

    ``matrix`` is kept in CSR form; ``entries`` gives the coordinate
    triplets. ``hermitian`` records whether the operator was built as
    Hermitian and is checked at construction.
    """

    matrix: sp.csr_matrix
    hermitian: bool = False

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=complex)
        m.sum_duplicates()
        m.eliminate_zeros()
        object.__setattr__(self, "matrix", m)
        if m.shape[0] != m.shape[1]:
            raise ConfigurationError(f"operator must be square, got {m.shape}")
        if self.hermitian and self.hermiticity_error() > HERMITIAN_RTOL:
            raise ConfigurationError(
                f"operator flagged Hermitian deviates by {self.hermiticity_error():.3e}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def entries(self) -> list[tuple[int, int, complex]]:
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.matrix.data))) if self.matrix.nnz else 0.0

    def hermiticity_error(self) -> float:
        """``max|A - A^+| / max|A|`` (0 for the zero operator)."""
        scale = self.max_abs()
        if scale == 0.0:
            return 0.0
        diff = self.matrix - self.matrix.conj().T
        return float(np.max(np.abs(diff.data), initial=0.0)) / scale

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other):
        if isinstance(other, ComplexSparseOperator):
            return ComplexSparseOperator(self.matrix @ other.matrix)
        return apply(self, other)

    def __add__(self, other: "ComplexSparseOperator") -> "ComplexSparseOperator":
        return ComplexSparseOperator(
            self.matrix + other.matrix, hermitian=self.hermitian and other.hermitian
        )

    def scaled(self, c: complex) -> "ComplexSparseOperator":
        return ComplexSparseOperator(
            self.matrix * c, hermitian=self.hermitian and np.imag(c) == 0
        )

    def expectation(self, psi: np.ndarray) -> complex:
        psi = np.asarray(psi)
        return complex(np.vdot(psi, self.matrix @ psi) / np.vdot(psi, psi))

    def write_table(self, path) -> None:
        """Dense dump, one ``row col real imag`` line per matrix element."""
        dense = self.to_dense()
        with open(path, "w", encoding="ascii") as fh:
            for (r, c), v in np.ndenumerate(dense):
                fh.write(f"{r} {c} {float(v.real)!r} {float(v.imag)!r}\n")


def apply(op: ComplexSparseOperator, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] != op.dim:
        raise ConfigurationError(
            f"vector of length {v.shape[0]} does not match operator dimension {op.dim}"
        )
    return op.matrix @ v


def identity(dim: int) -> ComplexSparseOperator:
    return ComplexSparseOperator(sp.identity(dim, dtype=complex, format="csr"), True)


# ---------------------------------------------------------------------------
# parameter records


@dataclass
class BoseHubbardParams:
    """Parameters of ``-J sum_<ij> b_i^+ b_j + sum_i eps_i n_i + U/2 sum_i n_i(n_i-1)``."""

    L: int
    N: int
    J: float = 1.0
    U: float = 1.0
    epsilon: Sequence[float] | None = None
    boundary: Literal["open", "periodic"] = "open"

    def __post_init__(self):
        if self.epsilon is None:
            self.epsilon = [0.0] * self.L
        self.epsilon = [float(e) for e in self.epsilon]
        if len(self.epsilon) != self.L:
            raise ConfigurationError(
                f"epsilon has {len(self.epsilon)} entries for L={self.L} sites"
            )
        if not (np.isfinite(self.J) and np.isfinite(self.U)):
            raise ConfigurationError("J and U must be finite")
        if self.boundary not in ("open", "periodic"):
            raise ConfigurationError(f"unknown boundary {self.boundary!r}")

    @classmethod
    def from_ratio(
        cls, L: int, N: int, u_over_j: float, scale: Literal["J", "max"] = "J", **kw
    ) -> "BoseHubbardParams":
        """Parameters at a given ``U/J``.

        ``scale="J"`` fixes ``J = 1``; ``scale="max"`` fixes the larger of
        ``U`` and ``J`` to 1, which keeps the Hamiltonian norm bounded deep
        in the Mott regime.
        """
        if scale == "J" or u_over_j <= 1.0:
            J, U = 1.0, float(u_over_j)
        else:
            J, U = 1.0 / u_over_j, 1.0
        return cls(L=L, N=N, J=J, U=U, **kw)


@dataclass
class MeasurementSpec:
    """Which observable is monitored and how strongly."""

    kind: Literal["coherence", "population", "custom"] = "coherence"
    m_coh: float = 1.0
    m_pop: float = 1.0
    custom_matrix: np.ndarray | None = None
    gamma: float = 0.01

    def __post_init__(self):
        if self.kind not in ("coherence", "population", "custom"):
            raise ConfigurationError(f"unknown measurement kind {self.kind!r}")
        if self.gamma < 0:
            raise ConfigurationError(f"gamma must be non-negative, got {self.gamma}")
        if self.kind == "custom":
            if self.custom_matrix is None:
                raise ConfigurationError("custom measurement needs custom_matrix")
            m = np.asarray(self.custom_matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ConfigurationError("custom_matrix must be square")
            if not np.allclose(m, m.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
                raise ConfigurationError("custom_matrix must be Hermitian")
            self.custom_matrix = m


@dataclass
class MicroscopicParams:
    """Numbers of the homodyne detection layer.

    ``alpha`` input coherent amplitude, ``beta`` local-oscillator
    amplitude (both real), ``alpha0`` and ``phi`` the effective coupling
    amplitude and phase, ``dt_micro`` the coarse-graining step, ``A0`` the
    intra-cavity amplitude, ``kappa`` half the cavity decay rate,
    ``omega_L`` the drive frequency, ``g`` and ``Delta`` the atom-light
    coupling and detuning, ``sigma`` the quadrature width.
    """

    alpha: float = 0.0
    beta: float = 100.0
    alpha0: float = 1.0
    phi: float = 0.0
    dt_micro: float = 1e-2
    A0: complex = 0.0
    kappa: float = 1.0
    omega_L: float = 0.0
    g: float = 1.0
    Delta: float = 1.0
    sigma: float = 1.0 / np.sqrt(2.0)

    def __post_init__(self):
        if self.kappa <= 0:
            raise ParameterError(f"kappa must be positive, got {self.kappa}")
        if self.dt_micro <= 0:
            raise ParameterError(f"dt_micro must be positive, got {self.dt_micro}")
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")

    @property
    def photon_variance(self) -> float:
        return self.alpha**2 + self.beta**2


@dataclass(frozen=True)
class DerivedParams:
    alpha0_magnitude: float
    phi: float
    K: float
    gamma_equivalent: float
    Mr_scale: float


def map_physical_params(p: MicroscopicParams) -> DerivedParams:
    """Derived SSE numbers from the microscopic homodyne parameters.

    ``alpha0_magnitude`` and ``phi`` come from
    ``A0 sqrt(2/(kappa dt)) (1 - i omega_L/kappa)``; ``K = 1/(8 dt (alpha^2+beta^2))``
    is the measurement strength, ``gamma_equivalent = 32 K`` and
    ``Mr_scale = -2 alpha0 beta dt`` rescales the observable.
    """
    if p.kappa <= 0 or p.dt_micro <= 0:
        raise ParameterError("kappa and dt_micro must be positive")
    if p.photon_variance <= 0:
        raise ParameterError("alpha^2 + beta^2 must be positive")
    z = complex(p.A0) * np.sqrt(2.0 / (p.kappa * p.dt_micro)) * (1 - 1j * p.omega_L / p.kappa)
    K = 1.0 / (8.0 * p.dt_micro * p.photon_variance)
    return DerivedParams(
        alpha0_magnitude=float(abs(z)),
        phi=float(np.angle(z)) if z != 0 else float(p.phi),
        K=K,
        gamma_equivalent=32.0 * K,
        Mr_scale=-2.0 * p.alpha0 * p.beta * p.dt_micro,
    )


# ---------------------------------------------------------------------------
# many-body operators


def _check_basis(basis: FockBasis, L: int, N: int | None = None) -> None:
    if basis.L != L or (N is not None and basis.N != N):
        raise ConfigurationError(
            f"basis (L={basis.L}, N={basis.N}) does not match parameters (L={L}, N={N})"
        )


def bonds(L: int, boundary: str = "open") -> list[tuple[int, int]]:
    """Nearest-neighbour bonds ``(j, j+1)`` with 0-based sites."""
    out = [(j, j + 1) for j in range(L - 1)]
    if boundary == "periodic" and L > 2:
        out.append((L - 1, 0))
    return out


def adjacency(L: int, boundary: str = "open") -> np.ndarray:
    A = np.zeros((L, L))
    for i, j in bonds(L, boundary):
        A[i, j] = A[j, i] = 1.0
    return A


def bilinear_operator(basis: FockBasis, coeffs: np.ndarray, hermitian: bool = True) -> ComplexSparseOperator:
    """``sum_jk coeffs[j, k] b_j^+ b_k`` restricted to the basis."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (basis.L, basis.L):
        raise ConfigurationError(
            f"coefficient matrix {coeffs.shape} does not match L={basis.L}"
        )
    S = basis.states
    rows, cols, vals = [], [], []
    diag = S @ np.real(np.diag(coeffs)) + 1j * (S @ np.imag(np.diag(coeffs)))
    rows.append(np.arange(basis.dim))
    cols.append(np.arange(basis.dim))
    vals.append(diag)
    for j, k in zip(*np.nonzero(coeffs)):
        if j == k:
            continue
        # b_j^+ b_k : move one boson from k to j
        src = np.nonzero(S[:, k] > 0)[0]
        if src.size == 0:
            continue
        moved = S[src].copy()
        amp = np.sqrt(moved[:, k] * (moved[:, j] + 1.0))
        moved[:, k] -= 1
        moved[:, j] += 1
        rows.append(basis.lookup(moved))
        cols.append(src)
        vals.append(coeffs[j, k] * amp)
    m = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim),
    )
    return ComplexSparseOperator(m.tocsr(), hermitian=hermitian)


def number_operator(basis: FockBasis, site: int) -> ComplexSparseOperator:
    return ComplexSparseOperator(sp.diags(basis.states[:, site].astype(complex)).tocsr(), True)


def build_bose_hubbard(params: BoseHubbardParams, basis: FockBasis) -> ComplexSparseOperator:
    _check_basis(basis, params.L, params.N)
    coeffs = -params.J * adjacency(params.L, params.boundary) + np.diag(params.epsilon)
    H = bilinear_operator(basis, coeffs)
    n = basis.states.astype(float)
    onsite = 0.5 * params.U * np.sum(n * (n - 1.0), axis=1)
    return H + ComplexSparseOperator(sp.diags(onsite.astype(complex)).tocsr(), True)


def measurement_matrix(spec: MeasurementSpec, L: int, boundary: str = "open") -> np.ndarray:
    """Single-particle matrix ``M_jk`` of the monitored observable.

    Population monitoring counts the even sites ``2, 4, ...`` in 1-based
    numbering (0-based indices 1, 3, ...).
    """
    if spec.kind == "coherence":
        return spec.m_coh * adjacency(L, boundary).astype(complex)
    if spec.kind == "population":
        d = np.zeros(L)
        d[1::2] = 1.0
        return spec.m_pop * np.diag(d).astype(complex)
    m = np.asarray(spec.custom_matrix, dtype=complex)
    if m.shape != (L, L):
        raise ConfigurationError(f"custom_matrix {m.shape} does not match L={L}")
    return m


def build_measurement_operator(
    spec: MeasurementSpec, basis: FockBasis, boundary: str = "open"
) -> ComplexSparseOperator:
    return bilinear_operator(basis, measurement_matrix(spec, basis.L, boundary))


def cyclic_translation(basis: FockBasis) -> ComplexSparseOperator:
    """Permutation moving the occupation of site ``j`` to site ``j + 1`` (mod L)."""
    shifted = np.roll(basis.states, 1, axis=1)
    rows = basis.lookup(shifted)
    m = sp.coo_matrix(
        (np.ones(basis.dim, dtype=complex), (rows, np.arange(basis.dim))),
        shape=(basis.dim, basis.dim),
    )
    return ComplexSparseOperator(m.tocsr())


def commutator_norm(A: ComplexSparseOperator, B: ComplexSparseOperator) -> float:
    C = A.matrix @ B.matrix - B.matrix @ A.matrix
    return float(np.max(np.abs(C.data), initial=0.0))


def build_effective_hamiltonian(
    H_atm: ComplexSparseOperator,
    Mr: ComplexSparseOperator,
    p: MicroscopicParams,
    include_corrections: bool = True,
) -> ComplexSparseOperator:
    """Atomic Hamiltonian plus the terms linear and quadratic in ``Mr``.

    ``H_atm - alpha/(beta dt) Mr + |A0|^2 omega_L / (4 alpha0^2 beta^2 kappa^2 dt^2) Mr^2``
    """
    if H_atm.dim != Mr.dim:
        raise ConfigurationError(f"dimension mismatch {H_atm.dim} vs {Mr.dim}")
    if not include_corrections:
        return H_atm
    if p.beta == 0 or p.alpha0 == 0:
        raise ParameterError("corrections need non-zero beta and alpha0")
    dt = p.dt_micro
    linear = -p.alpha / (p.beta * dt)
    quad = abs(complex(p.A0)) ** 2 * p.omega_L / (
        4.0 * p.alpha0**2 * p.beta**2 * p.kappa**2 * dt**2
    )
    out = H_atm.matrix + linear * Mr.matrix + quad * (Mr.matrix @ Mr.matrix)
    return ComplexSparseOperator(out, hermitian=H_atm.hermitian and Mr.hermitian)


# ---------------------------------------------------------------------------
# coupling matrix from mode-function overlaps

ModeFunction = Callable[[np.ndarray], np.ndarray]


@dataclass
class CouplingIntegrandSpec:
    """Inputs of the overlap integral ``M_jk = g^2/Delta int |f|^2 w_j w_k dx``.

    ``mode_function`` is a callable ``f(x)`` or a tabulated pair
    ``(x, f)``; ``wannier_width`` is the width of the Gaussian orbitals
    centred at ``x_j = j * lattice_constant`` (``j = 1..L``);
    ``quadrature_points`` is the Gauss-Legendre order per lattice cell.
    """

    mode_function: ModeFunction | tuple = field(default=lambda x: np.ones_like(x))
    wannier_width: float = 0.1
    lattice_constant: float = 1.0
    quadrature_points: int = 64

    def __post_init__(self):
        if self.wannier_width <= 0:
            raise ConfigurationError("wannier_width must be positive")
        if self.quadrature_points < 64:
            raise ConfigurationError("quadrature_points must be at least 64")

    def evaluate_mode(self, x: np.ndarray) -> np.ndarray:
        f = self.mode_function
        if callable(f):
            return np.asarray(f(x))
        xs, fs = (np.asarray(a) for a in f)
        if np.iscomplexobj(fs):
            return np.interp(x, xs, fs.real) + 1j * np.interp(x, xs, fs.imag)
        return np.interp(x, xs, fs)


def gaussian_orbital(x: np.ndarray, center: float, width: float) -> np.ndarray:
    return (np.pi * width**2) ** -0.25 * np.exp(-((x - center) ** 2) / (2 * width**2))


def site_positions(L: int, lattice_constant: float = 1.0) -> np.ndarray:
    return lattice_constant * np.arange(1, L + 1)


def coupling_matrix(spec: CouplingIntegrandSpec, g: float, Delta: float, L: int) -> np.ndarray:
    """Overlap matrix of the cavity mode with Gaussian site orbitals.

    Composite Gauss-Legendre quadrature, ``quadrature_points`` nodes per
    lattice cell, over the orbital support padded by 10 widths.
    """
    if Delta == 0:
        raise ParameterError("detuning Delta must be non-zero")
    a, s = spec.lattice_constant, spec.wannier_width
    xs = site_positions(L, a)
    lo, hi = xs[0] - 10 * s - a / 2, xs[-1] + 10 * s + a / 2
    n_cells = max(1, int(np.ceil((hi - lo) / a)))
    nodes, weights = np.polynomial.legendre.leggauss(spec.quadrature_points)
    edges = np.linspace(lo, hi, n_cells + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    density = np.abs(spec.evaluate_mode(x)) ** 2
    orbitals = np.array([gaussian_orbital(x, c, s) for c in xs])
    M = (orbitals * (w * density)) @ orbitals.conj().T
    return (g**2 / Delta) * M
