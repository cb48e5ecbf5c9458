"""Microscopic homodyne detection layer.

A weak probe pulse ``|alpha>`` picks up the displacement ``-i alpha0 m dt``
for each eigenvalue ``m`` of the monitored observable, is mixed with a
local oscillator ``|beta>`` on a balanced beam splitter, and the photocount
difference ``k`` between the two output ports is recorded. This module
evaluates that model exactly (Poisson sums over photon numbers) and in
its Gaussian limit, which is what the SSE integrates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import signal as sps
from scipy import stats
from scipy.linalg import expm
from scipy.special import gammaln

from .operators import ComplexSparseOperator, MicroscopicParams, map_physical_params

TAIL_TOL = 1e-10
EIGEN_TOL = 1e-9


class TruncationError(RuntimeError):
    """Photon-number window cannot certify the requested tail bound."""


class PostSelectionError(ValueError):
    """Conditioned state has vanishing norm for the requested outcome."""


class BranchError(ValueError):
    """Phase arguments leave the principal branch."""


class GridSpanError(ValueError):
    """Outcome grid does not cover the required number of widths."""


# ---------------------------------------------------------------------------
# spectral data


@dataclass(frozen=True)
class SpectralWeights:
    eigenvalues: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.eigenvalues, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if m.shape != w.shape:
            raise ValueError("eigenvalues and weights differ in length")
        if not np.all(np.isfinite(m)):
            raise ValueError("eigenvalues must be finite")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "eigenvalues", m)
        object.__setattr__(self, "weights", w)

    @property
    def mean(self) -> float:
        return float(self.weights @ self.eigenvalues)

    @classmethod
    def single(cls, m: float) -> "SpectralWeights":
        return cls(np.array([m]), np.array([1.0]))


@dataclass(frozen=True)
class EigenExpansion:
    """State written as ``sum_m C_m |v_m>`` over distinct eigenvalues of an observable.

    ``vectors[:, j]`` is the normalized projection onto eigenspace ``j``
    (zero when ``C_j == 0``).
    """

    eigenvalues: np.ndarray
    coefficients: np.ndarray
    vectors: np.ndarray

    @property
    def weights(self) -> SpectralWeights:
        w = np.abs(self.coefficients) ** 2
        return SpectralWeights(self.eigenvalues, w / w.sum())

    def state(self, coefficients: np.ndarray | None = None) -> np.ndarray:
        c = self.coefficients if coefficients is None else coefficients
        return self.vectors @ c

    @classmethod
    def from_state(cls, psi: np.ndarray, M0) -> "EigenExpansion":
        M = M0.to_dense() if isinstance(M0, ComplexSparseOperator) else np.asarray(M0)
        vals, vecs = np.linalg.eigh(M)
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        groups = _group_eigenvalues(vals)
        eig, coef, cols = [], [], []
        for idx in groups:
            proj = vecs[:, idx] @ (vecs[:, idx].conj().T @ psi)
            c = np.linalg.norm(proj)
            eig.append(vals[idx].mean())
            coef.append(c)
            cols.append(proj / c if c > 0 else np.zeros_like(proj))
        return cls(np.array(eig), np.array(coef, dtype=complex), np.array(cols).T)

    @classmethod
    def diagonal(cls, eigenvalues: Sequence[float], coefficients: Sequence[complex]) -> "EigenExpansion":
        """Expansion in the computational basis of a diagonal observable."""
        m = np.asarray(eigenvalues, dtype=float)
        c = np.asarray(coefficients, dtype=complex)
        return cls(m, c / np.linalg.norm(c), np.eye(m.size, dtype=complex))


def _group_eigenvalues(vals: np.ndarray) -> list[np.ndarray]:
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    groups, start = [], 0
    for i in range(1, vals.size + 1):
        if i == vals.size or vals[i] - vals[i - 1] > EIGEN_TOL * scale:
            groups.append(np.arange(start, i))
            start = i
    return groups


def observable_spectrum(M0) -> tuple[np.ndarray, np.ndarray]:
    M = M0.to_dense() if isinstance(M0, ComplexSparseOperator) else np.asarray(M0)
    return np.linalg.eigh(M)


# ---------------------------------------------------------------------------
# beam splitter and coherent amplitudes


def beam_splitter(a_out: complex, b_lo: complex) -> tuple[complex, complex]:
    """Balanced beam splitter acting on a pair of coherent amplitudes."""
    s = np.sqrt(2.0)
    return (a_out + 1j * b_lo) / s, (a_out - 1j * b_lo) / s


def primed_amplitudes(m, p: MicroscopicParams) -> tuple[np.ndarray, np.ndarray]:
    """Output-port amplitudes for eigenvalue(s) ``m``."""
    shifted = p.alpha - 1j * p.alpha0 * np.asarray(m, dtype=float) * p.dt_micro
    return beam_splitter(shifted, p.beta)


def log_coherent_amplitude(n: np.ndarray, z: complex) -> np.ndarray:
    """``log <n|z>`` for integer photon numbers ``n`` (complex log)."""
    n = np.asarray(n, dtype=float)
    if z == 0:
        return np.where(n == 0, 0.0, -np.inf).astype(complex)
    return -0.5 * abs(z) ** 2 + n * np.log(complex(z)) - 0.5 * gammaln(n + 1.0)


def poisson_window(mu: float) -> tuple[int, int]:
    """Inclusive photon-number window ``mu -/+ (8 sqrt(mu) + 10)``."""
    half = 8.0 * np.sqrt(mu) + 10.0
    return max(0, int(np.floor(mu - half))), int(np.ceil(mu + half))


def poisson_tail_bound(mu: float, lo: int, hi: int) -> float:
    """Chernoff bound on the Poisson(mu) mass outside ``[lo, hi]``."""

    def upper(a):  # P(X >= a), a > mu
        return np.exp(-mu + a * (1.0 + np.log(mu / a))) if mu > 0 else 0.0

    def lower(a):  # P(X <= a), a < mu
        return np.exp(-mu + a * (1.0 + np.log(mu / a))) if a > 0 else np.exp(-mu)

    total = upper(hi + 1) if hi + 1 > mu else 1.0
    if lo > 0:
        total += lower(lo - 1) if lo - 1 < mu else 1.0
    return float(total)


def _certified_window(mu: float) -> tuple[int, int]:
    lo, hi = poisson_window(mu)
    bound = poisson_tail_bound(mu, lo, hi)
    if bound > TAIL_TOL:
        raise TruncationError(f"Poisson window [{lo}, {hi}] for mean {mu:.6g} leaves tail {bound:.3e}")
    return lo, hi


# ---------------------------------------------------------------------------
# photocount statistics


@dataclass(frozen=True)
class PhotocountDistribution:
    support: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        if np.any(self.probabilities < -1e-300):
            raise ValueError("negative probabilities")

    @property
    def total(self) -> float:
        return float(np.sum(self.probabilities))

    @property
    def mean(self) -> float:
        return float(self.support @ self.probabilities / self.total)

    @property
    def variance(self) -> float:
        mu = self.mean
        return float(((self.support - mu) ** 2) @ self.probabilities / self.total)

    def on(self, support: np.ndarray) -> np.ndarray:
        out = np.zeros(len(support))
        pos = np.searchsorted(self.support, support)
        pos = np.clip(pos, 0, len(self.support) - 1)
        hit = self.support[pos] == support
        out[hit] = self.probabilities[pos[hit]]
        return out


def skellam_pmf(mu_plus: float, mu_minus: float) -> PhotocountDistribution:
    """Law of ``n_plus - n_minus`` by direct correlation of two truncated Poisson pmfs."""
    a_lo, a_hi = _certified_window(mu_plus)
    b_lo, b_hi = _certified_window(mu_minus)
    na = np.arange(a_lo, a_hi + 1)
    nb = np.arange(b_lo, b_hi + 1)
    pa = stats.poisson.pmf(na, mu_plus)
    pb = stats.poisson.pmf(nb, mu_minus)
    vals = sps.correlate(pa, pb, mode="full", method="direct")
    support = np.arange(a_lo - b_hi, a_hi - b_lo + 1)
    return PhotocountDistribution(support, np.clip(vals, 0.0, None))


def _default_k_range(w: SpectralWeights, p: MicroscopicParams) -> np.ndarray:
    centres = -2.0 * p.alpha0 * p.beta * w.eigenvalues * p.dt_micro
    sd = np.sqrt(p.photon_variance)
    return np.arange(int(np.floor(centres.min() - 12 * sd)), int(np.ceil(centres.max() + 12 * sd)) + 1)


def exact_Pk(w: SpectralWeights, p: MicroscopicParams, k_range=None) -> PhotocountDistribution:
    """Photocount-difference law from exact Poisson statistics of both ports."""
    a_amp, b_amp = primed_amplitudes(w.eigenvalues, p)
    if np.any(np.abs(a_amp) == 0) or np.any(np.abs(b_amp) == 0):
        raise ValueError("output-port amplitudes must be non-zero")
    parts = [skellam_pmf(abs(a) ** 2, abs(b) ** 2) for a, b in zip(a_amp, b_amp)]
    if k_range is None:
        lo = min(d.support[0] for d in parts)
        hi = max(d.support[-1] for d in parts)
        k = np.arange(lo, hi + 1)
    else:
        k = np.asarray(k_range, dtype=int)
    probs = sum(wt * d.on(k) for wt, d in zip(w.weights, parts))
    return PhotocountDistribution(k, probs)


def gaussian_Pk(w: SpectralWeights, p: MicroscopicParams, k_range=None,
                collapse: bool = True) -> PhotocountDistribution:
    """Gaussian surrogate on integer ``k``.

    ``collapse=True`` uses a single Gaussian centred at
    ``-2 alpha0 beta <M> dt``; otherwise the mixture over eigenvalues.
    """
    k = _default_k_range(w, p) if k_range is None else np.asarray(k_range, dtype=int)
    sd = np.sqrt(p.photon_variance)
    if collapse:
        probs = stats.norm.pdf(k, loc=-2.0 * p.alpha0 * p.beta * w.mean * p.dt_micro, scale=sd)
    else:
        probs = sum(
            wt * stats.norm.pdf(k, loc=-2.0 * p.alpha0 * p.beta * m * p.dt_micro, scale=sd)
            for m, wt in zip(w.eigenvalues, w.weights)
        )
    return PhotocountDistribution(k, probs)


def total_variation(a: PhotocountDistribution, b: PhotocountDistribution) -> float:
    k = np.union1d(a.support, b.support)
    return 0.5 * float(np.sum(np.abs(a.on(k) - b.on(k))))


def wiener_from_k(k, mean_M: float, p: MicroscopicParams) -> np.ndarray:
    """Wiener increment attached to a photocount difference."""
    return np.sqrt(p.dt_micro) * (np.asarray(k) + 2.0 * p.alpha0 * p.beta * mean_M * p.dt_micro) / np.sqrt(
        p.photon_variance
    )


def sample_k(dist: PhotocountDistribution, seed, mean_M: float, p: MicroscopicParams,
             size: int | None = None):
    """Draw photocount differences and the induced Wiener increments."""
    rng = np.random.default_rng(seed)
    probs = dist.probabilities / dist.total
    k = rng.choice(dist.support, size=size, p=probs)
    return k, wiener_from_k(k, mean_M, p)


# ---------------------------------------------------------------------------
# conditioned states


def kraus_update(psi: np.ndarray, M0, k: float, p: MicroscopicParams, H_eff=None) -> np.ndarray:
    """Gaussian Kraus update followed by the unitary factor.

    ``H_eff`` defaults to ``2 alpha0 alpha M0`` (no atomic Hamiltonian).
    """
    vals, vecs = observable_spectrum(M0)
    psi = np.asarray(psi, dtype=complex)
    c = vecs.conj().T @ psi
    expo = -((k + 2.0 * p.alpha0 * p.beta * vals * p.dt_micro) ** 2) / (4.0 * p.photon_variance)
    live = np.abs(c) > 0
    if not np.any(live):
        raise PostSelectionError("zero input state")
    shift = expo[live].max()
    c = c * np.exp(expo - shift)
    norm = np.linalg.norm(c)
    if not np.isfinite(norm) or norm == 0 or np.log(norm) + shift < -700:
        raise PostSelectionError(f"outcome k={k} has vanishing conditional norm")
    if H_eff is None:
        phase = np.exp(-1j * 2.0 * p.alpha0 * p.alpha * vals * p.dt_micro)
        out = vecs @ (phase * c)
    else:
        Hd = H_eff.to_dense() if isinstance(H_eff, ComplexSparseOperator) else np.asarray(H_eff)
        out = expm(-1j * Hd * p.dt_micro) @ (vecs @ c)
    return out / np.linalg.norm(out)


@dataclass(frozen=True)
class ConditionedState:
    """Exact post-measurement object for one outcome ``k``.

    ``density`` is unnormalized with ``trace == probability``; ``state`` is
    its principal eigenvector and ``purity`` that of the normalized matrix.
    """

    state: np.ndarray
    density: np.ndarray
    probability: float
    purity: float

    def fidelity(self, phi: np.ndarray) -> float:
        phi = np.asarray(phi) / np.linalg.norm(phi)
        return float(np.real(phi.conj() @ self.density @ phi) / np.real(np.trace(self.density)))

    @property
    def normalized_density(self) -> np.ndarray:
        return self.density / np.real(np.trace(self.density))


def exact_conditioned_state(expansion: EigenExpansion, p: MicroscopicParams, k: int) -> ConditionedState:
    """Brute-force conditioned atomic state from exact coherent-state overlaps.

    Sums over the photon number ``p`` at the second port (``p + k`` at the
    first) inside certified Poisson windows. The result is generally mixed
    because different ``p`` carry slightly different amplitude ratios.
    """
    m = expansion.eigenvalues
    if m.size > 32:
        raise ValueError("at most 32 distinct eigenvalues supported")
    k = int(k)
    a_amp, b_amp = primed_amplitudes(m, p)
    lo, hi = np.inf, -np.inf
    for a, b in zip(a_amp, b_amp):
        blo, bhi = _certified_window(abs(b) ** 2)
        alo, ahi = _certified_window(abs(a) ** 2)
        lo = min(lo, blo, alo - k)
        hi = max(hi, bhi, ahi - k)
    photons = np.arange(max(0, int(lo), -k), int(hi) + 1)
    logs = np.array([
        log_coherent_amplitude(photons + k, a) + log_coherent_amplitude(photons, b)
        for a, b in zip(a_amp, b_amp)
    ])
    live = np.abs(expansion.coefficients) > 0
    ref = np.max(logs[live].real)
    amps = np.exp(logs - ref) * (
        expansion.coefficients * np.exp(-1j * p.alpha0 * p.alpha * m * p.dt_micro)
    )[:, None]
    rho_c = (amps @ amps.conj().T) * np.exp(2.0 * ref)
    prob = float(np.real(np.trace(rho_c)))
    if not prob > 0:
        raise PostSelectionError(f"outcome k={k} has zero probability")
    V = expansion.vectors
    rho = V @ rho_c @ V.conj().T
    vals, vecs = np.linalg.eigh(rho_c / prob)
    top = V @ vecs[:, -1]
    return ConditionedState(top / np.linalg.norm(top), rho, prob, float(np.sum(vals**2)))


def posterior_weights(cond: ConditionedState, expansion: EigenExpansion) -> np.ndarray:
    """Eigenvalue weights of the normalized conditioned density matrix."""
    V = expansion.vectors
    return np.real(np.einsum("ij,ik,kj->j", V.conj(), cond.normalized_density, V))


# ---------------------------------------------------------------------------
# POVM completeness


@dataclass(frozen=True)
class CompletenessReport:
    deviation: float
    outcome_sigma: float
    span_sigmas: float
    sufficient_span: bool


def povm_completeness(M0, K: float, dt: float, grid: np.ndarray | None = None,
                      span_sigmas: float = 10.0, strict: bool = False) -> CompletenessReport:
    """``max |integral E(r) dr - 1|`` for Gaussian effects of width ``1/sqrt(8 K dt)``.

    The effects are ``E(r) = sqrt(4 K dt / pi) exp(-4 K dt (r - M0)^2)``.
    The default grid spans ``span_sigmas`` widths beyond the extreme
    eigenvalues at a spacing of a quarter width; the trapezoid rule is
    spectrally accurate for Gaussians on such grids.
    """
    if K <= 0 or dt <= 0:
        raise ValueError("K and dt must be positive")
    vals, vecs = observable_spectrum(M0)
    s = 1.0 / np.sqrt(8.0 * K * dt)
    if grid is None:
        lo, hi = vals.min() - span_sigmas * s, vals.max() + span_sigmas * s
        grid = np.linspace(lo, hi, int(np.ceil((hi - lo) / (0.25 * s))) + 1)
    grid = np.asarray(grid, dtype=float)
    span = min(vals.min() - grid[0], grid[-1] - vals.max()) / s
    ok = span >= 8.0
    if strict and not ok:
        raise GridSpanError(f"grid extends only {span:.2f} widths beyond the spectrum")
    density = np.sqrt(4.0 * K * dt / np.pi) * np.exp(-4.0 * K * dt * (grid[None, :] - vals[:, None]) ** 2)
    totals = np.trapezoid(density, grid, axis=1)
    E = (vecs * totals) @ vecs.conj().T
    dev = float(np.max(np.abs(E - np.eye(len(vals)))))
    return CompletenessReport(dev, s, float(span), bool(ok))


# ---------------------------------------------------------------------------
# expansion and integral oracles


def _check_branch(m, n, p: MicroscopicParams) -> None:
    if p.alpha < 0:
        raise BranchError("alpha must be non-negative")
    if p.beta - p.alpha0 * max(abs(m), abs(n)) * p.dt_micro <= 0:
        raise BranchError("beta must exceed alpha0 |m| dt for principal-branch arguments")


def theta_exact(m: float, n: float, p: MicroscopicParams) -> complex:
    """Phase exponent from the four output-port arguments."""
    _check_branch(m, n, p)
    a, b, x, y = p.alpha, p.beta, p.alpha0 * m * p.dt_micro, p.alpha0 * n * p.dt_micro
    s = (-np.arctan2(b + x, a) + np.arctan2(b + y, a)
         + np.arctan2(b - x, a) - np.arctan2(b - y, a))
    return -1j * s


def theta_approx(m: float, n: float, p: MicroscopicParams) -> complex:
    _check_branch(m, n, p)
    return -2j * np.arctan(p.alpha * p.alpha0 * (n - m) * p.dt_micro / p.photon_variance)


def richardson_slope(errors: Sequence[float]) -> np.ndarray:
    """``log2`` ratios of successive errors under step halving."""
    e = np.asarray(errors, dtype=float)
    return np.log2(e[:-1] / e[1:])


@dataclass(frozen=True)
class OracleResult:
    exact: complex
    closed_form: complex
    relative_error: float


def _result(exact, closed) -> OracleResult:
    return OracleResult(complex(exact), complex(closed), float(abs(exact - closed) / abs(exact)))


def poisson_product_sum(A: float, B: float, k: int) -> float:
    """``sum_p Pois(p + k; A) Pois(p; B)`` by direct summation."""
    d = skellam_pmf(A, B)
    return float(d.on(np.array([k]))[0])


def gaussian_difference_closed_form(A: float, B: float, k: float) -> float:
    """Continuum limit of :func:`poisson_product_sum`: ``Normal(k; A - B, A + B)``."""
    return float(np.exp(-((k - (A - B)) ** 2) / (2 * (A + B))) / np.sqrt(2 * np.pi * (A + B)))


def appendix_form1(A: float, B: float, k: int = 0) -> OracleResult:
    return _result(poisson_product_sum(A, B, k), gaussian_difference_closed_form(A, B, k))


def q1_exponent(Am, An, Bm, Bn, k, theta) -> complex:
    """Exponent left after completing the square and integrating over ``p``."""
    D = Am * An * (Bm + Bn) + Bm * Bn * (Am + An)
    num = Bm * Bn * (2 * Am * An * (theta - 2) + (Am + An) * k) ** 2
    return 0.25 * ((Bm + Bn + Am + An) - 4 * k + k * k / Am + k * k / An - num / (Am * An * D))


def amplitude_sum_exact(m: float, n: float, k: int, p: MicroscopicParams) -> complex:
    """``sum_p <p|b_m><b_n|p><p+k|a_m><a_n|p+k>`` with exact coherent overlaps."""
    (am, an), (bm, bn) = primed_amplitudes([m, n], p)
    lo, hi = np.inf, -np.inf
    for z in (am, an):
        l, h = _certified_window(abs(z) ** 2)
        lo, hi = min(lo, l - k), max(hi, h - k)
    for z in (bm, bn):
        l, h = _certified_window(abs(z) ** 2)
        lo, hi = min(lo, l), max(hi, h)
    ph = np.arange(max(0, int(lo), -k), int(hi) + 1)
    logs = (log_coherent_amplitude(ph, bm) + np.conj(log_coherent_amplitude(ph, bn))
            + log_coherent_amplitude(ph + k, am) + np.conj(log_coherent_amplitude(ph + k, an)))
    return complex(np.sum(np.exp(logs)))


def amplitude_sum_closed_form(m: float, n: float, k: int, p: MicroscopicParams) -> complex:
    """Gaussian closed form of :func:`amplitude_sum_exact`.

    Includes the ``k``-dependent phase ``exp(i k (Arg a_m - Arg a_n))``,
    which equals 1 at ``k = 0``.
    """
    (am, an), (bm, bn) = primed_amplitudes([m, n], p)
    Am, An, Bm, Bn = (abs(z) ** 2 for z in (am, an, bm, bn))
    theta = theta_exact(m, n, p)
    pref = 1.0 / (2 * np.pi * (Am * An * Bm * Bn) ** 0.25)
    width = np.sqrt(4 * np.pi) / np.sqrt(1 / Am + 1 / An + 1 / Bm + 1 / Bn)
    phase = np.exp(1j * k * (np.angle(am) - np.angle(an)))
    return complex(phase * pref * width * np.exp(-q1_exponent(Am, An, Bm, Bn, k, theta)))


def appendix_form2(m: float, n: float, k: int, p: MicroscopicParams) -> OracleResult:
    return _result(amplitude_sum_exact(m, n, k, p), amplitude_sum_closed_form(m, n, k, p))


def params_for_amplitudes(target: float, p: MicroscopicParams, m: float = 1.0, n: float = -1.0,
                          scale: float = 1.0) -> MicroscopicParams:
    """Copy of ``p`` with ``beta`` chosen so that ``|a'_0|^2 = target`` and amplitudes scaled.

    ``scale`` multiplies ``alpha``, ``beta`` and ``alpha0`` together, which
    scales every output-port amplitude by the same factor.
    """
    beta = np.sqrt(2.0 * target - p.alpha**2)
    return replace(p, alpha=p.alpha * scale, beta=beta * scale, alpha0=p.alpha0 * scale)


# ---------------------------------------------------------------------------
# momentum-quadrature route


@dataclass(frozen=True)
class QuadratureReport:
    """Momentum-quadrature outcome law and its single-Gaussian surrogate.

    ``component_means`` are the per-eigenvalue centres; ``surrogate_mean``
    is the mixture mean; ``flipped_mean`` is the opposite-sign convention,
    kept for comparison. TV distances are evaluated by quadrature.
    """

    component_means: np.ndarray
    weights: np.ndarray
    variance: float
    surrogate_mean: float
    flipped_mean: float
    tv_surrogate: float
    tv_flipped: float
    wiener_scale: float

    def mixture_pdf(self, x: np.ndarray) -> np.ndarray:
        sd = np.sqrt(self.variance)
        return sum(w * stats.norm.pdf(x, mu, sd) for mu, w in zip(self.component_means, self.weights))

    def surrogate_pdf(self, x: np.ndarray) -> np.ndarray:
        return stats.norm.pdf(x, self.surrogate_mean, np.sqrt(self.variance))

    def wiener(self, P: np.ndarray) -> np.ndarray:
        """``dW = sigma sqrt(2 dt) (P - mean)``: zero mean, variance ``dt``."""
        return self.wiener_scale * (np.asarray(P) - self.surrogate_mean)


def _tv_continuous(f, g, lo, hi, n=20001) -> float:
    x = np.linspace(lo, hi, n)
    return 0.5 * float(np.trapezoid(np.abs(f(x) - g(x)), x))


def p_quadrature_distribution(w: SpectralWeights, p: MicroscopicParams) -> QuadratureReport:
    """Mixture of momentum-quadrature Gaussians and its collapsed form."""
    s = p.sigma
    means = -np.sqrt(2.0) * p.alpha0 * w.eigenvalues * p.dt_micro / s
    var = 1.0 / (2.0 * s * s)
    mbar = float(w.weights @ means)
    sd = np.sqrt(var)
    lo, hi = means.min() - 12 * sd, means.max() + 12 * sd
    mix = lambda x: sum(wt * stats.norm.pdf(x, mu, sd) for mu, wt in zip(means, w.weights))  # noqa: E731
    tv_s = _tv_continuous(mix, lambda x: stats.norm.pdf(x, mbar, sd), lo - abs(mbar), hi + abs(mbar))
    tv_p = _tv_continuous(mix, lambda x: stats.norm.pdf(x, -mbar, sd), lo - abs(mbar), hi + abs(mbar))
    return QuadratureReport(means, w.weights, var, mbar, -mbar, tv_s, tv_p, s * np.sqrt(2.0 * p.dt_micro))


def quadrature_strength(p: MicroscopicParams) -> float:
    """``K_P = 1 / (4 sigma^2 dt)``."""
    return 1.0 / (4.0 * p.sigma**2 * p.dt_micro)


def measurement_strength(p: MicroscopicParams) -> float:
    return map_physical_params(p).K
