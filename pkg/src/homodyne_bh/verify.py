"""Verification suites comparing the SSE layer against its oracles.

Each suite returns a list of :class:`ReportRow`; a suite passes iff every
row with a tolerance passes. Rows with ``tolerance = nan`` are
informational.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from . import homodyne_micro as hm
from .fock import enumerate_basis
from .groundstate import ground_state
from .operators import (
    BoseHubbardParams,
    MeasurementSpec,
    MicroscopicParams,
    build_bose_hubbard,
    build_measurement_operator,
)
from .sse import SimConfig, ensemble_average, lindblad_evolve, run_ensemble, trace_distance

REPORT_HEADER = ("check", "parameter_point", "exact", "approximate", "error", "tolerance", "passed")
SUITES = ("povm", "photocount", "kraus", "appendix", "pquad", "ensemble")


@dataclass(frozen=True)
class ReportRow:
    check: str
    parameter_point: str
    exact: float
    approximate: float
    error: float
    tolerance: float = float("nan")
    passed: bool | None = None

    @classmethod
    def bound(cls, check, point, exact, approx, error, tol, upper=True):
        ok = bool(error <= tol) if upper else bool(error >= tol)
        return cls(check, point, float(exact), float(approx), float(error), float(tol), ok)

    @classmethod
    def info(cls, check, point, exact, approx, error):
        return cls(check, point, float(exact), float(approx), float(error))


def suite_passed(rows: list[ReportRow]) -> bool:
    return all(r.passed is not False for r in rows)


def write_report(rows: list[ReportRow], path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in rows:
            flag = "" if r.passed is None else ("true" if r.passed else "false")
            w.writerow([r.check, r.parameter_point, repr(float(r.exact)), repr(float(r.approximate)),
                        repr(float(r.error)), repr(float(r.tolerance)), flag])


# ---------------------------------------------------------------------------


def four_level_test_operator() -> np.ndarray:
    return np.diag([-1.5, -0.5, 0.5, 1.5])


def suite_povm(micro: MicroscopicParams | None = None) -> list[ReportRow]:
    ops = {"diag4": four_level_test_operator()}
    basis = enumerate_basis(3, 3)
    ops["coherence_L3N3"] = build_measurement_operator(MeasurementSpec("coherence"), basis).to_dense()
    ops["population_L3N3"] = build_measurement_operator(MeasurementSpec("population"), basis).to_dense()
    rows = []
    for name, M in ops.items():
        for Kdt in (1e-3, 1e-1, 10.0):
            rep = hm.povm_completeness(M, Kdt, 1.0)
            rows.append(ReportRow.bound("povm_completeness", f"{name};Kdt={Kdt:g}", 1.0,
                                        1.0 + rep.deviation, rep.deviation, 1e-6))
    narrow = hm.povm_completeness(ops["diag4"], 1.0, 1.0, grid=np.linspace(-1.5 - 0.35, 1.5 + 0.35, 201))
    rows.append(ReportRow.info("povm_narrow_grid_flag", f"span_sigmas={narrow.span_sigmas:.2f}", 1.0,
                               1.0 + narrow.deviation, narrow.deviation))
    rows.append(ReportRow("povm_narrow_grid_flagged", "span<8", 1.0, float(not narrow.sufficient_span),
                          float(narrow.sufficient_span), 0.5, not narrow.sufficient_span))
    return rows


def photocount_rows(micro: MicroscopicParams) -> list[ReportRow]:
    """Exact photocount law against its Gaussian forms.

    The collapsed single Gaussian is checked where the eigenvalue centres
    ``-2 alpha0 beta m dt`` lie within a few photons of each other; at the
    coupling bound ``alpha0 dt max|m| = 1e-2 beta`` the centres spread over
    about ``2 beta`` and only the eigenvalue mixture applies, so the
    collapsed distance there is reported for information.
    """
    p = micro if micro.alpha > 0 else replace(micro, alpha=1.0)
    w = hm.SpectralWeights(np.array([-1.0, 0.0, 2.0]), np.array([0.3, 0.3, 0.4]))
    mmax = np.abs(w.eigenvalues).max()
    point = f"beta={p.beta:g};dt={p.dt_micro:g};beta2dt={p.beta**2 * p.dt_micro:g}"
    rows = []
    weak = replace(p, alpha0=1e-2 / (p.dt_micro * mmax))
    exact = hm.exact_Pk(w, weak)
    tv = hm.total_variation(exact, hm.gaussian_Pk(w, weak, exact.support))
    rows.append(ReportRow.bound("tv_exact_vs_collapsed", f"{point};alpha0dt*max|m|=1e-2", 0.0, tv, tv, 1e-2))
    rows.append(ReportRow.bound("exact_normalization", point, 1.0, exact.total, 1.0 - exact.total, 1e-8))
    edge = replace(p, alpha0=1e-2 * p.beta / (p.dt_micro * mmax))
    exact = hm.exact_Pk(w, edge)
    tv_mix = hm.total_variation(exact, hm.gaussian_Pk(w, edge, exact.support, collapse=False))
    tv_col = hm.total_variation(exact, hm.gaussian_Pk(w, edge, exact.support))
    edge_point = f"{point};alpha0dt*max|m|=1e-2*beta"
    rows.append(ReportRow.bound("tv_exact_vs_mixture", edge_point, 0.0, tv_mix, tv_mix, 1e-2))
    rows.append(ReportRow.info("tv_exact_vs_collapsed", edge_point, 0.0, tv_col, tv_col))
    ps = replace(p, alpha0=50.0 / p.beta / p.dt_micro)
    single = hm.exact_Pk(hm.SpectralWeights.single(1.0), ps)
    expected = -2.0 * ps.alpha0 * ps.beta * ps.dt_micro
    rel = abs(single.mean - expected) / abs(expected)
    rows.append(ReportRow.bound("mean_shift_single_eigenvalue", f"{point};m=1", expected, single.mean, rel, 0.05))
    return rows


def suite_photocount(micro: MicroscopicParams | None = None) -> list[ReportRow]:
    micro = micro or MicroscopicParams()
    if micro.beta**2 * micro.dt_micro < 100:
        micro = replace(micro, dt_micro=100.0 / micro.beta**2)
    return photocount_rows(micro)


def kraus_ladder(betas=(1e2, 3e2, 1e3), beta2dt=1e4, ratio=1e-2, alpha0_dt=0.3, seed=1):
    """Fidelity deficits of the Gaussian Kraus update against the exact conditioned state.

    Four-eigenvalue diagonal observable, random-phase equal-weight state,
    outcomes at each eigenvalue centre and at 0.
    """
    ms = np.diag(four_level_test_operator())
    rng = np.random.default_rng(seed)
    exp = hm.EigenExpansion.diagonal(ms, np.exp(1j * rng.uniform(0, 2 * np.pi, ms.size)))
    out = []
    for beta in betas:
        dt = beta2dt / beta**2
        p = MicroscopicParams(alpha=ratio * beta, beta=beta, alpha0=alpha0_dt / dt, dt_micro=dt)
        ks = [int(round(-2 * p.alpha0 * beta * m * dt)) for m in ms] + [0]
        deficits = []
        for k in ks:
            cond = hm.exact_conditioned_state(exp, p, k)
            phi = hm.kraus_update(exp.state(), np.diag(ms), k, p)
            deficits.append(1.0 - cond.fidelity(phi))
        out.append((beta, max(deficits)))
    return out


def suite_kraus(micro: MicroscopicParams | None = None) -> list[ReportRow]:
    ladder = kraus_ladder()
    rows = [ReportRow.bound("kraus_fidelity_deficit", f"beta={b:g};beta2dt=1e4;alpha/beta=1e-2", 1.0,
                            1.0 - d, d, 1e-4) for b, d in ladder]
    d = [x for _, x in ladder]
    mono = all(a > b for a, b in zip(d, d[1:]))
    rows.append(ReportRow("kraus_deficit_monotone", "beta=1e2,3e2,1e3", 1.0, float(mono),
                          float(not mono), 0.5, mono))
    return rows


def theta_errors(m=1.0, n=-1.0, dts=(1e-2, 5e-3, 2.5e-3, 1.25e-3), alpha=1.0, beta=3.0, alpha0=5.0):
    abs_err, rel_err = [], []
    for dt in dts:
        p = MicroscopicParams(alpha=alpha, beta=beta, alpha0=alpha0, dt_micro=dt)
        ex, ap = hm.theta_exact(m, n, p), hm.theta_approx(m, n, p)
        abs_err.append(abs(ex - ap))
        rel_err.append(abs(ex - ap) / abs(ex))
    return np.array(abs_err), np.array(rel_err)


def appendix_rows(target=400.0, base: MicroscopicParams | None = None) -> list[ReportRow]:
    base = base or MicroscopicParams(alpha=2.0, alpha0=5.0, dt_micro=0.01)
    rows = []
    f1 = [hm.appendix_form1(target * s**2, target * s**2, 0) for s in (1, 4)]
    f2 = [hm.appendix_form2(1.0, -1.0, 0, hm.params_for_amplitudes(target, base, scale=s)) for s in (1, 4)]
    for name, res in (("form1", f1), ("form2", f2)):
        for s, r in zip((1, 4), res):
            rows.append(ReportRow.bound(f"appendix_{name}", f"|amp|^2={target * s * s:g};k=0",
                                        abs(r.exact), abs(r.closed_form), r.relative_error,
                                        1e-2 if s == 1 else res[0].relative_error))
    abs_err, rel_err = theta_errors()
    slopes = hm.richardson_slope(abs_err)
    rows.append(ReportRow.bound("theta_richardson_slope", "m=1;n=-1;alpha=1;beta=3;alpha0=5",
                                2.0, slopes[-1], abs(slopes[-1] - 2.0), 0.2))
    rows.append(ReportRow.info("theta_relative_slope", "m=1;n=-1;alpha=1;beta=3;alpha0=5",
                               2.0, hm.richardson_slope(rel_err)[-1], 0.0))
    return rows


def suite_appendix(micro: MicroscopicParams | None = None) -> list[ReportRow]:
    return appendix_rows()


def suite_pquad(micro: MicroscopicParams | None = None) -> list[ReportRow]:
    micro = micro or MicroscopicParams()
    p = replace(micro, alpha0=1.0, dt_micro=0.05)
    w = hm.SpectralWeights(np.array([-1.0, 1.0, 2.0]), np.array([0.5, 0.2, 0.3]))
    rep = hm.p_quadrature_distribution(w, p)
    flipped = np.sqrt(2) * p.alpha0 * w.mean * p.dt_micro / p.sigma
    mix_mean = float(rep.weights @ rep.component_means)
    rows = [
        ReportRow.bound("mixture_mean_magnitude", f"sigma={p.sigma:g};dt={p.dt_micro:g}",
                        abs(flipped), abs(mix_mean), abs(abs(mix_mean) - abs(flipped)), 1e-12),
        ReportRow.info("mixture_mean_sign_vs_flipped", "flipped-sign convention",
                       flipped, mix_mean, mix_mean + flipped),
    ]
    single = hm.p_quadrature_distribution(hm.SpectralWeights.single(0.7), p)
    rows.append(ReportRow.bound("single_component_tv", "m=0.7", 0.0, single.tv_surrogate,
                                single.tv_surrogate, 1e-10))
    reports = [hm.p_quadrature_distribution(w, replace(p, dt_micro=dt)) for dt in (0.05, 0.025)]
    ratio = reports[0].tv_surrogate / reports[1].tv_surrogate
    ratio_flipped = reports[0].tv_flipped / reports[1].tv_flipped
    rows.append(ReportRow.bound("tv_decreases_on_halving", "dt=0.05->0.025", 1.0, ratio, 1.0 / ratio, 1.0))
    rows.append(ReportRow.info("tv_ratio_matched_mean", "dt=0.05->0.025", 4.0, ratio, ratio - 4.0))
    rows.append(ReportRow.info("tv_ratio_flipped_sign", "dt=0.05->0.025", 2.0, ratio_flipped, ratio_flipped - 2.0))
    # matched <M>: a single eigenvalue, so dW is exactly Normal(0, dt)
    fine = replace(p, dt_micro=0.01)
    one = hm.p_quadrature_distribution(hm.SpectralWeights.single(w.mean), fine)
    rng = np.random.default_rng(5)
    dW = one.wiener(rng.normal(one.surrogate_mean, np.sqrt(one.variance), 1_000_000))
    rows.append(ReportRow.bound("quadrature_dW_variance", "1e6 samples;dt=0.01", fine.dt_micro, dW.var(),
                                abs(dW.var() / fine.dt_micro - 1.0), 1e-2))
    naive_scale = np.sqrt(2 * p.sigma * p.dt_micro)
    rows.append(ReportRow.info("naive_wiener_scale_variance", f"sigma={p.sigma:g}", p.dt_micro,
                               naive_scale**2 * rep.variance, naive_scale**2 * rep.variance - p.dt_micro))
    return rows


def ensemble_check(n_traj: int = 2000, seed: int = 0, L: int = 3, N: int = 3, u_over_j: float = 5.0,
                   gamma: float = 1.0, dt: float = 1e-3, t_final: float = 1.0,
                   kind: str = "population") -> tuple[float, float]:
    """Trace distance between the trajectory average and the master equation at ``t_final``.

    Starts from the Bose-Hubbard ground state. Returns ``(distance, purity of the oracle)``.
    """
    basis = enumerate_basis(L, N)
    H = build_bose_hubbard(BoseHubbardParams(L, N, J=1.0, U=u_over_j), basis)
    M = build_measurement_operator(MeasurementSpec(kind), basis)
    psi0 = ground_state(H).state
    cfg = SimConfig(dt=dt, t_final=t_final, gamma=gamma, seed=seed)
    res = run_ensemble(psi0, H, M, cfg, n_traj)
    rho_ens = ensemble_average(res.final_states)
    n = cfg.n_steps(dt)
    rho_me = lindblad_evolve(np.outer(psi0, psi0.conj()), H, M, gamma, dt, n)
    return trace_distance(rho_ens, rho_me), float(np.real(np.trace(rho_me @ rho_me)))


def suite_ensemble(micro: MicroscopicParams | None = None, n_traj: int = 2000, seed: int = 0) -> list[ReportRow]:
    td, pur = ensemble_check(n_traj=n_traj, seed=seed)
    tol = 0.02 * np.sqrt(max(1.0, 2000.0 / n_traj))
    return [ReportRow.bound("ensemble_trace_distance", f"L=3;N=3;U/J=5;gamma=1;n={n_traj}", 0.0, td, td, tol),
            ReportRow.info("oracle_purity", "t=1", pur, pur, 0.0)]


SUITE_FUNCS = {
    "povm": suite_povm,
    "photocount": suite_photocount,
    "kraus": suite_kraus,
    "appendix": suite_appendix,
    "pquad": suite_pquad,
    "ensemble": suite_ensemble,
}


def run_suite(name: str, micro: MicroscopicParams | None = None, **kw) -> list[ReportRow]:
    if name not in SUITE_FUNCS:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITE_FUNCS[name](micro, **kw)
