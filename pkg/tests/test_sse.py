import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from homodyne_bh.fock import enumerate_basis
from homodyne_bh.groundstate import ground_state
from homodyne_bh.operators import (
    BoseHubbardParams,
    ConfigurationError,
    MeasurementSpec,
    MicroscopicParams,
    build_bose_hubbard,
    build_measurement_operator,
)
from homodyne_bh.sse import (
    IntegratorError,
    NumericalBlowupError,
    SimConfig,
    TrajectoryRecord,
    default_dt,
    ensemble_average,
    integrate_trajectory,
    lindblad_evolve,
    lindblad_step,
    prepare_hamiltonian,
    purity,
    run_ensemble,
    sse_step,
    trace_distance,
    trajectory_rng,
    wiener_increments,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


def bh_model(L=3, N=3, U=1.0, kind="coherence"):
    basis = enumerate_basis(L, N)
    H = build_bose_hubbard(BoseHubbardParams(L, N, 1.0, U), basis)
    M = build_measurement_operator(MeasurementSpec(kind=kind), basis)
    return basis, H, M


# Wiener increments ---------------------------------------------------------


def test_wiener_statistics():
    dt, n = 1e-3, 10**6
    dW = wiener_increments(12345, n, dt)
    assert abs(dW.mean()) < 4 * np.sqrt(dt / n)
    assert abs(dW.var() / dt - 1) < 0.01


def test_wiener_determinism_and_streams():
    a = wiener_increments(3, 100, 0.1)
    assert np.array_equal(a, wiener_increments(3, 100, 0.1))
    assert not np.array_equal(a, wiener_increments(3, 100, 0.1, index=1))
    one = wiener_increments(9, 1, 1.0)
    assert one.shape == (1,)
    assert one[0] == trajectory_rng(9, 0).standard_normal()


def test_wiener_rejects_bad_dt():
    with pytest.raises(ValueError):
        wiener_increments(0, 10, 0.0)


def test_default_dt():
    assert default_dt(0.0, 0.0) == 1e-3
    assert default_dt(1000.0, 1.0) == 1e-4
    assert default_dt(1.0, 500.0) == 2e-4


# single steps -----------------------------------------------------------------


def test_step_without_measurement_is_first_order_unitary():
    _, H, M = bh_model()
    psi = np.random.default_rng(0).normal(size=H.dim) + 0j
    psi /= np.linalg.norm(psi)
    for dt in (1e-3, 5e-4):
        raw = sse_step(psi, H, M, 0.0, dt, 0.0, normalize=False)
        exact = sla.expm(-1j * H.to_dense() * dt) @ psi
        assert np.linalg.norm(raw - exact) < 0.6 * (dt * np.linalg.norm(H.to_dense(), 2)) ** 2
        drift = abs(np.linalg.norm(raw) - 1)
        assert drift < (dt * np.linalg.norm(H.to_dense(), 2)) ** 2


def test_eigenstate_is_fixed_point():
    M = np.diag([2.0, -1.0, 0.5]).astype(complex)
    psi = np.array([0, 0, 1], dtype=complex)
    cfg = SimConfig(dt=1e-2, t_final=1.0, gamma=0.7)
    rec = integrate_trajectory(psi, np.zeros((3, 3)), M, cfg)
    assert np.allclose(rec.final_state, psi, atol=1e-14)
    assert np.allclose(rec.expectation, 0.5)
    incr = rec.signal * rec.dt
    assert np.allclose(incr, 2 * 0.7 * 0.5 * rec.dt + np.sqrt(0.7) * rec.dW, atol=1e-14)


def test_two_level_born_rule():
    M = np.diag([1.0, -1.0]).astype(complex)
    cfg = SimConfig(dt=1e-2, t_final=20.0, gamma=1.0, seed=2024)
    res = run_ensemble(PLUS, np.zeros((2, 2)), M, cfg, 2000)
    up = np.abs(res.final_states[:, 0]) ** 2
    assert np.all(np.maximum(up, 1 - up) > 0.999)
    freq = np.mean(up > 0.5)
    assert abs(freq - 0.5) <= 3 * np.sqrt(0.25 / 2000)


# trajectories -----------------------------------------------------------------


@pytest.mark.parametrize("L,N,U", [(3, 3, 1.0), (6, 6, 0.1)])
def test_zero_gamma_matches_schrodinger(L, N, U):
    basis, H, M = bh_model(L, N, U)
    psi0 = basis.vector([N] + [0] * (L - 1))
    cfg = SimConfig(dt=1e-3, t_final=1.0, gamma=0.0, scheme="heun_predictor_corrector")
    rec = integrate_trajectory(psi0, H, M, cfg)
    Hd, Md = H.to_dense(), M.to_dense()
    idx = np.arange(0, rec.times.size, 25)
    states = [sla.expm(-1j * Hd * t) @ psi0 for t in rec.times[idx]]
    ref = np.array([np.vdot(p, Md @ p).real for p in states])
    assert np.max(np.abs(rec.expectation[idx] - ref)) < 1e-4


def test_euler_zero_gamma_is_first_order():
    basis, H, M = bh_model()
    psi0 = basis.vector((3, 0, 0))
    U = sla.expm(-1j * H.to_dense())
    errs = []
    for dt in (2e-3, 1e-3):
        rec = integrate_trajectory(psi0, H, M, SimConfig(dt=dt, t_final=1.0, gamma=0.0))
        errs.append(np.linalg.norm(rec.final_state - U @ psi0))
    assert 1.8 < errs[0] / errs[1] < 2.2


def test_signal_bookkeeping():
    basis, H, M = bh_model()
    cfg = SimConfig(dt=1e-3, t_final=0.5, gamma=2.0, seed=5)
    rec = integrate_trajectory(ground_mott(basis), H, M, cfg)
    lhs = rec.signal * rec.dt - 2 * cfg.gamma * rec.expectation * rec.dt
    assert np.allclose(lhs, np.sqrt(cfg.gamma) * rec.dW, rtol=0, atol=1e-12)


def ground_mott(basis):
    return basis.vector([basis.N // basis.L] * basis.L)


def test_norm_preserved_each_sample():
    basis, H, M = bh_model()
    cfg = SimConfig(dt=1e-3, t_final=0.5, gamma=3.0, seed=1, snapshot_stride=1)
    rec = integrate_trajectory(ground_mott(basis), H, M, cfg)
    assert np.max(np.abs(np.linalg.norm(rec.snapshots, axis=1) - 1)) <= 1e-10
    assert rec.snapshots.shape[0] == rec.times.size


def test_snapshot_stride():
    basis, H, M = bh_model()
    cfg = SimConfig(dt=1e-3, t_final=0.1, gamma=1.0, snapshot_stride=10)
    rec = integrate_trajectory(ground_mott(basis), H, M, cfg)
    assert np.allclose(rec.snapshot_times, np.arange(10) * 1e-2)


def test_gamma_zero_signal_vanishes():
    basis, H, M = bh_model()
    rec = integrate_trajectory(ground_mott(basis), H, M, SimConfig(dt=1e-3, t_final=0.2, gamma=0.0))
    assert np.all(rec.signal == 0.0)


def test_ensemble_matches_single_trajectories():
    basis, H, M = bh_model()
    cfg = SimConfig(dt=1e-3, t_final=0.2, gamma=1.5, seed=77)
    ens = run_ensemble(ground_mott(basis), H, M, cfg, [4, 1, 9])
    for row, k in enumerate([4, 1, 9]):
        rec = integrate_trajectory(ground_mott(basis), H, M, cfg, index=k)
        assert np.allclose(ens.expectation[row], rec.expectation, atol=1e-12)
        assert np.array_equal(ens.dW[row], rec.dW)


def test_qnd_martingale():
    M = np.diag([-1.0, 0.0, 2.0]).astype(complex)
    H = np.diag([0.3, -0.2, 1.0]).astype(complex)
    psi0 = np.array([0.6, 0.48, 0.64], dtype=complex)
    psi0 /= np.linalg.norm(psi0)
    exact = np.vdot(psi0, M @ psi0).real
    cfg = SimConfig(dt=1e-3, t_final=3.0, gamma=1.0, seed=11)
    ens = run_ensemble(psi0, H, M, cfg, 2000)
    for k in np.linspace(0, ens.times.size - 1, 6).astype(int):
        col = ens.expectation[:, k]
        se = max(col.std(ddof=1) / np.sqrt(col.size), 1e-15)
        assert abs(col.mean() - exact) <= 3 * se


def test_zeno_localization():
    M = np.diag([-1.0, 0.0, 1.0, 2.0]).astype(complex)
    H = np.diag([1.0, 2.0, 3.0, 4.0]).astype(complex)
    psi0 = np.ones(4, dtype=complex) / 2
    cfg = SimConfig(dt=5e-3, t_final=50.0, gamma=1.0, seed=3)
    ens = run_ensemble(psi0, H, M, cfg, 200)
    max_weight = np.max(np.abs(ens.final_states) ** 2, axis=1)
    assert max_weight.mean() >= 0.99


def test_strong_order_projector_model():
    M = np.diag([1.0, 0.0]).astype(complex)
    T, dts = 1.0, [1 / 100, 1 / 200]
    ref = dts[-1] / 16
    rng = np.random.default_rng(8)
    n_paths = 400
    fine = np.sqrt(ref) * rng.standard_normal((n_paths, int(round(T / ref))))

    def final(dt):
        f = int(round(dt / ref))
        dW = fine.reshape(n_paths, -1, f).sum(axis=2)
        return run_ensemble(PLUS, SX, M, SimConfig(dt=dt, t_final=T, gamma=1.0), n_paths, dW=dW).final_states

    exact = final(ref)
    e1, e2 = (np.mean(np.linalg.norm(final(dt) - exact, axis=1)) for dt in dts)
    assert abs(e1 / e2 / np.sqrt(2) - 1) < 0.25


def test_corrections_vanish_in_limit():
    basis, H, M = bh_model()
    micro = MicroscopicParams(alpha=1e-15, A0=1.0, omega_L=1e-15, kappa=1.0)
    on = SimConfig(dt=1e-3, t_final=0.5, gamma=1.0, seed=4, corrections=True)
    off = SimConfig(dt=1e-3, t_final=0.5, gamma=1.0, seed=4)
    a = integrate_trajectory(ground_mott(basis), prepare_hamiltonian(H, M, on, micro), M, on)
    b = integrate_trajectory(ground_mott(basis), prepare_hamiltonian(H, M, off, micro), M, off)
    assert np.max(np.abs(a.expectation - b.expectation)) < 1e-6


def test_corrections_need_micro():
    _, H, M = bh_model()
    with pytest.raises(ConfigurationError):
        prepare_hamiltonian(H, M, SimConfig(corrections=True))


def test_blowup_reports_step():
    H = 1e3 * np.array([[1, 1], [1, -1]], dtype=complex)
    cfg = SimConfig(dt=1.0, t_final=500.0, gamma=0.0, normalize_every_step=False)
    with pytest.raises(NumericalBlowupError) as info, np.errstate(all="ignore"):
        integrate_trajectory(PLUS, H, np.eye(2), cfg)
    assert info.value.step > 0
    assert info.value.time == info.value.step * 1.0


@pytest.mark.parametrize(
    "kw", [dict(dt=-1.0), dict(gamma=-0.1), dict(scheme="rk4"), dict(dt=1.0, t_final=0.5), dict(seed=-1)]
)
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        SimConfig(**kw)


def test_unnormalized_initial_state_rejected():
    with pytest.raises(ConfigurationError):
        integrate_trajectory(np.array([1.0, 1.0]), SX, SX, SimConfig(dt=0.1, t_final=1.0))


def test_record_csv_round_trip(tmp_path):
    basis, H, M = bh_model()
    rec = integrate_trajectory(ground_mott(basis), H, M, SimConfig(dt=1e-3, t_final=0.05, gamma=1.0))
    rec.write_csv(tmp_path / "t.csv")
    back = TrajectoryRecord.read_csv(tmp_path / "t.csv")
    for name in ("times", "dW", "signal", "expectation"):
        assert np.array_equal(getattr(back, name), getattr(rec, name))
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t,dW,signal,expectation"


def test_record_burn_in():
    rec = TrajectoryRecord(np.arange(5.0), np.zeros(5), np.zeros(5), np.arange(5.0))
    assert np.array_equal(rec.after(2.0).expectation, [2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        TrajectoryRecord(np.arange(5.0), np.zeros(4), np.zeros(5), np.zeros(5))


# master equation ----------------------------------------------------------------


def test_lindblad_identity_measurement_is_unitary():
    _, H, _ = bh_model()
    Hd = H.to_dense()
    psi = np.eye(H.dim)[0].astype(complex)
    rho0 = np.outer(psi, psi.conj())
    rho = lindblad_evolve(rho0, Hd, 3.0 * np.eye(H.dim), 2.0, 1e-3, 500)
    U = sla.expm(-1j * Hd * 0.5)
    assert np.allclose(rho, U @ rho0 @ U.conj().T, atol=1e-10)
    rho_free = lindblad_evolve(rho0, Hd, np.diag(np.arange(H.dim)), 0.0, 1e-3, 500)
    assert np.allclose(rho_free, rho, atol=1e-10)


def test_lindblad_dephasing_closed_form():
    m = np.array([-1.0, 0.5, 2.0])
    gamma, t = 0.8, 1.5
    rho0 = np.full((3, 3), 1 / 3, dtype=complex)
    rho = lindblad_evolve(rho0, np.zeros((3, 3)), np.diag(m), gamma, 1e-3, 1500)
    expected = rho0 * np.exp(-0.5 * gamma * (m[:, None] - m[None, :]) ** 2 * t)
    assert np.allclose(rho, expected, atol=1e-10)


def test_lindblad_trace_guard():
    rho = np.diag([1.0, 0.0]).astype(complex)
    with pytest.raises(IntegratorError), np.errstate(all="ignore"):
        lindblad_step(rho, 1e300 * SX, SX, 1e300, 1e10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_lindblad_preserves_density_matrix(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    H, M = A + A.conj().T, np.diag(rng.normal(size=4))
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    rho = np.outer(v, v.conj()) / np.vdot(v, v).real
    out = lindblad_evolve(rho, H, M, 1.0, 1e-3, 50)
    assert abs(np.trace(out) - 1) < 1e-8
    assert np.max(np.abs(out - out.conj().T)) < 1e-10
    assert np.linalg.eigvalsh(out).min() > -1e-8


def test_ensemble_average_basics():
    psi = np.array([[0.6, 0.8j]])
    rho = ensemble_average(psi)
    assert np.isclose(purity(rho), 1.0)
    rho2 = ensemble_average(np.array([[1, 0], [0, 1], [1, 0], [0, 1]], dtype=complex))
    assert np.allclose(rho2, np.eye(2) / 2)
    assert np.isclose(trace_distance(rho2, np.diag([1.0, 0.0])), 0.5)
    with pytest.raises(ValueError):
        ensemble_average(np.ones((2, 3, 2)), times=[np.arange(3), np.arange(1, 4)])


def test_ensemble_tracks_master_equation():
    basis, H, M = bh_model(U=5.0, kind="population")
    psi0 = ground_state(H).state
    cfg = SimConfig(dt=1e-3, t_final=0.5, gamma=1.0, seed=21)
    ens = run_ensemble(psi0, H, M, cfg, 1000)
    rho = ensemble_average(ens.final_states)
    oracle = lindblad_evolve(np.outer(psi0, psi0.conj()), H, M, 1.0, 1e-3, 500)
    assert trace_distance(rho, oracle) < 0.03
