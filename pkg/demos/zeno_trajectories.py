"""Measurement back-action in the two interaction regimes.

Three bosons on three sites, coherence monitoring. Deep in the Mott
regime a strong measurement pins the state to an eigenvector of the
monitored observable and the record jumps between eigenvalues. In the
superfluid regime a weak measurement barely disturbs the dynamics and
the expectation value stays close to its initial value.

Run with ``python demos/zeno_trajectories.py``.
"""

import numpy as np

from homodyne_bh.analysis import detect_jumps, relative_std
from homodyne_bh.fock import enumerate_basis
from homodyne_bh.groundstate import ground_state
from homodyne_bh.operators import (
    BoseHubbardParams,
    MeasurementSpec,
    build_bose_hubbard,
    build_measurement_operator,
)
from homodyne_bh.sse import SimConfig, integrate_trajectory

T = 100.0
basis = enumerate_basis(3, 3)
M = build_measurement_operator(MeasurementSpec(kind="coherence"), basis)
eig = np.linalg.eigvalsh(M.to_dense())
print(f"monitored observable has {np.unique(eig.round(8)).size} distinct eigenvalues "
      f"in [{eig.min():.3f}, {eig.max():.3f}]")


def describe(label, ratio, gamma):
    H = build_bose_hubbard(BoseHubbardParams.from_ratio(3, 3, ratio, scale="max"), basis)
    psi0 = ground_state(H).state
    cfg = SimConfig(dt=1e-3, t_final=T, gamma=gamma, seed=7, burn_in=10.0)
    rec = integrate_trajectory(psi0, H, M, cfg).after(cfg.burn_in)
    jumps = detect_jumps(rec.expectation, eig, dwell_min=10, times=rec.times)
    print(f"\n{label}: U/J = {ratio}, gamma = {gamma}")
    print(f"  <M> starts at {rec.expectation[0]:+.4f}, ends at {rec.expectation[-1]:+.4f}")
    print(f"  relative std of <M> after burn-in: {relative_std(rec.expectation):.4f}")
    print(f"  detected jumps: {jumps.count} ({jumps.rate(rec.times[-1] - rec.times[0]):.2f} per unit time)")


describe("Mott, strong measurement", 100.0, 10.0)
describe("superfluid, weak measurement", 0.1, 0.01)
