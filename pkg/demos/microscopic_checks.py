"""The continuous-measurement limit seen from the photon-counting side.

A system mode is mixed with a strong local oscillator on a beam
splitter and the difference of photon counts is recorded. This demo
compares the exact count statistics with their Gaussian surrogate,
checks that one Kraus step keeps eigenstates fixed, and prints the
verification reports that the CLI ``verify`` command writes to disk.

Run with ``python demos/microscopic_checks.py``.
"""

import numpy as np

from homodyne_bh import homodyne_micro as hm
from homodyne_bh.operators import MicroscopicParams
from homodyne_bh.verify import run_suite, suite_passed

weights = hm.SpectralWeights(np.array([-1.0, 1.0]), np.array([0.3, 0.7]))
for beta in (10.0, 30.0, 100.0):
    p = MicroscopicParams(alpha=0.0, beta=beta, alpha0=1.0, dt_micro=1e-2)
    exact = hm.exact_Pk(weights, p)
    approx = hm.gaussian_Pk(weights, p)
    print(f"beta = {beta:6.1f}: mean {exact.mean:+9.4f}, variance {exact.variance:10.3f}, "
          f"TV to Gaussian {hm.total_variation(exact, approx):.2e}")

p = MicroscopicParams(alpha=0.0, beta=30.0, alpha0=1.0, dt_micro=1e-2)
M0 = np.diag([1.0, -1.0])
psi = np.array([1.0, 0.0], dtype=complex)
out = hm.kraus_update(psi, M0, 3.0, p)
print(f"\nKraus step on an eigenstate: fidelity {abs(np.vdot(psi, out)) ** 2:.12f}")

for name in ("povm", "photocount", "appendix"):
    rows = run_suite(name)
    print(f"\nsuite {name}: {'passed' if suite_passed(rows) else 'FAILED'}")
    for r in rows:
        status = {True: "ok  ", False: "FAIL", None: "info"}[r.passed]
        print(f"  {status} {r.check:<32} {r.parameter_point:<28} error {r.error:.3g}")
