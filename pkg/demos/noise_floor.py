"""Shot-noise floor of the homodyne record.

When the monitored expectation value is frozen the record is pure white
noise. With the current ``2 gamma <M> + sqrt(gamma) dW/dt`` its one-sided
spectral density is flat at ``2 gamma`` and independent of the step.

Run with ``python demos/noise_floor.py``.
"""

import numpy as np

from homodyne_bh.analysis import flat_floor_deviation, welch_psd
from homodyne_bh.sse import SimConfig, run_ensemble

M = np.diag([0.0, 1.0])
psi0 = np.array([1.0, 0.0], dtype=complex)
gamma, seg = 1.0, 1024
for dt in (1e-3, 5e-4):
    n = 100 * seg
    res = run_ensemble(psi0, np.zeros((2, 2)), M, SimConfig(dt=dt, t_final=n * dt, gamma=gamma, seed=3), 1)
    psd = welch_psd(res.signal[0], dt, seg)
    level = 2.0 * gamma
    dev = flat_floor_deviation(psd, level)
    print(f"dt = {dt:g}: median PSD {np.median(psd.values[1:]):.4f} (floor {level:.4f}), "
          f"worst band deviation {np.max(np.abs(dev)):.3f}")
