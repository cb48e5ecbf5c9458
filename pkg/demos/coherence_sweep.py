"""Ground-state coherence across the superfluid to Mott crossover.

Six bosons on six sites with open boundaries. The nearest-neighbour
coherence of the ground state is large while hopping dominates and
collapses once the on-site repulsion takes over.

Run with ``python demos/coherence_sweep.py``.
"""

import numpy as np

from homodyne_bh.groundstate import order_parameter_sweep
from homodyne_bh.operators import BoseHubbardParams

grid = np.geomspace(0.1, 100, 40)
result = order_parameter_sweep(BoseHubbardParams(6, 6, boundary="open"), grid)
norm = result.normalized()

print(f"{'U/J':>9} {'|<M>|/N':>10} {'normalized':>11}  ")
for u, v, r in zip(result.u_over_j, result.values, norm):
    bar = "#" * int(round(40 * r))
    print(f"{u:9.3f} {v:10.5f} {r:11.4f}  {bar}")

half = result.u_over_j[np.argmax(norm < 0.5)]
print(f"\ncoherence falls below half its weak-coupling value near U/J = {half:.2f}")
print(f"remaining fraction at U/J = 100: {norm[-1]:.4f}")
