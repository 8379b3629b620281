"""Exact evolution through a delta pulse versus the first-order amplitude.

With gamma = 0 the Hermitian partner is h = S h_D S^-1 + i S' S^-1 with
S = exp(kappa K), where h_D is the partner without squeezing. The squeezing
is therefore a unitary change of frame: populations two sectors up appear
while kappa is on and disappear exactly when it is switched off. The
first-order integral |I|^2 is printed for comparison.

Run: python3 demos/03_frame_change.py
"""

import math

import numpy as np

from qhsb.evolution import initial_dressed_state, propagate
from qhsb.operators import HilbertSpec
from qhsb.transitions import Protocol, delta_pulse_amplitude, gap_formula

spec = HilbertSpec()
for kappa0 in (0.1, 0.05, 0.025):
    t2 = 2.0 + math.pi / gap_formula(0, 1.0, 0.5, 0.3)
    pr = Protocol("delta_pulse", T=6.0, kappa0=kappa0, delta_a=0.1, delta_b=0.3, t1=2.0, t2=t2)
    p = pr.parameters()
    grid = np.array([0.0, 1.0, 2.5, 4.0, pr.T])
    r = propagate(p, initial_dressed_state(p, spec, 0, 1), grid, spec)
    pops = ", ".join(f"{x:.2e}" for x in r.population(2, 1))
    print(f"kappa0={kappa0}: P(2,+) at t = {', '.join(f'{x:g}' for x in grid)}: {pops}")
    print(f"             first-order |I|^2 = {abs(delta_pulse_amplitude(0, pr)) ** 2:.2e}")
