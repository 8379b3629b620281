"""Interference control of boundary-induced transitions.

A step in delta opens and closes a window of length t2 - t1. The
first-order amplitude vanishes whenever the accumulated phase in the window
is a multiple of 2 pi, and is largest half way between. A periodic boundary
drive with a small non-Hermitian modulation resonates when the gap matches
the drive plus modulation frequency.

Run: python3 demos/02_transition_control.py
"""

import math

import numpy as np

from qhsb.transitions import (
    Protocol,
    delta_pulse_amplitude,
    delta_pulse_jump,
    gap_formula,
    sideband_amplitude,
    suppression_times,
)

base = Protocol("delta_pulse", T=20.0, kappa0=0.05, delta_a=0.1, delta_b=0.3, t1=2.0, t2=3.0)
scale = base.kappa0 * abs(delta_pulse_jump(0, base))
print("t2        |I| / (kappa0 |dB|)")
for t2 in np.linspace(2.5, 8.0, 12):
    print(f"{t2:6.3f}    {abs(delta_pulse_amplitude(0, base.with_(t2=t2))) / scale:.4f}")
for k in (1, 2, 3):
    t2 = suppression_times(0, base.t1, k, base.delta_b, base)
    print(f"suppression k={k}: t2={t2:.6f}  |I|={abs(delta_pulse_amplitude(0, base.with_(t2=t2))):.1e}")

print("\nsideband drive, n = 0")
nu_res = gap_formula(0, 1.0, 0.5, 0.2) - 1.0
for label, nu in (("on resonance", nu_res), ("detuned", nu_res + 0.45)):
    row = []
    for cycles in (10, 20, 40):
        pr = Protocol("periodic", kappa0=0.05, omega_drive=1.0, delta0=0.2, epsilon=0.05, nu=nu, n_cycles=cycles)
        row.append(abs(sideband_amplitude(0, pr)[0]))
    print(f"{label:>13}: |I| for 10/20/40 cycles = " + ", ".join(f"{x:.2e}" for x in row))
