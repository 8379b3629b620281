"""Dyson equation and real instantaneous spectrum for the reference trajectory.

Run: python3 demos/01_dyson_and_spectrum.py
"""

import numpy as np

from qhsb.dyson import assemble_Htilde, dyson_residual
from qhsb.operators import HilbertSpec
from qhsb.spectra import closed_form_levels, guarded_eigvals
from qhsb.trajectories import const, fig1_parameters

spec = HilbertSpec()
params = fig1_parameters()

print("t      dyson residual   hermiticity defect")
for t in (0.5, 2.0, 4.5, 8.0):
    eq, herm = dyson_residual(params, t, spec)
    print(f"{t:4.1f}   {eq:.2e}         {herm:.2e}")

t = 2.0
w = guarded_eigvals(assemble_Htilde(params, t, spec), spec)
print(f"\nlargest |Im E| of the energy operator at t={t}: {np.max(np.abs(w.imag)):.1e}")

frozen = params.with_(kappa=const(params.kappa(t)))
ref = closed_form_levels(frozen.effective(t), spec.n_valid - 2)
wf = np.sort(guarded_eigvals(assemble_Htilde(frozen, t, spec), spec).real)
print("\nlowest levels at frozen squeezing (closed form vs numeric):")
for lv, e in zip(ref[:9], wf[:9]):
    label = "vac" if lv.n < 0 else f"{lv.n}{lv.branch}"
    print(f"  {label:>4}  {lv.energy: .12f}  {e: .12f}")
