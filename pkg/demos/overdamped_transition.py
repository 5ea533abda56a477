"""
Where the oscillation stops
===========================

The two NIBA roots are followed from the loss-free pair as the dephasing
rate grows. They meet on the negative real axis at a rate close to the
oscillation frequency itself; beyond it the magnetization only relaxes.
No trajectories are needed, so this runs in a second.
"""

import numpy as np

from spinboson import SimulationParams, derived_scales
from spinboson.model import Channel
from spinboson.niba import locate_overdamped_transition, niba_curve, overdamped_threshold, solve

p = SimulationParams(delta=2.0, alpha=0.1, omega_c=100.0)
s = derived_scales(p)

print(" gamma_phi   lambda_1                 class")
for g in np.linspace(0.0, 2.0, 9) * s.omega_0:
    sol = solve(Channel.DEPHASING, g, p.alpha, s.delta_eff)
    print(f"  {g:7.3f}   {sol.lambda1.real:+.4f} {sol.lambda1.imag:+.4f}i   {sol.damping_class.value}")

g_star = locate_overdamped_transition(p.alpha, s.delta_eff)
print(f"\ncontinuation: {g_star:.5f}  closed form: {overdamped_threshold(p.alpha, s.delta_eff):.5f}"
      f"  omega_0: {s.omega_0:.5f}")

# past the threshold the curve stays positive
times = np.linspace(0, 10, 11)
curve = niba_curve(Channel.DEPHASING, p.replace(gamma_phi=1.5 * g_star), times)
print("sigma_z at 1.5 x threshold:", np.round(curve.mean, 3))
