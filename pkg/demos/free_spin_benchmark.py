"""
Free spin against the Bloch equations
=====================================

Without the Ohmic bath the stochastic field vanishes, one trajectory is
the exact density matrix, and the dephasing and sigma_x channels have
closed forms. This is the quickest end-to-end check of the integrator.
"""

import numpy as np

from spinboson import SimulationParams
from spinboson.sse import run_ensemble

for gamma_phi, gamma_x in [(0.0, 0.0), (0.4, 0.0), (0.0, 0.3)]:
    p = SimulationParams(delta=2.0, alpha=0.0, omega_c=100.0, t_max=10.0,
                         gamma_phi=gamma_phi, gamma_x=gamma_x, n_traj=1)
    s = run_ensemble(p)
    t = s.times
    if gamma_x:
        exact = np.exp(-2 * gamma_x * t) * np.cos(2 * t)
    else:
        nu = np.sqrt(4 - gamma_phi**2)
        exact = np.exp(-gamma_phi * t) * (np.cos(nu * t) + gamma_phi / nu * np.sin(nu * t))
    print(f"gamma_phi={gamma_phi:.1f} gamma_x={gamma_x:.1f}  "
          f"max deviation {np.max(np.abs(s.mean - exact)):.1e}")
