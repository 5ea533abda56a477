"""
Adding Markovian loss
=====================

Dephasing along z and along x enter the trajectories as a constant
dissipator. Dephasing pulls the frequency down and eventually stops the
oscillation; the x channel mainly adds damping. The NIBA curve is shown
next to the ensemble mean.
"""

import numpy as np

from spinboson import SimulationParams, derived_scales
from spinboson.analysis import empirical_laws, fit_damped_cosine
from spinboson.bath import fourier_coefficients
from spinboson.model import Channel
from spinboson.niba import niba_curve
from spinboson.sse import run_ensemble

base = SimulationParams(delta=2.0, alpha=0.1, omega_c=100.0, t_max=20.0, n_traj=2000)
scales = derived_scales(base)
basis = fourier_coefficients(base)  # the kernel does not depend on the Markovian rates

for channel, rate in [(Channel.DEPHASING, 0.4), (Channel.DEPOLARIZATION, 0.2)]:
    field = "gamma_phi" if channel is Channel.DEPHASING else "gamma_x"
    p = base.replace(**{field: rate})
    sse = run_ensemble(p, basis)
    ref = niba_curve(channel, p, sse.times)

    print(f"\n{channel.value}, rate {rate}")
    for t in (0.0, 1.0, 2.0, 4.0, 6.0, 8.0):
        i = int(np.searchsorted(sse.times, t - 1e-12))
        print(f"  t={t:4.1f}  sse {sse.mean[i]:+.3f} +- {sse.stderr[i]:.3f}   niba {ref.mean[i]:+.3f}")

    fit = fit_damped_cosine(sse)
    w_law, g_law = empirical_laws(channel, scales.omega_0, scales.gamma_0, rate)
    print(f"  fit omega {fit.frequency:.3f} (law {w_law:.3f}), gamma {fit.decay:.3f} (law {g_law:.3f})")
