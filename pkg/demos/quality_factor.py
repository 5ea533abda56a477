"""
Oscillation frequency and quality factor
========================================

An Ohmic bath slows the tunnelling down to the renormalized scale and
damps it. Here the stochastic ensemble is fitted with a damped cosine and
the result is set against the pole of the NIBA equation, whose quality
factor is cot(pi alpha / (2 - 2 alpha)).

A few thousand trajectories already show the trend; the statistical
error of the fitted decay rate shrinks slowly, so expect scatter of
order 10% at this size.
"""

from spinboson import SimulationParams, derived_scales, exact_quality_factor
from spinboson.analysis import fit_damped_cosine
from spinboson.sse import run_ensemble

print("alpha  omega_fit  omega_0  omega/delta_r   Q_fit  Q_exact")
for alpha in (0.1, 0.2):
    p = SimulationParams(delta=2.0, alpha=alpha, omega_c=100.0, t_max=20.0, n_traj=4000)
    s = derived_scales(p)
    fit = fit_damped_cosine(run_ensemble(p))
    print(f"{alpha:5.2f}  {fit.frequency:9.4f}  {s.omega_0:7.4f}  {fit.frequency / s.delta_r:13.3f}"
          f"  {fit.frequency / fit.decay:6.2f}  {exact_quality_factor(alpha):7.2f}")
