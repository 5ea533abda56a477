"""Stochastic Schroedinger equation for the vectorized spin density matrix.

Each noise realization drives a linear four-level ODE ``dpsi/dt = -i B(t) psi``
in the basis (up-up, up-down, down-up, down-down); the ensemble mean of
``2 Re psi_0 - 1`` is the magnetization.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from . import _kernels
from .bath import KernelBasis, fourier_coefficients
from .model import SimulationParams, validate
from .noise import NoiseRealization, field_on_grid, sample_amplitudes

__all__ = [
    "MagnetizationSeries",
    "TrajectoryError",
    "generator",
    "output_stride",
    "propagate_trajectory",
    "run_ensemble",
    "thread_count",
]

MAX_OUTPUT_POINTS = 2000
INVARIANT_TOL = 1e-6


class TrajectoryError(RuntimeError):
    """A trajectory broke trace or hermiticity preservation."""

    def __init__(self, traj_index: int, time: float, detail: str):
        super().__init__(f"trajectory {traj_index} failed at t={time:.6g}: {detail}")
        self.traj_index = traj_index
        self.time = time


@dataclass(frozen=True)
class MagnetizationSeries:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_traj: int
    imag_residue: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.times)


def generator(t: float, h: float, p: SimulationParams) -> np.ndarray:
    """Matrix ``B(t)`` such that ``dpsi/dt = -i B(t) psi``.

    Coherent part with the Ohmic phases ``exp(+-i pi alpha)`` and the
    longitudinal field ``h`` on the coherence rows, plus the Lindblad
    dissipator for ``sigma_x`` (rate ``gamma_x``) and ``sigma_z``
    (rate ``gamma_phi``) dephasing. ``t`` enters only through ``h``.
    """
    half = 0.5 * p.delta
    e = np.exp(1j * np.pi * p.alpha)
    ec = np.conj(e)
    a = np.array(
        [
            [0.0, -half, half, 0.0],
            [-half * e, h, 0.0, half * ec],
            [half * ec, 0.0, -h, -half * e],
            [0.0, half, -half, 0.0],
        ],
        dtype=complex,
    )
    gx, gp = p.gamma_x, p.gamma_phi
    dissipator = -1j * np.array(
        [
            [gx, 0.0, 0.0, -gx],
            [0.0, gx + 2.0 * gp, -gx, 0.0],
            [0.0, -gx, gx + 2.0 * gp, 0.0],
            [-gx, 0.0, 0.0, gx],
        ],
        dtype=complex,
    )
    return a + dissipator


def output_stride(n_steps: int) -> int:
    return max(1, math.ceil(n_steps / MAX_OUTPUT_POINTS))


def _output_times(p: SimulationParams) -> np.ndarray:
    stride = output_stride(p.n_steps)
    idx = np.arange(0, p.n_steps + 1, stride)
    return idx * p.step


def thread_count(n_threads: int | None = None) -> int:
    """Worker threads for trajectory integration, capped by ``SPINBOSON_THREADS``."""
    cap = numba.config.NUMBA_NUM_THREADS
    env = os.environ.get("SPINBOSON_THREADS")
    if env:
        cap = min(cap, max(1, int(env)))
    if n_threads is None:
        return cap
    return max(1, min(int(n_threads), cap))


def _check_step(p: SimulationParams) -> None:
    bound = min(0.1 / p.omega_c, 0.02 / p.delta)
    if p.step > bound * (1 + 1e-12):
        warnings.warn(
            f"step {p.step:.3g} exceeds min(0.1/omega_c, 0.02/delta)={bound:.3g}; "
            "the stochastic field may be under-resolved",
            stacklevel=3,
        )


def _integrate(p, basis, amplitudes, traj_indices, n_threads):
    n_steps = p.n_steps
    stride = output_stride(n_steps)
    n_out = n_steps // stride + 1
    n = len(traj_indices)
    if np.any(basis.weights):
        h = field_on_grid(basis, amplitudes, n_steps)
    else:
        h = np.zeros((n, 2 * n_steps + 1))
    m0 = np.ascontiguousarray(-1j * generator(0.0, 0.0, p))
    sz = np.empty((n, n_out))
    im0 = np.empty((n, n_out))
    status = np.empty(n, dtype=np.int64)
    where = np.empty(n, dtype=np.int64)
    value = np.empty(n)
    previous = numba.get_num_threads()
    numba.set_num_threads(thread_count(n_threads))
    try:
        _kernels.integrate_batch(m0, h, p.step, n_steps, stride, INVARIANT_TOL,
                                 sz, im0, status, where, value)
    finally:
        numba.set_num_threads(previous)
    bad = np.flatnonzero(status != _kernels.OK)
    if bad.size:
        i = int(bad[0])
        kind = {
            _kernels.TRACE_BREACH: "trace",
            _kernels.HERMITICITY_BREACH: "hermiticity",
            _kernels.NOT_FINITE: "finiteness",
        }[int(status[i])]
        raise TrajectoryError(
            int(traj_indices[i]), where[i] * p.step,
            f"{kind} violated by {value[i]:.3g}; reduce dt (now {p.step:.3g})",
        )
    return sz, im0


def propagate_trajectory(
    p: SimulationParams, basis: KernelBasis, noise: NoiseRealization
) -> MagnetizationSeries:
    """Single-realization ``sigma_z(t)`` (RK4, field sampled at every stage time)."""
    _check_step(p)
    sz, im0 = _integrate(p, basis, noise.amplitudes[None, :], [noise.traj_index], 1)
    return MagnetizationSeries(
        times=_output_times(p), mean=sz[0], stderr=np.zeros_like(sz[0]),
        n_traj=1, imag_residue=im0[0],
    )


def run_ensemble(
    p: SimulationParams,
    basis: KernelBasis | None = None,
    n_threads: int | None = None,
    batch_size: int = 64,
) -> MagnetizationSeries:
    """Mean and standard error of ``sigma_z`` over ``p.n_traj`` realizations.

    Realization ``i`` uses the noise stream ``(p.seed, i)``. Sums are
    accumulated strictly in trajectory order and ``batch_size`` is
    independent of the thread count, so the result is bit-identical for
    any degree of parallelism.
    """
    validate(p)
    _check_step(p)
    if basis is None:
        basis = fourier_coefficients(p)
    if basis.t_max != p.t_max or basis.m_max != p.m_max:
        raise ValueError("kernel basis was built for a different (t_max, m_max)")
    times = _output_times(p)
    # shifted sums (shift = first trajectory) keep the variance free of cancellation
    shift = None
    total = np.zeros(len(times))
    total_sq = np.zeros(len(times))
    total_im = np.zeros(len(times))
    for start in range(0, p.n_traj, batch_size):
        idx = np.arange(start, min(start + batch_size, p.n_traj))
        amps = np.stack([sample_amplitudes(p.seed, int(i), p.m_max).amplitudes for i in idx])
        sz, im0 = _integrate(p, basis, amps, idx, n_threads)
        if shift is None:
            shift = sz[0].copy()
        for row, row_im in zip(sz, im0):
            dev = row - shift
            total += dev
            total_sq += dev * dev
            total_im += row_im
    n = p.n_traj
    offset = total / n
    mean = shift + offset
    if n > 1:
        var = np.maximum(total_sq - n * offset * offset, 0.0) / (n - 1)
        stderr = np.sqrt(var / n)
    else:
        stderr = np.zeros_like(mean)
    return MagnetizationSeries(times=times, mean=mean, stderr=stderr, n_traj=n,
                               imag_residue=total_im / n)
