"""Gaussian amplitudes and the stochastic longitudinal field they generate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft

from .bath import KernelBasis

__all__ = [
    "RNG_NAME",
    "NoiseRealization",
    "field_at",
    "field_on_grid",
    "field_scales",
    "sample_amplitudes",
]

#: Stream derivation recorded in run manifests.
RNG_NAME = "numpy PCG64 <- SeedSequence(entropy=seed, spawn_key=(traj_index,))"


@dataclass(frozen=True)
class NoiseRealization:
    traj_index: int
    amplitudes: np.ndarray


def _generator(seed: int, traj_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(traj_index),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_amplitudes(seed: int, traj_index: int, m_max: int) -> NoiseRealization:
    """``m_max + 1`` standard normals fully determined by ``(seed, traj_index)``."""
    if traj_index < 0:
        raise ValueError("traj_index must be non-negative")
    x = _generator(seed, traj_index).standard_normal(m_max + 1)
    return NoiseRealization(traj_index=int(traj_index), amplitudes=x)


def field_scales(basis: KernelBasis) -> np.ndarray:
    """``sqrt(G_m / pi)`` for every mode."""
    return np.sqrt(basis.weights / np.pi)


def field_at(basis: KernelBasis, noise: NoiseRealization, t):
    """Direct evaluation of ``h(t) = sum_m x_m sqrt(G_m/pi) psi_m(t)``."""
    x = np.asarray(noise.amplitudes, dtype=float)
    if x.shape != (basis.m_max + 1,):
        raise ValueError(
            f"noise has {x.shape[-1]} amplitudes, basis needs {basis.m_max + 1}"
        )
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > basis.t_max):
        raise ValueError(f"t must lie in [0, {basis.t_max}]")
    out = (x * field_scales(basis)) @ basis.mode_functions(t_arr.ravel())
    out = out.reshape(t_arr.shape)
    return out if out.ndim else float(out)


def field_on_grid(basis: KernelBasis, amplitudes: np.ndarray, n_steps: int) -> np.ndarray:
    """``h`` at the RK4 stage times ``j * t_max / (2 n_steps)``, ``j = 0..2 n_steps``.

    On this grid every mode frequency ``k pi / t_max`` is a harmonic of a
    length-``4 n_steps`` periodic sequence, so a single inverse real FFT
    evaluates the full sum exactly (no interpolation). ``amplitudes`` may be
    one realization or a stack of shape ``(n, m_max + 1)``.
    """
    x = np.asarray(amplitudes, dtype=float)
    if x.shape[-1] != basis.m_max + 1:
        raise ValueError(
            f"noise has {x.shape[-1]} amplitudes, basis needs {basis.m_max + 1}"
        )
    n_fft = 4 * n_steps
    n_freq = basis.n_freq
    if n_freq >= n_fft // 2:
        raise ValueError(
            f"n_steps={n_steps} too small to resolve {n_freq} kernel frequencies"
        )
    scale = field_scales(basis)
    xs = x * scale
    spec = np.zeros(x.shape[:-1] + (n_fft // 2 + 1,), dtype=complex)
    spec[..., 0] = xs[..., 0]
    cos_part = xs[..., 1::2]
    sin_part = np.zeros_like(cos_part)
    sin_part[..., : xs[..., 2::2].shape[-1]] = xs[..., 2::2]
    # a cos + b sin = Re[(a - i b) e^{i theta}]; irfft doubles interior bins
    spec[..., 1 : n_freq + 1] = 0.5 * (cos_part - 1j * sin_part)
    h = fft.irfft(spec, n=n_fft, axis=-1, norm="forward")
    return np.ascontiguousarray(h[..., : 2 * n_steps + 1])
