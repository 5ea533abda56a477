"""Ohmic bath: spectral density, zero-temperature noise kernel and its Fourier basis."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

from .model import SimulationParams

__all__ = [
    "KernelBasis",
    "KernelPositivityError",
    "fourier_coefficients",
    "kernel_l2",
    "mode_functions",
    "reconstruct_l2",
    "spectral_density",
    "write_basis_csv",
]

_CLAMP_REL = 1e-10


class KernelPositivityError(ValueError):
    """A Fourier weight of the noise kernel came out significantly negative."""


def spectral_density(omega, p: SimulationParams):
    """Ohmic spectral function ``2 pi alpha omega exp(-omega/omega_c)``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("spectral density is defined for omega >= 0 only")
    out = 2.0 * np.pi * p.alpha * omega * np.exp(-omega / p.omega_c)
    return out if out.ndim else float(out)


def kernel_l2(s, p: SimulationParams):
    """Symmetric bath correlation at zero temperature, ``int_0^inf J(w) cos(w s) dw``.

    Closed form ``2 pi alpha wc^2 (1 - wc^2 s^2) / (1 + wc^2 s^2)^2``.
    """
    x2 = (p.omega_c * np.asarray(s, dtype=float)) ** 2
    out = 2.0 * np.pi * p.alpha * p.omega_c**2 * (1.0 - x2) / (1.0 + x2) ** 2
    return out if out.ndim else float(out)


def mode_functions(m_max: int, t_max: float, s) -> np.ndarray:
    """Rows ``psi_0..psi_{m_max}`` evaluated at ``s``.

    ``psi_0 = 1``, ``psi_{2k-1} = cos(k pi s / t_max)``, ``psi_{2k} = sin(k pi s / t_max)``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    j = np.arange(m_max + 1)
    k = (j + 1) // 2
    phase = np.outer(k * np.pi / t_max, s)
    out = np.where((j % 2 == 1)[:, None], np.cos(phase), np.sin(phase))
    out[0] = 1.0
    return out


@dataclass(frozen=True)
class KernelBasis:
    """Separable representation ``L2(s - s') ~ sum_m G_m psi_m(s) psi_m(s')`` on ``[-t_max, t_max]``.

    ``coefficients[k]`` holds the cosine-series coefficient of frequency
    ``k pi / t_max`` (``k = 0`` is the constant term); ``weights`` holds the
    per-mode ``G_m`` obtained by pairing each frequency's cosine and sine.
    """

    t_max: float
    m_max: int
    coefficients: np.ndarray
    weights: np.ndarray

    @property
    def n_freq(self) -> int:
        return len(self.coefficients) - 1

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.n_freq + 1) * np.pi / self.t_max

    def mode_functions(self, s) -> np.ndarray:
        return mode_functions(self.m_max, self.t_max, s)


def _pair_weights(coefficients: np.ndarray, m_max: int) -> np.ndarray:
    j = np.arange(m_max + 1)
    return coefficients[(j + 1) // 2].copy()


def fourier_coefficients(
    p: SimulationParams, t_max: float | None = None, m_max: int | None = None
) -> KernelBasis:
    """Fourier weights of the windowed kernel ``L2`` on ``[-t_max, t_max]``.

    ``g_0 = (1/2T) int L2``, ``g_k = (1/T) int L2(s) cos(k pi s / T) ds``,
    evaluated with QUADPACK's Fourier-weighted adaptive rule on ``[0, T]``.
    Tiny negative weights (above ``-1e-10 * max g``) are clamped to zero.
    """
    t_max = p.t_max if t_max is None else t_max
    m_max = p.m_max if m_max is None else m_max
    n_freq = (m_max + 1) // 2
    g = np.zeros(n_freq + 1)
    if p.alpha != 0.0:
        # closed-form antiderivative s / (1 + wc^2 s^2) of the kernel shape
        g[0] = 2.0 * np.pi * p.alpha * p.omega_c**2 / (1.0 + (p.omega_c * t_max) ** 2)
        for k in range(1, n_freq + 1):
            g[k] = _cosine_coefficient(p, t_max, k)
    g_max = float(np.max(g)) if g.size else 0.0
    eps = _CLAMP_REL * g_max
    bad = np.flatnonzero(g < -eps)
    if bad.size:
        k = int(bad[0])
        raise KernelPositivityError(
            f"kernel weight g_{k}={g[k]:.3e} < 0; inconsistent t_max={t_max}, "
            f"m_max={m_max}, omega_c={p.omega_c}"
        )
    g[g < 0] = 0.0
    return KernelBasis(t_max=t_max, m_max=m_max, coefficients=g,
                       weights=_pair_weights(g, m_max))


def _cosine_coefficient(p: SimulationParams, t_max: float, k: int) -> float:
    omega = k * np.pi / t_max
    # the kernel is sharply peaked on the scale 1/omega_c: split there
    split = min(t_max, 50.0 / p.omega_c)
    total = 0.0
    for lo, hi in ((0.0, split), (split, t_max)):
        if hi <= lo:
            continue
        with warnings.catch_warnings():
            # roundoff flags only appear for far-tail weights many decades below the peak
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(
                kernel_l2, lo, hi, args=(p,), weight="cos", wvar=omega,
                epsabs=0.0, epsrel=1e-10, limit=400,
            )
        total += val
    return 2.0 * total / t_max


def reconstruct_l2(basis: KernelBasis, s, s_prime):
    """Truncated series ``sum_m G_m psi_m(s) psi_m(s')``; arguments must lie in the window."""
    s_arr = np.asarray(s, dtype=float)
    sp_arr = np.asarray(s_prime, dtype=float)
    if np.any(np.abs(s_arr) > basis.t_max) or np.any(np.abs(sp_arr) > basis.t_max):
        raise ValueError(f"arguments must satisfy |s|, |s'| <= t_max={basis.t_max}")
    s_b, sp_b = np.broadcast_arrays(s_arr, sp_arr)
    # cos a cos b + sin a sin b = cos(a - b): sum per frequency
    diff = (s_b - sp_b).ravel()
    k = np.arange(basis.n_freq + 1)
    terms = np.cos(np.outer(diff, k * np.pi / basis.t_max)) * basis.coefficients
    if basis.m_max % 2 == 1:
        # last frequency has no sine partner
        kl = basis.n_freq
        terms[:, kl] = basis.coefficients[kl] * (
            np.cos(kl * np.pi * s_b.ravel() / basis.t_max)
            * np.cos(kl * np.pi * sp_b.ravel() / basis.t_max)
        )
    out = terms.sum(axis=1).reshape(s_b.shape)
    return out if out.ndim else float(out)


def max_reconstruction_error(basis: KernelBasis, p: SimulationParams, n_grid: int = 201) -> float:
    """Worst ``|reconstruct - L2|`` over ``s - s'`` on a grid in ``[0, t_max]``."""
    lags = np.linspace(0.0, basis.t_max, n_grid)
    approx = reconstruct_l2(basis, lags, np.zeros_like(lags))
    return float(np.max(np.abs(approx - kernel_l2(lags, p))))


def write_basis_csv(basis: KernelBasis, path) -> None:
    """Dump ``(m, G_m)`` pairs for diagnostics."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["m", "G_m"])
        for m, w in enumerate(basis.weights):
            writer.writerow([m, repr(float(w))])
