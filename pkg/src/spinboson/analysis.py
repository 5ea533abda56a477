"""Damped-oscillation fits, quality factors, empirical laws and dissipation sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal
from scipy.ndimage import maximum_filter1d

from .bath import fourier_coefficients
from .model import Channel, SimulationParams, derived_scales, validate
from .niba import DampingClass, NibaSolution, niba_curve
from .sse import MagnetizationSeries, run_ensemble

__all__ = [
    "FitResult",
    "InsufficientWindowError",
    "SweepRow",
    "classify_damping",
    "default_window",
    "empirical_laws",
    "fit_damped_cosine",
    "has_zero_crossing",
    "quality_factor",
    "sweep_dissipation",
]

_MIN_POINTS = 50
_NOISE_SIGMAS = 3.0
_CROSSING_SIGMAS = 4.0


class InsufficientWindowError(ValueError):
    pass


@dataclass(frozen=True)
class FitResult:
    """Parameters of ``A0 cos(omega t + phi0) exp(-decay t)`` over ``window``.

    For overdamped input a two-exponential model is fitted instead;
    ``frequency`` is then 0 and ``decay`` is the slower rate.
    """

    amplitude: float
    frequency: float
    phase: float
    decay: float
    residual_norm: float
    converged: bool
    window: tuple[float, float]
    overdamped: bool = False
    n_points: int = 0


def _spectral_peak(t: np.ndarray, y: np.ndarray) -> tuple[float, bool]:
    """Angular frequency of the largest zero-padded DFT bin; flag if it is bin 0."""
    dt = t[1] - t[0]
    n_fft = 16 * (1 << int(math.ceil(math.log2(len(y)))))
    spec = np.abs(np.fft.rfft(y, n=n_fft))
    k = int(np.argmax(spec))
    return 2.0 * math.pi * k / (n_fft * dt), k == 0


def _significant_signs(y: np.ndarray, se: np.ndarray, nsigma: float) -> np.ndarray:
    thresh = nsigma * se
    sig = np.zeros(len(y), dtype=int)
    sig[y > thresh] = 1
    sig[y < -thresh] = -1
    if not np.any(se):
        sig[np.abs(y) <= 1e-12] = 0
    return sig


def _crossing_times(t, y, se, nsigma=_CROSSING_SIGMAS) -> np.ndarray:
    sig = _significant_signs(y, se, nsigma)
    nz = np.flatnonzero(sig)
    if nz.size < 2:
        return np.empty(0)
    flips = np.flatnonzero(np.diff(sig[nz]) != 0)
    # time halfway between the last point of one sign and the first of the next
    return 0.5 * (t[nz[flips]] + t[nz[flips + 1]])


def has_zero_crossing(series: MagnetizationSeries, t_from: float = 0.0,
                      nsigma: float = _CROSSING_SIGMAS) -> bool:
    """True if the mean changes sign beyond ``nsigma`` standard errors after ``t_from``."""
    m = series.times >= t_from
    return _crossing_times(series.times[m], series.mean[m], series.stderr[m], nsigma).size > 0


def _frequency_estimate(t, y, se) -> tuple[float, bool]:
    """Oscillation frequency guess; ``(0, True)`` for data with no sign change.

    Strong damping pulls the spectral peak to (or next to) zero frequency;
    the spacing of significant zero crossings then gives the frequency instead.
    """
    omega, lowest = _spectral_peak(t, y)
    # a peak completing less than one cycle in the window is not a resolved frequency
    if not lowest and omega * (t[-1] - t[0]) >= 2 * math.pi:
        return omega, False
    crossings = _crossing_times(t, y, se)
    if crossings.size == 0:
        return 0.0, True
    if crossings.size >= 2:
        return math.pi / float(np.mean(np.diff(crossings))), False
    return 0.5 * math.pi / max(crossings[0] - t[0], t[1] - t[0]), False


def default_window(series: MagnetizationSeries) -> tuple[float, float]:
    """Drop the initial transient (``t < 0.5 / omega``) and the noise-dominated tail.

    The tail starts where the running envelope ``max |mean|`` over one
    period falls below three standard errors.
    """
    t, y, se = series.times, series.mean, series.stderr
    omega, overdamped = _frequency_estimate(t, y, se)
    t_lo = 0.0 if overdamped else 0.5 / omega
    i_lo = int(np.searchsorted(t, t_lo - 1e-12))
    t_hi = float(t[-1])
    if np.any(se):
        dt = t[1] - t[0]
        period = (t[-1] - t_lo) / 10 if overdamped else 2 * math.pi / omega
        half = max(1, int(round(0.5 * period / dt)))
        env = maximum_filter1d(np.abs(y), size=2 * half + 1, mode="nearest")
        below = np.flatnonzero((env < _NOISE_SIGMAS * se) & (t > t[i_lo] + period))
        if below.size:
            t_hi = float(t[below[0]])
    return float(t[i_lo]), t_hi


def _decay_guess(t, y, omega):
    if omega > 0:
        dist = max(1, int(0.6 * math.pi / omega / (t[1] - t[0])))
        peaks, _ = signal.find_peaks(np.abs(y), distance=dist)
        peaks = peaks[np.abs(y[peaks]) > 0]
        if peaks.size >= 2:
            slope = np.polyfit(t[peaks], np.log(np.abs(y[peaks])), 1)[0]
            if slope < 0:
                return -slope
    ok = np.abs(y) > 0
    if ok.sum() >= 2:
        slope = np.polyfit(t[ok], np.log(np.abs(y[ok])), 1)[0]
        if slope < 0:
            return -slope
    return max(omega, 1.0 / (t[-1] - t[0])) / (2 * math.pi)


def _cosine_model(q, t):
    a, w, ph, g = q
    return a * np.cos(w * t + ph) * np.exp(-g * t)


def _cosine_jac(q, t):
    a, w, ph, g = q
    e = np.exp(-g * t)
    c = np.cos(w * t + ph) * e
    s = np.sin(w * t + ph) * e
    return np.column_stack([c, -a * t * s, -a * s, -a * t * c])


def _linear_amplitude(t, y, omega, gamma):
    e = np.exp(-gamma * t)
    basis = np.column_stack([np.cos(omega * t) * e, np.sin(omega * t) * e])
    (a, b), *_ = np.linalg.lstsq(basis, y, rcond=None)
    # a cos + b sin = A cos(wt + phi) with A cos phi = a, -A sin phi = b
    return math.hypot(a, b), math.atan2(-b, a)


def _canonical(a, w, ph, g):
    if w < 0:
        w, ph = -w, -ph
    if a < 0:
        a, ph = -a, ph + math.pi
    ph = (ph + math.pi) % (2 * math.pi) - math.pi
    return a, w, ph, g


def _fit_cosine(t, y, omega0):
    gamma0 = _decay_guess(t, y, omega0)
    amp0, ph0 = _linear_amplitude(t, y, omega0, gamma0)
    res = optimize.least_squares(
        lambda q: _cosine_model(q, t) - y, [amp0, omega0, ph0, gamma0],
        jac=lambda q: _cosine_jac(q, t), method="lm", gtol=1e-10, xtol=1e-12,
        ftol=1e-12, max_nfev=200 * 5, x_scale="jac",
    )
    return res


def _fit_biexponential(t, y):
    g1 = max(_decay_guess(t, y, 0.0), 1e-6)
    e = np.column_stack([np.exp(-g1 * t), np.exp(-3.0 * g1 * t)])
    (a1, a2), *_ = np.linalg.lstsq(e, y, rcond=None)
    start = [a1, g1, a2, 3.0 * g1]

    def model(q):
        return q[0] * np.exp(-q[1] * t) + q[2] * np.exp(-q[3] * t)

    res = optimize.least_squares(
        lambda q: model(q) - y, start, method="trf",
        bounds=([-np.inf, 0.0, -np.inf, 0.0], np.inf), max_nfev=1000,
        gtol=1e-10, xtol=1e-12, ftol=1e-12,
    )
    return res


def fit_damped_cosine(series: MagnetizationSeries,
                      window: tuple[float, float] | None = None) -> FitResult:
    """Least-squares fit of ``A0 cos(omega t + phi0) exp(-gamma t)``.

    The frequency guess comes from the zero-padded spectrum of the windowed
    data, the decay guess from a log-linear fit to successive extrema, and
    amplitude/phase from a linear solve at those guesses. If the spectrum
    peaks at zero frequency and the data never change sign significantly,
    a sum of two exponentials is fitted instead and ``frequency`` is 0.
    """
    if window is None:
        window = default_window(series)
    lo, hi = window
    m = (series.times >= lo - 1e-12) & (series.times <= hi + 1e-12)
    t, y, se = series.times[m], series.mean[m], series.stderr[m]
    if len(t) < _MIN_POINTS:
        raise InsufficientWindowError(
            f"window [{lo:.4g}, {hi:.4g}] holds {len(t)} points; need {_MIN_POINTS}"
        )
    omega0, overdamped = _frequency_estimate(t, y, se)
    if overdamped:
        return _overdamped_result(t, y, window)
    span = t[-1] - t[0]
    gamma_hint = _decay_guess(t, y, omega0)
    if omega0 * span < 1.5 * 2 * math.pi and gamma_hint * span < 3.0:
        raise InsufficientWindowError(
            f"window covers {omega0 * span / (2 * math.pi):.2f} periods and "
            f"{gamma_hint * span:.2f} decay times; need 1.5 periods or 3 decay times"
        )
    res = _fit_cosine(t, y, omega0)
    a, w, ph, g = _canonical(*res.x)
    rnorm = float(np.linalg.norm(res.fun))
    converged = bool(res.success and math.isfinite(rnorm) and rnorm <= 0.05 * a * math.sqrt(len(t)))
    return FitResult(amplitude=a, frequency=w, phase=ph, decay=g, residual_norm=rnorm,
                     converged=converged, window=(float(t[0]), float(t[-1])),
                     n_points=len(t))


def _overdamped_result(t, y, window):
    res = _fit_biexponential(t, y)
    a1, g1, a2, g2 = res.x
    slow = min(g1, g2)
    rnorm = float(np.linalg.norm(res.fun))
    amp = abs(a1 + a2)
    converged = bool(res.success and rnorm <= 0.05 * max(amp, 1e-300) * math.sqrt(len(t)))
    return FitResult(amplitude=amp, frequency=0.0, phase=0.0, decay=float(slow),
                     residual_norm=rnorm, converged=converged,
                     window=(float(t[0]), float(t[-1])), overdamped=True, n_points=len(t))


def quality_factor(fit: FitResult) -> float:
    """``frequency / decay`` of a converged fit."""
    if not fit.converged:
        raise ValueError("quality factor requires a converged fit")
    if fit.decay <= 1e-12:
        raise ValueError(f"decay rate {fit.decay:.3g} too small for a quality factor")
    return fit.frequency / fit.decay


def empirical_laws(channel, omega0: float, gamma0: float, gamma_in: float) -> tuple[float, float]:
    """Simple laws for ``(omega, gamma)`` under Markovian loss.

    Dephasing: ``sqrt(omega0^2 - G^2)`` and ``gamma0 + G``;
    depolarization: ``omega0`` and ``gamma0 + 1.5 G``.
    """
    channel = Channel(channel)
    if omega0 <= 0 or gamma0 < 0 or gamma_in < 0:
        raise ValueError("need omega0 > 0, gamma0 >= 0, gamma_in >= 0")
    if channel is Channel.DEPHASING:
        return math.sqrt(max(omega0**2 - gamma_in**2, 0.0)), gamma0 + gamma_in
    if channel is Channel.DEPOLARIZATION:
        return omega0, gamma0 + 1.5 * gamma_in
    if channel is Channel.NONE:
        return omega0, gamma0
    raise ValueError("empirical laws exist for a single channel only")


def classify_damping(sol: NibaSolution) -> DampingClass:
    lam = sol.lambda1
    if abs(lam.imag) > 1e-8 * abs(lam):
        return DampingClass.UNDERDAMPED
    return DampingClass.OVERDAMPED


@dataclass(frozen=True)
class SweepRow:
    gamma_in: float
    omega_fit: float
    gamma_fit: float
    omega_niba: float
    gamma_niba: float
    damping_class: DampingClass | None
    error: str | None = None


def _rate_params(p: SimulationParams, channel: Channel, g: float) -> SimulationParams:
    if g == 0:
        # loss-free point is shared by both channels (and their cache entries)
        return p.replace(gamma_phi=0.0, gamma_x=0.0, channel=Channel.NONE)
    if channel is Channel.DEPHASING:
        return p.replace(gamma_phi=g, gamma_x=0.0, channel=Channel.DEPHASING)
    return p.replace(gamma_x=g, gamma_phi=0.0, channel=Channel.DEPOLARIZATION)


def sweep_dissipation(p: SimulationParams, channel, gamma_grid, cache: dict | None = None,
                      n_threads: int | None = None) -> list[SweepRow]:
    """SSE and NIBA fits across Markovian rates.

    ``cache`` maps parameter sets to previously computed ensembles so that
    repeated grid points are simulated once. A failing row records its
    error and the sweep moves on.
    """
    from .niba import solve

    channel = Channel(channel)
    if channel not in (Channel.DEPHASING, Channel.DEPOLARIZATION):
        raise ValueError("sweep needs the dephasing or depolarization channel")
    grid = [float(g) for g in gamma_grid]
    if grid != sorted(grid):
        raise ValueError("gamma_grid must be sorted ascending")
    validate(p)
    cache = {} if cache is None else cache
    basis = None
    delta_eff = derived_scales(p).delta_eff
    rows = []
    for g in grid:
        q = _rate_params(p, channel, g)
        try:
            validate(q)
            ens = cache.get(q)
            if ens is None:
                if basis is None:
                    basis = fourier_coefficients(q)
                ens = run_ensemble(q, basis, n_threads=n_threads)
                cache[q] = ens
            niba_series = niba_curve(channel, q, ens.times)
            fit_sse = fit_damped_cosine(ens)
            fit_niba = fit_damped_cosine(niba_series)
            sol = solve(channel, g, q.alpha, delta_eff)
            rows.append(SweepRow(g, fit_sse.frequency, fit_sse.decay, fit_niba.frequency,
                                 fit_niba.decay, classify_damping(sol)))
        except (ValueError, RuntimeError) as exc:
            rows.append(SweepRow(g, math.nan, math.nan, math.nan, math.nan, None,
                                 error=f"{type(exc).__name__}: {exc}"))
    return rows
