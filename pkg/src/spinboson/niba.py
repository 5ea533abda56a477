"""Non-interacting blip approximation with Markovian dephasing or depolarization.

In Laplace space the magnetization is

    dephasing:      1 / (lam + f(lam + 2 G))
    depolarization: 1 / (lam + 2 G + f(lam + G))     (first order in G)

with ``f(lam) = d_eff**(2 - 2 alpha) * lam**(2 alpha - 1)``. The time trace is
the residue pair at the roots of the characteristic function plus the
integral along the branch cut of the fractional power.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .model import Channel, SimulationParams, derived_scales
from .sse import MagnetizationSeries

__all__ = [
    "DampingClass",
    "DegenerateParametersError",
    "NibaSolution",
    "QuadratureError",
    "RootContinuationError",
    "branch_cut_integral",
    "characteristic_function",
    "characteristic_roots",
    "laplace_magnetization",
    "locate_overdamped_transition",
    "niba_curve",
    "overdamped_threshold",
    "residue_sum",
    "solve",
]

_NEWTON_MAX_ITER = 100
_CONTINUATION_STEPS = 48


class DampingClass(str, enum.Enum):
    UNDERDAMPED = "underdamped"
    OVERDAMPED = "overdamped"


class RootContinuationError(RuntimeError):
    pass


class DegenerateParametersError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


def _norm_channel(channel) -> Channel:
    channel = Channel(channel)
    if channel is Channel.BOTH:
        raise ValueError("NIBA is available for a single Markovian channel only")
    # without Markovian loss both channels reduce to the same expression
    return Channel.DEPHASING if channel is Channel.NONE else channel


def _branch_point(channel: Channel, gamma: float) -> float:
    return 2.0 * gamma if channel is Channel.DEPHASING else gamma


def _linear_factor(channel: Channel, lam, gamma: float):
    return lam if channel is Channel.DEPHASING else lam + 2.0 * gamma


def characteristic_function(channel, lam, gamma: float, alpha: float, delta_eff: float):
    """``P(lam) (lam + s)**(1 - 2 alpha) + d_eff**(2 - 2 alpha)`` on the principal branch.

    ``P(lam) = lam, s = 2 G`` for dephasing; ``P(lam) = lam + 2 G, s = G``
    for depolarization.
    """
    channel = _norm_channel(channel)
    beta = 1.0 - 2.0 * alpha
    mu = np.asarray(lam, dtype=complex) + _branch_point(channel, gamma)
    return _linear_factor(channel, lam, gamma) * mu**beta + delta_eff ** (2.0 - 2.0 * alpha)


def _derivative(channel, lam, gamma, alpha):
    beta = 1.0 - 2.0 * alpha
    mu = lam + _branch_point(channel, gamma)
    return mu**beta + beta * _linear_factor(channel, lam, gamma) * mu ** (beta - 1.0)


def laplace_magnetization(channel, lam, gamma: float, alpha: float, delta_eff: float):
    """Closed-form Laplace transform of the NIBA magnetization."""
    channel = _norm_channel(channel)
    beta = 1.0 - 2.0 * alpha
    mu = np.asarray(lam, dtype=complex) + _branch_point(channel, gamma)
    return mu**beta / characteristic_function(channel, lam, gamma, alpha, delta_eff)


@dataclass(frozen=True)
class NibaSolution:
    channel: Channel
    lambda1: complex
    lambda2: complex
    alpha: float
    delta_eff: float
    gamma: float
    damping_class: DampingClass

    @property
    def omega(self) -> float:
        """Oscillation frequency of the dominant root pair (zero if overdamped)."""
        return abs(self.lambda1.imag) if self.damping_class is DampingClass.UNDERDAMPED else 0.0

    @property
    def decay(self) -> float:
        """Decay rate of the slowest root."""
        return -max(self.lambda1.real, self.lambda2.real)

    def residuals(self) -> tuple[float, float]:
        f = [characteristic_function(self.channel, lam, self.gamma, self.alpha, self.delta_eff)
             for lam in (self.lambda1, self.lambda2)]
        return abs(complex(f[0])), abs(complex(f[1]))


def overdamped_threshold(alpha: float, delta_eff: float) -> float:
    """Dephasing rate at which the two NIBA roots meet on the real axis.

    On ``(-2G, 0)`` the characteristic function is real with its minimum at
    ``-2G/(2 - 2 alpha)``; the threshold is where that minimum touches zero.
    """
    beta = 1.0 - 2.0 * alpha
    c = delta_eff ** (2.0 - 2.0 * alpha)
    return 0.5 * (1.0 + beta) * (c / beta**beta) ** (1.0 / (1.0 + beta))


def _real_dephasing_roots(gamma, alpha, delta_eff):
    """Two real roots in ``(-2G, 0)`` if the real-axis minimum is negative, else None."""
    if gamma <= 0:
        return None
    beta = 1.0 - 2.0 * alpha
    c = delta_eff ** (2.0 - 2.0 * alpha)
    f = lambda x: x * (x + 2.0 * gamma) ** beta + c
    x_min = -2.0 * gamma / (1.0 + beta)
    if f(x_min) >= 0.0:
        return None
    slow = optimize.brentq(f, x_min, 0.0, xtol=1e-15, rtol=1e-15, maxiter=200)
    fast = optimize.brentq(f, -2.0 * gamma, x_min, xtol=1e-15, rtol=1e-15, maxiter=200)
    return complex(slow), complex(fast)


def _newton(channel, lam, gamma, alpha, delta_eff):
    c = delta_eff ** (2.0 - 2.0 * alpha)
    for _ in range(_NEWTON_MAX_ITER):
        f = complex(characteristic_function(channel, lam, gamma, alpha, delta_eff))
        step = f / complex(_derivative(channel, lam, gamma, alpha))
        lam = lam - step
        if abs(step) <= 1e-14 * abs(lam) and abs(f) <= 1e-12 * c:
            return lam
    f = abs(complex(characteristic_function(channel, lam, gamma, alpha, delta_eff)))
    if f <= 1e-12 * c:
        return lam
    return None


def characteristic_roots(channel, gamma: float, alpha: float, delta_eff: float,
                         steps: int = _CONTINUATION_STEPS) -> tuple[complex, complex]:
    """Root pair tracked by Newton continuation from the dissipation-free solution.

    Starting at ``d_eff exp(i pi / (2 - 2 alpha))`` the rate is raised along
    ``steps`` geometric increments up to ``gamma``. Once the dephasing pair
    reaches the real axis both real roots are bracketed on ``(-2G, 0)``.
    ``lambda1`` is the upper-half-plane root, or the slower real one.
    """
    channel = _norm_channel(channel)
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    lam = delta_eff * complex(math.cos(math.pi / (2 - 2 * alpha)),
                              math.sin(math.pi / (2 - 2 * alpha)))
    path = [0.0] if gamma == 0 else [0.0, *np.geomspace(gamma * 1e-3, gamma, max(steps, 32))]
    for g in path:
        if channel is Channel.DEPHASING:
            real_pair = _real_dephasing_roots(g, alpha, delta_eff)
            if real_pair is not None:
                lam = real_pair[0]
                continue
        seed = lam if lam.imag > 0 else complex(lam.real, 1e-6 * abs(lam))
        new = _newton(channel, seed, g, alpha, delta_eff)
        if new is None:
            raise RootContinuationError(f"Newton failed to converge at gamma={g:.6g}")
        lam = complex(new.real, abs(new.imag))
    if channel is Channel.DEPHASING:
        real_pair = _real_dephasing_roots(gamma, alpha, delta_eff)
        if real_pair is not None:
            return real_pair
    return lam, lam.conjugate()


def solve(channel, gamma: float, alpha: float, delta_eff: float) -> NibaSolution:
    channel = _norm_channel(channel)
    l1, l2 = characteristic_roots(channel, gamma, alpha, delta_eff)
    under = abs(l1.imag) > 1e-8 * abs(l1)
    return NibaSolution(
        channel=channel, lambda1=l1, lambda2=l2, alpha=alpha, delta_eff=delta_eff,
        gamma=gamma,
        damping_class=DampingClass.UNDERDAMPED if under else DampingClass.OVERDAMPED,
    )


def _residue_weight(sol: NibaSolution, lam: complex) -> complex:
    g, a = sol.gamma, sol.alpha
    if sol.channel is Channel.DEPHASING:
        num, den = lam + 2.0 * g, 2.0 * lam * (1.0 - a) + 2.0 * g
    else:
        num = lam + g
        den = (lam + g) + (1.0 - 2.0 * a) * (lam + 2.0 * g)
    if abs(den) < 1e-14:
        raise DegenerateParametersError(
            f"residue denominator vanishes at lambda={lam}; parameters are degenerate"
        )
    return num / den


def residue_sum(sol: NibaSolution, t):
    """Pole contribution ``sum_i w_i exp(lambda_i t)`` (real part)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be non-negative")
    total = np.zeros(t_arr.shape, dtype=complex)
    for lam in (sol.lambda1, sol.lambda2):
        total = total + _residue_weight(sol, lam) * np.exp(lam * t_arr)
    out = total.real
    return out if out.ndim else float(out)


def _cut_integrand(sol: NibaSolution, t: np.ndarray):
    beta = 1.0 - 2.0 * sol.alpha
    c = sol.delta_eff ** (2.0 - 2.0 * sol.alpha)
    g = sol.gamma
    s0 = _branch_point(sol.channel, g)
    pref = -math.sin(math.pi * beta) * c / math.pi
    cos_b = math.cos(math.pi * beta)
    d = sol.delta_eff

    def integrand(u):
        z = d * u / (1.0 - u)
        jac = d / (1.0 - u) ** 2
        # linear factor evaluated on the cut, lam = -s0 - z
        lin = -(z + 2.0 * g) if sol.channel is Channel.DEPHASING else g - z
        zb = z**beta
        den = lin * lin * zb * zb + 2.0 * lin * c * zb * cos_b + c * c
        return pref * zb * jac / den * np.exp(-(z + s0) * t)

    return integrand


def branch_cut_integral(sol: NibaSolution, t, epsabs: float = 1e-8):
    """Incoherent contribution from the cut of ``(lam + s)**(1 - 2 alpha)``.

    The cut variable ``z`` in ``(0, inf)`` is mapped to ``u`` in ``(0, 1)``
    with ``z = d_eff u / (1 - u)``; a vector-valued adaptive Gauss-Kronrod rule
    integrates all requested times at once.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("t must be non-negative")
    if sol.alpha == 0.0:
        out = np.zeros(t_arr.shape)
    else:
        res, err, info = integrate.quad_vec(
            _cut_integrand(sol, t_arr.ravel()), 0.0, 1.0, epsabs=0.01 * epsabs,
            epsrel=1e-10, norm="max", limit=2000, full_output=True,
        )
        if err > epsabs or not info.success:
            raise QuadratureError(
                f"branch-cut quadrature did not converge: error estimate {err:.3g}"
            )
        out = np.asarray(res).reshape(t_arr.shape)
    if np.ndim(t) == 0:
        return float(out[0])
    return out


def _channel_rate(channel: Channel, p: SimulationParams) -> float:
    if channel is Channel.DEPHASING:
        if p.gamma_x != 0:
            raise ValueError("dephasing NIBA requires gamma_x = 0")
        return p.gamma_phi
    if p.gamma_phi != 0:
        raise ValueError("depolarization NIBA requires gamma_phi = 0")
    return p.gamma_x


def niba_curve(channel, p: SimulationParams, times) -> MagnetizationSeries:
    """NIBA magnetization on ``times`` (residues plus branch cut, zero stderr)."""
    channel = Channel(channel) if channel is not None else p.channel
    if channel is Channel.NONE and (p.gamma_phi or p.gamma_x):
        raise ValueError("channel 'none' requires vanishing Markovian rates")
    channel = _norm_channel(channel)
    gamma = _channel_rate(channel, p)
    sol = solve(channel, gamma, p.alpha, derived_scales(p).delta_eff)
    times = np.asarray(times, dtype=float)
    values = residue_sum(sol, times) + branch_cut_integral(sol, times)
    return MagnetizationSeries(times=times, mean=np.asarray(values),
                               stderr=np.zeros_like(times), n_traj=0)


def locate_overdamped_transition(alpha: float, delta_eff: float, rtol: float = 1e-6,
                                 upper: float | None = None) -> float:
    """Smallest dephasing rate at which the continued roots turn real (bisection)."""
    def over(g):
        return solve(Channel.DEPHASING, g, alpha, delta_eff).damping_class is DampingClass.OVERDAMPED

    lo, hi = 0.0, upper if upper is not None else delta_eff
    while not over(hi):
        lo, hi = hi, 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if over(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
