"""Physical and numerical parameters of the dissipative spin-boson problem.

Units are hbar = 1; every rate and frequency shares the unit of ``delta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from scipy import special

__all__ = [
    "Channel",
    "DerivedScales",
    "ParameterError",
    "SimulationParams",
    "default_dt",
    "default_m_max",
    "derived_scales",
    "effective_frequency",
    "exact_quality_factor",
    "renormalized_frequency",
    "validate",
]


class ParameterError(ValueError):
    """Raised when a parameter set violates one of its invariants."""


class Channel(str, enum.Enum):
    NONE = "none"
    DEPHASING = "dephasing"
    DEPOLARIZATION = "depolarization"
    BOTH = "both"

    @classmethod
    def from_rates(cls, gamma_phi: float, gamma_x: float) -> "Channel":
        if gamma_phi > 0 and gamma_x > 0:
            return cls.BOTH
        if gamma_phi > 0:
            return cls.DEPHASING
        if gamma_x > 0:
            return cls.DEPOLARIZATION
        return cls.NONE


def default_dt(delta: float, omega_c: float) -> float:
    """Integration step resolving both the bath bandwidth and the bare tunnelling."""
    if delta <= 0 or omega_c <= 0:
        return math.nan  # rejected by validate
    return min(0.1 / omega_c, 0.02 / delta)


def default_m_max(omega_c: float, t_max: float, bandwidth: float = 5.0) -> int:
    """Fourier truncation covering mode frequencies up to ``bandwidth * omega_c``.

    Each frequency contributes a cosine and a sine mode, so the returned
    index count is twice the number of frequencies.
    """
    n_freq = math.ceil(bandwidth * omega_c * t_max / math.pi)
    return 2 * n_freq


@dataclass(frozen=True)
class SimulationParams:
    """All knobs of a run.

    ``dt`` and ``m_max`` default to :func:`default_dt` and
    :func:`default_m_max`; ``channel`` defaults to the one implied by the
    nonzero rates.
    """

    delta: float
    alpha: float
    omega_c: float
    gamma_phi: float = 0.0
    gamma_x: float = 0.0
    t_max: float = 20.0
    dt: float | None = None
    m_max: int | None = None
    n_traj: int = 10_000
    seed: int = 0
    channel: Channel | None = None

    def __post_init__(self):
        if self.dt is None:
            object.__setattr__(self, "dt", default_dt(self.delta, self.omega_c))
        if self.m_max is None:
            object.__setattr__(self, "m_max", default_m_max(self.omega_c, self.t_max))
        if self.channel is None:
            object.__setattr__(
                self, "channel", Channel.from_rates(self.gamma_phi, self.gamma_x)
            )
        elif not isinstance(self.channel, Channel):
            object.__setattr__(self, "channel", Channel(self.channel))

    def replace(self, **changes) -> "SimulationParams":
        """Copy with ``changes``; derived defaults are recomputed unless given."""
        for key, dependants in (("omega_c", ("dt", "m_max")), ("delta", ("dt",)),
                                ("t_max", ("m_max",))):
            if key in changes:
                for dep in dependants:
                    changes.setdefault(dep, None)
        if "gamma_phi" in changes or "gamma_x" in changes:
            changes.setdefault("channel", None)
        return replace(self, **changes)

    @property
    def n_steps(self) -> int:
        """Number of RK4 steps covering ``[0, t_max]``."""
        return max(1, math.ceil(self.t_max / self.dt - 1e-9))

    @property
    def step(self) -> float:
        """Step actually used: ``t_max / n_steps`` (never larger than ``dt``)."""
        return self.t_max / self.n_steps


def validate(raw: SimulationParams) -> SimulationParams:
    """Check every invariant of ``raw`` and return it unchanged.

    ``alpha = 0`` is accepted as the free-spin limit used by the exact
    Bloch-equation benchmarks.
    """
    p = raw
    if not (0.0 <= p.alpha < 0.5):
        raise ParameterError(f"alpha={p.alpha!r} out of [0, 0.5)")
    if not (p.delta > 0):
        raise ParameterError(f"delta={p.delta!r} must be positive")
    if not (p.omega_c >= 10.0 * p.delta):
        raise ParameterError(
            f"omega_c={p.omega_c!r} must be at least 10*delta={10 * p.delta!r}"
        )
    if not (p.t_max > 0):
        raise ParameterError(f"grid error: t_max={p.t_max!r} must be positive")
    if not (p.dt > 0):
        raise ParameterError(f"grid error: dt={p.dt!r} must be positive")
    if p.dt > p.t_max:
        raise ParameterError(f"grid error: dt={p.dt!r} exceeds t_max={p.t_max!r}")
    if int(p.m_max) != p.m_max or p.m_max < 1:
        raise ParameterError(f"m_max={p.m_max!r} must be an integer >= 1")
    if int(p.n_traj) != p.n_traj or p.n_traj < 1:
        raise ParameterError(f"n_traj={p.n_traj!r} must be an integer >= 1")
    if p.gamma_phi < 0 or p.gamma_x < 0:
        raise ParameterError(
            f"rates must be non-negative (gamma_phi={p.gamma_phi!r}, gamma_x={p.gamma_x!r})"
        )
    if not (0 <= p.seed < 2**64):
        raise ParameterError(f"seed={p.seed!r} must fit in 64 unsigned bits")
    allowed = {
        Channel.NONE: p.gamma_phi == 0 and p.gamma_x == 0,
        Channel.DEPHASING: p.gamma_x == 0,
        Channel.DEPOLARIZATION: p.gamma_phi == 0,
        Channel.BOTH: True,
    }
    if not allowed[p.channel]:
        raise ParameterError(
            f"channel={p.channel.value!r} inconsistent with gamma_phi={p.gamma_phi!r}, "
            f"gamma_x={p.gamma_x!r}"
        )
    return p


def renormalized_frequency(p: SimulationParams) -> float:
    """Bath-renormalized tunnelling ``delta * (delta/omega_c)**(alpha/(1-alpha))``."""
    return p.delta * (p.delta / p.omega_c) ** (p.alpha / (1.0 - p.alpha))


def effective_frequency(p: SimulationParams) -> float:
    """NIBA frequency scale, the renormalized frequency times a Gamma-function prefactor.

    ``scipy.special.gamma`` (Cephes) is accurate to a few ulp on (0, 1].
    """
    a = p.alpha
    prefactor = (special.gamma(1.0 - 2.0 * a) * math.cos(math.pi * a)) ** (
        1.0 / (2.0 * (1.0 - a))
    )
    return float(prefactor * renormalized_frequency(p))


def exact_quality_factor(alpha: float) -> float:
    """``cot(pi*alpha / (2(1-alpha)))``, the dissipation-free ratio of frequency to decay."""
    return 1.0 / math.tan(math.pi * alpha / (2.0 * (1.0 - alpha)))


@dataclass(frozen=True)
class DerivedScales:
    delta_r: float
    delta_eff: float
    omega_0: float
    gamma_0: float

    @property
    def quality_factor(self) -> float:
        return self.omega_0 / self.gamma_0 if self.gamma_0 > 0 else math.inf


def derived_scales(p: SimulationParams) -> DerivedScales:
    """Frequency scales shared by the simulator, NIBA and the analysis.

    ``omega_0`` and ``gamma_0`` are the imaginary part and minus the real part
    of the dissipation-free NIBA root ``delta_eff * exp(i*pi/(2-2*alpha))``.
    """
    d_eff = effective_frequency(p)
    angle = math.pi / (2.0 - 2.0 * p.alpha)
    return DerivedScales(
        delta_r=renormalized_frequency(p),
        delta_eff=d_eff,
        omega_0=d_eff * math.sin(angle),
        gamma_0=max(0.0, -d_eff * math.cos(angle)),  # cos(pi/2) is not exactly 0
    )
