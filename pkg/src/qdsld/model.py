"""Parameter containers, decay rates, cooperativity and coupling profiles.

All rates and angular frequencies are measured in units of a reference rate
``gamma_ref`` (the external damping scale).  With the default ``gamma_ref=1``
every number handed to this module is a dimensionless ratio to that rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

# level order used for population vectors everywhere in the package
LEVELS = ("sigma00", "sigma11", "sigma22")


@dataclass(frozen=True)
class DotParams:
    """Internal rates of one (class of) three-level quantum dot."""

    gamma21: float
    gamma10: float
    gamma20: float = 0.0
    n21: float = 0.0
    n10: float = 0.0
    delta_omega12: float = 0.0

    def __post_init__(self):
        for name in ("gamma21", "gamma10", "gamma20", "n21", "n10"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative, got {getattr(self, name)}")

    @property
    def thermal_free(self) -> bool:
        return self.n21 == 0 and self.n10 == 0 and self.gamma20 == 0


@dataclass(frozen=True)
class WaveguideParams:
    gamma_l: float = 1.0
    gamma_r: float = 1.0
    n_l: float = 0.0
    n_r: float = 0.0
    length_L: float = 1.0
    mode_spacing: float = 1.0
    omega_bar: float = 0.0
    phases: tuple[float, ...] = (0.0,) * 6

    def __post_init__(self):
        if self.gamma_l < 0 or self.gamma_r < 0:
            raise DomainError("external damping rates must be non-negative")
        if self.n_l < 0 or self.n_r < 0:
            raise DomainError("input occupations must be non-negative")
        if self.mode_spacing <= 0:
            raise DomainError("mode_spacing must be positive")
        if self.length_L <= 0:
            raise DomainError("length_L must be positive")
        if len(self.phases) != 6:
            raise DomainError("phases must hold one entry per channel (6)")
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))

    @property
    def gamma_lr(self) -> float:
        return 0.5 * (self.gamma_l + self.gamma_r)

    @property
    def vacuum_inputs(self) -> bool:
        return self.n_l == 0 and self.n_r == 0

    def channel_rates(self) -> np.ndarray:
        """Damping rate of each of the six facet channels.

        Channels 1, 2 share the right-hand rate, 4, 6 the left-hand rate;
        3 and 5 never enter the waveguide.
        """
        r, l = 0.5 * self.gamma_r, 0.5 * self.gamma_l
        return np.array([r, r, 0.0, l, 0.0, l])


@dataclass(frozen=True)
class ModeSet:
    detunings: tuple[float, ...]
    couplings: tuple[float, ...]

    def __post_init__(self):
        d = tuple(float(x) for x in np.atleast_1d(self.detunings))
        g = tuple(float(x) for x in np.atleast_1d(self.couplings))
        if len(d) == 0 or len(d) != len(g):
            raise DomainError("detunings and couplings must be non-empty and of equal length")
        if np.any(np.diff(d) <= 0):
            raise DomainError("detunings must be strictly increasing")
        if min(g) < 0:
            raise DomainError("couplings must be non-negative")
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "couplings", g)

    def __len__(self):
        return len(self.detunings)

    @property
    def delta(self) -> np.ndarray:
        return np.asarray(self.detunings)

    @property
    def g(self) -> np.ndarray:
        return np.asarray(self.couplings)

    @classmethod
    def single(cls, g: float, delta: float = 0.0) -> "ModeSet":
        return cls((delta,), (g,))

    @classmethod
    def gaussian(cls, detunings: Sequence[float], profile: "GaussianProfile") -> "ModeSet":
        d = np.asarray(detunings, dtype=float)
        return cls(tuple(d), tuple(gaussian_coupling(d, profile)))

    @classmethod
    def uniform_grid(cls, n: int, spacing: float, profile: "GaussianProfile",
                     first: float | None = None) -> "ModeSet":
        """``n`` equidistant modes; by default the grid runs -n//2 ... n - n//2 - 1 times spacing."""
        start = -(n // 2) * spacing if first is None else first
        return cls.gaussian(start + spacing * np.arange(n), profile)


@dataclass(frozen=True)
class PumpParams:
    R: float
    M: int = 1

    def __post_init__(self):
        if self.R < 0:
            raise DomainError("pump rate R must be non-negative")
        if int(self.M) != self.M or self.M < 1:
            raise DomainError("M must be a positive integer")
        object.__setattr__(self, "M", int(self.M))


@dataclass(frozen=True)
class DecayRates:
    Gamma0: float
    Gamma1: float
    Gamma2: float
    Gamma21: float
    Gamma20: float
    Gamma10: float
    GammaTotal: float
    gamma_lr: float

    def pair(self, m: int, n: int) -> float:
        """Symmetric pair rate; ``pair(m, m)`` is the level rate itself."""
        levels = (self.Gamma0, self.Gamma1, self.Gamma2)
        return 0.5 * (levels[m] + levels[n])


@dataclass(frozen=True)
class GaussianProfile:
    amplitude: float
    center: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError("profile width must be positive")
        if self.amplitude < 0:
            raise DomainError("profile amplitude must be non-negative")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-((x - self.center) ** 2) / (2.0 * self.width**2))


def decay_rates(dot: DotParams, pump: PumpParams, wg: WaveguideParams) -> DecayRates:
    g0 = dot.gamma10 * (dot.n10 + 1.0) + dot.gamma20 + pump.R
    g1 = dot.gamma21 * (dot.n21 + 1.0) + dot.gamma10 * dot.n10
    g2 = dot.gamma21 * dot.n21 + pump.R
    g21 = 0.5 * (g1 + g2)
    return DecayRates(
        Gamma0=g0, Gamma1=g1, Gamma2=g2,
        Gamma21=g21, Gamma20=0.5 * (g2 + g0), Gamma10=0.5 * (g1 + g0),
        GammaTotal=g21 + wg.gamma_lr, gamma_lr=wg.gamma_lr,
    )


def cooperativity(g, delta, rates: DecayRates, gamma_ref: float = 1.0):
    """Cooperativity ``2 g^2 Gamma / (gamma (delta^2 + Gamma^2))``.

    Vectorised over ``g`` and ``delta``.  Bounded above by ``2 g^2/(gamma Gamma)``
    with equality on resonance.
    """
    if gamma_ref <= 0:
        raise DomainError("gamma_ref must be positive")
    g = np.asarray(g, dtype=float)
    delta = np.asarray(delta, dtype=float)
    gam = rates.GammaTotal
    denom = delta**2 + gam**2
    if np.any(denom == 0):
        raise DomainError("cooperativity undefined for a lossless dot on resonance")
    out = 2.0 * g**2 * gam / (gamma_ref * denom)
    return out if out.ndim else float(out)


def gaussian_coupling(delta_i, profile: GaussianProfile):
    out = profile(delta_i)
    return out if np.ndim(out) else float(out)


def gain_threshold(M: int, G):
    """Standard gain threshold ``2/(M G)``."""
    G = np.asarray(G, dtype=float)
    if M < 1:
        raise DomainError("M must be >= 1")
    if np.any(G <= 0):
        raise DomainError("gain threshold needs a positive cooperativity")
    out = 2.0 / (M * G)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SystemParams:
    """Everything the multimode solvers need.

    ``dots`` holds one entry for a homogeneous ensemble or several dot classes
    (inhomogeneous broadening); ``weights`` are the fractions of ``pump.M`` in
    each class.  ``coop_profile`` fixes the cooperativities directly and
    bypasses the coupling/detuning mapping (homogeneous ensembles only).
    """

    modes: ModeSet
    dots: tuple[DotParams, ...]
    pump: PumpParams
    wg: WaveguideParams = field(default_factory=WaveguideParams)
    gamma_ref: float = 1.0
    weights: tuple[float, ...] | None = None
    coop_profile: tuple[float, ...] | None = None

    def __post_init__(self):
        dots = self.dots
        if isinstance(dots, DotParams):
            dots = (dots,)
        object.__setattr__(self, "dots", tuple(dots))
        k = len(self.dots)
        if k == 0:
            raise DomainError("need at least one dot class")
        if self.weights is None:
            object.__setattr__(self, "weights", (1.0 / k,) * k)
        w = np.asarray(self.weights, dtype=float)
        if len(w) != k or np.any(w < 0) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12):
            raise DomainError("weights must be non-negative, one per class, summing to 1")
        if self.coop_profile is not None:
            if k != 1:
                raise DomainError("a fixed cooperativity profile needs a homogeneous ensemble")
            cp = tuple(float(x) for x in self.coop_profile)
            if len(cp) != len(self.modes) or min(cp) < 0:
                raise DomainError("coop_profile must be non-negative, one entry per mode")
            object.__setattr__(self, "coop_profile", cp)
        if self.gamma_ref <= 0:
            raise DomainError("gamma_ref must be positive")

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def n_classes(self) -> int:
        return len(self.dots)

    @property
    def homogeneous(self) -> bool:
        return self.n_classes == 1 and self.dots[0].delta_omega12 == 0

    @property
    def dot(self) -> DotParams:
        if self.n_classes != 1:
            raise DomainError("ensemble has several dot classes")
        return self.dots[0]

    def class_counts(self) -> np.ndarray:
        """Number of dots per class (may be fractional)."""
        return self.pump.M * np.asarray(self.weights)

    def rates(self) -> list[DecayRates]:
        return [decay_rates(d, self.pump, self.wg) for d in self.dots]

    def coop(self) -> np.ndarray:
        """Cooperativity matrix of shape (classes, modes)."""
        if self.coop_profile is not None:
            return np.asarray(self.coop_profile)[None, :]
        out = np.empty((self.n_classes, self.n_modes))
        for k, (d, r) in enumerate(zip(self.dots, self.rates())):
            out[k] = cooperativity(self.modes.g, self.modes.delta - d.delta_omega12, r, self.gamma_ref)
        return out

    def coupling_sq(self) -> np.ndarray:
        """|g_i|^2 per class and mode; recovered from ``coop_profile`` on resonance if fixed."""
        if self.coop_profile is not None:
            gam = self.rates()[0].GammaTotal
            return (np.asarray(self.coop_profile) * self.gamma_ref * gam / 2.0)[None, :]
        return np.broadcast_to(self.modes.g**2, (self.n_classes, self.n_modes)).copy()

    def with_pump(self, R: float) -> "SystemParams":
        return SystemParams(self.modes, self.dots, PumpParams(R, self.pump.M), self.wg,
                            self.gamma_ref, self.weights, self.coop_profile)


def build_params(modes: ModeSet, dot: DotParams, pump: PumpParams,
                 wg: WaveguideParams | None = None, gamma_ref: float = 1.0) -> SystemParams:
    return SystemParams(modes, (dot,), pump, wg or WaveguideParams(), gamma_ref)
