"""Emission spectra, first-order correlation and passive transmission.

Lorentzians are normalised to unit area: ``L(x) = (1/pi) (G/2) / ((G/2)^2 + x^2)``
with full width at half maximum ``G``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.constants import hbar

from .errors import DomainError, GridError, LinewidthInstabilityError
from .model import SystemParams, WaveguideParams
from .multi import SteadyState


@dataclass(frozen=True)
class LorentzianResponse:
    Gamma: float
    center: float = 0.0

    def __post_init__(self):
        if not self.Gamma > 0:
            raise DomainError("Lorentzian width must be positive")

    def __call__(self, omega):
        return lorentzian(np.asarray(omega, dtype=float) - self.center, self.Gamma)


def lorentzian(x, width):
    h = 0.5 * np.asarray(width, dtype=float)
    return h / (np.pi * (h * h + np.asarray(x, dtype=float) ** 2))


@dataclass(frozen=True)
class Spectrum:
    omega: np.ndarray
    S: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        S = np.asarray(self.S, dtype=float)
        if omega.ndim != 1 or omega.shape != S.shape:
            raise GridError("omega and S must be 1-d arrays of equal length")
        check_grid(omega)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "S", S)

    def __len__(self):
        return len(self.omega)


def check_grid(omega):
    omega = np.asarray(omega, dtype=float)
    if omega.size == 0 or np.any(np.diff(omega) <= 0):
        raise GridError("frequency grid must be non-empty and strictly increasing")
    return omega


# ---------------------------------------------------------------- linewidth

def linewidth(params: SystemParams, steady: SteadyState, model: str = "coupling") -> np.ndarray:
    """Per-mode Lorentzian width ``2 (gamma_lr - xi_i)``.

    ``model="coupling"`` uses ``xi_i = 2 sum_k M_k |g_i|^2 w_k / Gamma21_k``.
    ``model="rate"`` uses the gain of the rate equations,
    ``xi_i = sum_k M_k gamma G_i^k w_k / 2``, which stays below ``gamma_lr``
    whenever a stationary state exists.
    """
    w = np.asarray(steady.w_s, dtype=float)
    Mk = params.class_counts()
    if model == "coupling":
        g21 = np.array([r.Gamma21 for r in params.rates()])
        if np.any(g21 <= 0):
            raise DomainError("linewidth needs a positive coherence decay rate")
        xi = 2.0 * np.sum((Mk * w / g21)[:, None] * params.coupling_sq(), axis=0)
    elif model == "rate":
        xi = 0.5 * params.gamma_ref * np.sum((Mk * w)[:, None] * params.coop(), axis=0)
    else:
        raise ValueError(f"unknown linewidth model {model!r}")
    width = 2.0 * (params.wg.gamma_lr - xi)
    if np.any(width <= 0):
        bad = int(np.argmin(width))
        raise LinewidthInstabilityError(
            f"mode {bad}: gain exceeds loss (width {width[bad]:.6g}); stationary spectrum undefined")
    return width


def g1(tau, i: int, steady: SteadyState, width: float, chi: float):
    """Two-time correlation ``<a_i^+(t) a_i(t + tau)>`` of mode ``i``."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise DomainError("g1 is defined here for tau >= 0")
    if not width > 0:
        raise LinewidthInstabilityError("g1 needs a positive linewidth")
    return steady.n[i] * np.exp((-1j * chi - 0.5 * width) * tau)


# ---------------------------------------------------------------- spectra

def mode_power(omega_i, wg: WaveguideParams):
    """Optical power prefactor ``hbar omega_i c gamma_r / (L delta_omega)`` (SI inputs)."""
    return hbar * np.asarray(omega_i, dtype=float) * C_LIGHT * wg.gamma_r / (wg.length_L * wg.mode_spacing)


def lorentzian_sum(grid, centers, widths, weights) -> np.ndarray:
    grid = check_grid(grid)
    centers, widths, weights = np.broadcast_arrays(
        np.asarray(centers, float), np.asarray(widths, float), np.asarray(weights, float))
    return np.sum(weights[None, :] * lorentzian(grid[:, None] - centers[None, :], widths[None, :]), axis=1)


def discrete_spectrum(steady: SteadyState, params: SystemParams, grid, widths=None,
                      units: str = "arbitrary", linewidth_model: str = "coupling") -> Spectrum:
    """Sum of Lorentzians at the mode frequencies ``omega_bar + delta_i`` weighted by ``P_i n_i``.

    ``units="arbitrary"`` sets every ``P_i`` to one; ``"physical"`` expects SI
    waveguide parameters and mode frequencies.
    """
    grid = check_grid(grid)
    if widths is None:
        widths = linewidth(params, steady, linewidth_model)
    widths = np.broadcast_to(np.asarray(widths, dtype=float), (params.n_modes,))
    if np.any(widths <= 0):
        raise LinewidthInstabilityError("all linewidths must be positive")
    centers = params.wg.omega_bar + params.modes.delta
    power = _power(centers, params.wg, units)
    S = lorentzian_sum(grid, centers, widths, power * steady.n)
    meta = {"kind": "discrete", "units": units, "linewidths": widths.tolist(),
            "mode_frequencies": centers.tolist()}
    return Spectrum(grid, S, meta)


def _power(centers, wg, units):
    if units == "arbitrary":
        return np.ones_like(centers)
    if units == "physical":
        return mode_power(centers, wg)
    raise ValueError(f"unknown units {units!r}")


def _segment_weights(out, x, h):
    """Exact integrals of ``L(out - x)`` against the hat functions on grid ``x``.

    Returns a matrix ``W`` with ``sum_j W[:, j] f(x_j) = int L(out - x) f_lin(x) dx``
    for the piecewise-linear interpolant ``f_lin`` of samples on ``x``.
    """
    u = out[:, None] - x[None, :]                 # u_j = omega - x_j
    u0, u1 = u[:, :-1], u[:, 1:]                  # u0 > u1 on each segment
    dx = np.diff(x)[None, :]
    I0 = np.arctan2((u0 - u1) * h, h * h + u0 * u1) / np.pi
    J = h / (2 * np.pi) * np.log((h * h + u0 * u0) / (h * h + u1 * u1))
    # int over a segment of L * (x - x0)/dx equals (u0 I0 - J)/dx
    right = (u0 * I0 - J) / dx
    left = I0 - right
    W = np.zeros((len(out), len(x)))
    W[:, :-1] += left
    W[:, 1:] += right
    return W


def continuum_spectrum(omega, n_s, width: float, power: float = 1.0,
                       mode_spacing: float = 1.0, out_grid=None, tail_tol: float = 1e-6) -> Spectrum:
    """Convolution of a Lorentzian with a sampled photon-number profile.

    ``n_s`` is treated as piecewise linear between samples and zero outside
    the grid; each segment is integrated in closed form, so the result is
    exact for that interpolant at any ratio of width to grid spacing.
    """
    omega = check_grid(omega)
    n_s = np.asarray(n_s, dtype=float)
    if n_s.shape != omega.shape:
        raise GridError("n_s must be sampled on omega")
    if not width > 0:
        raise DomainError("Lorentzian width must be positive")
    out = omega if out_grid is None else check_grid(out_grid)
    total = np.trapezoid(np.abs(n_s), omega) if hasattr(np, "trapezoid") else np.trapz(np.abs(n_s), omega)
    edge = (abs(n_s[0]) + abs(n_s[-1])) * (omega[-1] - omega[0])
    if total > 0 and edge > tail_tol * total:
        warnings.warn("photon-number profile does not decay at the grid edges; "
                      "truncated tails may bias the convolution", RuntimeWarning, stacklevel=2)
    # bounded-memory evaluation: about 2e6 matrix entries per block
    step = max(1, 2_000_000 // len(omega))
    S = np.concatenate([_segment_weights(out[k:k + step], omega, 0.5 * width) @ n_s
                        for k in range(0, len(out), step)])
    S *= power / mode_spacing
    meta = {"kind": "continuum", "width": float(width), "power": float(power),
            "mode_spacing": float(mode_spacing)}
    return Spectrum(out, S, meta)


# ---------------------------------------------------------------- passive waveguide

def transmission_matrix(omega: float, omega_i: float, channel_rates, phases) -> np.ndarray:
    """Six-channel input-output matrix of a passive waveguide mode.

    ``M = m / lambda`` with ``lambda = i(omega - omega_i) - gamma_lr``, diagonal
    ``m_aa = i(omega - omega_i) + (gamma_a - sum_{a' != a} gamma_a')/2`` and
    off-diagonal ``m_ab = zeta_a conj(zeta_b)``.
    """
    rates = np.asarray(channel_rates, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if rates.shape != (6,) or phases.shape != (6,):
        raise DomainError("need six channel rates and six phases")
    if np.any(rates < 0):
        raise DomainError("channel rates must be non-negative")
    total = rates.sum()
    if total == 0:
        return np.eye(6, dtype=complex)
    detune = 1j * (omega - omega_i)
    lam = detune - 0.5 * total
    zeta = np.sqrt(rates) * np.exp(1j * phases)
    m = np.outer(zeta, zeta.conj())
    m[np.diag_indices(6)] = detune + 0.5 * (rates - (total - rates))
    return m / lam


def passive_transmission(omega: float, omega_i: float, wg: WaveguideParams) -> np.ndarray:
    return transmission_matrix(omega, omega_i, wg.channel_rates(), wg.phases)


def passive_white_noise_spectrum(mode_frequencies, gamma: float, n: float, grid,
                                 units: str = "arbitrary", wg: WaveguideParams | None = None) -> Spectrum:
    """Output spectrum of channel 1 for a white-noise input of occupation ``n`` on channel 6.

    All open channels share the damping rate ``gamma``; each mode contributes
    a Lorentzian of width ``4 gamma``.
    """
    if n < 0:
        raise DomainError("occupation must be non-negative")
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    centers = np.atleast_1d(np.asarray(mode_frequencies, dtype=float))
    if units == "arbitrary":
        power = np.ones_like(centers)
    elif units == "physical":
        wg = wg or WaveguideParams()
        power = hbar * np.pi**2 * C_LIGHT * gamma * centers / (2.0 * wg.mode_spacing * wg.length_L)
    else:
        raise ValueError(f"unknown units {units!r}")
    width = 4.0 * gamma
    S = lorentzian_sum(grid, centers, width, power * n)
    return Spectrum(np.asarray(grid, float), S,
                    {"kind": "passive-white-noise", "width": width, "occupation": float(n), "units": units})


def passive_white_noise_continuum(band, gamma: float, n: float, grid, power: float = 1.0,
                                  mode_spacing: float = 1.0) -> Spectrum:
    """Continuum version: constant occupation ``n`` across ``band = (lo, hi)`` convolved with ``L_{4 gamma}``."""
    lo, hi = band
    if not hi > lo:
        raise GridError("band must satisfy lo < hi")
    grid = check_grid(grid)
    h = 2.0 * gamma
    # closed form of the box convolution
    S = (power / mode_spacing) * n * (np.arctan((grid - lo) / h) - np.arctan((grid - hi) / h)) / np.pi
    return Spectrum(grid, S, {"kind": "passive-white-noise-continuum", "width": 4.0 * gamma,
                              "occupation": float(n)})


def fwhm(x, y) -> float:
    """Full width at half maximum of a single-peaked sampled curve (linear interpolation)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    i = k
    while i > 0 and y[i] > half:
        i -= 1
    j = k
    while j < len(y) - 1 and y[j] > half:
        j += 1
    if y[i] > half or y[j] > half:
        raise DomainError("profile does not drop to half maximum inside the grid")
    left = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    right = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])
    return float(right - left)
