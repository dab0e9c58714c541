"""Least-squares fits of power spectra.

Two models are available: a normalised Gaussian (area ``S0``) and the
multimode forward model, whose cooperativity follows a Gaussian in frequency
and whose stationary photon numbers are mapped onto the data by one free
amplitude scale.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares, minimize_scalar

from .errors import (ClampingError, ConvergenceError, DegenerateDataError, DomainError,
                     FitInfeasibleError, GridError)
from .model import DotParams, GaussianProfile, ModeSet, PumpParams, SystemParams, WaveguideParams
from .multi import _OrderParameter, order_parameter_exact
from .spectrum import Spectrum

_trapz = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class FitResult:
    profile: GaussianProfile
    residual_per_point: float
    iterations: int
    converged: bool
    scale: float | None = None
    model: np.ndarray | None = field(default=None, repr=False)


def residual_norm(data: Spectrum, model: Spectrum) -> float:
    """Mean squared difference ``sum (data - model)^2 / N`` on a shared grid."""
    if len(data) != len(model) or not np.array_equal(data.omega, model.omega):
        raise GridError("spectra must share the same frequency grid")
    return float(np.mean((data.S - model.S) ** 2))


def gaussian_spectrum(omega, S0: float, center: float, sigma: float) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    return S0 / (np.sqrt(2 * np.pi) * sigma) * np.exp(-((omega - center) ** 2) / (2 * sigma**2))


def _moments(omega, S):
    area = _trapz(S, omega)
    if not area > 0:
        raise DegenerateDataError("spectrum has no positive area")
    mean = _trapz(omega * S, omega) / area
    var = _trapz((omega - mean) ** 2 * S, omega) / area
    return area, mean, np.sqrt(var)


def _check_data(data: Spectrum, min_points: int = 4):
    if len(data) < min_points:
        raise DomainError(f"need at least {min_points} data points")
    if np.any(data.S < 0):
        raise DomainError("spectral power must be non-negative")
    if np.ptp(data.S) == 0:
        raise DegenerateDataError("all spectral values are equal")


def fit_gaussian(data: Spectrum, xtol: float = 1e-15, max_nfev: int = 2000) -> FitResult:
    """Fit ``S0/(sqrt(2 pi) sigma) exp(-(w - c)^2 / (2 sigma^2))``.

    Starts from the sample moments (trapezoidal area, weighted mean and std).
    Internally works in coordinates centred and scaled by those moments.
    """
    _check_data(data)
    omega, S = data.omega, data.S
    area, mean, std = _moments(omega, S)
    if not std > 0:
        raise DegenerateDataError("spectrum has zero width")
    t = (omega - mean) / std
    ys = S.max()
    y = S / ys
    a0 = area / (std * ys)

    def resid(p):
        a, c, s = p
        return a / (np.sqrt(2 * np.pi) * s) * np.exp(-((t - c) ** 2) / (2 * s * s)) - y

    def jac(p):
        a, c, s = p
        e = np.exp(-((t - c) ** 2) / (2 * s * s)) / (np.sqrt(2 * np.pi) * s)
        return np.column_stack([e, a * e * (t - c) / s**2, a * e * ((t - c) ** 2 / s**3 - 1 / s)])

    sol = least_squares(resid, [a0, 0.0, 1.0], jac=jac, method="lm",
                        xtol=xtol, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    if sol.status <= 0:
        raise ConvergenceError(f"Gaussian fit failed: {sol.message}")
    a, c, s = sol.x
    profile = GaussianProfile(a * std * ys, mean + c * std, abs(s) * std)
    model = gaussian_spectrum(omega, profile.amplitude, profile.center, profile.width)
    return FitResult(profile, float(np.mean((model - S) ** 2)), int(sol.nfev), True, model=model)


@dataclass(frozen=True)
class ModelFitSetup:
    """Quantities held fixed while fitting the forward model."""

    dot: DotParams = field(default_factory=lambda: DotParams(gamma21=0.1, gamma10=1.0))
    pump: PumpParams = field(default_factory=lambda: PumpParams(R=0.5, M=10_000))
    wg: WaveguideParams = field(default_factory=WaveguideParams)
    n_modes: int | None = None
    gamma_ref: float = 1.0


def _profile_params(omega, G0, center, sigma, setup: ModelFitSetup) -> SystemParams:
    if not G0 > 0 or not sigma > 0:
        raise FitInfeasibleError("cooperativity amplitude and width must be positive")
    modes_at = omega if setup.n_modes is None else np.linspace(omega[0], omega[-1], setup.n_modes)
    G = G0 * np.exp(-((modes_at - center) ** 2) / (2 * sigma**2))
    # detunings only label the modes; the cooperativity is fixed directly
    modes = ModeSet(tuple(np.arange(len(modes_at), dtype=float)), (0.0,) * len(modes_at))
    return SystemParams(modes, (setup.dot,), setup.pump, setup.wg, setup.gamma_ref, coop_profile=G)


def model_photon_numbers(omega, G0: float, center: float, sigma: float, setup: ModelFitSetup):
    """Stationary photon numbers on ``omega`` for a Gaussian cooperativity profile.

    Modes sit on the data grid unless ``setup.n_modes`` asks for an equidistant
    set spanning it, in which case the result is interpolated back.
    """
    omega = np.asarray(omega, dtype=float)
    params = _profile_params(omega, G0, center, sigma, setup)
    try:
        n = order_parameter_exact(params).n
    except ClampingError as exc:
        raise FitInfeasibleError(str(exc)) from exc
    if setup.n_modes is None:
        return n
    return np.interp(omega, np.linspace(omega[0], omega[-1], setup.n_modes), n)


def inversion_ratio(omega, G0: float, center: float, sigma: float, setup: ModelFitSetup) -> float:
    """Stationary inversion over the lowest gain threshold.

    Together with centre and width this ratio fixes the normalised shape of
    the photon-number profile, so two values of ``G0`` giving the same ratio
    cannot be told apart once the amplitude is free.
    """
    params = _profile_params(np.asarray(omega, dtype=float), G0, center, sigma, setup)
    steady = order_parameter_exact(params)
    return float(steady.w_s[0] / _OrderParameter(params).wc.min())


def _branch_peak(omega, center, sigma, setup):
    M = setup.pump.M
    lo, hi = np.log(1e-4 / M), np.log(1e4 / M)
    res = minimize_scalar(lambda lg: -inversion_ratio(omega, np.exp(lg), center, sigma, setup),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return float(res.x), (lo, hi)


def fit_model(data: Spectrum, setup: ModelFitSetup | None = None, branch: str = "weak",
              xtol: float = 1e-8, max_nfev: int = 400) -> FitResult:
    """Fit the forward model with Gaussian cooperativity ``G0 exp(-(w - c)^2/(2 sigma^2))``.

    Free parameters are ``G0``, the centre, the width and one amplitude scale
    that maps photon numbers onto the data units.  The optimiser is
    Levenberg-Marquardt with a finite-difference Jacobian, started from the
    best point of a coarse ``(G0, sigma)`` grid.

    The inversion ratio is not monotone in ``G0``; every shape is produced by
    one ``G0`` below its maximum (``branch="weak"``) and one above
    (``branch="strong"``).  The requested branch is enforced after the fit.
    """
    if branch not in ("weak", "strong"):
        raise ValueError("branch must be 'weak' or 'strong'")
    setup = setup or ModelFitSetup()
    _check_data(data)
    omega, S = data.omega, data.S
    _, mean, std = _moments(omega, S)
    ys = S.max()
    y = S / ys
    M = setup.pump.M

    def shape(logG, c, logs):
        return model_photon_numbers(omega, np.exp(logG), mean + c * std, std * np.exp(logs), setup)

    def best_scale(n):
        nn = n @ n
        return (n @ y) / nn if nn > 0 else 0.0

    # coarse start: M*G0 in [1e-3, 1e2], width from 0.5 to 3 sample stds
    best = None
    for logG in np.log(np.geomspace(1e-3, 1e2, 26) / M):
        for logs in np.log(np.linspace(0.5, 3.0, 11)):
            try:
                n = shape(logG, 0.0, logs)
            except FitInfeasibleError:
                continue
            a = best_scale(n)
            r = np.sum((a * n - y) ** 2)
            if best is None or r < best[0]:
                best = (r, logG, logs, a)
    if best is None:
        raise FitInfeasibleError("forward model is infeasible over the whole start grid")
    _, logG0, logs0, a0 = best

    def resid(p):
        logG, c, logs, loga = p
        try:
            return np.exp(loga) * shape(logG, c, logs) - y
        except FitInfeasibleError:
            return np.full_like(y, 1e3)

    def solve(p0):
        sol = least_squares(resid, p0, method="lm", xtol=xtol, ftol=1e-15, gtol=1e-15,
                            diff_step=1e-7, max_nfev=max_nfev)
        if sol.status <= 0:
            raise ConvergenceError(f"model fit failed: {sol.message}")
        return sol

    sol = solve([logG0, 0.0, logs0, np.log(a0)])
    nfev = sol.nfev
    logG, c, logs, loga = sol.x
    center, sigma = mean + c * std, std * np.exp(logs)
    peak, (lo, hi) = _branch_peak(omega, center, sigma, setup)
    wrong = logG > peak if branch == "weak" else logG < peak
    if wrong:
        # jump to the twin on the requested side of the maximum and polish
        x = inversion_ratio(omega, np.exp(logG), center, sigma, setup)
        other = (lo, peak) if branch == "weak" else (peak, hi)
        f = lambda lg: inversion_ratio(omega, np.exp(lg), center, sigma, setup) - x
        try:
            twin = brentq(f, *other, xtol=1e-14)
        except ValueError as exc:
            raise FitInfeasibleError(f"no {branch}-branch solution reproduces the fitted shape") from exc
        n = shape(twin, c, logs)
        sol = solve([twin, c, logs, np.log(best_scale(n))])
        nfev += sol.nfev
        logG, c, logs, loga = sol.x
    profile = GaussianProfile(float(np.exp(logG)), float(mean + c * std), float(std * np.exp(logs)))
    model = ys * np.exp(loga) * shape(logG, c, logs)
    return FitResult(profile, float(np.mean((model - S) ** 2)), int(nfev), True,
                     scale=float(ys * np.exp(loga)), model=model)
