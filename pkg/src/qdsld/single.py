"""Closed-form stationary photon number for one mode and M identical dots.

Valid for negligible bath occupations, ``gamma20 = 0`` and vacuum inputs.  The
general multimode machinery lives in :mod:`qdsld.multi`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NoRootError, PreconditionError
from .model import (DotParams, ModeSet, PumpParams, WaveguideParams, cooperativity,
                    decay_rates, gain_threshold)


@dataclass(frozen=True)
class SingleModeSolution:
    n_s: float
    a: float
    b: float
    alpha: float
    beta: float
    w_c: float
    G: float
    R: float


def _unpack_mode(mode):
    if isinstance(mode, ModeSet):
        if len(mode) != 1:
            raise PreconditionError("single-mode formula needs exactly one mode")
        return mode.couplings[0], mode.detunings[0]
    g, delta = mode
    return float(g), float(delta)


def _check_regime(dot: DotParams, wg: WaveguideParams):
    if not dot.thermal_free:
        raise PreconditionError("closed form requires n10 = n21 = 0 and gamma20 = 0; use qdsld.multi")
    if not wg.vacuum_inputs:
        raise PreconditionError("closed form requires vacuum inputs; use qdsld.multi")


def _pieces(g, delta, dot, R, M, wg, gamma_ref):
    pump = PumpParams(R, M)
    G = cooperativity(g, delta, decay_rates(dot, pump, wg), gamma_ref)
    # reduces to 2/(M G) for gamma_l = gamma_r = gamma_ref
    w_c = gain_threshold(M, G) * wg.gamma_lr / gamma_ref
    alpha = 3.0 * R + 2.0 * dot.gamma10
    beta = (gamma_ref * G + dot.gamma21) * (dot.gamma10 + 2.0 * R) + dot.gamma10 * R
    numer = dot.gamma10 * R - dot.gamma21 * (dot.gamma10 + R) - w_c * beta
    return G, w_c, alpha, beta, numer


def single_mode_steady(mode, dot: DotParams, pump: PumpParams,
                       wg: WaveguideParams | None = None, gamma_ref: float = 1.0) -> SingleModeSolution:
    """Stationary photon number ``n_s = a + sqrt(a^2 + b)``.

    ``mode`` is a ``(g, delta)`` pair or a one-mode :class:`ModeSet`.
    """
    wg = wg or WaveguideParams()
    _check_regime(dot, wg)
    g, delta = _unpack_mode(mode)
    R = pump.R
    G, w_c, alpha, beta, numer = _pieces(g, delta, dot, R, pump.M, wg, gamma_ref)
    scale = w_c * gamma_ref * G * alpha
    a = numer / (2.0 * scale)
    b = dot.gamma10 * R / scale
    root = np.sqrt(a * a + b)
    # rationalised branch keeps n_s >= 0 and exact zero at b = 0
    n_s = a + root if a >= 0 else b / (root - a)
    return SingleModeSolution(float(n_s), float(a), float(b), alpha, float(beta), float(w_c), float(G), R)


def no_se_branch(mode, dot: DotParams, pump: PumpParams,
                 wg: WaveguideParams | None = None, gamma_ref: float = 1.0) -> float:
    """Photon number with spontaneous emission switched off: ``2 max(a, 0)``."""
    sol = single_mode_steady(mode, dot, pump, wg, gamma_ref)
    return 2.0 * max(sol.a, 0.0)


def threshold_function(R, mode, dot, wg, M, gamma_ref=1.0, threshold_term=True):
    """Numerator of ``a(R)``; its lowest positive root is the critical pump rate."""
    g, delta = _unpack_mode(mode)
    if threshold_term:
        return _pieces(g, delta, dot, R, M, wg, gamma_ref)[-1]
    return dot.gamma10 * R - dot.gamma21 * (dot.gamma10 + R)


def critical_pump_rate(mode, dot: DotParams, wg: WaveguideParams | None, M: int,
                       gamma_ref: float = 1.0, threshold_term: bool = True,
                       bracket=(1e-6, 10.0), rtol: float = 1e-10) -> float:
    """Lowest pump rate at which the no-spontaneous-emission branch switches on.

    With ``threshold_term=False`` the ``w_c beta`` term is dropped, giving the
    large-ensemble limit ``gamma21 gamma10 / (gamma10 - gamma21)``.
    """
    wg = wg or WaveguideParams()
    _check_regime(dot, wg)
    if dot.gamma21 >= dot.gamma10:
        raise NoRootError("no population inversion possible for gamma21 >= gamma10")
    if not threshold_term:
        return dot.gamma21 * dot.gamma10 / (dot.gamma10 - dot.gamma21)

    def f(R):
        return threshold_function(R, mode, dot, wg, M, gamma_ref)

    lo, hi = bracket
    root_bracket = None
    while root_bracket is None:
        grid = np.geomspace(lo, hi, 400)
        vals = np.array([f(r) for r in grid])
        up = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
        if up.size:
            k = up[0]
            root_bracket = (grid[k], grid[k + 1])
        elif hi >= 1e6:
            raise NoRootError("threshold function has no sign change below R = 1e6")
        else:
            lo, hi = hi, hi * 10.0
    a, b = root_bracket
    r = brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    # polish with central-difference Newton steps
    for _ in range(5):
        h = 1e-7 * r
        d = (f(r + h) - f(r - h)) / (2 * h)
        fr = f(r)
        if d == 0 or fr == 0:
            break
        step = fr / d
        if not a <= r - step <= b or abs(f(r - step)) > abs(fr):
            break
        r -= step
        if abs(step) <= rtol * r:
            break
    return float(r)
