"""Multimode rate equations and their stationary solutions.

Three independent routes to the stationary state are provided:

* :func:`integrate_to_steady` -- stiff time integration until the right-hand
  side vanishes (used as the oracle for the algebraic solvers),
* :func:`newton_steady` -- damped Newton iteration on the algebraic system,
* :func:`order_parameter_exact` -- reduction to a scalar fixed-point equation
  for the order parameter ``phi = gamma * sum_i G_i n_i`` (homogeneous dots).

State vectors are packed as ``[n_1..n_N, sigma00_1..K, sigma11_1..K, sigma22_1..K]``
for ``K`` dot classes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import BDF, LSODA, Radau, solve_ivp
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import brentq

from .errors import (ClampingError, ConvergenceError, DomainError, PreconditionError,
                     SingularJacobianError)
from .model import SystemParams, cooperativity, decay_rates


@dataclass(frozen=True)
class SystemState:
    n: np.ndarray
    sigma00: np.ndarray
    sigma11: np.ndarray
    sigma22: np.ndarray

    def __post_init__(self):
        for name in ("n", "sigma00", "sigma11", "sigma22"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        k = len(self.sigma00)
        if len(self.sigma11) != k or len(self.sigma22) != k:
            raise DomainError("population arrays must share one length (number of dot classes)")

    @property
    def w(self) -> np.ndarray:
        return self.sigma11 - self.sigma22

    @property
    def trace(self) -> np.ndarray:
        return self.sigma00 + self.sigma11 + self.sigma22

    def pack(self) -> np.ndarray:
        return np.concatenate([self.n, self.sigma00, self.sigma11, self.sigma22])

    @classmethod
    def unpack(cls, y, n_modes: int) -> "SystemState":
        y = np.asarray(y, dtype=float)
        k = (len(y) - n_modes) // 3
        n = n_modes
        return cls(y[:n].copy(), y[n:n + k].copy(), y[n + k:n + 2 * k].copy(), y[n + 2 * k:].copy())

    @classmethod
    def cold(cls, n_modes: int, n_classes: int = 1) -> "SystemState":
        """Default initial state: all dots in level 0, no photons."""
        return cls(np.zeros(n_modes), np.ones(n_classes), np.zeros(n_classes), np.zeros(n_classes))


@dataclass(frozen=True)
class SteadyState:
    state: SystemState
    w_s: np.ndarray
    phi: float
    residual_norm: float
    solver: str = ""
    iterations: int = 0

    @property
    def n(self) -> np.ndarray:
        return self.state.n

    @property
    def n_total(self) -> float:
        return float(np.sum(self.state.n))


class _RateSystem:
    """Arrays reused by every evaluation of the right-hand side and its Jacobian."""

    def __init__(self, params: SystemParams):
        self.params = params
        self.N = params.n_modes
        self.K = params.n_classes
        self.A = params.gamma_ref * params.coop()          # (K, N)
        self.Mk = params.class_counts()                     # (K,)
        rates = params.rates()
        self.G0 = np.array([r.Gamma0 for r in rates])
        self.G1 = np.array([r.Gamma1 for r in rates])
        self.G2 = np.array([r.Gamma2 for r in rates])
        dots = params.dots
        self.g21 = np.array([d.gamma21 for d in dots])
        self.g10 = np.array([d.gamma10 for d in dots])
        self.g20 = np.array([d.gamma20 for d in dots])
        self.n21 = np.array([d.n21 for d in dots])
        self.n10 = np.array([d.n10 for d in dots])
        self.R = params.pump.R
        wg = params.wg
        # photon loss uses the mean left/right damping for every mode
        self.loss = 2.0 * wg.gamma_lr
        self.source = wg.n_l * wg.gamma_l + wg.n_r * wg.gamma_r

    def split(self, y):
        N, K = self.N, self.K
        return y[:N], y[N:N + K], y[N + K:N + 2 * K], y[N + 2 * K:N + 3 * K]

    def rhs(self, y):
        n, s0, s1, s2 = self.split(y)
        w = s1 - s2
        # exchange[k, i] = gamma G_i^k (n_i w^k + sigma11^k)
        exchange = self.A * (n[None, :] * w[:, None] + s1[:, None])
        T = exchange.sum(axis=1)
        dn = (self.Mk[:, None] * exchange).sum(axis=0) - self.loss * n + self.source
        ds2 = T - self.G2 * s2 + (self.R + self.g20) * s0 + self.g21 * (self.n21 + 1) * s1
        ds1 = -T + self.g21 * self.n21 * s2 - self.G1 * s1 + self.g10 * (self.n10 + 1) * s0
        ds0 = -self.G0 * s0 + self.g10 * self.n10 * s1 + self.R * s2
        return np.concatenate([dn, ds0, ds1, ds2])

    def jac(self, y):
        N, K = self.N, self.K
        n, s0, s1, s2 = self.split(y)
        w = s1 - s2
        A, Mk = self.A, self.Mk
        J = np.zeros((N + 3 * K, N + 3 * K))
        i0, i1, i2 = N, N + K, N + 2 * K
        ks = np.arange(K)
        # photon rows
        J[np.arange(N), np.arange(N)] = (Mk[:, None] * A * w[:, None]).sum(axis=0) - self.loss
        J[:N, i1:i1 + K] = (Mk[:, None] * A * (n[None, :] + 1)).T
        J[:N, i2:i2 + K] = (-Mk[:, None] * A * n[None, :]).T
        # derivatives of T_k
        dT_dn = A * w[:, None]                           # (K, N)
        dT_ds1 = (A * (n[None, :] + 1)).sum(axis=1)      # (K,)
        dT_ds2 = -(A * n[None, :]).sum(axis=1)
        # sigma22 rows
        J[i2 + ks, :N] = dT_dn
        J[i2 + ks, i0 + ks] = self.R + self.g20
        J[i2 + ks, i1 + ks] = dT_ds1 + self.g21 * (self.n21 + 1)
        J[i2 + ks, i2 + ks] = dT_ds2 - self.G2
        # sigma11 rows
        J[i1 + ks, :N] = -dT_dn
        J[i1 + ks, i0 + ks] = self.g10 * (self.n10 + 1)
        J[i1 + ks, i1 + ks] = -dT_ds1 - self.G1
        J[i1 + ks, i2 + ks] = -dT_ds2 + self.g21 * self.n21
        # sigma00 rows
        J[i0 + ks, i0 + ks] = -self.G0
        J[i0 + ks, i1 + ks] = self.g10 * self.n10
        J[i0 + ks, i2 + ks] = self.R
        return J

    def phi(self, n) -> float:
        w = np.asarray(self.params.weights)
        return float(np.sum(w * (self.A @ n)))

    def finish(self, y, solver, iterations=0, phi=None) -> SteadyState:
        state = SystemState.unpack(y, self.N)
        res = float(np.max(np.abs(self.rhs(y))))
        return SteadyState(state, state.w, self.phi(state.n) if phi is None else float(phi),
                           res, solver, iterations)


def _threshold(y, tol):
    return tol * (1.0 + np.max(np.abs(y)))


def rate_rhs(state: SystemState, params: SystemParams) -> SystemState:
    """Time derivative of photon numbers and level populations."""
    if len(state.n) != params.n_modes:
        raise DomainError(f"state has {len(state.n)} modes, parameters have {params.n_modes}")
    if len(state.sigma00) != params.n_classes:
        raise DomainError(f"state has {len(state.sigma00)} dot classes, parameters have {params.n_classes}")
    sys = _RateSystem(params)
    return SystemState.unpack(sys.rhs(state.pack()), params.n_modes)


def integrate_trajectory(params: SystemParams, init: SystemState | None, t_eval,
                         method: str = "BDF", rtol: float = 1e-10, atol: float = 1e-12):
    """Integrate the rate equations and return ``(t, Y)`` sampled at ``t_eval``."""
    sys = _RateSystem(params)
    init = init or SystemState.cold(sys.N, sys.K)
    t_eval = np.asarray(t_eval, dtype=float)
    sol = solve_ivp(lambda t, y: sys.rhs(y), (0.0, t_eval[-1]), init.pack(), method=method,
                    jac=lambda t, y: sys.jac(y), t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success:
        raise ConvergenceError(sol.message)
    return sol.t, sol.y


def integrate_to_steady(params: SystemParams, init: SystemState | None = None,
                        t_max: float = 1e9, tol: float = 1e-10, method: str = "BDF",
                        rtol: float = 1e-12, atol: float = 1e-14) -> SteadyState:
    """Stiff time integration until ``max|rhs| < tol * (1 + max|state|)``."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    sys = _RateSystem(params)
    init = init or SystemState.cold(sys.N, sys.K)
    y0 = init.pack()
    if np.max(np.abs(sys.rhs(y0))) < _threshold(y0, tol):
        return sys.finish(y0, "integrate")

    # step the integrator by hand and stop on the first accepted step that meets
    # the residual test; avoids event root-finding on a noisy criterion
    methods = {"BDF": BDF, "Radau": Radau, "LSODA": LSODA}
    if method not in methods:
        raise DomainError(f"method must be one of {', '.join(methods)}")
    stepper = methods[method](lambda t, y: sys.rhs(y), 0.0, y0, t_max, rtol=rtol, atol=atol,
                              jac=lambda t, y: sys.jac(y))
    steps = 0
    while stepper.status == "running":
        msg = stepper.step()
        steps += 1
        if stepper.status == "failed":
            raise ConvergenceError(f"integration failed: {msg}")
        if np.max(np.abs(sys.rhs(stepper.y))) < _threshold(stepper.y, tol):
            return sys.finish(stepper.y, "integrate", iterations=steps)
    out = sys.finish(stepper.y, "integrate", iterations=steps)
    raise ConvergenceError(f"t_max={t_max} reached with residual {out.residual_norm:.3e}")


def newton_steady(params: SystemParams, init: SystemState | SteadyState | None = None,
                  tol: float = 1e-11, max_iter: int = 200, max_halvings: int = 30,
                  floor: float = 1e-12) -> SteadyState:
    """Damped Newton solve of ``rate_rhs = 0`` with the trace fixed to one.

    Steps are halved until the iterate stays non-negative (down to ``-floor``
    relative) and the Newton correction shrinks.

    Without a seed, a loosely converged time integration is used.
    """
    sys = _RateSystem(params)
    N, K = sys.N, sys.K
    if init is None:
        init = _default_seed(params)
    if isinstance(init, SteadyState):
        init = init.state
    y = init.pack().astype(float)
    pop = slice(N, N + K)  # sigma00 rows are replaced by the trace constraint

    def system(y):
        F = sys.rhs(y)
        s0, s1, s2 = y[N:N + K], y[N + K:N + 2 * K], y[N + 2 * K:]
        full = np.max(np.abs(np.concatenate([F, s0 + s1 + s2 - 1.0])))
        F[pop] = s0 + s1 + s2 - 1.0
        return F, full

    F, merit = system(y)
    it = 0
    while merit > _threshold(y, tol):
        if it >= max_iter:
            raise ConvergenceError(f"Newton did not converge in {max_iter} iterations "
                                   f"(residual {merit:.3e})")
        J = sys.jac(y)
        J[pop, :] = 0.0
        J[N + np.arange(K), N + np.arange(K)] = 1.0
        J[N + np.arange(K), N + K + np.arange(K)] = 1.0
        J[N + np.arange(K), N + 2 * K + np.arange(K)] = 1.0
        try:
            lu = lu_factor(J, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SingularJacobianError(str(exc)) from exc
        if np.any(np.diag(lu[0]) == 0):
            raise SingularJacobianError("singular Jacobian")
        step = lu_solve(lu, -F)
        if not np.all(np.isfinite(step)):
            raise SingularJacobianError("non-finite Newton step")
        # natural-level test: the next correction, built with the same Jacobian,
        # must shrink; raw residuals mix rows scaled by M and by O(1) rates
        weight = 1.0 + np.abs(y)
        size = np.max(np.abs(step) / weight)
        lam = 1.0
        for _ in range(max_halvings + 1):
            y_new = y + lam * step
            # photon numbers and populations may not go negative; this also keeps
            # the iterate from jumping across a gain-threshold pole
            if np.min(y_new) < -floor * (1.0 + np.max(np.abs(y_new))):
                lam *= 0.5
                continue
            F_new, merit_new = system(y_new)
            trial = lu_solve(lu, -F_new)
            if np.all(np.isfinite(trial)) and (np.max(np.abs(trial) / weight) < size
                                                or merit_new <= _threshold(y_new, tol)):
                break
            lam *= 0.5
        else:
            raise ConvergenceError(f"damping failed after {max_halvings} halvings "
                                   f"(residual {merit:.3e})")
        y, F, merit = y_new, F_new, merit_new
        it += 1
    return sys.finish(y, "newton", iterations=it)


def _default_seed(params: SystemParams) -> SystemState:
    # a loose integration lands well inside the basin; the closed-form
    # approximation can sit 20% off and let full steps cross a threshold pole
    return integrate_to_steady(params, tol=1e-6).state


def _order_parameter_applies(params: SystemParams) -> bool:
    return params.homogeneous and params.dot.thermal_free and params.wg.vacuum_inputs


def _check_order_parameter(params: SystemParams):
    if not params.homogeneous:
        raise PreconditionError("order-parameter reduction needs identical dots")
    if not params.dot.thermal_free:
        raise PreconditionError("order-parameter reduction needs n10 = n21 = gamma20 = 0")
    if not params.wg.vacuum_inputs:
        raise PreconditionError("order-parameter reduction needs vacuum inputs")


class _OrderParameter:
    """Population and inversion as functions of the order parameter."""

    def __init__(self, params: SystemParams):
        _check_order_parameter(params)
        dot, R = params.dot, params.pump.R
        self.params = params
        self.gam = params.gamma_ref
        self.G = params.coop()[0]
        self.R = R
        self.g10, self.g21 = dot.gamma10, dot.gamma21
        self.Gbar = float(self.G.sum())
        self.alpha = 3.0 * R + 2.0 * self.g10
        self.beta = (self.gam * self.Gbar + self.g21) * (self.g10 + 2.0 * R) + self.g10 * R
        self.C = self.g10 * R - (self.gam * self.Gbar + self.g21) * (self.g10 + R)
        active = self.G > 0
        self.active = active
        wc = np.full_like(self.G, np.inf)
        wc[active] = 2.0 * params.wg.gamma_lr / (params.pump.M * self.gam * self.G[active])
        self.wc = wc

    def sigma11(self, phi):
        return (phi * (self.g10 + self.R) + self.g10 * self.R) / (self.alpha * phi + self.beta)

    def w(self, phi):
        return self.C / (self.alpha * phi + self.beta)

    def photons(self, phi) -> np.ndarray:
        w = self.w(phi)
        wmin = self.wc.min()
        if w >= wmin:
            raise ClampingError(f"stationary inversion {w:.6g} reaches gain threshold {wmin:.6g}")
        n = np.zeros_like(self.G)
        n[self.active] = self.sigma11(phi) / (self.wc[self.active] - w)
        return n

    def steady(self, phi, solver) -> SteadyState:
        n = self.photons(phi)
        s11 = self.sigma11(phi)
        s22 = s11 - self.w(phi)
        y = np.concatenate([n, [1.0 - s11 - s22], [s11], [s22]])
        return _RateSystem(self.params).finish(y, solver, phi=phi)


def order_parameter_exact(params: SystemParams, rtol: float = 1e-12) -> SteadyState:
    """Solve the scalar self-consistency equation for ``phi`` and rebuild the state."""
    op = _OrderParameter(params)
    if not np.any(op.active) or op.sigma11(0.0) == 0.0:
        # no gain medium coupling or no pumping: phi = 0 is the fixed point
        if op.w(0.0) >= op.wc.min():
            raise ClampingError("inversion above threshold without photons")
        return op.steady(0.0, "order-parameter")
    wc = op.wc[op.active]
    A = op.gam * op.G[op.active]

    def h(phi):
        with np.errstate(divide="ignore"):
            return phi - op.sigma11(phi) * np.sum(A / (wc - op.w(phi)))

    wmin = wc.min()
    lo = 0.0
    if op.w(0.0) >= wmin:
        # below this phi the inversion sits above the lowest threshold
        lo = (op.C / wmin - op.beta) / op.alpha
        lo = np.nextafter(lo * (1 + 1e-15), np.inf)
        # step off the pole so brentq sees a finite negative value
        while not (np.isfinite(h(lo)) and h(lo) < 0):
            lo = np.nextafter(lo, np.inf) if lo == 0 else lo * (1 + 1e-13)
    hi = max(1.0, 2.0 * lo)
    while h(hi) < 0:
        hi *= 2.0
        if hi > 1e300:
            raise ConvergenceError("could not bracket the order parameter")
    phi = brentq(h, lo, hi, xtol=1e-300, rtol=max(rtol, 4 * np.finfo(float).eps), maxiter=500)
    return op.steady(phi, "order-parameter")


def max_coupling_cooperativity(params: SystemParams, coupling_fraction: float = 2.0 / 3.0) -> float:
    """Cooperativity of the strongest mode with its coupling scaled by ``coupling_fraction``."""
    if params.coop_profile is not None:
        return coupling_fraction**2 * max(params.coop_profile)
    g = params.modes.g
    k = int(np.argmax(g))
    rates = decay_rates(params.dot, params.pump, params.wg)
    return cooperativity(coupling_fraction * g[k], params.modes.delta[k], rates, params.gamma_ref)


def order_parameter_approx(params: SystemParams, coupling_fraction: float = 2.0 / 3.0):
    """Closed-form approximate order parameter, returned as ``(phi, SteadyState)``.

    Every threshold in the numerator of the self-consistency sum is replaced by
    the smallest one, evaluated for the cooperativity at ``coupling_fraction``
    times the maximum coupling.  With ``coupling_fraction=1`` and equal
    cooperativities the result is exact.  ``SteadyState.phi`` carries the
    approximate value, not the one recomputed from the photon numbers.
    """
    op = _OrderParameter(params)
    Gmax = max_coupling_cooperativity(params, coupling_fraction)
    if Gmax <= 0:
        raise DomainError("approximation needs a coupled mode")
    wmin = 2.0 * params.wg.gamma_lr / (params.pump.M * op.gam * Gmax)
    R = op.R
    A = (op.g10 * R - op.g21 * (op.g10 + R) - wmin * op.beta) / (2.0 * wmin * op.alpha)
    B = op.gam * op.Gbar * op.g10 * R / (wmin * op.alpha)
    root = np.sqrt(A * A + B)
    phi = A + root if A >= 0 else B / (root - A)
    return float(phi), op.steady(phi, "order-parameter-approx")
