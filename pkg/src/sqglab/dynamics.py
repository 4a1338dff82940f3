"""Forced dissipative SQG on the 2-torus.

    d_t theta + kappa Lambda^gamma theta + u.grad theta = f,   u = R^perp theta,

with an optional -eps Delta regularization.  The linear part is diagonal in
Fourier space and handled exactly by the exponential integrators in
``timestepping``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .spectral import (
    SpectralField, TorusGrid, advection_coeffs, from_function, ifft2,
    random_field, sobolev_norm_coeffs,
)
from .timestepping import StepperConfig, check_finite, propagator


class HypothesisError(ValueError):
    """A structural parameter hypothesis is violated."""


@dataclass(frozen=True)
class Forcing:
    """f(x, t) = steady(x) + cos(2 pi t / period) * periodic(x)."""

    steady: SpectralField | None = None
    periodic: SpectralField | None = None
    period: float | None = None

    def __post_init__(self):
        if self.periodic is not None and not (self.period and self.period > 0):
            raise ValueError("periodic forcing needs a positive period")
        for f in (self.steady, self.periodic):
            if f is not None and abs(f.coeffs[0, 0]) > 0:
                raise ValueError("forcing must be mean-zero")

    @property
    def grid(self) -> TorusGrid | None:
        for f in (self.steady, self.periodic):
            if f is not None:
                return f.grid
        return None

    @property
    def time_dependent(self) -> bool:
        return self.periodic is not None

    def coeffs(self, t: float, grid: TorusGrid) -> np.ndarray:
        out = np.zeros((grid.n, grid.n), complex)
        if self.steady is not None:
            out += self.steady.coeffs
        if self.periodic is not None:
            out += math.cos(2 * math.pi * t / self.period) * self.periodic.coeffs
        return out

    def at(self, t: float, grid: TorusGrid) -> SpectralField:
        return SpectralField(grid, self.coeffs(t, grid))

    def sup_norm(self, norm: Callable[[SpectralField], float], grid: TorusGrid, samples: int = 64) -> float:
        """sup over one period of norm(f(t)) (exact for steady forcing)."""
        if not self.time_dependent:
            return norm(self.at(0.0, grid))
        ts = np.linspace(0.0, self.period, samples, endpoint=False)
        return max(norm(self.at(t, grid)) for t in ts)


@dataclass(frozen=True)
class SqgParams:
    kappa: float
    gamma: float
    forcing: Forcing = field(default_factory=Forcing)
    eps_viscosity: float = 0.0
    advection: bool = True

    def __post_init__(self):
        if not 1.0 < self.gamma < 2.0:
            raise HypothesisError(f"(H1) requires 1 < gamma < 2, got gamma={self.gamma}")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.eps_viscosity < 0:
            raise ValueError("eps_viscosity must be nonnegative")
        f = self.forcing
        if f is None:
            object.__setattr__(self, "forcing", Forcing())
        elif isinstance(f, SpectralField):
            object.__setattr__(self, "forcing", Forcing(steady=f))

    def linear_symbol(self, grid: TorusGrid) -> np.ndarray:
        L = self.kappa * grid.symbol_power(self.gamma)
        if self.eps_viscosity:
            L = L + self.eps_viscosity * grid.symbol_power(2.0)
        return L

    def resolve_grid(self, grid: TorusGrid | None = None) -> TorusGrid:
        g = grid or self.forcing.grid
        if g is None:
            raise ValueError("no grid: pass one explicitly when the forcing is zero")
        return g


class Trajectory:
    """Uniformly sampled sequence of fields on one grid."""

    def __init__(self, grid: TorusGrid, t0: float, dt: float, data, records=None):
        data = np.asarray(data, dtype=complex)
        if data.ndim != 3 or data.shape[1:] != (grid.n, grid.n):
            raise ValueError("trajectory data must have shape (T, n, n)")
        if not dt > 0:
            raise ValueError("sampling step must be positive")
        self.grid = grid
        self.t0 = float(t0)
        self.dt = float(dt)
        self.data = data
        self.records = records or []
        self.meta: dict = {}

    @classmethod
    def from_samples(cls, samples, t0: float, dt: float) -> "Trajectory":
        samples = list(samples)
        return cls(samples[0].grid, t0, dt, np.stack([s.coeffs for s in samples]))

    @classmethod
    def constant(cls, f: SpectralField, t0: float, dt: float, count: int) -> "Trajectory":
        return cls(f.grid, t0, dt, np.repeat(f.coeffs[None], count, axis=0))

    def __len__(self):
        return self.data.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self) - 1)

    @property
    def samples(self) -> list[SpectralField]:
        return [SpectralField(self.grid, c) for c in self.data]

    def sample(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.data[i])

    def at(self, s: float) -> np.ndarray:
        """Linear interpolation in time, clamped to the sampled range."""
        u = (s - self.t0) / self.dt
        last = len(self) - 1
        if u <= 0:
            return self.data[0]
        if u >= last:
            return self.data[last]
        i = int(math.floor(u))
        w = u - i
        if w < 1e-12:
            return self.data[i]
        if w > 1 - 1e-12:
            return self.data[i + 1]
        return (1 - w) * self.data[i] + w * self.data[i + 1]

    def map(self, fn) -> "Trajectory":
        """Apply fn to the coefficient stack (fn acts on a (T, n, n) array)."""
        return Trajectory(self.grid, self.t0, self.dt, fn(self.data))

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.grid, self.t0, self.dt, self.data - other.data)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(self.grid, self.t0, self.dt, self.data + other.data)

    def norms(self, sigma: float) -> np.ndarray:
        w = self.grid.symbol_power(2 * sigma)
        return np.sqrt(np.einsum("kl,tkl->t", w, np.abs(self.data) ** 2))


@dataclass
class DiagnosticsRecord:
    t: float
    values: dict

    def row(self, columns) -> list[float]:
        return [self.t] + [self.values[c] for c in columns]


NORM_COLUMNS = ("l2proxy", "hsigma", "lp", "linf", "energy_residual")


def sqg_rhs(grid: TorusGrid, params: SqgParams) -> Callable:
    """Nonlinear part N(theta_hat, t) = -(u.grad theta)^ + f_hat(t)."""
    forcing = params.forcing
    static = None if forcing.time_dependent else forcing.coeffs(0.0, grid)

    def rhs(c, t):
        f = static if static is not None else forcing.coeffs(t, grid)
        if not params.advection:
            return f.copy()
        return f - advection_coeffs(grid, c)

    return rhs


def sqg_step(state: SpectralField, params: SqgParams, cfg: StepperConfig, t: float = 0.0) -> SpectralField:
    grid = state.grid
    check_finite(state.coeffs, grid, t)
    prop = propagator(params.linear_symbol(grid), cfg.dt, cfg.scheme)
    out = prop.step(state.coeffs, t, sqg_rhs(grid, params))
    check_finite(out, grid, t + cfg.dt, last_good=state)
    return SpectralField(grid, out)


def cfl_number(c: np.ndarray, grid: TorusGrid, dt: float) -> float:
    vel, _ = grid.packed_symbols
    z = ifft2(c * vel) * grid.n**2
    umax = float(np.sqrt(z.real**2 + z.imag**2).max())
    return dt * umax * grid.n / (2 * np.pi)


def _energy_terms(grid, params, c, t):
    # instantaneous d/dt |theta|^2 predicted by the balance: -2 sum L|c|^2 + 2<f, c>
    L = params.linear_symbol(grid)
    e2 = c.real**2 + c.imag**2
    f = params.forcing.coeffs(t, grid)
    return -2.0 * float(np.sum(L * e2)) + 2.0 * float(np.real(np.vdot(f, c)))


def integrate(theta0: SpectralField, params: SqgParams, cfg: StepperConfig, t_span: float,
              sample_every: int = 1, t0: float = 0.0, sigma: float = 1.0, p: float = 4.0,
              diagnostics: bool = True, sink: Callable | None = None) -> Trajectory:
    """Integrate from theta0 over t_span, sampling every sample_every steps.

    With diagnostics on, each sample produces a DiagnosticsRecord holding the
    coefficient L^2 norm, the sigma Sobolev norm, the L^p and L^inf norms and
    the running trapezoid residual of the energy balance.
    """
    if not t_span > 0:
        raise ValueError("t_span must be positive")
    grid = theta0.grid
    nsteps = int(round(t_span / cfg.dt))
    if abs(nsteps * cfg.dt - t_span) > 1e-9 * max(1.0, t_span):
        raise ValueError("t_span must be a multiple of dt")
    if nsteps % sample_every:
        raise ValueError("number of steps must be a multiple of sample_every")
    prop = propagator(params.linear_symbol(grid), cfg.dt, cfg.scheme)
    rhs = sqg_rhs(grid, params)
    c = np.array(theta0.coeffs)
    check_finite(c, grid, t0)
    cfl = cfl_number(c, grid, cfg.dt)
    if cfl > cfg.cfl_limit:
        warnings.warn(f"initial CFL number {cfl:.3g} exceeds {cfg.cfl_limit}", RuntimeWarning)
    out = [c.copy()]
    records = []
    t = t0
    e_prev = None
    if diagnostics:
        acc = 0.0
        e0 = float(np.sum(np.abs(c) ** 2))
        e_prev = _energy_terms(grid, params, c, t)
        records.append(_record(grid, c, t, sigma, p, 0.0))
        if sink:
            sink(records[-1])
    t_last = t
    for step in range(1, nsteps + 1):
        new = prop.step(c, t, rhs)
        t = t0 + step * cfg.dt
        check_finite(new, grid, t, last_good=SpectralField(grid, c))
        c = new
        if step % sample_every == 0:
            out.append(c.copy())
            if diagnostics:
                e_now = _energy_terms(grid, params, c, t)
                acc += 0.5 * (t - t_last) * (e_prev + e_now)
                e_prev, t_last = e_now, t
                resid = float(np.sum(np.abs(c) ** 2)) - e0 - acc
                records.append(_record(grid, c, t, sigma, p, resid))
                if sink:
                    sink(records[-1])
    traj = Trajectory(grid, t0, cfg.dt * sample_every, np.stack(out), records)
    return traj


def _record(grid, c, t, sigma, p, resid) -> DiagnosticsRecord:
    vals = np.real(ifft2(c)) * grid.n**2
    av = np.abs(vals)
    lp = float((grid.cell_area * np.sum(av**p)) ** (1.0 / p))
    return DiagnosticsRecord(t, {
        "l2proxy": sobolev_norm_coeffs(grid, c, 0.0),
        "hsigma": sobolev_norm_coeffs(grid, c, sigma),
        "lp": lp,
        "linf": float(av.max()),
        "energy_residual": resid,
    })


def random_initial_condition(grid: TorusGrid, seed: int, sigma: float = 1.0, norm: float = 1.0,
                             kmax: float = 4.0) -> SpectralField:
    rng = np.random.Generator(np.random.Philox(seed))
    return random_field(grid, rng, kmax=kmax, sigma=sigma, norm=norm)


def attractor_sample(params: SqgParams, cfg: StepperConfig, spinup: float, window: float, seed: int,
                     grid: TorusGrid | None = None, sample_every: int = 1, sigma: float = 1.0,
                     ic_norm: float = 1.0, diagnostics: bool = False) -> Trajectory:
    """Spin up a random smooth initial condition and return the following window.

    ``traj.meta['settled']`` records whether the running max of the sigma
    norm drifted by less than 1% over the last third of the spin-up.
    """
    grid = params.resolve_grid(grid)
    theta = random_initial_condition(grid, seed, sigma, ic_norm)
    settled, drift = True, 0.0
    if spinup > 0:
        spin = integrate(theta, params, cfg, spinup, sample_every=1, sigma=sigma, diagnostics=False)
        norms = spin.norms(sigma)
        third = len(norms) // 3
        m_mid = float(norms[third:2 * third].max())
        m_end = float(norms[2 * third:].max())
        drift = abs(m_end - m_mid) / max(m_mid, 1e-300)
        settled = abs(m_end - m_mid) <= 0.01 * m_mid + 1e-8
        theta = spin.sample(len(spin) - 1)
        del spin
    traj = integrate(theta, params, cfg, window, sample_every=sample_every, t0=spinup,
                     sigma=sigma, diagnostics=diagnostics)
    traj.meta.update(settled=bool(settled), spinup_drift=drift, seed=seed, spinup=spinup)
    if not settled:
        warnings.warn(f"attractor spin-up not settled (drift {drift:.3g})", RuntimeWarning)
    return traj


def steady_residual(theta: SpectralField, params: SqgParams, sigma: float = 1.0, t: float = 0.0) -> float:
    """|kappa Lambda^gamma theta + u.grad theta - f| in the (sigma - gamma) norm."""
    grid = theta.grid
    c = theta.coeffs
    r = params.linear_symbol(grid) * c - params.forcing.coeffs(t, grid)
    if params.advection:
        r = r + advection_coeffs(grid, c)
    return sobolev_norm_coeffs(grid, r, sigma - params.gamma)


@dataclass
class SteadyState:
    theta: SpectralField
    residual: float
    converged: bool
    t: float
    history: list


def steady_state_find(params: SqgParams, cfg: StepperConfig, tol: float, t_max: float,
                      theta0: SpectralField | None = None, grid: TorusGrid | None = None,
                      sigma: float = 1.0, check_every: int = 10) -> SteadyState:
    """Forward-integrate until the steady residual drops below tol."""
    if params.forcing.time_dependent:
        raise ValueError("steady_state_find needs time-independent forcing")
    grid = theta0.grid if theta0 is not None else params.resolve_grid(grid)
    theta = theta0 if theta0 is not None else grid.zeros()
    prop = propagator(params.linear_symbol(grid), cfg.dt, cfg.scheme)
    rhs = sqg_rhs(grid, params)
    c = np.array(theta.coeffs)
    res = steady_residual(theta, params, sigma)
    history = [(0.0, res)]
    best = (res, c.copy(), 0.0)
    nsteps = int(math.ceil(t_max / cfg.dt))
    step = 0
    while res >= tol and step < nsteps:
        new = prop.step(c, step * cfg.dt, rhs)
        step += 1
        check_finite(new, grid, step * cfg.dt, last_good=SpectralField(grid, c))
        c = new
        if step % check_every == 0 or step == nsteps:
            res = steady_residual(SpectralField(grid, c), params, sigma)
            history.append((step * cfg.dt, res))
            if res < best[0]:
                best = (res, c.copy(), step * cfg.dt)
    res, c, t = best
    return SteadyState(SpectralField(grid, c), res, res < tol, t, history)


@dataclass
class PeriodicOrbit:
    orbit: Trajectory
    converged: bool
    residuals: list
    closure: float
    period: float


def _advance(c, prop, rhs, t, nsteps, dt, grid, keep_every=0):
    kept = [c.copy()] if keep_every else None
    for s in range(nsteps):
        new = prop.step(c, t + s * dt, rhs)
        check_finite(new, grid, t + (s + 1) * dt, last_good=SpectralField(grid, c))
        c = new
        if keep_every and (s + 1) % keep_every == 0:
            kept.append(c.copy())
    return c, kept


def periodic_orbit_find(params: SqgParams, cfg: StepperConfig, tol: float, max_iters: int,
                        theta0: SpectralField | None = None, grid: TorusGrid | None = None,
                        sigma: float = 1.0, period: float | None = None, spinup: float = 0.0,
                        sample_every: int = 1) -> PeriodicOrbit:
    """Picard iteration of the period map theta -> S(tau_f; 0) theta."""
    tau = params.forcing.period if params.forcing.time_dependent else (period or 1.0)
    grid = theta0.grid if theta0 is not None else params.resolve_grid(grid)
    nper = int(round(tau / cfg.dt))
    if abs(nper * cfg.dt - tau) > 1e-9 * tau:
        raise ValueError("forcing period must be a multiple of dt")
    prop = propagator(params.linear_symbol(grid), cfg.dt, cfg.scheme)
    rhs = sqg_rhs(grid, params)
    c = np.array((theta0 if theta0 is not None else grid.zeros()).coeffs)
    if spinup > 0:
        nspin = int(round(spinup / tau)) * nper
        c, _ = _advance(c, prop, rhs, 0.0, nspin, cfg.dt, grid)
    residuals = []
    converged = False
    for _ in range(max_iters):
        new, _ = _advance(c, prop, rhs, 0.0, nper, cfg.dt, grid)
        r = sobolev_norm_coeffs(grid, new - c, sigma)
        residuals.append(r)
        c = new
        if r < tol:
            converged = True
            break
    _, kept = _advance(c, prop, rhs, 0.0, 2 * nper, cfg.dt, grid, keep_every=sample_every)
    per = nper // sample_every
    data = np.stack(kept)
    closure = max(sobolev_norm_coeffs(grid, data[i + per] - data[i], sigma) for i in range(per + 1))
    orbit = Trajectory(grid, 0.0, cfg.dt * sample_every, data[: per + 1])
    return PeriodicOrbit(orbit, converged, residuals, closure, tau)


@dataclass
class EnergyCheck:
    times: np.ndarray
    residuals: np.ndarray
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.residuals <= self.tolerance))

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.residuals).max())


def energy_balance(traj: Trajectory, symbol: np.ndarray, source, tolerance: float = 1e-6) -> EnergyCheck:
    """Trapezoid residual of |c(t)|^2 - |c(0)|^2 + int (2 sum L|c|^2 - 2<s(t), c>).

    ``source(i, t)`` returns the coefficients paired with the state in the
    work term at sample i.
    """
    times = traj.times
    integrand = np.empty(len(traj))
    energy = np.empty(len(traj))
    for i, c in enumerate(traj.data):
        e2 = c.real**2 + c.imag**2
        energy[i] = e2.sum()
        integrand[i] = 2.0 * float(np.sum(symbol * e2)) - 2.0 * float(np.real(np.vdot(source(i, times[i]), c)))
    acc = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (integrand[1:] + integrand[:-1]))])
    return EnergyCheck(times, energy - energy[0] + acc, tolerance)


def apriori_bound_check(traj: Trajectory, params: SqgParams, sigma: float = 1.0,
                        tolerance: float = 1e-6) -> EnergyCheck:
    """Energy balance d|theta|^2 + 2 kappa |theta|^2_{gamma/2} = 2 <f, theta> along traj."""
    grid = traj.grid
    return energy_balance(traj, params.linear_symbol(grid),
                          lambda i, t: params.forcing.coeffs(t, grid), tolerance)


def forcing_lp_norm(params: SqgParams, p: float, grid: TorusGrid | None = None) -> float:
    from .spectral import lebesgue_norm
    grid = params.resolve_grid(grid)
    return params.forcing.sup_norm(lambda f: lebesgue_norm(f, p), grid)


@dataclass
class MaxPrincipleReport:
    sup_norm: float
    bound: float
    margin: float
    passed: bool


def max_principle_check(traj: Trajectory, params: SqgParams, p: float, C: float = 1.0,
                        tol: float = 1e-8) -> MaxPrincipleReport:
    """sup_t |theta(t)|_p <= max(|theta_0|_p, F_p / C) (1 + tol), F_p = |f|_p / kappa."""
    from .spectral import lebesgue_norm
    norms = [lebesgue_norm(s, p) for s in traj.samples]
    fp = forcing_lp_norm(params, p, traj.grid) / params.kappa
    bound = max(norms[0], fp / C)
    sup = max(norms)
    return MaxPrincipleReport(sup, bound, bound * (1 + tol) - sup, sup <= bound * (1 + tol))


# builtin forcings

def lowmode_pattern(grid: TorusGrid) -> SpectralField:
    """cos(x1) + sin(x1 + x2)."""
    return from_function(grid, lambda x, y: np.cos(x) + np.sin(x + y))


def builtin_forcing(name: str, grid: TorusGrid, amplitude: float = 0.1, period: float = 1.0,
                    kappa: float = 1.0) -> Forcing:
    if name == "zero":
        return Forcing()
    if name == "lowmode":
        return Forcing(steady=amplitude * lowmode_pattern(grid))
    if name == "cos1":
        return Forcing(steady=from_function(grid, lambda x, y: amplitude * np.cos(x)))
    if name == "steady-cos1":
        return Forcing(steady=from_function(grid, lambda x, y: kappa * np.cos(x)))
    if name == "periodic-lowmode":
        return Forcing(periodic=amplitude * lowmode_pattern(grid), period=period)
    if name == "periodic-cos1":
        return Forcing(periodic=from_function(grid, lambda x, y: amplitude * np.cos(x)), period=period)
    raise ValueError(f"unknown builtin forcing {name!r}")


BUILTIN_FORCINGS = ("zero", "lowmode", "cos1", "steady-cos1", "periodic-lowmode", "periodic-cos1")
