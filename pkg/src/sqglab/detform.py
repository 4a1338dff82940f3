"""W map, trajectory norms and the determining-form ODE.

The W map sends an observed low-mode trajectory v to the bounded solution w
of the nudged equation.  It is realized on a finite window [s_a, s_b] by
starting from w = 0 at s_a - relax_time; the nudging term contracts the
artificial start at rate about exp(-mu relax_time).
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics import SqgParams, Trajectory
from .littlewood_paley import LPBlockSet, build_blocks
from .nudging import NudgeParams, _steps_per_sample, feedback_symbol, nudged_rhs
from .spectral import SpectralField, TorusGrid, debug_enabled, random_field, sobolev_norm
from .timestepping import StepperConfig, check_finite, propagator

log = logging.getLogger(__name__)


@lru_cache(maxsize=8)
def _blocks_for(grid: TorusGrid) -> LPBlockSet:
    return build_blocks(grid)


def _hs_norms(grid: TorusGrid, data: np.ndarray, sigma: float) -> np.ndarray:
    w = grid.symbol_power(2 * sigma)
    return np.sqrt(np.einsum("kl,tkl->t", w, np.abs(data) ** 2))


@dataclass
class BanachTrajectory:
    """A sampled trajectory with the norm parameters (sigma, m)."""
    traj: Trajectory
    sigma: float
    m: int
    low_pass: bool = False

    def __post_init__(self):
        if self.low_pass:
            blocks = _blocks_for(self.traj.grid)
            high = 1.0 - blocks.lowpass_symbol(self.m - 1)
            tail = _hs_norms(self.traj.grid, self.traj.data * high, 0.0)
            if tail.max(initial=0.0) > 1e-10:
                raise ValueError(f"samples are not in the range of S_{self.m - 1} (tail {tail.max():.3e})")

    @property
    def grid(self) -> TorusGrid:
        return self.traj.grid

    def derivative(self) -> np.ndarray:
        T = len(self.traj)
        if T < 2:
            raise ValueError("need at least 2 samples for the time derivative")
        return np.gradient(self.traj.data, self.traj.dt, axis=0, edge_order=2 if T >= 3 else 1)

    def with_data(self, data: np.ndarray, low_pass: bool | None = None) -> "BanachTrajectory":
        tr = Trajectory(self.grid, self.traj.t0, self.traj.dt, data)
        return BanachTrajectory(tr, self.sigma, self.m, self.low_pass if low_pass is None else low_pass)


def y_norm(v: BanachTrajectory) -> float:
    """sup_s |v(s)|_{H^sigma}."""
    return float(_hs_norms(v.grid, v.traj.data, v.sigma).max())


def x_norm(v: BanachTrajectory) -> float:
    """sup_s |v(s)|_{H^sigma} + 2^{-(2+sigma)m} sup_s |v'(s)|_{H^sigma}.

    v' uses centered differences inside the window and second-order one-sided
    differences at its ends.
    """
    d = _hs_norms(v.grid, v.derivative(), v.sigma).max()
    return y_norm(v) + 2.0 ** (-(2 + v.sigma) * v.m) * float(d)


def x_pairing(a: BanachTrajectory, b: BanachTrajectory) -> float:
    """Sum over samples of the H^sigma inner product, used for direction checks."""
    w = a.grid.symbol_power(2 * a.sigma)
    return float(np.real(np.einsum("kl,tkl->", w, np.conj(a.traj.data) * b.traj.data)))


def radius_R(sqg: SqgParams, C: float = 1.0, grid: TorusGrid | None = None) -> float:
    """R = C (1 + kappa)(1 + |f|_{H^{-gamma/2}} / kappa)^2."""
    if sqg.forcing.grid is None and grid is None:
        F = 0.0
    else:
        g = sqg.resolve_grid(grid)
        F = sqg.forcing.sup_norm(lambda x: sobolev_norm(x, -sqg.gamma / 2), g) / sqg.kappa
    return C * (1.0 + sqg.kappa) * (1.0 + F) ** 2


@dataclass(frozen=True)
class WMapConfig:
    relax_time: float
    window: tuple | None = None
    tol_forget: float = 1e-8
    mu: float | None = None

    def __post_init__(self):
        if not self.relax_time > 0:
            raise ValueError("relax_time must be positive")
        if not 0 < self.tol_forget < 1:
            raise ValueError("tol_forget must lie in (0, 1)")
        if self.mu is not None:
            self.check_mu(self.mu)

    def check_mu(self, mu: float):
        need = math.log(1.0 / self.tol_forget) / mu if mu > 0 else math.inf
        if self.relax_time < need * (1 - 1e-12):
            raise ValueError(f"relax_time {self.relax_time} < ln(1/tol_forget)/mu = {need}")

    @classmethod
    def from_mu(cls, mu: float, window=None, tol_forget: float = 1e-8) -> "WMapConfig":
        return cls(math.log(1.0 / tol_forget) / mu, window, tol_forget, mu)


def _window(v: BanachTrajectory, wcfg: WMapConfig):
    if wcfg.window is None:
        return v.traj.t0, v.traj.t_end
    a, b = map(float, wcfg.window)
    if not b >= a:
        raise ValueError("window must satisfy s_a <= s_b")
    return a, b


def _solve_w(v: BanachTrajectory, sqg, nudge, blocks, cfg, wcfg, w_init) -> Trajectory:
    grid = v.grid
    s_a, s_b = _window(v, wcfg)
    per = _steps_per_sample(v.traj, cfg.dt)
    nrelax = int(math.ceil(wcfg.relax_time / cfg.dt - 1e-9))
    nwin = int(round((s_b - s_a) / v.traj.dt))
    gain = nudge.mu * feedback_symbol(blocks, nudge)
    prop = propagator(sqg.linear_symbol(grid) + gain, cfg.dt, cfg.scheme)
    rhs = nudged_rhs(grid, sqg, gain, v.traj.at)
    w = np.zeros((grid.n, grid.n), complex) if w_init is None else np.array(w_init.coeffs)
    s = s_a - nrelax * cfg.dt
    for _ in range(nrelax):
        new = prop.step(w, s, rhs)
        check_finite(new, grid, s + cfg.dt, last_good=SpectralField(grid, w))
        w, s = new, s + cfg.dt
    out = [w.copy()]
    for i in range(nwin):
        for k in range(per):
            s = s_a + (i * per + k) * cfg.dt
            new = prop.step(w, s, rhs)
            check_finite(new, grid, s + cfg.dt, last_good=SpectralField(grid, w))
            w = new
        out.append(w.copy())
    return Trajectory(grid, s_a, v.traj.dt, np.stack(out))


def w_map(v: BanachTrajectory, sqg: SqgParams, nudge: NudgeParams, blocks: LPBlockSet,
          cfg: StepperConfig, wcfg: WMapConfig, w_init: SpectralField | None = None) -> Trajectory:
    """Solve the nudged equation driven by v and return w on the window.

    The start is w_init (default 0) at s_a - relax_time; v is clamped to its
    end values outside its sample range.  With SQGLAB_DEBUG set, a second
    solve from a random start checks the forgetting property.
    """
    wcfg.check_mu(nudge.mu)
    w = _solve_w(v, sqg, nudge, blocks, cfg, wcfg, w_init)
    if debug_enabled() and w_init is None:
        rng = np.random.Generator(np.random.Philox(12345))
        alt = _solve_w(v, sqg, nudge, blocks, cfg, wcfg, random_field(v.grid, rng, norm=1.0))
        diff = float(_hs_norms(v.grid, w.data - alt.data, v.sigma).max())
        if diff >= 10 * wcfg.tol_forget:
            raise AssertionError(f"W map window depends on the artificial start: {diff:.3e}")
    return w


@dataclass
class LipschitzReport:
    ratio_y: float
    ratio_hminushalf: float
    x_distance: float
    scaling: float

    def as_dict(self) -> dict:
        return dict(ratio_y=self.ratio_y, ratio_hminushalf=self.ratio_hminushalf,
                    x_distance=self.x_distance, scaling=self.scaling)


def w_map_lipschitz_probe(v1: BanachTrajectory, v2: BanachTrajectory, sqg: SqgParams, nudge: NudgeParams,
                          blocks: LPBlockSet, cfg: StepperConfig, wcfg: WMapConfig) -> LipschitzReport:
    """|S_m W(v1) - S_m W(v2)|_Y / |v1 - v2|_X and the H^{-1/2} ratio of W itself."""
    dv = v1.with_data(v1.traj.data - v2.traj.data, low_pass=False)
    dx = x_norm(dv)
    if dx == 0.0:
        raise ValueError("identical inputs: the difference quotient is undefined")
    w1 = w_map(v1, sqg, nudge, blocks, cfg, wcfg)
    w2 = w_map(v2, sqg, nudge, blocks, cfg, wcfg)
    sm = blocks.lowpass_symbol(nudge.m)
    d = w1.data - w2.data
    ry = float(_hs_norms(v1.grid, d * sm, v1.sigma).max()) / dx
    rh = float(_hs_norms(v1.grid, d, -0.5).max()) / dx
    return LipschitzReport(ry, rh, dx, 2.0 ** (nudge.m * (v1.sigma + 0.5)))


# determining form

@dataclass
class DetFormState:
    v: BanachTrajectory
    tau: float
    residual: float
    dist: float
    lam: float

    def __post_init__(self):
        if self.residual < 0 or self.lam < 0:
            raise ValueError("residual and multiplier are nonnegative")


@dataclass
class DetFormRhs:
    data: np.ndarray
    lam: float
    residual: float
    w: Trajectory


class DetFormDiverged(RuntimeError):
    def __init__(self, message, states):
        super().__init__(message)
        self.states = states


def _steady_traj(v: BanachTrajectory, theta_star: SpectralField, blocks: LPBlockSet, m: int) -> np.ndarray:
    return (blocks.lowpass_symbol(m) * theta_star.coeffs)[None]


def detform_rhs(v: BanachTrajectory, theta_star: SpectralField, sqg: SqgParams, nudge: NudgeParams,
                blocks: LPBlockSet, cfg: StepperConfig, wcfg: WMapConfig, power: int = 2) -> DetFormRhs:
    """s -> -|v - S_m W(v)|_X^power (v(s) - S_m theta*)."""
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    w = w_map(v, sqg, nudge, blocks, cfg, wcfg)
    if len(w) != len(v.traj):
        raise ValueError("W map window must coincide with the sampled range of v")
    sm = blocks.lowpass_symbol(nudge.m)
    res = x_norm(v.with_data(v.traj.data - sm * w.data, low_pass=False))
    lam = res**power
    data = -lam * (v.traj.data - _steady_traj(v, theta_star, blocks, nudge.m))
    return DetFormRhs(data, lam, res, w)


def detform_integrate(v0: BanachTrajectory, theta_star: SpectralField, sqg: SqgParams, nudge: NudgeParams,
                      blocks: LPBlockSet, cfg: StepperConfig, wcfg: WMapConfig, tau_span: float | None = None,
                      dtau: float | None = None, power: int = 2, tol: float = 0.0, R: float | None = None,
                      span_in_lambda0: float | None = None, max_increases: int = 10) -> list[DetFormState]:
    """Explicit RK4 in tau for the determining form.

    dtau defaults to 0.1/lambda0 where lambda0 is the initial multiplier;
    span_in_lambda0 gives tau_span in units of 1/lambda0.  The residual is
    recomputed after every step (reused as the next first stage).  The run
    stops early once the residual drops below tol and aborts when the
    residual grows over max_increases consecutive steps.
    """
    star = _steady_traj(v0, theta_star, blocks, nudge.m)

    def dist(v):
        return x_norm(v.with_data(v.traj.data - star, low_pass=False))

    d0 = dist(v0)
    if R is not None and d0 > 3 * R:
        warnings.warn(f"initial trajectory lies outside the 3R ball ({d0:.3e} > {3 * R:.3e})", stacklevel=2)
    k = detform_rhs(v0, theta_star, sqg, nudge, blocks, cfg, wcfg, power)
    lam0 = k.lam
    states = [DetFormState(v0, 0.0, k.residual, d0, k.lam)]
    if lam0 == 0.0 or k.residual <= tol:
        return states
    if dtau is None:
        dtau = 0.1 / lam0
    if span_in_lambda0 is not None:
        tau_span = span_in_lambda0 / lam0
    if tau_span is None:
        raise ValueError("tau_span or span_in_lambda0 is required")
    nsteps = int(math.ceil(tau_span / dtau - 1e-9))
    v, tau, up = v0, 0.0, 0

    def f(vv):
        return detform_rhs(vv, theta_star, sqg, nudge, blocks, cfg, wcfg, power).data

    for _ in range(nsteps):
        h = min(dtau, tau_span - tau)
        y = v.traj.data
        k1 = k.data
        k2 = f(v.with_data(y + 0.5 * h * k1, low_pass=False))
        k3 = f(v.with_data(y + 0.5 * h * k2, low_pass=False))
        k4 = f(v.with_data(y + h * k3, low_pass=False))
        v = v.with_data(y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), low_pass=False)
        tau += h
        k = detform_rhs(v, theta_star, sqg, nudge, blocks, cfg, wcfg, power)
        st = DetFormState(v, tau, k.residual, dist(v), k.lam)
        up = up + 1 if st.residual > states[-1].residual else 0
        states.append(st)
        if R is not None and st.dist > 3 * R:
            log.warning("left the 3R ball at tau=%g (%g)", tau, st.dist)
        if up >= max_increases:
            raise DetFormDiverged(f"residual increased over {up} consecutive steps at tau={tau:g}", states)
        if st.residual <= tol:
            break
    return states
