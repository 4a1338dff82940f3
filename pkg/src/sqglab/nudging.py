"""Nudged companion equation and twin experiments.

    d_s w + kappa Lambda^gamma w + R^perp w . grad w = f - mu S_m (w - v)

The feedback multiplier mu * s_m(k) is added to the diagonal linear symbol,
so the exponential integrators treat it exactly and mu never limits dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import HypothesisError, SqgParams, Trajectory, energy_balance, sqg_rhs
from .littlewood_paley import LPBlockSet
from .spectral import SpectralField, TorusGrid, lebesgue_norm, sobolev_norm_coeffs
from .timestepping import StepperConfig, check_finite, propagator


@dataclass(frozen=True)
class NudgeParams:
    mu: float
    m: int
    sigma: float = 1.0
    p: float = 8.0
    c0: float = 1.0
    c0p: float = 1.0
    c0pp: float = 1.0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if int(self.m) != self.m or self.m < 0:
            raise ValueError("m must be a nonnegative integer")
        if not (self.p > 1):
            raise ValueError("p must lie in (1, inf]")

    def with_mu(self, mu: float) -> "NudgeParams":
        return NudgeParams(mu, self.m, self.sigma, self.p, self.c0, self.c0p, self.c0pp)

    def with_m(self, m: int) -> "NudgeParams":
        return NudgeParams(self.mu, m, self.sigma, self.p, self.c0, self.c0p, self.c0pp)

    @property
    def inv_p(self) -> float:
        return 0.0 if math.isinf(self.p) else 1.0 / self.p


@dataclass
class Condition:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    hard: bool
    note: str = ""

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    def as_dict(self) -> dict:
        return dict(name=self.name, lhs=self.lhs, rhs=self.rhs, margin=self.margin,
                    satisfied=self.satisfied, hard=self.hard, note=self.note)


@dataclass
class HypothesisReport:
    conditions: list
    mu_threshold: float | None = None
    m_threshold: int | None = None

    @property
    def admissible(self) -> bool:
        return all(c.satisfied for c in self.conditions)

    def get(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return dict(admissible=self.admissible, mu_threshold=self.mu_threshold,
                    m_threshold=self.m_threshold, conditions=[c.as_dict() for c in self.conditions])


def structural_conditions(gamma: float, sigma: float, p: float) -> list[Condition]:
    two_p = 0.0 if math.isinf(p) else 2.0 / p
    return [
        Condition("(H1)", gamma, 1.0, 1.0 < gamma < 2.0, True, "1 < gamma < 2"),
        Condition("(H2)", sigma, 2.0 - gamma, sigma > 2.0 - gamma, True, "sigma > 2 - gamma"),
        Condition("(H3)", two_p, 1.0 - sigma, 1.0 - sigma < two_p < gamma - 1.0, True,
                  f"1 - sigma < 2/p < gamma - 1 (upper bound {gamma - 1.0:g})"),
    ]


def mu_threshold(kappa: float, gamma: float, p: float, g_lp: float, c0: float = 1.0) -> float:
    """c0 kappa (G_Lp / kappa)^{gamma / (gamma - 1 - 2/p)}."""
    two_p = 0.0 if math.isinf(p) else 2.0 / p
    return c0 * kappa * (g_lp / kappa) ** (gamma / (gamma - 1.0 - two_p))


def m_threshold(kappa: float, gamma: float, mu: float, c0p: float = 1.0) -> int:
    """Smallest m >= 0 with 2^{gamma m} >= c0' mu / kappa."""
    target = c0p * mu / kappa
    if target <= 1.0:
        return 0
    m = int(math.ceil(math.log2(target) / gamma - 1e-12))
    while 2.0 ** (gamma * m) < target:
        m += 1
    return m


def check_hypotheses(sqg: SqgParams, nudge: NudgeParams, g_lp: float | None = None,
                     g_sigma_inf: float | None = None) -> HypothesisReport:
    """Evaluate (H1)-(H3) (hard) and the mu and m size conditions (soft)."""
    gamma, kappa = sqg.gamma, sqg.kappa
    conds = structural_conditions(gamma, nudge.sigma, nudge.p)
    for c in conds:
        if not c.satisfied:
            raise HypothesisError(f"{c.name} violated: {c.note} (gamma={gamma}, sigma={nudge.sigma}, p={nudge.p})")
    two_p = 2.0 * nudge.inv_p
    mu_thr = None
    if g_lp is not None:
        if not g_lp > 0:
            raise ValueError("g_lp must be positive to evaluate the mu condition")
        mu_thr = mu_threshold(kappa, gamma, nudge.p, g_lp, nudge.c0)
        conds.append(Condition("(H6)", nudge.mu, mu_thr, nudge.mu >= mu_thr, False,
                               "mu >= c0 kappa (G_Lp/kappa)^{gamma/(gamma-1-2/p)}"))
    rhs = nudge.c0p * nudge.mu / kappa
    conds.append(Condition("(H7a)", 2.0 ** (gamma * nudge.m), rhs, 2.0 ** (gamma * nudge.m) >= rhs, False,
                           "2^{gamma m} >= c0' mu / kappa"))
    if g_sigma_inf is not None and g_lp is not None:
        rhs = nudge.c0pp * (g_sigma_inf / g_lp) ** (1.0 / (1.0 - two_p - nudge.sigma))
        conds.append(Condition("(H7b)", 2.0 ** nudge.m, rhs, 2.0 ** nudge.m >= rhs, False,
                               "2^m >= c0'' (G_sigma_inf/G_Lp)^{1/(1-2/p-sigma)}"))
    return HypothesisReport(conds, mu_thr, m_threshold(kappa, gamma, nudge.mu, nudge.c0p))


def feedback_symbol(blocks: LPBlockSet, nudge: NudgeParams, operator: str = "lp",
                    cutoff: float | None = None) -> np.ndarray:
    """Multiplier of the observation operator: s_m(k) or the indicator of |k| <= cutoff."""
    if operator == "lp":
        return blocks.lowpass_symbol(nudge.m)
    if operator == "sharp":
        if cutoff is None:
            cutoff = 2.0 ** nudge.m
        return (blocks.grid.kmod <= cutoff).astype(float)
    raise ValueError(f"unknown operator {operator!r}")


def nudged_symbol(sqg: SqgParams, nudge: NudgeParams, blocks: LPBlockSet, operator="lp", cutoff=None):
    return sqg.linear_symbol(blocks.grid) + nudge.mu * feedback_symbol(blocks, nudge, operator, cutoff)


def nudged_rhs(grid: TorusGrid, sqg: SqgParams, gain: np.ndarray, v_of_s):
    """N(w, s) = f(s) - (u.grad w)^ + gain * v(s)."""
    base = sqg_rhs(grid, sqg)

    def rhs(c, s):
        return base(c, s) + gain * v_of_s(s)

    return rhs


def nudged_step(state: SpectralField, v_at_s: SpectralField, sqg: SqgParams, nudge: NudgeParams,
                blocks: LPBlockSet, cfg: StepperConfig, s: float = 0.0, operator: str = "lp",
                cutoff: float | None = None) -> SpectralField:
    grid = state.grid
    gain = nudge.mu * feedback_symbol(blocks, nudge, operator, cutoff)
    prop = propagator(sqg.linear_symbol(grid) + gain, cfg.dt, cfg.scheme)
    v = v_at_s.coeffs
    out = prop.step(state.coeffs, s, nudged_rhs(grid, sqg, gain, lambda _s: v))
    check_finite(out, grid, s + cfg.dt, last_good=state)
    return SpectralField(grid, out)


def _steps_per_sample(ref: Trajectory, dt: float) -> int:
    r = ref.dt / dt
    k = int(round(r))
    if k < 1 or abs(k - r) > 1e-9 * r:
        raise ValueError("reference sampling step must be a multiple of the solver dt")
    return k


def fit_decay(times: np.ndarray, err: np.ndarray, window=(1e-9, 1e-2)):
    """Least-squares fit log err = a - rate s over samples with err/err0 in window.

    Falls back to all positive samples when fewer than three lie in the
    window.  Returns (rate, r2, rms residual, mode, npoints).
    """
    err0 = err[0]
    if err0 <= 0:
        return 0.0, 1.0, 0.0, "none", 0
    rel = err / err0
    sel = (rel >= window[0]) & (rel <= window[1])
    mode = "window"
    if sel.sum() < 3:
        sel = err > 0
        mode = "full"
    t, y = times[sel], np.log(err[sel])
    if len(t) < 2 or np.ptp(t) == 0:
        return 0.0, 1.0, 0.0, mode, int(len(t))
    A = np.vstack([np.ones_like(t), t]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(-coef[1]), r2, math.sqrt(ss_res / len(t)), mode, int(len(t))


SYNC_COLUMNS = ("err_l2proxy", "err_hsigma", "err_hminushalf", "inserted_energy")


@dataclass
class SyncRecord:
    times: np.ndarray
    columns: dict
    rates: dict
    r2: dict
    fit_residual: dict
    fit_mode: dict
    initial: float
    terminal: float
    threshold: float
    meta: dict = field(default_factory=dict)
    w: Trajectory | None = None
    final: SpectralField | None = None

    @property
    def terminal_ratio(self) -> float:
        return self.terminal / self.initial if self.initial > 0 else 0.0

    @property
    def synchronized(self) -> bool:
        return self.terminal < self.threshold * self.initial or self.initial == 0.0

    def first_time_below(self, ratio: float, column: str = "err_l2proxy") -> float | None:
        e = self.columns[column]
        idx = np.nonzero(e < ratio * e[0])[0]
        return float(self.times[idx[0]]) if idx.size else None

    def summary(self) -> dict:
        return dict(initial=self.initial, terminal=self.terminal, terminal_ratio=self.terminal_ratio,
                    synchronized=self.synchronized, rates=self.rates, r2=self.r2,
                    fit_residual=self.fit_residual, fit_mode=self.fit_mode, **self.meta)


def _fit_all(times, cols, names, window):
    rates, r2s, res, modes = {}, {}, {}, {}
    for name in names:
        rate, r2, rr, mode, _ = fit_decay(times, cols[name], window)
        rates[name], r2s[name], res[name], modes[name] = rate, r2, rr, mode
    return rates, r2s, res, modes


def synchronize_experiment(sqg: SqgParams, nudge: NudgeParams, blocks: LPBlockSet, cfg: StepperConfig,
                           ref: Trajectory, w0: SpectralField, duration: float | None = None,
                           operator: str = "lp", cutoff: float | None = None,
                           fit_window=(1e-9, 1e-2), threshold: float = 1e-6,
                           keep_w: bool = False) -> SyncRecord:
    """Evolve w from w0 with observations v = S_{m-1} ref and record sync errors.

    Errors are recorded at the reference sampling times.  The distinguished
    norm is |psi|_{H^{1/2}} with psi = -Lambda^{-1}(w - theta_ref), i.e. the
    -1/2 Sobolev norm of w - theta_ref.
    """
    grid = blocks.grid
    s0 = ref.t0
    duration = ref.t_end - s0 if duration is None else duration
    if s0 + duration > ref.t_end + 1e-9 * max(1.0, abs(ref.t_end)):
        raise ValueError(f"experiment window [{s0}, {s0 + duration}] exceeds reference [{ref.t0}, {ref.t_end}]")
    per = _steps_per_sample(ref, cfg.dt)
    nrec = int(round(duration / ref.dt))
    obs = blocks.lowpass_symbol(max(nudge.m - 1, -1))
    v_data = ref.data * obs
    v_traj = Trajectory(grid, ref.t0, ref.dt, v_data)
    gain = nudge.mu * feedback_symbol(blocks, nudge, operator, cutoff)
    prop = propagator(sqg.linear_symbol(grid) + gain, cfg.dt, cfg.scheme)
    rhs = nudged_rhs(grid, sqg, gain, v_traj.at)
    sigma = nudge.sigma
    w = np.array(w0.coeffs)
    kept = [w.copy()] if keep_w else None
    rows = []

    def record(i, c):
        d = c - ref.data[i]
        wv = c - v_data[i]
        rows.append((
            sobolev_norm_coeffs(grid, d, 0.0),
            sobolev_norm_coeffs(grid, d, sigma),
            sobolev_norm_coeffs(grid, d, -0.5),
            2.0 * float(np.real(np.vdot(c, gain * (v_data[i] - c)))),
            sobolev_norm_coeffs(grid, wv, 0.0),
        ))

    record(0, w)
    for i in range(1, nrec + 1):
        for k in range(per):
            s = s0 + ((i - 1) * per + k) * cfg.dt
            new = prop.step(w, s, rhs)
            check_finite(new, grid, s + cfg.dt, last_good=SpectralField(grid, w))
            w = new
        record(i, w)
        if keep_w:
            kept.append(w.copy())
    arr = np.array(rows)
    times = s0 + ref.dt * np.arange(nrec + 1)
    cols = {name: arr[:, j] for j, name in enumerate(SYNC_COLUMNS)}
    cols["err_w_minus_v"] = arr[:, 4]
    rates, r2, res, modes = _fit_all(times, cols, SYNC_COLUMNS[:3], fit_window)
    e = cols["err_l2proxy"]
    rec = SyncRecord(times, cols, rates, r2, res, modes, float(e[0]), float(e[-1]), threshold,
                     meta=dict(operator=operator, mu=nudge.mu, m=nudge.m, cutoff=cutoff,
                               scheme=cfg.scheme, dt=cfg.dt),
                     final=SpectralField(grid, w))
    if keep_w:
        rec.w = Trajectory(grid, s0, ref.dt, np.stack(kept))
    return rec


def nudged_energy_check(rec: SyncRecord, ref: Trajectory, sqg: SqgParams, nudge: NudgeParams,
                        blocks: LPBlockSet, operator: str = "lp", cutoff=None, tolerance: float = 1e-6):
    """Energy balance of the nudged equation along a stored w trajectory."""
    if rec.w is None:
        raise ValueError("record was produced without keep_w")
    grid = blocks.grid
    gain = nudge.mu * feedback_symbol(blocks, nudge, operator, cutoff)
    obs = blocks.lowpass_symbol(max(nudge.m - 1, -1))
    return energy_balance(rec.w, sqg.linear_symbol(grid) + gain,
                          lambda i, t: sqg.forcing.coeffs(t, grid) + gain * obs * ref.data[i], tolerance)


@dataclass
class MuThreshold:
    lo: float
    hi: float
    history: list

    @property
    def estimate(self) -> float:
        return 0.5 * (self.lo + self.hi)


def minimal_mu_search(sqg: SqgParams, nudge: NudgeParams, blocks: LPBlockSet, cfg: StepperConfig,
                      ref: Trajectory, tol: float = 0.05, bracket=(0.0, 128.0), w0: SpectralField | None = None,
                      duration: float | None = None, threshold: float = 1e-6,
                      operator: str = "lp") -> MuThreshold:
    """Bisection on mu for the synchronization boundary at fixed m."""
    w0 = w0 if w0 is not None else blocks.grid.zeros()
    history = []

    def synced(mu):
        rec = synchronize_experiment(sqg, nudge.with_mu(mu), blocks, cfg, ref, w0, duration,
                                     operator=operator, threshold=threshold)
        history.append((mu, rec.terminal_ratio, rec.synchronized))
        return rec.synchronized

    lo, hi = map(float, bracket)
    s_lo, s_hi = synced(lo), synced(hi)
    if s_lo and lo == 0.0:
        return MuThreshold(0.0, 0.0, history)
    if s_lo == s_hi:
        raise ValueError(f"bracket [{lo}, {hi}] does not straddle the synchronization boundary "
                         f"(both endpoints {'synchronize' if s_lo else 'fail'})")
    if s_lo:
        raise ValueError(f"bracket [{lo}, {hi}] is inverted: the lower endpoint synchronizes")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if synced(mid):
            hi = mid
        else:
            lo = mid
    return MuThreshold(lo, hi, history)


def determining_modes_threshold(theta_lp: float, kappa: float, gamma: float, p: float, c0: float = 1.0) -> float:
    """Required h^{-1}: c0 (Theta_Lp / kappa)^{1/(gamma - 1 - 2/p)}."""
    two_p = 0.0 if math.isinf(p) else 2.0 / p
    return c0 * (theta_lp / kappa) ** (1.0 / (gamma - 1.0 - two_p))


def determining_modes_experiment(sqg: SqgParams, cfg: StepperConfig, cutoff: float, ref: Trajectory,
                                 w0: SpectralField, duration: float | None = None,
                                 threshold: float = 1e-6, sigma: float = 1.0) -> SyncRecord:
    """Direct insertion of the modes |k| <= cutoff of the reference after every step."""
    grid = ref.grid
    s0 = ref.t0
    duration = ref.t_end - s0 if duration is None else duration
    if s0 + duration > ref.t_end + 1e-9 * max(1.0, abs(ref.t_end)):
        raise ValueError("experiment window exceeds the reference trajectory")
    per = _steps_per_sample(ref, cfg.dt)
    nrec = int(round(duration / ref.dt))
    low = grid.kmod <= cutoff
    high = ~low
    prop = propagator(sqg.linear_symbol(grid), cfg.dt, cfg.scheme)
    rhs = sqg_rhs(grid, sqg)
    w = np.array(w0.coeffs)
    rows = []

    def record(i, c):
        d = (c - ref.data[i]) * high
        rows.append((sobolev_norm_coeffs(grid, d, 0.0), sobolev_norm_coeffs(grid, d, sigma)))

    record(0, w)
    for i in range(1, nrec + 1):
        for k in range(per):
            s = s0 + ((i - 1) * per + k) * cfg.dt
            w = prop.step(w, s, rhs)
            check_finite(w, grid, s + cfg.dt)
            w = np.where(low, ref.at(s + cfg.dt), w)
        record(i, w)
    arr = np.array(rows)
    times = s0 + ref.dt * np.arange(nrec + 1)
    cols = {"err_l2proxy": arr[:, 0], "err_hsigma": arr[:, 1]}
    rates, r2, res, modes = _fit_all(times, cols, ("err_l2proxy", "err_hsigma"), (1e-9, 1e-2))
    e = cols["err_l2proxy"]
    return SyncRecord(times, cols, rates, r2, res, modes, float(e[0]), float(e[-1]), threshold,
                      meta=dict(operator="sharp-insertion", cutoff=cutoff, scheme=cfg.scheme),
                      final=SpectralField(grid, w))


def measured_lp_sup(traj: Trajectory, p: float) -> float:
    """sup over samples of the L^p norm, used as an empirical Theta_Lp."""
    return max(lebesgue_norm(s, p) for s in traj.samples)
