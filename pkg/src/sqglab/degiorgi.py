"""Level-set truncations and De Giorgi style diagnostics.

Truncations phi(w) = (w - lambda)_+ are not band-limited, so every
level-set quantity is evaluated on an oversampled collocation grid (zero
padded spectrum, default factor 2) and its fractional norms use the
oversampled spectrum including the mean mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import dg_bound
from .dynamics import SqgParams, Trajectory
from .littlewood_paley import LPBlockSet, build_blocks, square_function_values
from .nudging import NudgeParams, check_hypotheses
from .spectral import PhysicalField, SpectralField, TorusGrid, fft2, ifft2

_EPS = np.finfo(float).eps


def truncate(f: PhysicalField, lam: float) -> PhysicalField:
    return PhysicalField(f.grid, np.maximum(f.values - lam, 0.0))


def lambda_decompose(f: PhysicalField, lam: float):
    """Split f = phi(f) - phi(-f) + f_lambda with |f_lambda| <= lambda."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    v = np.asarray(f.values, dtype=float)
    plus = np.maximum(v - lam, 0.0)
    minus = np.maximum(-v - lam, 0.0)
    f_lam = np.where(np.abs(v) <= lam, v, 0.0) + lam * ((v > lam).astype(float) - (-v > lam).astype(float))
    if np.abs(f_lam).max(initial=0.0) > lam:
        raise AssertionError("truncated part exceeds lambda")
    scale = np.maximum(np.abs(v), lam)
    if np.any(np.abs(plus - minus + f_lam - v) > 4 * _EPS * scale):
        raise AssertionError("decomposition does not recompose")
    return PhysicalField(f.grid, plus), PhysicalField(f.grid, minus), PhysicalField(f.grid, f_lam)


# oversampled evaluation

def padded_coeffs(grid: TorusGrid, c: np.ndarray, factor: int = 2) -> tuple[TorusGrid, np.ndarray]:
    """Embed coefficients of an n-grid field into the (factor*n)-grid lattice."""
    n, N = grid.n, factor * grid.n
    fine = TorusGrid(N, grid.dealias_fraction)
    out = np.zeros((N, N), complex)
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    idx = np.mod(k, N)
    out[np.ix_(idx, idx)] = c
    return fine, out


def oversampled_values(grid: TorusGrid, c: np.ndarray, factor: int = 2) -> tuple[TorusGrid, np.ndarray]:
    fine, C = padded_coeffs(grid, c, factor)
    return fine, np.real(ifft2(C)) * fine.n**2


def _pair_spectra(fine: TorusGrid, a: np.ndarray, b: np.ndarray):
    """Coefficients of two real fields from one complex transform."""
    Z = fft2(a + 1j * b) / fine.n**2
    Zr = np.conj(np.roll(Z[::-1, ::-1], 1, axis=(0, 1)))
    return 0.5 * (Z + Zr), -0.5j * (Z - Zr)


def _energies_from_values(fine: TorusGrid, vals: np.ndarray, lam: float, gamma: float):
    plus = np.maximum(vals - lam, 0.0)
    minus = np.maximum(-vals - lam, 0.0)
    if not plus.any() and not minus.any():
        return 0.0, 0.0
    ap, am = _pair_spectra(fine, plus, minus)
    e2 = ap.real**2 + ap.imag**2 + am.real**2 + am.imag**2
    l2 = float(np.sum(plus**2 + minus**2)) / fine.n**2
    hg = float(np.sum(fine.symbol_power(gamma) * e2))
    return l2, hg


def phi_vector_energy(w: SpectralField, lam: float, gamma: float, oversample: int = 2):
    """(|Phi|^2, |Phi|^2 in the gamma/2 norm) for Phi = (phi(w), phi(-w)), coefficient convention.

    The L^2 part includes the mean of the truncations and equals the grid
    average of phi(w)^2 + phi(-w)^2.
    """
    fine, vals = oversampled_values(w.grid, w.coeffs, oversample)
    return _energies_from_values(fine, vals, lam, gamma)


@dataclass(frozen=True)
class LevelSetConfig:
    M: float
    n_max: int = 12
    delta_inf: float = 1.0

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError("M must be positive")
        if not self.delta_inf > 0:
            raise ValueError("delta_inf must be positive")
        if self.n_max < 0:
            raise ValueError("n_max must be nonnegative")

    def levels(self) -> np.ndarray:
        n = np.arange(self.n_max + 1)
        return self.M * (1.0 - 2.0 ** (-n))


@dataclass
class LevelEnergies:
    U: np.ndarray
    levels: np.ndarray
    starts: np.ndarray
    s_inf: float
    l2: np.ndarray = field(repr=False)
    hg: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)

    @property
    def non_increasing(self) -> bool:
        return bool(np.all(np.diff(self.U) <= 1e-14 * max(self.U[0], 1e-300)))


def _window_sup_integral(times, values, a, b):
    """sup and trapezoid integral over [a, b] of the piecewise-linear interpolant."""
    inside = (times > a) & (times < b)
    t = np.concatenate([[a], times[inside], [b]])
    y = np.interp(t, times, values)
    return float(y.max()), float(np.sum(0.5 * np.diff(t) * (y[1:] + y[:-1])))


def level_energies(w_traj: Trajectory, cfg: LevelSetConfig, gamma: float, kappa: float,
                   s0: float | None = None, oversample: int = 2) -> LevelEnergies:
    """U_n = sup_{s_n <= s <= s_inf} |Phi_n|^2 + kappa int_{s_n}^{s_inf} |Phi_n|^2_{gamma/2}.

    s_n = s0 + delta_inf (1 - 2^{-n}), s_inf = s0 + delta_inf.
    """
    s0 = w_traj.t0 if s0 is None else s0
    s_inf = s0 + cfg.delta_inf
    tol = 1e-9 * max(1.0, abs(s_inf))
    if s0 < w_traj.t0 - tol or s_inf > w_traj.t_end + tol:
        raise ValueError(f"trajectory [{w_traj.t0}, {w_traj.t_end}] does not cover [{s0}, {s_inf}]")
    s_inf = min(s_inf, w_traj.t_end)
    times = w_traj.times
    use = np.nonzero((times >= s0 - w_traj.dt) & (times <= s_inf + w_traj.dt))[0]
    levels = cfg.levels()
    l2 = np.zeros((len(levels), len(use)))
    hg = np.zeros_like(l2)
    for j, i in enumerate(use):
        fine, vals = oversampled_values(w_traj.grid, w_traj.data[i], oversample)
        top = np.abs(vals).max()
        for n, lam in enumerate(levels):
            if lam >= top:
                break
            l2[n, j], hg[n, j] = _energies_from_values(fine, vals, lam, gamma)
    t = times[use]
    starts = s0 + cfg.delta_inf * (1.0 - 2.0 ** (-np.arange(len(levels))))
    U = np.zeros(len(levels))
    for n, sn in enumerate(starts):
        sup, _ = _window_sup_integral(t, l2[n], min(sn, s_inf), s_inf)
        _, integ = _window_sup_integral(t, hg[n], min(sn, s_inf), s_inf)
        U[n] = sup + kappa * integ
    return LevelEnergies(U, levels, starts, s_inf, l2, hg, t)


# level-set energy inequality

@dataclass
class LevelSetInequality:
    pairs: list
    residuals: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    lam: float
    tolerance: float
    hypothesis_warning: str | None = None

    @property
    def passed(self) -> bool:
        return bool(np.all(self.residuals >= -self.tolerance))

    @property
    def min_residual(self) -> float:
        return float(self.residuals.min())


def _levelset_terms(grid, w_c, src_c, lam, gamma, fine_blocks, factor):
    """Per-sample integrals (integral convention) entering the level-set inequality."""
    fine, vals = oversampled_values(grid, w_c, factor)
    _, src = oversampled_values(grid, src_c, factor)
    area = fine.cell_area
    scale = (2 * math.pi) ** 2
    plus = np.maximum(vals - lam, 0.0)
    minus = np.maximum(-vals - lam, 0.0)
    if not plus.any() and not minus.any():
        return 0.0, 0.0, 0.0, 0.0
    ap, am = _pair_spectra(fine, plus, minus)
    a = area * float(np.sum(plus**2 + minus**2))
    b = scale * float(np.sum(fine.symbol_power(gamma) * (np.abs(ap) ** 2 + np.abs(am) ** 2)))
    c1 = area * float(np.sum(np.abs(src) * (plus + minus)))
    w_lam = np.clip(vals, -lam, lam)
    wl_hat = fft2(w_lam) / fine.n**2
    s_wl = square_function_values(fine_blocks, wl_hat)
    # (-w)_lambda = -(w_lambda), whose square function is the same
    c2 = area * float(np.sum(s_wl * (square_function_values(fine_blocks, ap, tilde=True)
                                     + square_function_values(fine_blocks, am, tilde=True))))
    return a, b, c1, c2


def levelset_inequality_check(w_traj: Trajectory, v_traj: Trajectory, sqg: SqgParams, nudge: NudgeParams,
                              blocks: LPBlockSet, lam: float, pairs=None, n_pairs: int = 20, seed: int = 0,
                              tolerance: float = 1e-6, oversample: int = 2) -> LevelSetInequality:
    """RHS - LHS of the level-set energy inequality for (s1, s2) sample pairs.

    LHS = |Phi(s2)|^2 + kappa int |Phi|^2_{gamma/2}
    RHS = |Phi(s1)|^2 + 2 sqrt2 int int |f + mu S_m v| |Phi|
          + 2 mu int int S(w_lambda) (S~ phi(w) + S~ phi(-w))
    with integral-convention norms; time integrals by trapezoid over samples.
    """
    warning = None
    try:
        rep = check_hypotheses(sqg, nudge)
        if not rep.get("(H7a)").satisfied:
            warning = "first part of (H7) not satisfied"
    except ValueError as exc:
        warning = str(exc)
    grid = w_traj.grid
    if len(w_traj) != len(v_traj):
        raise ValueError("w and v trajectories must share sampling")
    fine_blocks = build_blocks(TorusGrid(oversample * grid.n, grid.dealias_fraction), blocks.profile)
    gain = nudge.mu * blocks.lowpass_symbol(nudge.m)
    T = len(w_traj)
    terms = np.zeros((T, 4))
    times = w_traj.times
    for i in range(T):
        src = sqg.forcing.coeffs(times[i], grid) + gain * v_traj.data[i]
        terms[i] = _levelset_terms(grid, w_traj.data[i], src, lam, sqg.gamma, fine_blocks, oversample)
    if pairs is None:
        rng = np.random.Generator(np.random.Philox(seed))
        pairs = []
        while len(pairs) < n_pairs:
            i, j = sorted(rng.choice(T, size=2, replace=False))
            pairs.append((int(i), int(j)))
    A, B, C1, C2 = terms.T
    integrand = 2 * math.sqrt(2) * C1 + 2 * nudge.mu * C2
    cum_src = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (integrand[1:] + integrand[:-1]))])
    cum_dis = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (B[1:] + B[:-1]))])
    lhs = np.array([A[j] + sqg.kappa * (cum_dis[j] - cum_dis[i]) for i, j in pairs])
    rhs = np.array([A[i] + cum_src[j] - cum_src[i] for i, j in pairs])
    return LevelSetInequality(list(pairs), rhs - lhs, lhs, rhs, lam, tolerance, warning)


# appendix lemmas

def interpolation_exponent(P: float, Q: float, gamma: float) -> float:
    """alpha solving 1/(P+Q) = (1-alpha)/2 + alpha (2-gamma)/4."""
    if not (P > 1 and Q > 1 and 1 < gamma <= 2):
        raise ValueError("need P, Q > 1 and 1 < gamma <= 2")
    alpha = (0.5 - 1.0 / (P + Q)) / (0.5 - (2.0 - gamma) / 4.0)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"interpolation exponent {alpha} outside (0, 1)")
    return alpha


@dataclass(frozen=True)
class IterationLemmaParams:
    a: float
    b: float
    K: int
    d_list: tuple
    C: float
    V0: float
    V1: float

    def __post_init__(self):
        if len(self.d_list) != self.K:
            raise ValueError("d_list must have K entries")
        if min(self.d_list) <= 1.5:
            raise ValueError("the iteration lemma needs min d > 3/2")
        if not (self.a > 0 and self.b > 0 and self.C > 0 and self.V0 > 0 and self.V1 > 0):
            raise ValueError("a, b, C, V0, V1 must be positive")

    @property
    def y0(self) -> float:
        return 3 * self.a / (2 * min(self.d_list) - 3)


@dataclass
class IterationLemmaResult:
    V: list
    bounds: list
    holds: bool
    threshold: float
    hypothesis_met: bool
    y0: float


def iteration_lemma_threshold(params: IterationLemmaParams, C0: float = 1.0) -> float:
    """C0 max{(2^{2(a+y0)} sum V1^{d_j} / V0)^{1/b}, (sum V0^{d_j} / V0)^{1/b}}."""
    a, b, y0 = params.a, params.b, params.y0
    s1 = sum(params.V1**d for d in params.d_list)
    s0 = sum(params.V0**d for d in params.d_list)
    return C0 * max((2.0 ** (2 * (a + y0)) * s1 / params.V0) ** (1 / b), (s0 / params.V0) ** (1 / b))


def iteration_lemma_check(params: IterationLemmaParams, M: float, n_max: int,
                          C0: float = 1.0, rtol: float = 1e-12) -> IterationLemmaResult:
    """Run V_n = C 2^{na} / M^b sum_j V_{n-1}^{d_j} from V_1 and test V_n <= V_0 2^{-n y0}."""
    y0 = params.y0
    V = [params.V0, params.V1]
    for n in range(2, n_max + 1):
        prev = V[-1]
        V.append(params.C * 2.0 ** (n * params.a) / M**params.b * sum(prev**d for d in params.d_list))
    bounds = [params.V0 * 2.0 ** (-n * y0) for n in range(n_max + 1)]
    holds = all(V[n] <= bounds[n] * (1 + rtol) for n in range(2, n_max + 1))
    thr = iteration_lemma_threshold(params, C0)
    return IterationLemmaResult(V, bounds, holds, thr, M >= thr, y0)


# L^inf bound audit

@dataclass
class LinftyEstimate:
    M_estimate: float
    measured_sup: float
    margin: float
    calibration: float
    U0: float

    def as_dict(self) -> dict:
        return dict(M_estimate=self.M_estimate, measured_sup=self.measured_sup, margin=self.margin,
                    calibration=self.calibration, U0=self.U0)


def measured_sup(traj: Trajectory, oversample: int = 2) -> float:
    top = 0.0
    for c in traj.data:
        _, vals = oversampled_values(traj.grid, c, oversample)
        top = max(top, float(np.abs(vals).max()))
    return top


def linfty_bound_estimate(w_traj: Trajectory, sqg: SqgParams, nudge: NudgeParams, F_Lp: float,
                          rho0: float, delta_inf: float, U0: float | None = None,
                          C: float = 1.0) -> LinftyEstimate:
    """Evaluate the L^inf bound with constants C and compare with the run's sup norm.

    U0 defaults to the measured level-0 energy over [t0, t0 + delta_inf].
    The calibration entry is the smallest constant making the bound hold.
    """
    if U0 is None:
        window = min(delta_inf, w_traj.t_end - w_traj.t0)
        cfg = LevelSetConfig(M=1.0, n_max=0, delta_inf=window)
        U0 = float(level_energies(w_traj, cfg, sqg.gamma, sqg.kappa).U[0])
    est = dg_bound(sqg.kappa, nudge.mu, sqg.gamma, nudge.p, F_Lp, rho0, U0, delta_inf, C)
    sup = measured_sup(w_traj)
    if est > 0:
        calib = C * sup / est
    else:
        calib = 0.0 if sup == 0 else math.inf
    return LinftyEstimate(est, sup, est - sup, calib, U0)


# integrated inequality checks

def _exact_grid(g: SpectralField, degree: int) -> tuple[TorusGrid, np.ndarray]:
    """Physical values on a grid fine enough for products of ``degree`` copies of g."""
    kmax = int(np.max(np.abs(np.stack([g.grid.k1, g.grid.k2])[:, np.abs(g.coeffs) > 0]), initial=0))
    factor = 1
    while factor * g.grid.n < degree * 2 * kmax + 2:
        factor += 1
    fine, vals = oversampled_values(g.grid, g.coeffs, factor)
    return fine, vals


def lb_check(g: SpectralField, gamma: float, p: int) -> tuple[float, float]:
    """(int g^{p-1} Lambda^gamma g, (1/p) |Lambda^{gamma/2} g^{p/2}|^2), both as integrals."""
    if p % 2 or p < 2:
        raise ValueError("p must be an even integer >= 2")
    fine, vals = _exact_grid(g, p)
    scale = (2 * math.pi) ** 2
    N2 = fine.n**2
    lam_g = np.real(ifft2(fft2(vals) * fine.symbol_power(gamma)))
    lhs = fine.cell_area * float(np.sum(vals ** (p - 1) * lam_g))
    h = fft2(vals ** (p // 2)) / N2
    rhs = scale * float(np.sum(fine.symbol_power(gamma) * np.abs(h) ** 2)) / p
    return lhs, rhs


def positivity_check(g: SpectralField, lam: float, gamma: float, oversample: int = 2) -> tuple[float, float]:
    """(int (Lambda^gamma g) phi(g), |phi(g)|^2 in the gamma/2 norm), integral convention."""
    fine, C = padded_coeffs(g.grid, g.coeffs, oversample)
    vals = np.real(ifft2(C)) * fine.n**2
    phi = np.maximum(vals - lam, 0.0)
    ph = fft2(phi) / fine.n**2
    scale = (2 * math.pi) ** 2
    w = fine.symbol_power(gamma)
    lhs = scale * float(np.real(np.sum(w * C * np.conj(ph))))
    rhs = scale * float(np.sum(w * np.abs(ph) ** 2))
    return lhs, rhs
