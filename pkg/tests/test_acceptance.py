"""Acceptance criteria 1-12, one test per criterion.

Each test records PASS/FAIL with its measured numbers in RESULTS; the
conftest hook prints one line per criterion at the end of the session.
Run alone with ``pytest tests/test_acceptance.py -v`` (about 5 minutes on
one core).
"""
import math
import sys
import time

import numpy as np
import pytest

from sqglab.degiorgi import (
    IterationLemmaParams, LevelSetConfig, iteration_lemma_check, lambda_decompose, lb_check,
    level_energies, levelset_inequality_check, linfty_bound_estimate, measured_sup, positivity_check,
)
from sqglab.bounds import evaluate_bounds
from sqglab.detform import (
    BanachTrajectory, WMapConfig, detform_integrate, detform_rhs, w_map, w_map_lipschitz_probe, x_norm,
    y_norm,
)
from sqglab.dynamics import (
    Forcing, SqgParams, Trajectory, attractor_sample, integrate, lowmode_pattern, periodic_orbit_find,
    steady_state_find,
)
from sqglab.littlewood_paley import build_blocks, lattice_radius
from sqglab.nudging import (
    NudgeParams, determining_modes_experiment, determining_modes_threshold, measured_lp_sup,
    minimal_mu_search, synchronize_experiment,
)
from sqglab.spectral import (
    TorusGrid, advection_term, fractional_laplacian, from_function, inner, random_field, riesz_velocity,
    sobolev_norm_coeffs, to_physical, to_spectral,
)
from sqglab.timestepping import StepperConfig

RESULTS: dict = {}


def report(k: int, ok: bool, detail: str):
    ok = bool(ok)
    RESULTS[k] = (ok, detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}", file=sys.stderr)
    assert ok, f"criterion {k} failed: {detail}"


CFG = StepperConfig(0.01)
GAMMA, KAPPA = 1.5, 1.0


def desk_sqg(grid, amplitude=0.1):
    return SqgParams(KAPPA, GAMMA, amplitude * lowmode_pattern(grid))


# shared runs

@pytest.fixture(scope="module")
def sync_run():
    """Criterion-4 twin experiment at n = 128, kept for criteria 9-11."""
    g = TorusGrid(128)
    blocks = build_blocks(g)
    sqg = desk_sqg(g)
    t = time.perf_counter()
    ref = attractor_sample(sqg, CFG, 20.0, 2.0, seed=1)
    nudge = NudgeParams(64.0, 5)
    rec = synchronize_experiment(sqg, nudge, blocks, CFG, ref, g.zeros(), keep_w=True, threshold=1e-8)
    control = synchronize_experiment(sqg, nudge.with_mu(0.0), blocks, CFG, ref, g.zeros(), threshold=1e-8)
    return dict(grid=g, blocks=blocks, sqg=sqg, ref=ref, nudge=nudge, rec=rec, control=control,
                elapsed=time.perf_counter() - t)


@pytest.fixture(scope="module")
def steady64():
    g = TorusGrid(64)
    sqg = desk_sqg(g)
    st = steady_state_find(sqg, CFG, 1e-11, 40.0, grid=g)
    return dict(grid=g, blocks=build_blocks(g), sqg=sqg, steady=st)


# criteria

def test_criterion_01_spectral_identities():
    t = time.perf_counter()
    g = TorusGrid(64)
    rng = np.random.default_rng(2024)
    worst = dict(round_trip=0.0, semigroup=0.0, divergence=0.0, skew=0.0)
    for _ in range(100):
        f = random_field(g, rng)
        worst["round_trip"] = max(worst["round_trip"], np.abs(to_spectral(to_physical(f)).coeffs - f.coeffs).max())
        a, b = rng.uniform(-2, 2, size=2)
        lhs = fractional_laplacian(fractional_laplacian(f, a), b).coeffs
        worst["semigroup"] = max(worst["semigroup"], np.abs(lhs - fractional_laplacian(f, a + b).coeffs).max())
        u = riesz_velocity(f)
        c1, c2 = to_spectral(u.u1).coeffs, to_spectral(u.u2).coeffs
        worst["divergence"] = max(worst["divergence"], np.abs(g.k1 * c1 + g.k2 * c2).max())
        worst["skew"] = max(worst["skew"], abs(inner(advection_term(f), f)))
    elapsed = time.perf_counter() - t
    ok = all(v < 1e-10 for v in worst.values()) and elapsed < 10
    report(1, ok, " ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f" time={elapsed:.1f}s")


def test_criterion_02_littlewood_paley_structure():
    t = time.perf_counter()
    pou, loc_ok, split_ok = 0.0, True, True
    for n in (32, 64, 128):
        g = TorusGrid(n)
        b = build_blocks(g)
        lattice = g.kmod <= lattice_radius(g) + 1e-12
        total = sum(b.block_symbol(j) for j in b.indices)
        pou = max(pou, float(np.abs(total[lattice] - 1).max()))
        r = g.kmod
        for j in range(0, b.j_max + 1):
            s = b.block_symbol(j)
            loc_ok &= bool(np.all(s[(r < 2.0 ** (j - 2)) | (r > 2.0 ** j)] == 0.0))
        loc_ok &= bool(np.all(b.block_symbol(-1)[r >= 0.5] == 0.0))
        for m in range(-1, b.j_max + 1):
            split_ok &= bool(np.all(b.lowpass_symbol(m) + b.highpass_symbol(m) == 1.0))
    elapsed = time.perf_counter() - t
    report(2, pou <= 1e-12 and loc_ok and split_ok and elapsed < 5,
           f"partition={pou:.1e} localization={'exact' if loc_ok else 'violated'} "
           f"S+T={'exact' if split_ok else 'inexact'} time={elapsed:.1f}s")


def test_criterion_03_linear_decay_oracle():
    t = time.perf_counter()
    g = TorusGrid(64)
    f = from_function(g, lambda x, y: np.cos(x))
    tr = integrate(f, SqgParams(1.0, 1.5, Forcing()), StepperConfig(1e-3), 1.0, sample_every=1000,
                   diagnostics=False)
    amp = 2 * tr.data[-1][1, 0].real
    err = abs(amp - math.exp(-1))
    elapsed = time.perf_counter() - t
    report(3, err < 1e-6 and elapsed < 5, f"amplitude={amp:.15f} error={err:.1e} time={elapsed:.1f}s")


def test_criterion_04_synchronization(sync_run):
    rec, control = sync_run["rec"], sync_run["control"]
    t_hit = rec.first_time_below(1e-8)
    t0 = rec.times[0]
    r2 = rec.r2["err_l2proxy"]
    rate, rate0 = rec.rates["err_l2proxy"], control.rates["err_l2proxy"]
    ok = (t_hit is not None and t_hit - t0 <= 2.0 and r2 >= 0.99
          and not control.synchronized and rate0 < 0.05 * rate and sync_run["elapsed"] < 300)
    report(4, ok, f"below 1e-8 at s={None if t_hit is None else round(t_hit - t0, 3)} rate={rate:.2f} "
                  f"R2={r2:.5f} terminal={rec.terminal_ratio:.1e}; control mu=0: rate={rate0:.3f} "
                  f"terminal={control.terminal_ratio:.3f} time={sync_run['elapsed']:.0f}s")


@pytest.mark.xfail(strict=True, reason="the desk attractor is a stable steady state; the free twin "
                                       "relaxes to it by dissipation alone (see decisions ledger)")
def test_criterion_04_control_literal_no_decay(sync_run):
    assert sync_run["control"].terminal_ratio >= 1.0


def test_criterion_05_mu_threshold_scaling():
    t = time.perf_counter()
    est = {}
    for n in (64, 128):
        g = TorusGrid(n)
        blocks = build_blocks(g)
        for a in (0.1, 0.2, 0.4):
            sqg = desk_sqg(g, a)
            ref = attractor_sample(sqg, CFG, 20.0, 2.0, seed=1)
            thr = minimal_mu_search(sqg, NudgeParams(64.0, 5), blocks, CFG, ref, tol=0.05, bracket=(0.0, 128.0))
            est[(n, a)] = thr.estimate
    mono = all(est[(n, 0.1)] <= est[(n, 0.2)] <= est[(n, 0.4)] for n in (64, 128))
    spread = max(abs(est[(128, a)] - est[(64, a)]) / est[(64, a)] for a in (0.1, 0.2, 0.4))
    elapsed = time.perf_counter() - t
    report(5, mono and spread <= 0.3 and elapsed < 1800,
           " ".join(f"n{n}/a{a}:{v:.3f}" for (n, a), v in est.items())
           + f" refinement spread={spread:.1%} time={elapsed:.0f}s")


def _constant(grid, c, m, T=11, dt=0.02, sigma=1.0):
    return BanachTrajectory(Trajectory(grid, 0.0, dt, np.repeat(np.asarray(c)[None], T, 0)), sigma, m)


def _perturbed(grid, blocks, base, m, eps, seed, kmax=None):
    sm = blocks.lowpass_symbol(m)
    pert = random_field(grid, np.random.Generator(np.random.Philox(seed)), kmax=kmax or 2.0 ** m).coeffs * sm
    pert *= eps * sobolev_norm_coeffs(grid, base, 1.0) / sobolev_norm_coeffs(grid, pert, 1.0)
    return base + pert


def test_criterion_06_determining_form_steady_state(steady64):
    t = time.perf_counter()
    g, blocks, sqg, st = steady64["grid"], steady64["blocks"], steady64["sqg"], steady64["steady"]
    nudge = NudgeParams(64.0, 5)
    wcfg = WMapConfig.from_mu(nudge.mu)
    base = blocks.lowpass_symbol(nudge.m) * st.theta.coeffs
    vs = _constant(g, base, nudge.m)
    rhs = detform_rhs(vs, st.theta, sqg, nudge, blocks, CFG, wcfg)
    rhs_x = x_norm(vs.with_data(rhs.data))
    v0 = _constant(g, _perturbed(g, blocks, base, nudge.m, 0.01, 0), nudge.m)
    lam0 = detform_rhs(v0, st.theta, sqg, nudge, blocks, CFG, wcfg).lam
    states = detform_integrate(v0, st.theta, sqg, nudge, blocks, CFG, wcfg, span_in_lambda0=50.0,
                               dtau=0.5 / lam0)
    res = np.array([s.residual for s in states])
    mono = bool(np.all(np.diff(res[5:]) <= 0))
    ratio = res[-1] / res[0]
    elapsed = time.perf_counter() - t
    ok = st.residual < 1e-8 and rhs_x < 1e-6 and mono and ratio < 0.1 and elapsed < 3600
    report(6, ok, f"steady residual={st.residual:.1e} rhs X-norm={rhs_x:.1e} W-residual={rhs.residual:.1e} "
                  f"monotone={mono} terminal/initial={ratio:.5f} steps={len(states) - 1} time={elapsed:.0f}s")


def test_criterion_07_forgetting():
    t = time.perf_counter()
    g = TorusGrid(64)
    blocks = build_blocks(g)
    sqg = desk_sqg(g)
    nudge = NudgeParams(64.0, 5)
    ref = attractor_sample(sqg, CFG, 20.0, 0.5, seed=2)
    v = BanachTrajectory(ref.map(lambda d: d * blocks.lowpass_symbol(nudge.m - 1)), 1.0, nudge.m, low_pass=True)
    wcfg = WMapConfig(math.log(1e8) / nudge.mu, mu=nudge.mu)
    w_a = w_map(v, sqg, nudge, blocks, CFG, wcfg)
    start = random_field(g, np.random.Generator(np.random.Philox(7)), sigma=1.0, norm=1.0)
    w_b = w_map(v, sqg, nudge, blocks, CFG, wcfg, w_init=start)
    diff = y_norm(BanachTrajectory(w_a - w_b, 1.0, nudge.m))
    elapsed = time.perf_counter() - t
    report(7, diff < 1e-7 and elapsed < 600,
           f"Y-distance={diff:.2e} (starts 0 and |w0|_H1=1) relax={wcfg.relax_time:.4f} time={elapsed:.0f}s")


def test_criterion_08_lipschitz_scaling(steady64):
    t = time.perf_counter()
    g, blocks, sqg, st = steady64["grid"], steady64["blocks"], steady64["sqg"], steady64["steady"]
    sigma = 1.0
    m0 = 4
    bound = 4 * 2.0 ** (sigma + 0.5)
    factors = []
    for pair in range(10):
        ratios = []
        for m in (m0, m0 + 1):
            nudge = NudgeParams(64.0, m)
            wcfg = WMapConfig.from_mu(nudge.mu)
            base = blocks.lowpass_symbol(m) * st.theta.coeffs
            # perturbations live in |k| <= 2^{m0-1}, a common subspace for both m
            v1 = _constant(g, _perturbed(g, blocks, base, m, 0.05, 100 + pair, kmax=2.0 ** (m0 - 1)), m)
            v2 = _constant(g, _perturbed(g, blocks, base, m, 0.05, 200 + pair, kmax=2.0 ** (m0 - 1)), m)
            ratios.append(w_map_lipschitz_probe(v1, v2, sqg, nudge, blocks, CFG, wcfg).ratio_y)
        factors.append(max(ratios[1] / ratios[0], ratios[0] / ratios[1]))
    worst = max(factors)
    elapsed = time.perf_counter() - t
    report(8, worst <= bound and elapsed < 3600,
           f"max factor between m={m0} and m={m0 + 1}: {worst:.4f} (bound {bound:.3f}) time={elapsed:.0f}s")


def _m_inf(run):
    ref, sqg, nudge = run["ref"], run["sqg"], run["nudge"]
    theta_hs = float(ref.norms(nudge.sigma).max())
    return evaluate_bounds(sqg, nudge.mu, nudge.sigma, nudge.p, theta_hs, grid=run["grid"])


def test_criterion_09_degiorgi_machinery(sync_run):
    t = time.perf_counter()
    w = sync_run["rec"].w
    sqg, nudge = sync_run["sqg"], sync_run["nudge"]
    top = measured_sup(w)
    decomp_ok = True
    for s in w.samples[::20]:
        vals = to_physical(s)
        plus, minus, small = lambda_decompose(vals, 0.5 * top)
        err = np.abs(plus.values - minus.values + small.values - vals.values)
        decomp_ok &= bool(np.all(err <= 4 * np.finfo(float).eps * np.maximum(np.abs(vals.values), 0.5 * top)))
    bset = _m_inf(sync_run)
    delta = 1.0 / nudge.mu
    runs = {}
    for M in (bset.M_inf, top, 0.5 * top):
        runs[M] = level_energies(w, LevelSetConfig(M, 12, delta), sqg.gamma, sqg.kappa)
    le = runs[bset.M_inf]
    monotone = all(r.non_increasing for r in runs.values())
    audit = le.U[12] < 1e-8 * le.U[0]
    est = linfty_bound_estimate(w, sqg, nudge, bset.F_Lp, bset.rho0, delta)
    lemma = iteration_lemma_check(IterationLemmaParams(1, 1, 1, (2.0,), 1, 1.0, 1.0), 256.0, 2)
    lemma_ok = lemma.holds and lemma.V[2] <= lemma.V[0] / 2 ** 6 * (1 + 1e-12)
    elapsed = time.perf_counter() - t
    report(9, decomp_ok and monotone and audit and lemma_ok and elapsed < 600,
           f"decompose exact={decomp_ok} non-increasing={monotone} M_inf={bset.M_inf:.3g} sup|w|={top:.3g} "
           f"U0={le.U[0]:.3e} U12={le.U[12]:.1e} calibrated C={est.calibration:.3e} "
           f"lemma V2={lemma.V[2]:.6f}<=V0/64 time={elapsed:.0f}s")


def test_criterion_10_levelset_inequality(sync_run):
    t = time.perf_counter()
    w, ref, blocks = sync_run["rec"].w, sync_run["ref"], sync_run["blocks"]
    sqg, nudge = sync_run["sqg"], sync_run["nudge"]
    v = ref.map(lambda d: d * blocks.lowpass_symbol(nudge.m - 1))
    M = _m_inf(sync_run).M_inf
    at_m = levelset_inequality_check(w, v, sqg, nudge, blocks, M / 2, n_pairs=20, seed=0)
    lam = 0.5 * measured_sup(w)
    inner_level = levelset_inequality_check(w, v, sqg, nudge, blocks, lam, n_pairs=20, seed=0)
    elapsed = time.perf_counter() - t
    report(10, at_m.passed and inner_level.passed and elapsed < 300,
           f"lambda=M/2={M / 2:.3g}: min residual={at_m.min_residual:.2e}; "
           f"lambda=sup|w|/2={lam:.3g}: min residual={inner_level.min_residual:.3e} time={elapsed:.0f}s")


def test_criterion_11_determining_modes_and_periodic_orbit(sync_run):
    t = time.perf_counter()
    g, sqg, ref = sync_run["grid"], sync_run["sqg"], sync_run["ref"]
    theta_lp = measured_lp_sup(ref, sync_run["nudge"].p)
    needed = determining_modes_threshold(theta_lp, sqg.kappa, sqg.gamma, sync_run["nudge"].p)
    rng = np.random.Generator(np.random.Philox(11))
    w0 = random_field(g, rng, kmax=(g.n // 2) * g.dealias_fraction, norm=1.0)
    good = determining_modes_experiment(sqg, CFG, 24.0, ref, w0)
    bad = determining_modes_experiment(sqg, CFG, 1.0, ref, w0)
    g64 = TorusGrid(64)
    per = SqgParams(KAPPA, GAMMA, Forcing(periodic=0.05 * lowmode_pattern(g64), period=1.0))
    orbit = periodic_orbit_find(per, CFG, 1e-10, 60, grid=g64)
    elapsed = time.perf_counter() - t
    ok = good.terminal_ratio < 1e-6 and not bad.synchronized and orbit.closure < 1e-6 and elapsed < 1800
    report(11, ok, f"h^-1=24: terminal={good.terminal_ratio:.1e}; h^-1=1: terminal={bad.terminal_ratio:.2e}; "
                   f"Theta_L8={theta_lp:.3f} formula h^-1>={needed:.3g} (constant 1); "
                   f"orbit closure={orbit.closure:.1e} time={elapsed:.0f}s")


def test_criterion_12_integrated_inequalities():
    t = time.perf_counter()
    g = TorusGrid(32)
    rng = np.random.Generator(np.random.Philox(12))
    worst_lb, worst_pos = math.inf, math.inf
    for _ in range(100):
        f = random_field(g, rng, kmax=4, norm=1.0)
        for p in (2, 4):
            a, b = lb_check(f, GAMMA, p)
            worst_lb = min(worst_lb, a - b)
        top = float(np.abs(to_physical(f).values).max())
        a, b = positivity_check(f, 0.5 * top, GAMMA)
        worst_pos = min(worst_pos, a - b)
    elapsed = time.perf_counter() - t
    report(12, worst_lb >= -1e-6 and worst_pos >= -1e-6 and elapsed < 60,
           f"min(lhs - rhs): lb={worst_lb:.3e} positivity={worst_pos:.3e} over 100 fields time={elapsed:.1f}s")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
