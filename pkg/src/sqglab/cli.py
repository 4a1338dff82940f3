"""Command line entry point: ``sqglab <subcommand> [flags]``.

Exit codes: 0 success, 2 invalid configuration or hypothesis violation,
3 solver blow-up (the last finite state is written to last_good.sqgf).
"""
from __future__ import annotations

import argparse
import itertools
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import degiorgi as dg
from .bounds import evaluate_bounds
from .config import ConfigError, RunConfig, load_config
from .detform import BanachTrajectory, WMapConfig, detform_integrate, radius_R
from .dynamics import (BUILTIN_FORCINGS, Forcing, HypothesisError, SqgParams, Trajectory,
                       attractor_sample, builtin_forcing, integrate, periodic_orbit_find,
                       random_initial_condition, steady_state_find, NORM_COLUMNS)
from .io import load_trajectory, save_trajectory, write_csv, write_json
from .littlewood_paley import bernstein_check, build_blocks
from .nudging import NudgeParams, check_hypotheses, synchronize_experiment
from .spectral import (SpectralField, TorusGrid, load_snapshot, random_field, save_snapshot, set_threads,
                       to_physical)
from .timestepping import SolverBlowup, StepperConfig

log = logging.getLogger("sqglab")

# flag -> (config key, help)
SIM_FLAGS = {
    "--n": ("grid.n", "grid size"),
    "--gamma": ("sqg.gamma", "dissipation exponent"),
    "--kappa": ("sqg.kappa", "dissipation coefficient"),
    "--dt": ("time.dt", "time step"),
    "--t-span": ("time.t_span", "integration span"),
    "--spinup": ("time.spinup", "spin-up time"),
    "--forcing": ("forcing.source", "builtin:<name> or snapshot file"),
    "--amplitude": ("forcing.amplitude", "builtin forcing amplitude"),
    "--period": ("forcing.period", "period of time-periodic forcing"),
    "--eps": ("sqg.eps", "extra viscosity"),
    "--scheme": ("time.scheme", "etdrk4, ifrk4 or expeuler"),
    "--sample-every": ("time.sample_every", "steps between samples"),
    "--sigma": ("norms.sigma", "Sobolev index of reported norms"),
}
NUDGE_FLAGS = {
    "--mu": ("nudge.mu", "feedback gain"),
    "--m": ("nudge.m", "LP cut-off index"),
    "--operator": ("nudge.operator", "lp or sharp"),
    "--cutoff": ("nudge.cutoff", "cut-off radius for the sharp operator"),
    "--ref": ("nudge.ref", "reference run directory"),
    "--w0": ("nudge.w0", "zero, random:<seed> or snapshot file"),
    "--window": ("nudge.window", "synchronization window"),
    "--threshold": ("nudge.threshold", "terminal/initial ratio counted as synchronized"),
}
DETFORM_FLAGS = {
    "--ref-steady": ("detform.ref_steady", "steady state snapshot (computed when empty)"),
    "--v0": ("detform.v0", "proj-steady, proj-attractor:<run> or perturbed:<eps>:<seed>"),
    "--m": ("nudge.m", "LP cut-off index"),
    "--mu": ("nudge.mu", "feedback gain"),
    "--tau-span": ("detform.tau_span", "tau span (0: use span-lambda0)"),
    "--dtau": ("detform.dtau", "tau step (0: use dtau-lambda0)"),
    "--span-lambda0": ("detform.span_lambda0", "tau span in units of 1/lambda0"),
    "--dtau-lambda0": ("detform.dtau_lambda0", "tau step in units of 1/lambda0"),
    "--rhs-power": ("detform.rhs_power", "1 or 2"),
}
DIAG_FLAGS = {
    "--run": ("diagnose.run", "nudge run directory"),
    "--check": ("diagnose.check", "levelset, degiorgi, bounds, lemmas or all"),
    "--M": ("diagnose.M", "target bound (0: M_inf formula)"),
    "--delta-inf": ("diagnose.delta_inf", "time offset (0: 1/mu)"),
    "--n-max": ("diagnose.n_max", "deepest level"),
    "--pairs": ("diagnose.pairs", "number of (s1, s2) pairs"),
}
LP_FLAGS = {
    "--n": ("grid.n", "grid size"),
    "--ensemble": ("lp.ensemble", "ensemble size"),
    "--beta": ("lp.beta", "derivative order"),
    "--p": ("lp.p", "source exponent"),
    "--q": ("lp.q", "target exponent"),
}
STEADY_FLAGS = {"--tol": ("steady.tol", "residual tolerance"), "--t-max": ("steady.t_max", "time budget")}
PERIODIC_FLAGS = {"--tol": ("periodic.tol", "Picard tolerance"),
                  "--max-iters": ("periodic.max_iters", "Picard iterations")}
SWEEP_FLAGS = {"--command": ("sweep.command", "subcommand run at each point"),
               "--axes": ("sweep.axes", "key=v1,v2;key2=w1,w2"),
               "--cap": ("sweep.cap", "maximum number of points"),
               "--parallel": ("sweep.parallel", "worker processes")}

COMMAND_FLAGS = {
    "simulate": [SIM_FLAGS],
    "steady": [SIM_FLAGS, STEADY_FLAGS],
    "periodic": [SIM_FLAGS, PERIODIC_FLAGS],
    "nudge": [SIM_FLAGS, NUDGE_FLAGS],
    "detform": [SIM_FLAGS, NUDGE_FLAGS, DETFORM_FLAGS, STEADY_FLAGS],
    "diagnose": [DIAG_FLAGS],
    "lp-verify": [LP_FLAGS],
    "sweep": [SIM_FLAGS, NUDGE_FLAGS, SWEEP_FLAGS],
}


# building blocks

def make_grid(cfg: RunConfig) -> TorusGrid:
    return TorusGrid(cfg["grid.n"])


def make_forcing(cfg: RunConfig, grid: TorusGrid) -> Forcing:
    src = cfg["forcing.source"]
    if src.startswith("builtin:"):
        name = src.split(":", 1)[1]
        if name not in BUILTIN_FORCINGS:
            raise ConfigError(f"unknown builtin forcing {name!r}", "forcing.source")
        return builtin_forcing(name, grid, cfg["forcing.amplitude"], cfg["forcing.period"], cfg["sqg.kappa"])
    f = load_snapshot(src)
    if f.grid.n != grid.n:
        raise ConfigError(f"forcing snapshot has n={f.grid.n}, grid has n={grid.n}", "forcing.source")
    return Forcing(steady=f)


def make_sqg(cfg: RunConfig, grid: TorusGrid) -> SqgParams:
    return SqgParams(cfg["sqg.kappa"], cfg["sqg.gamma"], make_forcing(cfg, grid), cfg["sqg.eps"])


def make_stepper(cfg: RunConfig) -> StepperConfig:
    return StepperConfig(cfg["time.dt"], cfg["time.scheme"])


def make_nudge(cfg: RunConfig) -> NudgeParams:
    return NudgeParams(cfg["nudge.mu"], cfg["nudge.m"], sigma=cfg["norms.sigma"], p=cfg["nudge.p"])


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.echo())
    return out


# subcommands

def cmd_simulate(cfg: RunConfig) -> dict:
    out = _out(cfg)
    grid = make_grid(cfg)
    sqg = make_sqg(cfg, grid)
    step = make_stepper(cfg)
    sigma = cfg["norms.sigma"]
    theta = random_initial_condition(grid, cfg["seed"], sigma)
    if cfg["time.spinup"] > 0:
        spin = integrate(theta, sqg, step, cfg["time.spinup"], sigma=sigma, diagnostics=False)
        theta = spin.sample(len(spin) - 1)
    traj = integrate(theta, sqg, step, cfg["time.t_span"], sample_every=cfg["time.sample_every"],
                     t0=cfg["time.spinup"], sigma=sigma, p=cfg["norms.p"])
    rows = [[r.t] + [r.values[c] for c in NORM_COLUMNS] for r in traj.records]
    write_csv(out / "norms.csv", ("t",) + NORM_COLUMNS, rows)
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)
    for i, s in enumerate(traj.samples):
        save_snapshot(snaps / f"theta_{i:06d}.sqgf", s)
    save_trajectory(out / "traj.npz", traj)
    last = traj.records[-1].values
    return dict(status="ok", l2proxy=last["l2proxy"], hsigma=last["hsigma"],
                energy_residual=last["energy_residual"])


def cmd_steady(cfg: RunConfig) -> dict:
    out = _out(cfg)
    grid = make_grid(cfg)
    sqg = make_sqg(cfg, grid)
    res = steady_state_find(sqg, make_stepper(cfg), cfg["steady.tol"], cfg["steady.t_max"], grid=grid,
                            sigma=cfg["norms.sigma"])
    save_snapshot(out / "steady.sqgf", res.theta)
    info = dict(status="ok" if res.converged else "not-converged", residual=res.residual, t=res.t,
                converged=res.converged)
    write_json(out / "steady.json", info)
    return info


def cmd_periodic(cfg: RunConfig) -> dict:
    out = _out(cfg)
    grid = make_grid(cfg)
    sqg = make_sqg(cfg, grid)
    res = periodic_orbit_find(sqg, make_stepper(cfg), cfg["periodic.tol"], cfg["periodic.max_iters"],
                              grid=grid, sigma=cfg["norms.sigma"], spinup=cfg["time.spinup"])
    save_snapshot(out / "orbit_start.sqgf", res.orbit.sample(0))
    save_trajectory(out / "orbit.npz", res.orbit)
    info = dict(status="ok" if res.converged else "not-converged", converged=res.converged,
                closure=res.closure, period=res.period, residuals=res.residuals)
    write_json(out / "periodic.json", info)
    return info


def _reference(cfg: RunConfig, sqg, step, grid) -> Trajectory:
    if cfg["nudge.ref"]:
        ref = load_trajectory(Path(cfg["nudge.ref"]) / "traj.npz")
        if ref.grid.n != grid.n:
            raise ConfigError("reference run uses a different grid", "nudge.ref")
        return ref
    return attractor_sample(sqg, step, cfg["time.spinup"], cfg["nudge.window"], cfg["seed"], grid=grid,
                            sample_every=cfg["time.sample_every"], sigma=cfg["norms.sigma"])


def _initial_w(cfg: RunConfig, grid: TorusGrid) -> SpectralField:
    spec = cfg["nudge.w0"]
    if spec == "zero":
        return grid.zeros()
    if spec.startswith("random:"):
        seed = int(spec.split(":", 1)[1])
        return random_field(grid, np.random.Generator(np.random.Philox(seed)), norm=1.0)
    f = load_snapshot(spec)
    if f.grid.n != grid.n:
        raise ConfigError("w0 snapshot grid mismatch", "nudge.w0")
    return f


def cmd_nudge(cfg: RunConfig) -> dict:
    out = _out(cfg)
    grid = make_grid(cfg)
    sqg = make_sqg(cfg, grid)
    step = make_stepper(cfg)
    nudge = make_nudge(cfg)
    hyp = check_hypotheses(sqg, nudge)
    blocks = build_blocks(grid)
    ref = _reference(cfg, sqg, step, grid)
    cutoff = cfg["nudge.cutoff"] or None
    rec = synchronize_experiment(sqg, nudge, blocks, step, ref, _initial_w(cfg, grid),
                                 operator=cfg["nudge.operator"], cutoff=cutoff,
                                 threshold=cfg["nudge.threshold"], keep_w=True)
    cols = ("err_l2proxy", "err_hsigma", "err_hminushalf", "inserted_energy")
    rows = [[t] + [rec.columns[c][i] for c in cols] for i, t in enumerate(rec.times)]
    write_csv(out / "sync.csv", ("s",) + cols, rows)
    save_trajectory(out / "w.npz", rec.w)
    save_trajectory(out / "ref.npz", ref)
    summary = rec.summary()
    write_json(out / "report.json", dict(sync=summary, hypotheses=hyp.as_dict(),
                                         reference=dict(ref.meta)))
    return dict(status="ok", rate=rec.rates["err_l2proxy"], r2=rec.r2["err_l2proxy"],
                terminal_ratio=rec.terminal_ratio, synchronized=rec.synchronized)


def _constant_window(grid, coeffs, cfg, m, sigma) -> BanachTrajectory:
    sdt = cfg["detform.sample_dt"]
    T = int(round(cfg["detform.window"] / sdt)) + 1
    return BanachTrajectory(Trajectory(grid, 0.0, sdt, np.repeat(coeffs[None], T, axis=0)), sigma, m)


def cmd_detform(cfg: RunConfig) -> dict:
    out = _out(cfg)
    grid = make_grid(cfg)
    sqg = make_sqg(cfg, grid)
    step = make_stepper(cfg)
    nudge = make_nudge(cfg)
    check_hypotheses(sqg, nudge)
    blocks = build_blocks(grid)
    sigma, m = cfg["norms.sigma"], nudge.m
    if cfg["detform.ref_steady"]:
        theta_star = load_snapshot(cfg["detform.ref_steady"])
        steady_res = float("nan")
    else:
        ss = steady_state_find(sqg, step, cfg["steady.tol"], cfg["steady.t_max"], grid=grid, sigma=sigma)
        theta_star, steady_res = ss.theta, ss.residual
    sm = blocks.lowpass_symbol(m)
    base = sm * theta_star.coeffs
    spec = cfg["detform.v0"]
    if spec == "proj-steady":
        v0 = _constant_window(grid, base, cfg, m, sigma)
    elif spec.startswith("perturbed:"):
        _, eps, seed = spec.split(":")
        pert = random_field(grid, np.random.Generator(np.random.Philox(int(seed))), kmax=2.0**m).coeffs * sm
        scale = float(eps) * math.sqrt(np.sum(grid.symbol_power(2 * sigma) * np.abs(base) ** 2))
        pert *= scale / math.sqrt(np.sum(grid.symbol_power(2 * sigma) * np.abs(pert) ** 2))
        v0 = _constant_window(grid, base + pert, cfg, m, sigma)
    elif spec.startswith("proj-attractor:"):
        run = load_trajectory(Path(spec.split(":", 1)[1]) / "traj.npz")
        sdt = cfg["detform.sample_dt"]
        every = max(1, int(round(sdt / run.dt)))
        T = int(round(cfg["detform.window"] / sdt)) + 1
        data = run.data[::every][:T] * sm
        v0 = BanachTrajectory(Trajectory(grid, run.t0, run.dt * every, data), sigma, m)
    else:
        raise ConfigError(f"unknown v0 setting {spec!r}", "detform.v0")
    wcfg = WMapConfig.from_mu(nudge.mu)
    kw = {}
    if cfg["detform.tau_span"] > 0:
        kw["tau_span"] = cfg["detform.tau_span"]
    else:
        kw["span_in_lambda0"] = cfg["detform.span_lambda0"]
    states = detform_integrate(v0, theta_star, sqg, nudge, blocks, step, wcfg,
                               dtau=cfg["detform.dtau"] or None, power=cfg["detform.rhs_power"],
                               tol=cfg["detform.tol"], R=radius_R(sqg, grid=grid), **kw)
    rows = [[s.tau, s.residual, s.dist, s.lam] for s in states]
    write_csv(out / "detform.csv", ("tau", "residual_x", "dist_to_steady_x", "lambda"), rows)
    info = dict(status="ok", steps=len(states) - 1, initial_residual=states[0].residual,
                terminal_residual=states[-1].residual, steady_residual=steady_res)
    write_json(out / "detform.json", info)
    return info


def _run_config(run: Path) -> RunConfig:
    return load_config(run / "config.txt")


def cmd_diagnose(cfg: RunConfig) -> dict:
    if not cfg["diagnose.run"]:
        raise ConfigError("diagnose needs --run <nudge run directory>", "diagnose.run")
    run = Path(cfg["diagnose.run"])
    rcfg = _run_config(run)
    out = _out(cfg)
    grid = make_grid(rcfg)
    sqg = make_sqg(rcfg, grid)
    nudge = make_nudge(rcfg)
    blocks = build_blocks(grid)
    w = load_trajectory(run / "w.npz")
    ref = load_trajectory(run / "ref.npz")
    check = cfg["diagnose.check"]
    sigma, p = nudge.sigma, nudge.p
    theta_hs = float(ref.norms(sigma).max())
    bset = evaluate_bounds(sqg, nudge.mu, sigma, p, theta_hs, grid=grid)
    M = cfg["diagnose.M"] or bset.M_inf
    delta = cfg["diagnose.delta_inf"] or min(1.0 / nudge.mu, w.t_end - w.t0)
    report = {}
    if check in ("bounds", "all"):
        report["bounds"] = bset.as_dict()
    if check in ("degiorgi", "all"):
        le = dg.level_energies(w, dg.LevelSetConfig(M, cfg["diagnose.n_max"], delta), sqg.gamma, sqg.kappa)
        est = dg.linfty_bound_estimate(w, sqg, nudge, bset.F_Lp, bset.rho0, delta)
        report["degiorgi"] = dict(M=M, delta_inf=delta, U=le.U, non_increasing=le.non_increasing,
                                  linfty=est.as_dict())
    if check in ("levelset", "all"):
        v = ref.map(lambda d: d * blocks.lowpass_symbol(nudge.m - 1))
        res = dg.levelset_inequality_check(w, v, sqg, nudge, blocks, M / 2, n_pairs=cfg["diagnose.pairs"],
                                           seed=rcfg["seed"])
        report["levelset"] = dict(lam=M / 2, min_residual=res.min_residual, passed=res.passed,
                                  residuals=res.residuals, pairs=res.pairs, warning=res.hypothesis_warning)
    if check in ("lemmas", "all"):
        it = dg.iteration_lemma_check(dg.IterationLemmaParams(1, 1, 1, (2.0,), 1, 1, 1), 256.0, 6)
        lb, pos = [], []
        for s in w.samples[:: max(1, len(w) // 10)]:
            if not np.any(s.coeffs):
                continue
            for q in (2, 4):
                a, b = dg.lb_check(s, sqg.gamma, q)
                lb.append(a - b)
            top = float(np.abs(to_physical(s).values).max())
            a, b = dg.positivity_check(s, 0.5 * top, sqg.gamma)
            pos.append(a - b)
        report["lemmas"] = dict(iteration=dict(V=it.V, bounds=it.bounds, holds=it.holds,
                                               threshold=it.threshold, hypothesis_met=it.hypothesis_met),
                                lb_min_residual=min(lb, default=0.0), positivity_min_residual=min(pos, default=0.0))
    write_json(out / "diagnostics.json", report)
    return dict(status="ok", M=M)


def cmd_lp_verify(cfg: RunConfig) -> dict:
    out = _out(cfg)
    grid = make_grid(cfg)
    blocks = build_blocks(grid)
    reports = {}
    for j in blocks.indices:
        if j < 1:
            continue
        r = bernstein_check(blocks, cfg["lp.ensemble"], j, cfg["lp.beta"], cfg["lp.p"], cfg["lp.q"],
                            seed=cfg["seed"])
        reports[str(j)] = r.as_dict()
    passed = all(r["passed"] for r in reports.values())
    write_json(out / "lp_report.json", dict(n=grid.n, passed=passed, blocks=reports))
    return dict(status="ok" if passed else "ceiling-exceeded", passed=passed)


def parse_axes(text: str) -> list[tuple[str, list[str]]]:
    axes = []
    for part in filter(None, (s.strip() for s in text.split(";"))):
        if "=" not in part:
            raise ConfigError(f"bad sweep axis {part!r}", "sweep.axes")
        key, vals = part.split("=", 1)
        axes.append((key.strip(), [v.strip() for v in vals.split(",") if v.strip()]))
    return axes


def _sweep_point(args):
    values, name, idx = args
    cfg = RunConfig(values)
    try:
        info = COMMANDS[name](cfg)
        return idx, info
    except Exception as exc:  # failed points are recorded, never fatal
        return idx, dict(status=f"failed: {type(exc).__name__}: {exc}")


def cmd_sweep(cfg: RunConfig) -> dict:
    out = _out(cfg)
    axes = parse_axes(cfg["sweep.axes"])
    size = math.prod(len(v) for _, v in axes) if axes else 1
    if size > cfg["sweep.cap"]:
        raise ConfigError(f"sweep has {size} points, cap is {cfg['sweep.cap']}", "sweep.axes")
    points = list(itertools.product(*[v for _, v in axes])) if axes else [()]
    jobs = []
    for idx, combo in enumerate(points):
        c = cfg.copy()
        for (key, _), val in zip(axes, combo):
            c.set(key, val)
        c.set("out_dir", str(out / f"point_{idx:05d}"))
        jobs.append((c.as_dict(), cfg["sweep.command"], idx))
    if cfg["sweep.parallel"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg["sweep.parallel"]) as ex:
            results = dict(ex.map(_sweep_point, jobs))
    else:
        results = dict(map(_sweep_point, jobs))
    scalar_keys = sorted({k for r in results.values() for k, v in r.items()
                          if k != "status" and isinstance(v, (int, float, bool, np.floating))})
    header = ["point"] + [k for k, _ in axes] + ["status"] + scalar_keys
    rows = []
    for idx, combo in enumerate(points):
        r = results[idx]
        row = [idx] + list(combo) + [str(r.get("status", "ok")).replace(",", ";")]
        for k in scalar_keys:
            v = r.get(k, float("nan"))
            row.append(v if isinstance(v, (int, bool)) or np.isfinite(v) else "nan")
        rows.append(row)
    write_csv(out / "sweep.csv", header, rows)
    failed = sum(1 for r in results.values() if str(r.get("status", "")).startswith("failed"))
    return dict(status="ok", points=len(points), failed=failed)


COMMANDS = {
    "simulate": cmd_simulate,
    "steady": cmd_steady,
    "periodic": cmd_periodic,
    "nudge": cmd_nudge,
    "detform": cmd_detform,
    "diagnose": cmd_diagnose,
    "lp-verify": cmd_lp_verify,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (dotted keys)")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--threads", type=int, help="FFT threads (fallback: SQGLAB_THREADS)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key")
    parser = argparse.ArgumentParser(prog="sqglab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, groups in COMMAND_FLAGS.items():
        sp = sub.add_parser(name, parents=[common])
        seen = set()
        for group in groups:
            for flag, (key, help_) in group.items():
                if flag in seen:
                    continue
                seen.add(flag)
                sp.add_argument(flag, dest="opt:" + key, help=f"{help_} [{key}]")
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    cfg = load_config(ns.config) if ns.config else RunConfig()
    for item in ns.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        cfg.set(k.strip(), v.strip())
    for attr, value in vars(ns).items():
        if attr.startswith("opt:") and value is not None:
            cfg.set(attr[4:], value)
    if ns.out_dir is not None:
        cfg.set("out_dir", ns.out_dir)
    if ns.seed is not None:
        cfg.set("seed", ns.seed)
    if ns.threads is not None:
        cfg.set("threads", ns.threads)
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    ns = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(ns)
        set_threads(cfg["threads"] or None)
        info = COMMANDS[ns.command](cfg)
    except (ConfigError, HypothesisError) as exc:
        key = getattr(exc, "key", None)
        print(f"error: {exc}" + (f" [key: {key}]" if key else ""), file=sys.stderr)
        return 2
    except SolverBlowup as exc:
        path = None
        if exc.last_good is not None:
            out = Path(cfg["out_dir"])
            out.mkdir(parents=True, exist_ok=True)
            path = out / "last_good.sqgf"
            save_snapshot(path, exc.last_good)
        print(f"error: solver blow-up: {exc}; last good snapshot: {path}", file=sys.stderr)
        return 3
    log.info("%s finished: %s", ns.command, {k: v for k, v in info.items() if not isinstance(v, list)})
    return 0


if __name__ == "__main__":
    sys.exit(main())
