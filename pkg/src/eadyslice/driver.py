"""Experiment orchestration: the init -> breed -> reset -> integrate protocol,
with timeseries, snapshot, and checkpoint emission."""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

from . import diagnostics, initial, runio, timestep
from .domain import Grid, RunConfig, State


def _log_to_stderr(msg: str) -> None:
    print(msg, file=sys.stderr)


def make_stepper(cfg: RunConfig, grid: Grid, initial_delta=None):
    """Return step(state) -> (state, SolverStats | None) for the configured
    integrator. The closure carries the warm-start increment between steps;
    step.memory exposes it for checkpointing."""
    c = cfg.constants
    if cfg.integrator == "explicit-ssprk3":
        rhs = timestep.make_packed_rhs(grid, c, cfg)

        def step(state: State):
            return timestep.step_ssprk3(state, cfg.dt, grid, c, cfg, rhs=rhs), None
        step.memory = {"delta": None}
    else:
        solver = timestep.SolverConfig.from_run_config(cfg)
        memory = {"delta": initial_delta}

        def step(state: State):
            z_before = timestep.pack(state)
            new, stats = timestep.step_implicit_midpoint(
                state, cfg.dt, grid, c, cfg, solver=solver,
                guess_delta=memory["delta"])
            memory["delta"] = timestep.pack(new) - z_before
            return new, stats
        step.memory = memory
    return step


def _snapshot_name(t: float) -> str:
    return f"snap_{t / 86400.0:08.3f}.vtk"


def run_protocol(cfg: RunConfig, out_dir: str | None = None,
                 resume: str | None = None, log=_log_to_stderr,
                 stop_after_init: bool = False) -> dict:
    """Full experiment: init, breed, reset clock, integrate, emit outputs.

    Returns a summary dict (breeding time, steps taken, output paths).
    With stop_after_init=True only the bred state is produced (the `init`
    subcommand).
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_hash = runio.write_effective_config(cfg, out)
    grid = cfg.grid()
    c = cfg.constants

    t_breed = 0.0
    bred = False
    step0 = 0
    warm = None
    if resume is not None:
        state, cfg_ck, meta = runio.read_checkpoint(resume)
        if (cfg_ck.nx, cfg_ck.nz) != (cfg.nx, cfg.nz):
            raise runio.CheckpointError(
                f"checkpoint grid {cfg_ck.nx}x{cfg_ck.nz} does not match "
                f"configured {cfg.nx}x{cfg.nz}")
        t_breed = float(meta.get("t_breed", 0.0))
        bred = bool(meta.get("bred", False))
        warm = meta.get("warm_delta")
        step0 = int(round(state.t / cfg.dt))
        log(f"resumed at t = {state.t:.1f} s (step {step0})")

    step = make_stepper(cfg, grid, initial_delta=warm)
    newton_since = 0
    gmres_since = 0

    def step_counting(state: State) -> State:
        nonlocal newton_since, gmres_since
        state, stats = step(state)
        if stats is not None:
            newton_since += stats.newton_iterations
            gmres_since += stats.linear_iterations_total
        return state

    if resume is None:
        log(f"initializing {cfg.nx}x{cfg.nz}, dt = {cfg.dt} s")
        state = initial.initial_state(cfg, grid)
        if cfg.breed:
            state, t_breed = initial.breed(state, cfg, step_counting)
            bred = True
            log(f"breeding reached max|v| >= {cfg.breed_vmax} m/s at "
                f"t = {t_breed / 3600.0:.2f} h; clock reset")

    summary = {"t_breed": t_breed, "bred": bred, "config_hash": cfg_hash,
               "out_dir": str(out)}
    ck_path = out / "checkpoint_bred.npz"
    if resume is None:
        runio.write_checkpoint(state, cfg, ck_path, t_breed=t_breed, bred=bred,
                               warm_delta=step.memory["delta"])
    if stop_after_init:
        runio.write_snapshot(state, grid, c, out / _snapshot_name(state.t),
                             cfg_hash)
        summary["checkpoint"] = str(ck_path)
        return summary

    n_steps = int(round(cfg.run_days * 86400.0 / cfg.dt))
    k_row = int(round(cfg.timeseries_interval / cfg.dt))
    k_snap = int(round(cfg.snapshot_interval / cfg.dt))
    k_ck = int(round(cfg.checkpoint_interval / cfg.dt)) if cfg.checkpoint_interval else 0
    ts_path = out / "timeseries.csv"

    def emit_row(state: State) -> None:
        nonlocal newton_since, gmres_since
        rec = diagnostics.record(state, grid, c, cfg.mass_weighted_rmsv,
                                 newton_iters=newton_since,
                                 gmres_iters=gmres_since)
        runio.append_timeseries(rec, ts_path)
        newton_since = 0
        gmres_since = 0

    if step0 == 0:
        emit_row(state)
        runio.write_snapshot(state, grid, c, out / _snapshot_name(0.0), cfg_hash)

    for i in range(step0, n_steps):
        state = step_counting(state)
        state.t = (i + 1) * cfg.dt
        done = i + 1
        if done % k_row == 0:
            emit_row(state)
        if done % k_snap == 0:
            runio.write_snapshot(state, grid, c,
                                 out / _snapshot_name(state.t), cfg_hash)
        if k_ck and done % k_ck == 0:
            runio.write_checkpoint(state, cfg, out / "checkpoint_latest.npz",
                                   t_breed=t_breed, bred=bred,
                                   warm_delta=step.memory["delta"])
        if done % max(1, n_steps // 20) == 0:
            log(f"day {state.t / 86400.0:6.2f}  "
                f"rmsv {diagnostics.rmsv(state, grid):8.4f} m/s")

    runio.write_checkpoint(state, cfg, out / "checkpoint_final.npz",
                           t_breed=t_breed, bred=bred,
                           warm_delta=step.memory["delta"])
    summary["steps"] = n_steps
    summary["timeseries"] = str(ts_path)
    summary["final_checkpoint"] = str(out / "checkpoint_final.npz")
    return summary


def compare_protocol(cfg: RunConfig, day: float, out_dir: str | None = None,
                     log=_log_to_stderr) -> dict:
    """Breed once, then integrate advective and vector-invariant twins to
    `day` and report their grid-noise metrics."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid()
    c = cfg.constants

    base_cfg = dataclasses.replace(cfg, velocity_form="advective")
    step = make_stepper(base_cfg, grid)
    state0 = initial.initial_state(base_cfg, grid)
    if cfg.breed:
        state0, t_breed = initial.breed(state0, base_cfg,
                                        lambda s: step(s)[0])
        log(f"breeding finished at t = {t_breed / 3600.0:.2f} h")
    else:
        t_breed = 0.0

    report = {"day": day, "t_breed_hours": t_breed / 3600.0,
              "noise_metric": {}, "rmsv": {}}
    n_steps = int(round(day * 86400.0 / cfg.dt))
    k_row = int(round(cfg.timeseries_interval / cfg.dt))
    for form in ("advective", "vector-invariant"):
        twin_cfg = dataclasses.replace(cfg, velocity_form=form)
        twin_hash = runio.write_effective_config(twin_cfg, out / form)
        twin_step = make_stepper(twin_cfg, grid)
        state = state0.copy()
        ts_path = out / form / "timeseries.csv"
        runio.append_timeseries(diagnostics.record(state, grid, c), ts_path)
        for i in range(n_steps):
            state, stats = twin_step(state)
            state.t = (i + 1) * cfg.dt
            if (i + 1) % k_row == 0:
                runio.append_timeseries(
                    diagnostics.record(
                        state, grid, c,
                        newton_iters=stats.newton_iterations if stats else 0,
                        gmres_iters=stats.linear_iterations_total if stats else 0),
                    ts_path)
        runio.write_snapshot(state, grid, c,
                             out / form / _snapshot_name(state.t), twin_hash)
        report["noise_metric"][form] = diagnostics.noise_metric(state, grid)
        report["rmsv"][form] = diagnostics.rmsv(state, grid)
        log(f"{form}: noise metric at day {day:g} = "
            f"{report['noise_metric'][form]:.4g}")

    adv = report["noise_metric"]["advective"]
    vi = report["noise_metric"]["vector-invariant"]
    report["ratio"] = vi / adv if adv > 0 else float("inf")
    (out / "compare_report.json").write_text(json.dumps(report, indent=2))
    return report


def diagnose_protocol(in_dir: str, out_file: str | None = None,
                      log=_log_to_stderr) -> str:
    """Recompute diagnostics from every snapshot in a directory."""
    src = Path(in_dir)
    snaps = sorted(src.glob("snap_*.vtk"))
    if not snaps:
        raise runio.SnapshotError(f"no snapshots found in {src}")
    cfg_path = src / "config.effective"
    if cfg_path.is_file():
        cfg = runio.config_from_text(cfg_path.read_text())
    else:
        cfg = RunConfig()
    c = cfg.constants
    out_path = Path(out_file) if out_file else src / "diagnostics_recomputed.csv"
    if out_path.exists():
        out_path.unlink()
    for snap in snaps:
        state, meta = runio.read_snapshot(snap)
        grid = dataclasses.replace(cfg, nx=meta["nx"], nz=meta["nz"]).grid()
        runio.append_timeseries(diagnostics.record(state, grid, c), out_path)
    log(f"recomputed diagnostics for {len(snaps)} snapshots -> {out_path}")
    return str(out_path)
