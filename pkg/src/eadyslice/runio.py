"""File formats and configuration parsing.

Config files are flat `key = value` text; snapshots are legacy-ASCII VTK
rectilinear grids carrying the native staggered arrays in a FIELD block
(lossless) plus center/corner scalars for visualization; checkpoints are
npz archives with a bit-exact state copy. All floats are printed with
shortest round-trip formatting (repr), so write-read cycles are exact.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from . import diagnostics, dynamics, thermo
from .domain import (ConfigError, PhysicalConstants, RunConfig, State,
                     validate_config)

ENV_PREFIX = "EADYSLICE_"
CHECKPOINT_VERSION = 1

TIMESERIES_HEADER = ("t,K_u,K_v,P,E,rmsv,mass,front_intensity,noise_metric,"
                     "newton_iters,gmres_iters")


class SnapshotError(RuntimeError):
    """Malformed or unreadable snapshot file."""


class CheckpointError(RuntimeError):
    """Checkpoint version or dimension mismatch, or unreadable file."""


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (is_constant, attribute, parser)
CONFIG_KEYS = {
    "nx": (False, "nx", int),
    "nz": (False, "nz", int),
    "dt": (False, "dt", float),
    "integrator": (False, "integrator", str),
    "velocity_form": (False, "velocity_form", str),
    "upwind_order": (False, "upwind_order", int),
    "centered_advection": (False, "centered_advection", _parse_bool),
    "amplitude": (False, "amplitude", float),
    "breed": (False, "breed", _parse_bool),
    "breed_vmax": (False, "breed_vmax", float),
    "breed_max_days": (False, "breed_max_days", float),
    "run_days": (False, "run_days", float),
    "timeseries_interval": (False, "timeseries_interval", float),
    "snapshot_interval": (False, "snapshot_interval", float),
    "checkpoint_interval": (False, "checkpoint_interval", float),
    "surface_exner": (False, "surface_exner", float),
    "mass_weighted_rmsv": (False, "mass_weighted_rmsv", _parse_bool),
    "newton_abs_tol": (False, "newton_abs_tol", float),
    "newton_rel_tol": (False, "newton_rel_tol", float),
    "newton_max_iters": (False, "newton_max_iters", int),
    "linear_rel_tol": (False, "linear_rel_tol", float),
    "linear_max_iters": (False, "linear_max_iters", int),
    "linear_restart": (False, "linear_restart", int),
    "preconditioner": (False, "preconditioner", str),
    "cfl_max": (False, "cfl_max", float),
    "out_dir": (False, "out_dir", str),
    "L": (True, "L", float),
    "H": (True, "H", float),
    "f": (True, "f", float),
    "g": (True, "g", float),
    "p0": (True, "p0", float),
    "theta0": (True, "theta0", float),
    "shear": (True, "shear", float),
    "N2": (True, "N2", float),
    "Pi0": (True, "Pi0", float),
    "R": (True, "R", float),
    "cp": (True, "cp", float),
    "u0": (True, "u0", float),
}


def _apply_key(cfg_fields: dict, const_fields: dict, key: str, raw: str,
               where: str) -> None:
    if key not in CONFIG_KEYS:
        raise ConfigError(key, f"unknown key ({where})")
    is_const, attr, parser = CONFIG_KEYS[key]
    try:
        value = parser(raw.strip())
    except ValueError as exc:
        raise ConfigError(key, f"bad value {raw.strip()!r} ({where}): {exc}")
    (const_fields if is_const else cfg_fields)[attr] = value


def parse_config(path: str | os.PathLike | None,
                 env: dict | None = None) -> RunConfig:
    """Build a validated RunConfig from a key=value file plus env overrides.

    A missing-path argument of None means defaults only. Unknown keys are
    errors; environment variables EADYSLICE_<KEY> override file values.
    """
    cfg_fields: dict = {}
    const_fields: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError("config", f"file not found: {p}")
        for lineno, line in enumerate(p.read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError("config", f"parse error at line {lineno}: "
                                            f"expected key = value, got {line!r}")
            key, _, raw = stripped.partition("=")
            _apply_key(cfg_fields, const_fields, key.strip(), raw,
                       f"line {lineno}")
    environ = os.environ if env is None else env
    for key in CONFIG_KEYS:
        override = environ.get(ENV_PREFIX + key.upper())
        if override is not None:
            _apply_key(cfg_fields, const_fields, key, override, "environment")
    constants = PhysicalConstants(**const_fields)
    cfg = RunConfig(constants=constants, **cfg_fields)
    return validate_config(cfg)


def config_to_text(cfg: RunConfig) -> str:
    """Canonical key = value rendering of the effective configuration."""
    lines = []
    for key in sorted(CONFIG_KEYS):
        is_const, attr, _ = CONFIG_KEYS[key]
        value = getattr(cfg.constants if is_const else cfg, attr)
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> RunConfig:
    cfg_fields: dict = {}
    const_fields: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, _, raw = stripped.partition("=")
        _apply_key(cfg_fields, const_fields, key.strip(), raw, f"line {lineno}")
    return validate_config(RunConfig(constants=PhysicalConstants(**const_fields),
                                     **cfg_fields))


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(config_to_text(cfg).encode()).hexdigest()[:16]


def write_effective_config(cfg: RunConfig, out_dir: str | os.PathLike) -> str:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.effective").write_text(config_to_text(cfg))
    return config_hash(cfg)


# ---------------------------------------------------------------------------
# Snapshots (legacy-ASCII VTK rectilinear grid + sidecar metadata)
# ---------------------------------------------------------------------------

def _fmt(values) -> str:
    return " ".join(repr(float(x)) for x in np.asarray(values).ravel())


def write_snapshot(state: State, grid, c: PhysicalConstants,
                   path: str | os.PathLike, cfg_hash: str = "") -> None:
    """Write the state as a VTK file; native staggered arrays go in a FIELD
    block (x-fastest flattening), contourable center/corner scalars in
    CELL_DATA/POINT_DATA."""
    nx, nz = grid.nx, grid.nz
    pi = thermo.exner(state.D, state.theta_s, c)
    q = diagnostics.potential_vorticity(state, grid, c)
    u_c = dynamics.xface_to_center(state.u)
    w_c = dynamics.zface_to_center(state.w)

    x_nodes = np.append(grid.x_faces, grid.x_faces[0] + grid.length)
    z_nodes = grid.z_faces

    def field_block(name, arr):
        flat = np.asarray(arr).ravel(order="F")
        return f"{name} 1 {flat.size} double\n{_fmt(flat)}\n"

    def cell_scalar(name, arr):
        return (f"SCALARS {name} double 1\nLOOKUP_TABLE default\n"
                f"{_fmt(np.asarray(arr).ravel(order='F'))}\n")

    # corner field with the periodic seam duplicated for the (nx+1) point grid
    q_pts = np.vstack([q, q[0:1, :]])

    parts = [
        "# vtk DataFile Version 2.0\n",
        f"eadyslice snapshot t={repr(float(state.t))} config={cfg_hash}\n",
        "ASCII\n",
        "DATASET RECTILINEAR_GRID\n",
        f"DIMENSIONS {nx + 1} {nz + 1} 1\n",
        f"X_COORDINATES {nx + 1} double\n{_fmt(x_nodes)}\n",
        f"Y_COORDINATES {nz + 1} double\n{_fmt(z_nodes)}\n",
        "Z_COORDINATES 1 double\n0.0\n",
        "FIELD simdata 7\n",
        field_block("time", [state.t]),
        field_block("u", state.u),
        field_block("w", state.w),
        field_block("v", state.v),
        field_block("theta_S", state.theta_s),
        field_block("D", state.D),
        field_block("Pi", pi),
        f"CELL_DATA {nx * nz}\n",
        cell_scalar("v", state.v),
        cell_scalar("theta_S", state.theta_s),
        cell_scalar("D", state.D),
        cell_scalar("Pi", pi),
        cell_scalar("u_center", u_c),
        cell_scalar("w_center", w_c),
        f"POINT_DATA {(nx + 1) * (nz + 1)}\n",
        cell_scalar("q", q_pts),
    ]
    p = Path(path)
    try:
        p.write_text("".join(parts))
        with open(str(p) + ".meta", "w") as fh:
            fh.write(f"time = {repr(float(state.t))}\n"
                     f"config_hash = {cfg_hash}\n"
                     f"nx = {nx}\nnz = {nz}\n")
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {p}: {exc}")


def read_snapshot(path: str | os.PathLike):
    """Read back a snapshot. Returns (state, meta dict with nx/nz/hash)."""
    p = Path(path)
    try:
        tokens = p.read_text().split()
        lines = p.read_text().splitlines()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {p}: {exc}")
    header = lines[1].split() if len(lines) > 1 else []
    cfg_hash = ""
    for item in header:
        if item.startswith("config="):
            cfg_hash = item[len("config="):]
    try:
        i = tokens.index("DIMENSIONS")
        nx = int(tokens[i + 1]) - 1
        nz = int(tokens[i + 2]) - 1
        i = tokens.index("FIELD")
        nfields = int(tokens[i + 2])
        pos = i + 3
        fields = {}
        for _ in range(nfields):
            name = tokens[pos]
            count = int(tokens[pos + 2])
            data = np.array([float(x) for x in tokens[pos + 4:pos + 4 + count]])
            fields[name] = data
            pos += 4 + count
    except (ValueError, IndexError) as exc:
        raise SnapshotError(f"malformed snapshot {p}: {exc}")
    for required in ("time", "u", "w", "v", "theta_S", "D"):
        if required not in fields:
            raise SnapshotError(f"snapshot {p} missing field {required}")
    state = State(
        t=float(fields["time"][0]),
        u=fields["u"].reshape((nx, nz), order="F"),
        w=fields["w"].reshape((nx, nz + 1), order="F"),
        v=fields["v"].reshape((nx, nz), order="F"),
        theta_s=fields["theta_S"].reshape((nx, nz), order="F"),
        D=fields["D"].reshape((nx, nz), order="F"),
    )
    return state, {"nx": nx, "nz": nz, "config_hash": cfg_hash}


# ---------------------------------------------------------------------------
# Timeseries CSV
# ---------------------------------------------------------------------------

def append_timeseries(rec: diagnostics.DiagnosticRecord,
                      path: str | os.PathLike) -> None:
    p = Path(path)
    row = ",".join([repr(rec.t), repr(rec.K_u), repr(rec.K_v), repr(rec.P),
                    repr(rec.E), repr(rec.rmsv), repr(rec.mass),
                    repr(rec.front_intensity), repr(rec.noise_metric),
                    str(rec.newton_iters), str(rec.gmres_iters)])
    new = not p.exists()
    with open(p, "a") as fh:
        if new:
            fh.write(TIMESERIES_HEADER + "\n")
        fh.write(row + "\n")


def read_timeseries(path: str | os.PathLike) -> dict[str, np.ndarray]:
    p = Path(path)
    lines = p.read_text().splitlines()
    names = lines[0].split(",")
    cols = [[] for _ in names]
    for line in lines[1:]:
        for slot, valtext in zip(cols, line.split(",")):
            slot.append(float(valtext))
    return {name: np.array(col) for name, col in zip(names, cols)}


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def write_checkpoint(state: State, cfg: RunConfig, path: str | os.PathLike,
                     t_breed: float = 0.0, bred: bool = False,
                     warm_delta: np.ndarray | None = None) -> None:
    """Bit-exact state dump. warm_delta is the integrator's previous step
    increment; restoring it makes a resumed trajectory identical to an
    uninterrupted one."""
    meta = {"t_breed": t_breed, "bred": bred,
            "has_warm_delta": warm_delta is not None}
    np.savez(path, version=np.int64(CHECKPOINT_VERSION),
             config=np.array(config_to_text(cfg)),
             meta=np.array(json.dumps(meta)),
             t=np.float64(state.t), u=state.u, w=state.w, v=state.v,
             theta_s=state.theta_s, D=state.D,
             warm_delta=warm_delta if warm_delta is not None else np.zeros(0))


def read_checkpoint(path: str | os.PathLike):
    """Returns (state, config, meta dict). Bit-exact arrays; the warm-start
    increment, if stored, rides along as meta['warm_delta']."""
    try:
        with np.load(path, allow_pickle=False) as data:
            version = int(data["version"])
            if version != CHECKPOINT_VERSION:
                raise CheckpointError(f"checkpoint version {version} != "
                                      f"supported {CHECKPOINT_VERSION}")
            cfg = config_from_text(str(data["config"][()]))
            meta = json.loads(str(data["meta"][()]))
            state = State(t=float(data["t"]), u=data["u"].copy(),
                          w=data["w"].copy(), v=data["v"].copy(),
                          theta_s=data["theta_s"].copy(), D=data["D"].copy())
            if meta.pop("has_warm_delta", False):
                meta["warm_delta"] = data["warm_delta"].copy()
    except (OSError, KeyError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}")
    if state.u.shape != (cfg.nx, cfg.nz) or state.w.shape != (cfg.nx, cfg.nz + 1):
        raise CheckpointError(
            f"checkpoint arrays {state.u.shape} do not match config grid "
            f"({cfg.nx}, {cfg.nz})")
    return state, cfg, meta
