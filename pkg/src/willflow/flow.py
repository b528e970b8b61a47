"""Explicit gradient flow of ``E_lam = W + lam * vol`` with backtracking.

Every accepted step strictly lowers the discrete energy and keeps the mesh
valid; the time step starts at ``cfl_const * min_edge**4`` (the flow is
fourth order) and is halved until both hold.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import functionals as fn
from . import kernels
from .errors import ConfigError, DegenerateMesh, DomainError, IoError, StepFailed, WillflowError
from .geometry import geometry
from .mesh import DEGENERATE_AREA_FACTOR, TriangleMesh, load_mesh, require_valid, save_mesh
from .remesh import RemeshParams, remesh
from .rescaling import blowup_extract

logger = logging.getLogger(__name__)

MAX_HALVINGS = 30
TERMINATIONS = ("step_limit", "time_limit", "volume_collapsed", "mesh_degenerate", "gradient_stagnation")
GRADIENTS = ("formula", "discrete")


@dataclass(frozen=True)
class FlowConfig:
    lam: float = 0.0
    cfl_const: float = 0.05
    step_limit: int = 1000
    time_limit: float = math.inf
    record_every: int = 1
    snapshot_every: int = 0
    vol_floor_frac: float = 0.01
    g_floor: float = 1e-6
    remesh: bool = False
    remesh_every: int = 100
    seed_mesh: str | None = None
    out_dir: str | None = None
    eps0: float = 1.0
    gradient: str = "formula"

    def __post_init__(self):
        checks = [
            (math.isfinite(self.lam), "lambda must be finite"),
            (self.cfl_const > 0, "cfl_const must be positive"),
            (self.step_limit >= 0, "step_limit must be >= 0"),
            (self.time_limit > 0, "time_limit must be positive"),
            (self.record_every >= 1, "record_every must be >= 1"),
            (self.snapshot_every >= 0, "snapshot_every must be >= 0"),
            (0 <= self.vol_floor_frac < 1, "vol_floor_frac must lie in [0, 1)"),
            (self.g_floor >= 0, "g_floor must be >= 0"),
            (self.remesh_every >= 1, "remesh_every must be >= 1"),
            (self.eps0 > 0, "eps0 must be positive"),
            (self.gradient in GRADIENTS, f"gradient must be one of {', '.join(GRADIENTS)}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def to_dict(self) -> dict:
        return {_KEY_OF_FIELD.get(k, k): v for k, v in self.__dict__.items()}


def _flag(text):
    if text not in ("on", "off"):
        raise ValueError("expected 'on' or 'off'")
    return text == "on"


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError("expected an integer")
    return int(value)


# config key -> (field name, parser)
_CONFIG_KEYS = {
    "lambda": ("lam", float),
    "cfl_const": ("cfl_const", float),
    "step_limit": ("step_limit", _int),
    "time_limit": ("time_limit", float),
    "record_every": ("record_every", _int),
    "snapshot_every": ("snapshot_every", _int),
    "vol_floor_frac": ("vol_floor_frac", float),
    "g_floor": ("g_floor", float),
    "remesh": ("remesh", _flag),
    "remesh_every": ("remesh_every", _int),
    "seed_mesh": ("seed_mesh", str),
    "out_dir": ("out_dir", str),
    "eps0": ("eps0", float),
    "gradient": ("gradient", str),
}
_KEY_OF_FIELD = {"lam": "lambda"}


def parse_config(text: str, base_dir=None) -> FlowConfig:
    """Parse ``key = value`` lines; relative paths resolve against ``base_dir``."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"config line {lineno} is not 'key = value'")
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r} on line {lineno}")
        name, parse = _CONFIG_KEYS[key]
        if name in values:
            raise ConfigError(f"duplicate config key {key!r} on line {lineno}")
        try:
            values[name] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r} for {key!r} on line {lineno}: {exc}") from None
    if base_dir is not None:
        for name in ("seed_mesh", "out_dir"):
            if name in values:
                values[name] = str(Path(base_dir) / values[name])
    return FlowConfig(**values)


def load_config(path):
    """Return ``(config, raw_text)`` for a config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, Path(path).parent), text


@dataclass(frozen=True)
class FlowState:
    mesh: TriangleMesh
    t: float
    step_index: int
    dt_last: float
    e_lambda: float
    backtracks_last: int


@dataclass
class FlowTrace:
    config_echo: str
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    termination: str | None = None
    #: E_lam after every accepted step, starting with the initial state
    energies: list = field(default_factory=list)
    #: indices into ``energies`` where a remesh changed the energy
    remesh_steps: list = field(default_factory=list)
    final_state: FlowState | None = None

    def energy_strictly_decreasing(self) -> bool:
        skip = set(self.remesh_steps)
        return all(
            b < a for i, (a, b) in enumerate(zip(self.energies, self.energies[1:]), 1) if i not in skip
        )


def initial_state(mesh: TriangleMesh, lam: float) -> FlowState:
    require_valid(mesh)
    W, vol, _ = kernels.energy(mesh.positions, mesh.faces, lam)
    return FlowState(mesh, 0.0, 0, 0.0, W + lam * vol, 0)


def descent_field(mesh: TriangleMesh, lam: float, gradient: str = "formula") -> np.ndarray:
    """Ascent gradient used by the stepper, as a (V, 3) array.

    ``formula`` is the curvature expression along the normal.  ``discrete``
    is the exact derivative of the discrete energy (central differences)
    projected on the vertex normal and divided by the projected vertex area
    ``|sum_f A_f n_f| / 3``.  With that mass the volume term moves every
    vertex at exactly speed ``lam``, and the Willmore term keeps the exact
    scale invariance of the discrete energy.
    """
    if gradient == "formula":
        return fn.gradient_field(mesh, lam).values
    if gradient == "discrete":
        geo = geometry(mesh)
        euclid = kernels.fd_gradient(mesh, lam, fn.default_fd_step(mesh))
        normal_part = np.einsum("ij,ij->i", euclid, geo.normals) / _projected_areas(mesh)
        return normal_part[:, None] * geo.normals
    raise DomainError(f"unknown gradient {gradient!r}")


def _projected_areas(mesh: TriangleMesh) -> np.ndarray:
    """``|sum_f A_f n_f| / 3`` over the faces around each vertex."""
    n = _face_normals(mesh.positions, mesh.faces)
    V = mesh.n_vertices
    acc = np.stack([np.bincount(mesh.faces.ravel(), np.repeat(n[:, k], 3), V) for k in range(3)], axis=1)
    return np.linalg.norm(acc, axis=1) / 6.0


def _face_normals(pos, faces):
    return np.cross(pos[faces[:, 1]] - pos[faces[:, 0]], pos[faces[:, 2]] - pos[faces[:, 0]])


def step(state: FlowState, lam: float, dt_init: float, direction=None, gradient="formula") -> FlowState:
    """One explicit step ``pos - dt * g`` with backtracking on ``dt``.

    A trial is accepted when the energy strictly decreases, no face shrinks
    below the degeneracy threshold and no face normal flips.
    """
    if not dt_init > 0:
        raise DomainError("dt_init must be positive")
    mesh = state.mesh
    g = descent_field(mesh, lam, gradient) if direction is None else np.asarray(direction)
    pos, faces = mesh.positions, mesh.faces
    n_old = _face_normals(pos, faces)
    threshold = DEGENERATE_AREA_FACTOR * mesh.bbox_diag() ** 2
    dt = float(dt_init)
    for halvings in range(MAX_HALVINGS + 1):
        trial = pos - dt * g
        W, vol, min_area = kernels.energy(trial, faces, lam)
        e_new = W + lam * vol
        if (
            math.isfinite(e_new)
            and e_new < state.e_lambda
            and min_area > threshold
            and np.all(np.einsum("ij,ij->i", n_old, _face_normals(trial, faces)) > 0.0)
        ):
            return FlowState(
                mesh.with_positions(trial),
                state.t + dt,
                state.step_index + 1,
                dt,
                e_new,
                halvings,
            )
        dt *= 0.5
    raise StepFailed(f"no admissible step after {MAX_HALVINGS} halvings (dt_init {dt_init:.3g})")


def _record(state: FlowState, config: FlowConfig, grad_norm: float, remeshed: bool) -> dict:
    diag = fn.diagnostics(state.mesh, config.lam).to_dict()
    rec = {"step": state.step_index, "t": state.t, "dt": state.dt_last}
    rec.update(diag)
    rec.update(grad_norm=grad_norm, backtracks=state.backtracks_last, remeshed=remeshed)
    return rec


class _Output:
    """Writes trace records and snapshots as they are produced."""

    def __init__(self, out_dir):
        self.dir = None if out_dir is None else Path(out_dir)
        self.fh = None
        if self.dir is not None:
            try:
                self.dir.mkdir(parents=True, exist_ok=True)
                self.fh = open(self.dir / "trace.jsonl", "w", encoding="ascii", newline="\n")
            except OSError as exc:
                raise IoError(f"cannot write to {self.dir}: {exc}") from exc

    def record(self, rec):
        if self.fh is not None:
            self.fh.write(json.dumps(rec) + "\n")

    def snapshot(self, state):
        if self.dir is None:
            return None
        name = f"snap_{state.step_index}.obj"
        save_mesh(state.mesh, self.dir / name)
        return name

    def close(self, summary):
        if self.fh is None:
            return
        self.fh.close()
        try:
            (self.dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        except OSError as exc:
            raise IoError(f"cannot write summary: {exc}") from exc


def run(config: FlowConfig, mesh: TriangleMesh | None = None, config_echo: str | None = None) -> FlowTrace:
    """Integrate the flow until a termination condition fires.

    ``mesh`` overrides ``config.seed_mesh``.  Outputs go to ``config.out_dir``
    when it is set: ``trace.jsonl``, ``snap_<step>.obj`` and ``summary.json``.
    """
    if mesh is None:
        if config.seed_mesh is None:
            raise ConfigError("no seed_mesh given")
        if not Path(config.seed_mesh).is_file():
            raise ConfigError(f"seed_mesh {config.seed_mesh} does not exist")
        mesh = load_mesh(config.seed_mesh)
    lam = config.lam
    echo = config_echo if config_echo is not None else json.dumps(config.to_dict())
    trace = FlowTrace(echo)
    state = initial_state(mesh, lam)
    vol_floor = config.vol_floor_frac * fn.enclosed_volume(mesh)
    trace.energies.append(state.e_lambda)
    out = _Output(config.out_dir)
    remeshed = False
    try:
        while True:
            g = descent_field(state.mesh, lam, config.gradient)
            grad_norm = fn.l2_norm(state.mesh, g)
            if fn.enclosed_volume(state.mesh) <= vol_floor:
                trace.termination = "volume_collapsed"
            elif state.step_index >= config.step_limit:
                trace.termination = "step_limit"
            elif state.t >= config.time_limit:
                trace.termination = "time_limit"
            elif grad_norm < config.g_floor:
                trace.termination = "gradient_stagnation"
            due = state.step_index % config.record_every == 0
            if due or trace.termination is not None:
                trace.records.append(_record(state, config, grad_norm, remeshed))
                out.record(trace.records[-1])
            if config.snapshot_every and (
                state.step_index % config.snapshot_every == 0 or trace.termination is not None
            ):
                trace.snapshots.append((state.t, out.snapshot(state)))
            if trace.termination is not None:
                break

            dt0 = config.cfl_const * fn.min_edge_length(state.mesh) ** 4
            dt0 = min(dt0, config.time_limit - state.t)
            try:
                state = step(state, lam, dt0, direction=g)
            except (StepFailed, DegenerateMesh) as exc:
                logger.info("stopping: %s", exc)
                trace.termination = "mesh_degenerate"
                trace.records.append(_record(state, config, grad_norm, False))
                out.record(trace.records[-1])
                break
            trace.energies.append(state.e_lambda)
            remeshed = False
            if config.remesh and state.step_index % config.remesh_every == 0:
                state = _remeshed(state, lam)
                remeshed = True
                trace.remesh_steps.append(len(trace.energies))
                trace.energies.append(state.e_lambda)
    finally:
        trace.final_state = state
        out.close(_summary(trace, config, state))
    return trace


def _remeshed(state: FlowState, lam: float) -> FlowState:
    new = remesh(state.mesh, RemeshParams())
    W, vol, _ = kernels.energy(new.positions, new.faces, lam)
    e = W + lam * vol
    logger.info("remesh at step %d changed E_lambda by %.3g", state.step_index, e - state.e_lambda)
    return replace(state, mesh=new, e_lambda=e)


def _summary(trace: FlowTrace, config: FlowConfig, state: FlowState) -> dict:
    summary = {
        "termination": trace.termination,
        "steps": state.step_index,
        "t": state.t,
        "config": trace.config_echo,
        "energy_strictly_decreasing": trace.energy_strictly_decreasing(),
        "last": trace.records[-1] if trace.records else None,
        "snapshots": [name for _, name in trace.snapshots],
    }
    try:
        summary["blowup"] = blowup_extract(state.mesh, config.eps0, state.t).to_dict()
    except WillflowError as exc:
        summary["blowup"] = None
        logger.info("no blowup frame: %s", exc)
    return summary
