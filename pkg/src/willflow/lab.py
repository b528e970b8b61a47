"""Surface families and the inequality-verification harness.

A spec file holds one family per stanza, stanzas separated by blank lines::

    name = shells
    kind = shell
    radius = 1
    thickness = 0.2, 0.1, 0.05
    neck_radius = 0.15
    resolution = 32

Comma-separated values are zipped into a sweep (scalars broadcast); a value
``lo..hi`` together with ``count = n`` expands to ``n`` evenly spaced values.
``seed`` and ``jitter`` add a deterministic random vertex displacement.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import functionals as fn
from .errors import ConfigError, DomainError, IoError, WillflowError
from .generators import gen_dumbbell, gen_ellipsoid, gen_icosphere, gen_shell, gen_torus, jitter
from .mesh import TriangleMesh, require_valid

logger = logging.getLogger(__name__)

#: parameters accepted by each family kind, with defaults (None = required)
KIND_PARAMS = {
    "icosphere": {"level": 3, "radius": 1.0},
    "ellipsoid": {"a": None, "b": None, "c": None, "level": 3},
    "torus": {"R": None, "r": None, "n_major": 32, "n_minor": 32},
    "dumbbell": {"radius": 1.0, "neck_radius": None, "gap": None, "resolution": 32},
    "shell": {"radius": 1.0, "thickness": None, "neck_radius": 0.15, "resolution": 32},
}
INTEGER_PARAMS = {"level", "n_major", "n_minor", "resolution"}
COMMON_KEYS = {"name", "kind", "seed", "jitter", "count"}

DEFAULT_CORPUS = Path(__file__).with_name("data") / "default_corpus.spec"

EIGHT_PI = 8.0 * math.pi
ISO_SLACK = 1e-3
TOPPING_SLACK = 1e-2


@dataclass(frozen=True)
class FamilySpec:
    """One generated surface: a kind, its parameters and an optional jitter."""

    kind: str
    params: dict
    name: str = ""
    seed: int = 0
    jitter: float = 0.0

    def echo(self) -> str:
        items = [f"{k}={_fmt(v)}" for k, v in sorted(self.params.items())]
        if self.jitter:
            items += [f"jitter={_fmt(self.jitter)}", f"seed={self.seed}"]
        return f"{self.kind}(" + ", ".join(items) + ")"


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _number(key, text, where):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{where}: value {text!r} of {key!r} is not a number") from None
    if not math.isfinite(value):
        raise ConfigError(f"{where}: value of {key!r} must be finite")
    if key in INTEGER_PARAMS or key == "seed":
        if value != int(value):
            raise ConfigError(f"{where}: {key!r} must be an integer")
        return int(value)
    return value


def _expand(key, text, count, where):
    """Values of one key: a scalar, a comma list, or a ``lo..hi`` range."""
    if ".." in text:
        if count is None:
            raise ConfigError(f"{where}: range for {key!r} needs a 'count' key")
        lo, _, hi = text.partition("..")
        vals = np.linspace(_number(key, lo.strip(), where), _number(key, hi.strip(), where), count)
        if key in INTEGER_PARAMS:
            return [int(round(v)) for v in vals]
        return [float(v) for v in vals]
    return [_number(key, part.strip(), where) for part in text.split(",")]


def _parse_stanza(lines, index) -> list[FamilySpec]:
    where = f"stanza {index}"
    raw = {}
    for lineno, line in lines:
        if "=" not in line:
            raise ConfigError(f"{where}: line {lineno} is not 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"{where}: line {lineno} has an empty key or value")
        if key in raw:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        raw[key] = value
    kind = raw.get("kind")
    if kind is None:
        raise ConfigError(f"{where}: missing 'kind'")
    if kind not in KIND_PARAMS:
        raise ConfigError(
            f"{where}: unknown kind {kind!r} (expected one of {', '.join(sorted(KIND_PARAMS))})"
        )
    allowed = KIND_PARAMS[kind]
    unknown = sorted(set(raw) - set(allowed) - COMMON_KEYS)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) for {kind}: {', '.join(unknown)}")
    count = None
    if "count" in raw:
        count = _number("count", raw["count"], where)
        if count != int(count) or count < 1:
            raise ConfigError(f"{where}: 'count' must be a positive integer")
        count = int(count)

    columns = {}
    for key in list(allowed) + ["seed", "jitter"]:
        if key in raw:
            columns[key] = _expand(key, raw[key], count, where)
        elif key in allowed and allowed[key] is None and not (kind == "dumbbell" and key == "gap"):
            raise ConfigError(f"{where}: {kind} needs {key!r}")
    lengths = {len(v) for v in columns.values() if len(v) > 1}
    if len(lengths) > 1:
        raise ConfigError(f"{where}: swept keys have different lengths {sorted(lengths)}")
    n = lengths.pop() if lengths else (count or 1)
    if count is not None and n != count:
        raise ConfigError(f"{where}: sweep length {n} does not match count {count}")

    name = raw.get("name", kind)
    specs = []
    for i in range(n):
        row = {k: (v[i] if len(v) > 1 else v[0]) for k, v in columns.items()}
        seed = int(row.pop("seed", 0))
        amp = float(row.pop("jitter", 0.0))
        params = {k: row.get(k, d) for k, d in allowed.items() if row.get(k, d) is not None}
        specs.append(FamilySpec(kind, params, name=name, seed=seed, jitter=amp))
    return specs


def parse_spec(text: str) -> list[FamilySpec]:
    """Parse a spec file into the flat list of surfaces it describes."""
    stanzas, current = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            if current:
                stanzas.append(current)
                current = []
            continue
        current.append((lineno, line))
    if current:
        stanzas.append(current)
    specs = []
    for index, lines in enumerate(stanzas, start=1):
        specs.extend(_parse_stanza(lines, index))
    return specs


def load_spec(path) -> list[FamilySpec]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read spec {path}: {exc}") from exc
    return parse_spec(text)


def build_mesh(spec: FamilySpec) -> TriangleMesh:
    """Generate, optionally jitter and validate the surface of one spec."""
    p = spec.params
    if spec.kind == "icosphere":
        mesh = gen_icosphere(p["level"], p["radius"])
    elif spec.kind == "ellipsoid":
        mesh = gen_ellipsoid(p["a"], p["b"], p["c"], p["level"])
    elif spec.kind == "torus":
        mesh = gen_torus(p["R"], p["r"], p["n_major"], p["n_minor"])
    elif spec.kind == "dumbbell":
        sep = None if p.get("gap") is None else 2.0 * p["radius"] + p["gap"]
        mesh = gen_dumbbell(p["radius"], p["neck_radius"], sep, p["resolution"])
    elif spec.kind == "shell":
        mesh = gen_shell(p["radius"], p["thickness"], p["neck_radius"], p["resolution"])
    else:
        raise ConfigError(f"unknown kind {spec.kind!r}")
    if spec.jitter:
        mesh = jitter(mesh, spec.jitter, spec.seed)
    require_valid(mesh)
    return mesh


# ---------------------------------------------------------------- report


def q_statistic(willmore: float, area: float, volume: float):
    """``(8π - W)^3 area^(1/2) / |vol|^(1/3)``, or None outside ``W < 8π, vol != 0``."""
    if not willmore < EIGHT_PI or volume == 0.0:
        return None
    return (EIGHT_PI - willmore) ** 3 * math.sqrt(area) / abs(volume) ** (1.0 / 3.0)


def iso_classical_margin(area: float, volume: float) -> float:
    return area**1.5 / (6.0 * math.sqrt(math.pi)) - volume


def topping_margin(area: float, willmore: float, diam: float) -> float:
    return 2.0 / math.pi * math.sqrt(area * willmore) - diam


INEQUALITY_COLUMNS = [
    "iso_classical_margin",
    "topping_margin",
    "q_statistic",
    "density_bound_ratio",
    "scaling_residual_fd",
    "scaling_residual_formula",
]
ROW_COLUMNS = (
    ["name", "kind", "spec", "status", "n_vertices", "genus"]
    + fn.SurfaceDiagnostics.keys()
    + INEQUALITY_COLUMNS
)
NUMERIC_COLUMNS = fn.SurfaceDiagnostics.keys() + INEQUALITY_COLUMNS


@dataclass
class ReportRow:
    spec: FamilySpec
    status: str = "ok"
    n_vertices: int | None = None
    genus: int | None = None
    diagnostics: fn.SurfaceDiagnostics | None = None
    iso_classical_margin: float | None = None
    topping_margin: float | None = None
    q_statistic: float | None = None
    density_bound_ratio: float | None = None
    scaling_residual_fd: float | None = None
    scaling_residual_formula: float | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def values(self) -> dict:
        out = {
            "name": self.spec.name,
            "kind": self.spec.kind,
            "spec": self.spec.echo(),
            "status": self.status,
            "n_vertices": self.n_vertices,
            "genus": self.genus,
        }
        diag = self.diagnostics.to_dict() if self.diagnostics else {}
        for key in fn.SurfaceDiagnostics.keys():
            out[key] = diag.get(key)
        for key in INEQUALITY_COLUMNS:
            out[key] = getattr(self, key)
        return out

    def iso_ok(self) -> bool:
        d = self.diagnostics
        return self.iso_classical_margin >= -ISO_SLACK * d.area**1.5

    def topping_ok(self) -> bool:
        d = self.diagnostics
        bound = 2.0 / math.pi * math.sqrt(d.area * d.willmore)
        return self.topping_margin >= -TOPPING_SLACK * bound


@dataclass
class InequalityReport:
    lam: float
    rows: list = field(default_factory=list)

    def ok_rows(self):
        return [r for r in self.rows if r.ok]

    def family_summary(self) -> dict:
        """Per family (stanza name): min/max of every numeric column and C_emp."""
        out = {}
        for row in self.rows:
            out.setdefault(row.spec.name, []).append(row)
        return {name: _summarize(rows) for name, rows in out.items()}

    def summary(self) -> dict:
        return {
            "lambda": self.lam,
            "n_rows": len(self.rows),
            "n_failed": sum(not r.ok for r in self.rows),
            "overall": _summarize(self.rows),
            "families": self.family_summary(),
        }

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_COLUMNS)
        for row in self.rows:
            vals = row.values()
            w.writerow(["" if vals[c] is None else _fmt(vals[c]) for c in ROW_COLUMNS])
        return buf.getvalue()

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "report.csv").write_text(self.csv_text())
            (out / "summary.json").write_text(json.dumps(self.summary(), indent=2) + "\n")
        except OSError as exc:
            raise IoError(f"cannot write report to {out}: {exc}") from exc


def _summarize(rows) -> dict:
    ok = [r.values() for r in rows if r.ok]
    cols = {}
    for c in NUMERIC_COLUMNS:
        vals = [v[c] for v in ok if v[c] is not None]
        cols[c] = {"min": min(vals), "max": max(vals)} if vals else None
    qs = [v["q_statistic"] for v in ok if v["q_statistic"] is not None]
    dens = [v["density_bound_ratio"] for v in ok]
    return {
        "rows": len(rows),
        "failed": len(rows) - len(ok),
        "q_rows": len(qs),
        "C_emp": max(qs) if qs else None,
        "C_dens": max(dens) if dens else None,
        "columns": cols,
    }


def evaluate(spec: FamilySpec, lam: float) -> ReportRow:
    """Build one surface and fill its report row; errors mark the row failed."""
    row = ReportRow(spec)
    try:
        mesh = build_mesh(spec)
        topo = require_valid(mesh)
        d = fn.diagnostics(mesh, lam)
        row.n_vertices = mesh.n_vertices
        row.genus = topo.genus
        row.diagnostics = d
        row.iso_classical_margin = iso_classical_margin(d.area, d.volume)
        row.topping_margin = topping_margin(d.area, d.willmore, d.diameter)
        row.q_statistic = q_statistic(d.willmore, d.area, d.volume)
        row.density_bound_ratio = d.density_ratio_sup / d.willmore
        row.scaling_residual_fd = fn.scaling_identity_residual(mesh, lam, which="fd")
        row.scaling_residual_formula = fn.scaling_identity_residual(mesh, lam, which="formula")
    except (WillflowError, DomainError) as exc:
        logger.warning("%s failed: %s", spec.echo(), exc)
        row = ReportRow(spec, status=f"failed: {type(exc).__name__}: {exc}")
    return row


def verify_suite(specs, lam: float = 0.0) -> InequalityReport:
    """Evaluate every spec in order; a failing row does not stop the sweep."""
    report = InequalityReport(float(lam))
    for spec in specs:
        report.rows.append(evaluate(spec, lam))
    return report
