"""Strict JSON run configuration.

Every section is optional; omitted keys take the documented defaults.
Unknown keys are rejected.  Validation runs over the whole document and
reports every violated constraint at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field, fields as dc_fields

from .discretization import DEFAULT_MAX_DIM, BasisSpec
from .errors import ConfigError
from .model import QUARTER_PI, POTENTIAL_KINDS, PotentialModel, ScheduleParams

DEFAULT_F_LIST = (0.28, 0.32, 0.36, 0.40, 0.45, 0.50)
DEFAULT_BOUNDS_F = (0.2, 0.25, 0.3, 0.4, 0.5)
CHECK_NAMES = ("j0", "hF", "partition", "localfield", "a2")
B_POLICIES = ("auto", "schedule")


@dataclass(frozen=True)
class FieldConfig:
    """Single-point field used by ``solve`` and ``h2-compare``; ``b=None`` follows the policy."""

    B: float = 1.0
    F: float = 0.3
    b: float | None = None


@dataclass(frozen=True)
class SweepConfig:
    """Sweep grid and resonance-selection settings.

    ``b_policy="auto"`` uses the fixed translation ``b_auto`` for every
    field; ``"schedule"`` uses ``b0 F^alpha``.  With ``gap_matching`` the
    depth ``V0`` is re-tuned at each ``B`` so that the distance from the
    selected level to its Landau level equals the distance at ``reference_B``.
    """

    F_list: tuple[float, ...] = DEFAULT_F_LIST
    B_list: tuple[float, ...] = (1.0,)
    b_policy: str = "auto"
    b_auto: float = 0.3
    level_index: int = 0
    window_c: float = 0.5
    basis_bump: int = 4
    landau_gap_min: float = 0.05
    gap_matching: bool = False
    reference_B: float = 1.0


@dataclass(frozen=True)
class BoundsConfig:
    F_list: tuple[float, ...] = DEFAULT_BOUNDS_F
    grid_points: int = 4096


@dataclass(frozen=True)
class OutputConfig:
    sweep_csv: str | None = None
    fit_json: str | None = None
    report_json: str | None = None


@dataclass(frozen=True)
class RunConfig:
    field: FieldConfig = dc_field(default_factory=FieldConfig)
    potential: PotentialModel = dc_field(default_factory=PotentialModel)
    schedule: ScheduleParams = dc_field(default_factory=ScheduleParams)
    basis: BasisSpec = dc_field(default_factory=BasisSpec)
    sweep: SweepConfig = dc_field(default_factory=SweepConfig)
    bounds: BoundsConfig = dc_field(default_factory=BoundsConfig)
    checks: tuple[str, ...] = CHECK_NAMES
    outputs: OutputConfig = dc_field(default_factory=OutputConfig)


_SECTIONS = {
    "field": FieldConfig,
    "potential": PotentialModel,
    "schedule": ScheduleParams,
    "basis": BasisSpec,
    "sweep": SweepConfig,
    "bounds": BoundsConfig,
    "outputs": OutputConfig,
}

# expected JSON types per key: "num", "int", "str", "bool", "numlist", "num?", "int?", "str?"
_TYPES = {
    "field": {"B": "num", "F": "num", "b": "num?"},
    "potential": {"kind": "str", "V0": "num", "nu": "num", "a0": "num", "a1": "num", "beta": "num?"},
    "schedule": {k: "num" for k in ("eps", "gamma0", "Cbar", "C0", "C1", "C2", "tau", "alpha", "b0")},
    "basis": {"Nx": "int", "Ny": "int", "lx": "num?", "ly": "num?", "Qx": "int?", "Qy": "int?",
              "max_dim": "int"},
    "sweep": {"F_list": "numlist", "B_list": "numlist", "b_policy": "str", "b_auto": "num",
              "level_index": "int", "window_c": "num", "basis_bump": "int",
              "landau_gap_min": "num", "gap_matching": "bool", "reference_B": "num"},
    "bounds": {"F_list": "numlist", "grid_points": "int"},
    "outputs": {"sweep_csv": "str?", "fit_json": "str?", "report_json": "str?"},
}


def _type_ok(kind: str, v) -> bool:
    if kind.endswith("?"):
        if v is None:
            return True
        kind = kind[:-1]
    is_num = isinstance(v, (int, float)) and not isinstance(v, bool)
    if kind == "num":
        return is_num and math.isfinite(v)
    if kind == "int":
        return isinstance(v, int) and not isinstance(v, bool)
    if kind == "str":
        return isinstance(v, str)
    if kind == "bool":
        return isinstance(v, bool)
    if kind == "numlist":
        return isinstance(v, list) and all(_type_ok("num", x) for x in v)
    return False


def _unchecked(cls, values: dict):
    """Instance built without ``__post_init__`` so its ``problems()`` can be listed."""
    obj = object.__new__(cls)
    for f in dc_fields(cls):
        object.__setattr__(obj, f.name, values.get(f.name, f.default))
    return obj


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration.

    Raises
    ------
    ConfigError
        On malformed JSON (message carries line and column) or on any
        violated constraint (``problems`` lists all of them).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                          [exc.msg]) from exc
    return config_from_dict(doc)


def config_from_dict(doc) -> RunConfig:
    problems: list[str] = []
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object", ["top level is not an object"])
    known = set(_SECTIONS) | {"checks"}
    for key in doc:
        if key not in known:
            problems.append(f"unknown top-level key {key!r}")

    raw: dict[str, dict] = {}
    for name, cls in _SECTIONS.items():
        sec = doc.get(name, {})
        if not isinstance(sec, dict):
            problems.append(f"section {name!r} must be an object")
            sec = {}
        vals = {}
        for key, v in sec.items():
            kind = _TYPES[name].get(key)
            if kind is None:
                problems.append(f"unknown key {name}.{key}")
            elif not _type_ok(kind, v):
                problems.append(f"{name}.{key}: expected {kind.rstrip('?')}"
                                f"{' or null' if kind.endswith('?') else ''}, got {v!r}")
            else:
                vals[key] = tuple(float(x) for x in v) if kind == "numlist" else v
        raw[name] = vals

    checks = doc.get("checks", list(CHECK_NAMES))
    if not (isinstance(checks, list) and all(isinstance(c, str) for c in checks)):
        problems.append("checks must be a list of strings")
        checks = list(CHECK_NAMES)
    for c in checks:
        if c not in CHECK_NAMES:
            problems.append(f"unknown check {c!r}; choose from {list(CHECK_NAMES)}")

    # potential: beta null means an entire continuation
    pot_vals = dict(raw["potential"])
    if pot_vals.get("beta", 0.0) is None:
        pot_vals["beta"] = math.inf
    for k in ("V0", "nu", "a0", "a1"):
        if k in pot_vals:
            pot_vals[k] = float(pot_vals[k])
    pot = _unchecked(PotentialModel, pot_vals)
    problems += pot.problems()

    sched_vals = {k: float(v) for k, v in raw["schedule"].items()}
    sched = _unchecked(ScheduleParams, sched_vals)
    problems += sched.problems()
    if not sched.eps > 0:
        problems.append(f"eps={sched.eps} violates 0 < eps < 1")

    basis = _unchecked(BasisSpec, raw["basis"])
    problems += basis.problems()

    fld = _unchecked(FieldConfig, raw["field"])
    if not fld.B > 0:
        problems.append(f"field.B={fld.B} must be positive")
    if not fld.F >= 0:
        problems.append(f"field.F={fld.F} must be non-negative")
    if fld.b is not None and not fld.b >= 0:
        problems.append(f"field.b={fld.b} must be non-negative")
    if fld.b is not None and fld.b >= pot.beta:
        problems.append(f"field.b={fld.b} is not below beta={pot.beta}")

    sw = _unchecked(SweepConfig, raw["sweep"])
    if not sw.F_list:
        problems.append("sweep.F_list is empty")
    problems += [f"sweep.F_list entry {f} must be positive" for f in sw.F_list if not f > 0]
    if not sw.B_list:
        problems.append("sweep.B_list is empty")
    problems += [f"sweep.B_list entry {B} must be positive" for B in sw.B_list if not B > 0]
    if sw.b_policy not in B_POLICIES:
        problems.append(f"sweep.b_policy {sw.b_policy!r} not in {list(B_POLICIES)}")
    if not sw.b_auto > 0:
        problems.append(f"sweep.b_auto={sw.b_auto} must be positive")
    elif sw.b_auto >= pot.beta:
        problems.append(f"sweep.b_auto={sw.b_auto} is not below beta={pot.beta}")
    if sw.level_index < 0:
        problems.append("sweep.level_index must be >= 0")
    if not sw.window_c > 0:
        problems.append("sweep.window_c must be positive")
    if sw.basis_bump < 1:
        problems.append("sweep.basis_bump must be >= 1")
    if not sw.landau_gap_min > 0:
        problems.append("sweep.landau_gap_min must be positive")
    if not sw.reference_B > 0:
        problems.append("sweep.reference_B must be positive")

    bd = _unchecked(BoundsConfig, raw["bounds"])
    problems += [f"bounds.F_list entry {f} outside (0, 0.6]" for f in bd.F_list if not 0 < f <= 0.6]
    if len(bd.F_list) < 3:
        problems.append("bounds.F_list needs at least 3 fields for the trend fits")
    if bd.grid_points < 16:
        problems.append("bounds.grid_points must be >= 16")

    # schedule translations must stay inside the tanh strip
    if not sched.problems() and sched.eps > 0:
        for F in sorted(set(bd.F_list) | {fld.F}):
            if F > 0 and sched.gamma0 * F ** (-(1 - sched.eps)) * sched.b_of(F) >= QUARTER_PI:
                problems.append(f"schedule b at F={F} violates gamma_F*b < pi/4")

    if problems:
        raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(problems), problems)

    return RunConfig(
        field=FieldConfig(**raw["field"]),
        potential=PotentialModel(**pot_vals),
        schedule=ScheduleParams(**sched_vals),
        basis=BasisSpec(**raw["basis"]),
        sweep=SweepConfig(**raw["sweep"]),
        bounds=BoundsConfig(**raw["bounds"]),
        checks=tuple(checks),
        outputs=OutputConfig(**raw["outputs"]),
    )


def config_to_dict(cfg: RunConfig) -> dict:
    """Complete JSON-ready dictionary (every default spelled out)."""
    out = {}
    for name in _SECTIONS:
        sec = getattr(cfg, name)
        d = {}
        for f in dc_fields(sec):
            v = getattr(sec, f.name)
            if isinstance(v, tuple):
                v = list(v)
            if isinstance(v, float) and math.isinf(v):
                v = None
            d[f.name] = v
        out[name] = d
    out["checks"] = list(cfg.checks)
    return out


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def describe_defaults() -> str:
    """Defaults as JSON text, shown by ``--help``."""
    return serialize_config(RunConfig())


__all__ = [
    "RunConfig", "FieldConfig", "SweepConfig", "BoundsConfig", "OutputConfig",
    "parse_config", "config_from_dict", "config_to_dict", "serialize_config", "load_config",
    "describe_defaults", "POTENTIAL_KINDS", "DEFAULT_MAX_DIM",
]
