"""Experiment configuration: TOML parsing, validation, serialization.

A config file is one top-level block (kind, seed, out) plus a single
section of experiment parameters.  Every known key is declared in the
schema below with its type, range, and default, which drives parsing,
validation, the round-trip serializer, and the CLI help text.  Parsing
reports all problems at once, not just the first.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .epidemic import SIS_DEFAULT_BETA, SIS_DEFAULT_MU


class ConfigError(ValueError):
    """Carries every validation problem found in a config."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass(frozen=True)
class Field:
    """One schema entry: type, admissible values, default, help line."""

    name: str
    kind: str  # int | float | bool | str | float_list | str
    default: object
    lo: float | None = None
    hi: float | None = None
    choices: tuple | None = None
    help: str = ""

    def describe(self) -> str:
        parts = [f"{self.name} ({self.kind})"]
        if self.choices:
            parts.append("one of " + "/".join(str(c) for c in self.choices))
        elif self.lo is not None or self.hi is not None:
            lo = "-inf" if self.lo is None else self.lo
            hi = "+inf" if self.hi is None else self.hi
            parts.append(f"range [{lo}, {hi}]")
        parts.append(f"default {self.default!r}")
        if self.help:
            parts.append(self.help)
        return "; ".join(str(p) for p in parts)


_SEEDINGS = ("left_edge", "threshold_excess")
_NORMS = ("all", "occupied")
_MODES = ("multiplicative", "additive")

_MF_FIELDS = (
    Field("omega_p", "float", 3.0, lo=0, help="probe Rabi frequency"),
    Field("omega_c", "float", 6.0, lo=0, help="coupling Rabi frequency"),
    Field("delta_p", "float", 0.0, help="probe detuning"),
    Field("gamma_e", "float", 6.0, lo=0, help="intermediate-state decay rate"),
    Field("gamma_r", "float", 0.1, lo=0, help="upper-state decay rate"),
    Field("gamma_deph", "float", 0.2, lo=0, help="extra dephasing rate"),
    Field("v", "float", -600.0, help="mean-field shift strength (sign sets shift direction)"),
    Field("od", "float", 1.5, lo=0, help="resonant two-level optical depth"),
    Field("delta_c_start", "float", -45.0, help="coupling-detuning sweep start"),
    Field("delta_c_stop", "float", 5.0, help="coupling-detuning sweep stop"),
    Field("delta_c_steps", "int", 200, lo=2, help="sweep point count"),
    Field("mode", "str", "multiplicative", choices=_MODES, help="domain composition rule"),
)

_SCAN_COMMON = (
    Field("m", "int", 100, lo=1, help="lattice side length"),
    Field("iterations", "int", 200, lo=0, help="automaton steps per run"),
    Field("replicates", "int", 20, lo=1, help="independent runs per scan point"),
    Field("beta", "float", SIS_DEFAULT_BETA, lo=0, hi=1, help="per-contact infection probability"),
    Field("mu", "float", SIS_DEFAULT_MU, lo=0, hi=1, help="infected->susceptible probability"),
    Field("f_rc", "float", 0.6, lo=0, hi=1, help="critical fill fraction for seeding"),
    Field("f_r_start", "float", 0.0, lo=0, hi=1, help="first fill fraction"),
    Field("f_r_stop", "float", 1.0, lo=0, hi=1, help="last fill fraction"),
    Field("f_r_count", "int", 21, lo=1, help="number of fill fractions"),
    Field("seeding", "str", "threshold_excess", choices=_SEEDINGS, help="initial-infection policy"),
    Field("normalization", "str", "occupied", choices=_NORMS,
          help="fit observable: infected fraction of all cells or of occupied cells"),
    Field("workers", "int", 1, lo=1, help="parallel replicate workers"),
    Field("fit", "bool", True, help="fit the scan curve and emit a fit block"),
)

SCHEMAS: dict[str, tuple[str, tuple[Field, ...]]] = {
    "sis-scan": ("scan", _SCAN_COMMON),
    "multi-domain-scan": (
        "scan",
        _SCAN_COMMON
        + (
            Field("offsets", "float_list", [0.0], lo=-1, hi=1,
                  help="per-domain additive offsets to the scanned fill fraction"),
            Field("moat", "int", 2, lo=0, help="empty columns separating adjacent domains"),
        ),
    ),
    "sir-run": (
        "run",
        (
            Field("m", "int", 100, lo=1, help="lattice side length"),
            Field("iterations", "int", 500, lo=0, help="automaton steps"),
            Field("beta", "float", 0.95, lo=0, hi=1, help="per-contact infection probability"),
            Field("gamma", "float", 0.2, lo=0, hi=1, help="infected->depleted probability"),
            Field("mu", "float", 0.0, lo=0, hi=1, help="infected->susceptible probability"),
            Field("f_r", "float", 0.55, lo=0, hi=1, help="fill fraction"),
            Field("f_rc", "float", 0.5, lo=0, hi=1, help="critical fill fraction for seeding"),
            Field("seeding", "str", "threshold_excess", choices=_SEEDINGS,
                  help="initial-infection policy"),
            Field("fit", "bool", True, help="fit a Gaussian to the infected-fraction peak"),
        ),
    ),
    "gradient-snapshot": (
        "snapshot",
        (
            Field("m", "int", 100, lo=1, help="lattice side length"),
            Field("iterations", "int", 200, lo=0, help="automaton steps"),
            Field("beta", "float", SIS_DEFAULT_BETA, lo=0, hi=1,
                  help="per-contact infection probability"),
            Field("mu", "float", SIS_DEFAULT_MU, lo=0, hi=1,
                  help="infected->susceptible probability"),
            Field("f_rc", "float", 0.6, lo=0, hi=1, help="critical fill fraction for seeding"),
            Field("f_r_left", "float", 0.0, lo=0, hi=1, help="fill fraction at column 0"),
            Field("f_r_right", "float", 0.9, lo=0, hi=1, help="fill fraction at the last column"),
            Field("seeding", "str", "threshold_excess", choices=_SEEDINGS,
                  help="initial-infection policy"),
        ),
    ),
    "hysteresis": (
        "hysteresis",
        _MF_FIELDS
        + (
            Field("fractions", "float_list", [0.33], lo=0, hi=1, help="per-domain density fractions"),
            Field("weights", "float_list", [], lo=0, hi=1,
                  help="per-domain weights (empty = equal)"),
        ),
    ),
    "multistability-map": (
        "map",
        _MF_FIELDS
        + (
            Field("f_r1", "float", 0.33, lo=0, hi=1, help="fixed fraction of domain 1"),
            Field("f_r2_start", "float", 0.0, lo=0, hi=1, help="first domain-2 fraction"),
            Field("f_r2_stop", "float", 1.0, lo=0, hi=1, help="last domain-2 fraction"),
            Field("f_r2_count", "int", 21, lo=1, help="number of domain-2 fractions"),
        ),
    ),
    "fit": (
        "fit",
        (
            Field("data", "str", "", help="input CSV path (required)"),
            Field("x_column", "str", "x", help="abscissa column name"),
            Field("y_column", "str", "y", help="ordinate column name"),
            Field("model", "str", "tanh", choices=("tanh", "multi_tanh", "gaussian"),
                  help="model family"),
            Field("components", "int", 1, lo=1, help="multi_tanh component count"),
            Field("init", "float_list", [], help="starting parameters (empty = heuristic)"),
        ),
    ),
}

_TOP_FIELDS = (
    Field("kind", "str", None, choices=tuple(SCHEMAS), help="experiment kind"),
    Field("seed", "int", 0, lo=0, help="master random seed"),
    Field("out", "str", "out", help="output directory"),
)


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully validated experiment description."""

    kind: str
    seed: int
    out: str
    params: dict

    def __getitem__(self, key: str):
        return self.params[key]


def _check_value(prefix: str, f: Field, value, errors: list[str]):
    def bad(msg):
        errors.append(f"{prefix}{f.name}: {msg}")

    if f.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            return bad(f"expected integer, got {value!r}")
    elif f.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return bad(f"expected number, got {value!r}")
        value = float(value)
    elif f.kind == "bool":
        if not isinstance(value, bool):
            return bad(f"expected true/false, got {value!r}")
    elif f.kind == "str":
        if not isinstance(value, str):
            return bad(f"expected string, got {value!r}")
    elif f.kind == "float_list":
        if not isinstance(value, list) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
        ):
            return bad(f"expected list of numbers, got {value!r}")
        for v in value:
            if f.lo is not None and v < f.lo or f.hi is not None and v > f.hi:
                bad(f"element {v} outside [{f.lo}, {f.hi}]")
        return float_list(value)
    else:  # pragma: no cover - schema author error
        raise AssertionError(f"unhandled field kind {f.kind}")

    if f.choices is not None and value not in f.choices:
        return bad(f"must be one of {', '.join(map(str, f.choices))}; got {value!r}")
    if f.kind in ("int", "float"):
        if f.lo is not None and value < f.lo:
            return bad(f"must be >= {f.lo}, got {value}")
        if f.hi is not None and value > f.hi:
            return bad(f"must be <= {f.hi}, got {value}")
    return value


def float_list(value) -> list[float]:
    return [float(v) for v in value]


def _cross_checks(kind: str, params: dict, section: str, errors: list[str]):
    if kind == "sir-run":
        if params.get("gamma", 0) + params.get("mu", 0) > 1:
            errors.append(
                f"{section}.gamma, {section}.mu: gamma + mu must be <= 1 "
                f"(one categorical draw per infected cell), got "
                f"{params.get('gamma')} + {params.get('mu')}"
            )
    if kind in ("sis-scan", "multi-domain-scan"):
        if params.get("f_r_stop", 1) < params.get("f_r_start", 0):
            errors.append(f"{section}.f_r_stop: must be >= f_r_start")
    if kind == "multi-domain-scan" and not params.get("offsets"):
        errors.append(f"{section}.offsets: need at least one domain offset")
    if kind == "hysteresis":
        w, fr = params.get("weights", []), params.get("fractions", [])
        if not fr:
            errors.append(f"{section}.fractions: need at least one domain")
        if w and len(w) != len(fr):
            errors.append(
                f"{section}.weights: got {len(w)} weights for {len(fr)} fractions"
            )
    if kind in ("hysteresis", "multistability-map"):
        if params.get("delta_c_stop", 1.0) <= params.get("delta_c_start", 0.0):
            errors.append(f"{section}.delta_c_stop: must be > delta_c_start")
    if kind == "fit" and not params.get("data"):
        errors.append(f"{section}.data: input CSV path is required")


def parse_config(source: str | Path) -> ExperimentConfig:
    """Parse and validate a config from a file path or literal TOML text.

    Raises ConfigError listing every problem found (unknown keys are
    named individually; all range violations are reported together).
    """
    text = source
    if isinstance(source, Path) or (
        isinstance(source, str) and "\n" not in source and source.endswith(".toml")
    ):
        text = Path(source).read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError([f"TOML syntax: {e}"]) from e

    errors: list[str] = []
    kind = data.get("kind")
    if kind is None:
        errors.append("kind: missing required key")
    elif kind not in SCHEMAS:
        errors.append(
            f"kind: unknown experiment kind {kind!r}; expected one of {', '.join(SCHEMAS)}"
        )
    if errors:
        raise ConfigError(errors)

    section, fields = SCHEMAS[kind]
    by_name = {f.name: f for f in fields}

    seed = data.get("seed", 0)
    out = data.get("out", "out")
    for f in _TOP_FIELDS[1:]:
        val = data.get(f.name, f.default)
        _check_value("", f, val, errors)

    for key in data:
        if key not in ("kind", "seed", "out", section):
            errors.append(f"{key}: unknown top-level key")

    raw = data.get(section, {})
    if not isinstance(raw, dict):
        errors.append(f"{section}: expected a [{section}] table")
        raw = {}
    params = {}
    for key, value in raw.items():
        f = by_name.get(key)
        if f is None:
            errors.append(f"{section}.{key}: unknown key")
            continue
        checked = _check_value(f"{section}.", f, value, errors)
        if checked is not None:
            params[key] = checked
    for f in fields:
        params.setdefault(f.name, f.default if not isinstance(f.default, list) else list(f.default))

    _cross_checks(kind, params, section, errors)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(kind=kind, seed=int(seed), out=str(out), params=params)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def serialize_config(config: ExperimentConfig) -> str:
    """Emit TOML that parses back to an identical ExperimentConfig."""
    section, fields = SCHEMAS[config.kind]
    lines = [
        f"kind = {_toml_value(config.kind)}",
        f"seed = {_toml_value(config.seed)}",
        f"out = {_toml_value(config.out)}",
        "",
        f"[{section}]",
    ]
    for f in fields:
        lines.append(f"{f.name} = {_toml_value(config.params[f.name])}")
    return "\n".join(lines) + "\n"


def schema_help(kind: str) -> str:
    """Human-readable key reference for one experiment kind."""
    section, fields = SCHEMAS[kind]
    lines = [f"top-level keys:"]
    for f in _TOP_FIELDS:
        lines.append("  " + f.describe())
    lines.append(f"[{section}] keys:")
    for f in fields:
        lines.append("  " + f.describe())
    return "\n".join(lines)
