"""Experiment configuration: a strict key=value grammar with sections.

Grammar (one statement per line):

    config   = { line } ;
    line     = blank | comment | section | setting ;
    comment  = "#" text ;
    section  = "[" name "]" ;
    setting  = key "=" value ;   (inside a section)

Values are parsed per-key (int, float, bool, enum, comma list, or "none").
Unknown sections or keys, type mismatches, and constraint violations are
rejected with the offending line number.  An empty file yields the full
default configuration.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Tuple

from .synthgen import KIND_AUTO_ENCODER, KIND_MASKED
from .trainer import DEFAULT_LAMBDA_GRID, DEFAULT_LR_GRID

AXIS_LABELED = "labeled_size"
AXIS_R = "r"
AXIS_D = "d"
AXIS_NONE = "none"

_WORLD_ALIASES = {
    "ae": KIND_AUTO_ENCODER,
    "auto_encoder": KIND_AUTO_ENCODER,
    "masked": KIND_MASKED,
}


class ConfigError(ValueError):
    """Parse or validation failure; carries a 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ExperimentConfig:
    world_kind: str = KIND_AUTO_ENCODER
    d: int = 100
    r: int = 30
    zero_mean: bool = False
    noise_variance: float = 1e-2
    unlabeled: int = 10_000
    labeled_sweep: Tuple[int, ...] = (10_000,)
    test: int = 1_000
    sweep_axis: str = AXIS_NONE
    sweep_values: Tuple[int, ...] = ()
    runs: int = 10
    seed: int = 0
    epochs_pretrain: int = 200
    epochs_finetune: int = 200
    batch_size: int = 64
    lr_grid: Tuple[float, ...] = DEFAULT_LR_GRID
    lambda_grid: Tuple[float, ...] = DEFAULT_LAMBDA_GRID
    momentum: float = 0.9
    tau: Optional[float] = None
    out_dir: str = "out"


def _check_world(kind: str, d: int, r: int) -> Optional[str]:
    if kind == KIND_AUTO_ENCODER and not 1 <= r < d / 2:
        return f"r < d/2 violated (r={r}, d={d})"
    if kind == KIND_MASKED and not 1 <= r < (d - 1) / 2:
        return f"r < (d-1)/2 violated (r={r}, d={d})"
    return None


def validate_config(cfg: ExperimentConfig, lines=None) -> ExperimentConfig:
    """Cross-key constraints; ``lines`` maps (section, key) to line numbers."""
    lines = lines or {}

    def fail(msg, section, key):
        raise ConfigError(msg, lines.get((section, key)))

    msg = _check_world(cfg.world_kind, cfg.d, cfg.r)
    if msg:
        fail(msg, "world", "r")
    if cfg.runs < 1:
        fail("runs must be >= 1", "sweep", "runs")
    if cfg.unlabeled < 1 or cfg.test < 1:
        fail("dataset sizes must be >= 1", "data", "unlabeled")
    if not cfg.labeled_sweep or any(v < 1 for v in cfg.labeled_sweep):
        fail("labeled sizes must be >= 1", "data", "labeled_sweep")
    if cfg.sweep_axis not in (AXIS_LABELED, AXIS_R, AXIS_D, AXIS_NONE):
        fail(f"unknown sweep axis {cfg.sweep_axis!r}", "sweep", "axis")
    if cfg.sweep_axis in (AXIS_R, AXIS_D):
        if not cfg.sweep_values:
            fail(f"axis {cfg.sweep_axis!r} needs sweep values", "sweep", "values")
        for v in cfg.sweep_values:
            d = cfg.d if cfg.sweep_axis == AXIS_R else v
            r = v if cfg.sweep_axis == AXIS_R else cfg.r
            msg = _check_world(cfg.world_kind, d, r)
            if msg:
                fail(f"sweep value {v}: {msg}", "sweep", "values")
    if cfg.sweep_axis == AXIS_NONE and len(cfg.labeled_sweep) != 1:
        fail("axis 'none' expects a single labeled size", "data", "labeled_sweep")
    return cfg


# ---------------------------------------------------------------------------
# value converters

def _conv_int(text):
    return int(text)


def _conv_float(text):
    return float(text)


def _conv_bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _conv_world(text):
    t = text.strip().lower()
    if t not in _WORLD_ALIASES:
        raise ValueError(f"expected one of ae, auto_encoder, masked; got {text!r}")
    return _WORLD_ALIASES[t]


def _conv_axis(text):
    t = text.strip().lower()
    if t not in (AXIS_LABELED, AXIS_R, AXIS_D, AXIS_NONE):
        raise ValueError(f"unknown sweep axis {text!r}")
    return t


def _conv_int_list(text):
    return tuple(int(v.strip()) for v in text.split(",") if v.strip())


def _conv_float_list(text):
    return tuple(float(v.strip()) for v in text.split(",") if v.strip())


def _conv_opt_float(text):
    return None if text.strip().lower() == "none" else float(text)


def _conv_str(text):
    return text.strip()


# (section, key) -> (config field, converter)
_SCHEMA = {
    ("world", "kind"): ("world_kind", _conv_world),
    ("world", "d"): ("d", _conv_int),
    ("world", "r"): ("r", _conv_int),
    ("world", "zero_mean"): ("zero_mean", _conv_bool),
    ("world", "noise_variance"): ("noise_variance", _conv_float),
    ("data", "unlabeled"): ("unlabeled", _conv_int),
    ("data", "labeled_sweep"): ("labeled_sweep", _conv_int_list),
    ("data", "test"): ("test", _conv_int),
    ("sweep", "axis"): ("sweep_axis", _conv_axis),
    ("sweep", "values"): ("sweep_values", _conv_int_list),
    ("sweep", "runs"): ("runs", _conv_int),
    ("sweep", "seed"): ("seed", _conv_int),
    ("train", "epochs_pretrain"): ("epochs_pretrain", _conv_int),
    ("train", "epochs_finetune"): ("epochs_finetune", _conv_int),
    ("train", "batch_size"): ("batch_size", _conv_int),
    ("train", "lr_grid"): ("lr_grid", _conv_float_list),
    ("train", "lambda_grid"): ("lambda_grid", _conv_float_list),
    ("train", "momentum"): ("momentum", _conv_float),
    ("train", "tau"): ("tau", _conv_opt_float),
    ("output", "dir"): ("out_dir", _conv_str),
}

_SECTIONS = {section for section, _ in _SCHEMA}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises :class:`ConfigError` with a line number."""
    values = {}
    lines = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("unterminated section header", lineno)
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        if section is None:
            raise ConfigError("setting outside any [section]", lineno)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        entry = _SCHEMA.get((section, key))
        if entry is None:
            raise ConfigError(f"unknown key {key!r} in section [{section}]", lineno)
        field_name, convert = entry
        try:
            values[field_name] = convert(value.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        lines[(section, key)] = lineno
    return validate_config(ExperimentConfig(**values), lines)


def _fmt_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_fmt_value(v) for v in value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parsing it back yields an equal config."""
    by_section = {}
    for (section, key), (field_name, _) in _SCHEMA.items():
        by_section.setdefault(section, []).append((key, getattr(cfg, field_name)))
    out = []
    for section in ("world", "data", "sweep", "train", "output"):
        out.append(f"[{section}]")
        for key, value in by_section[section]:
            out.append(f"{key} = {_fmt_value(value)}")
        out.append("")
    return "\n".join(out)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()[:16]


def load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return validate_config(ExperimentConfig())
    with open(path) as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# shipped profiles

def desk_profile(world_kind: str = KIND_AUTO_ENCODER, **overrides) -> ExperimentConfig:
    """Small-scale profile sized to run a full comparison sweep in minutes.

    The masked world's hidden coordinate is orders of magnitude larger than
    the visible ones, so its learning-rate grid sits lower than the
    reconstruction world's.
    """
    if world_kind == KIND_AUTO_ENCODER:
        lr_grid = (1e-4, 1e-3, 1e-2, 1e-1)
    else:
        lr_grid = (1e-6, 1e-5, 1e-4, 1e-3)
    base = dict(
        world_kind=world_kind,
        d=50,
        r=15,
        zero_mean=True,
        unlabeled=5_000,
        labeled_sweep=(100, 500, 2000, 5000),
        test=1_000,
        sweep_axis=AXIS_LABELED,
        runs=5,
        epochs_pretrain=100,
        epochs_finetune=100,
        batch_size=64,
        lr_grid=lr_grid,
        lambda_grid=(1e-3, 1e-1),
    )
    base.update(overrides)
    return validate_config(ExperimentConfig(**base))


def paper_profile(world_kind: str = KIND_AUTO_ENCODER, **overrides) -> ExperimentConfig:
    """Full-scale profile: d=100, r=30, 10^4 unlabeled and labeled points."""
    base = dict(
        world_kind=world_kind,
        d=100,
        r=30,
        zero_mean=False,
        unlabeled=10_000,
        labeled_sweep=(500, 1000, 2000, 5000, 10_000),
        test=1_000,
        sweep_axis=AXIS_LABELED,
        runs=10,
    )
    base.update(overrides)
    return validate_config(ExperimentConfig(**base))
