"""Configuration settings for the Spin Sampling Toolkit."""

import math
import os
import re
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Tuple

from dotenv import dotenv_values, load_dotenv

from spinsampling.errors import ConfigError
from spinsampling.fockspace import DEFAULT_CAPACITY
from spinsampling.scenarios import SCALES, SUBCOMMANDS, get_scenario

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(float(raw))
    except ValueError:
        raise ConfigError(name, f"expected an integer, got '{raw}'")


class Config:
    """Base configuration. Values are read from the environment when get_config() builds it."""
    SCALE = 'desk'

    def __init__(self):
        # Largest sector (number of basis states) any run may enumerate
        self.CAPACITY = _env_int('SPINSAMPLING_CAP', DEFAULT_CAPACITY)

        # Trial-level worker threads (0 = one per CPU)
        self.THREADS = _env_int('SPINSAMPLING_THREADS', 0)

        self.OUTPUT_DIR = os.environ.get('SPINSAMPLING_OUT', 'results')
        self.LOG_LEVEL = os.environ.get('SPINSAMPLING_LOG_LEVEL', 'INFO').upper()


class DeskConfig(Config):
    """Reduced grids that finish in minutes."""
    SCALE = 'desk'


class LargeScaleConfig(Config):
    """Full-size ensembles; expect hours."""
    SCALE = 'large'


# Config selector
config = {
    'desk': DeskConfig,
    'large': LargeScaleConfig,
    'default': DeskConfig
}


def get_config() -> Config:
    """Configuration selected by SPINSAMPLING_SCALE; raises ConfigError on malformed values."""
    scale = os.environ.get('SPINSAMPLING_SCALE', 'desk').strip().lower()
    return config.get(scale, config['default'])()


# =============================================================================
# RUN CONFIGURATION
# =============================================================================

# Keys accepted in --config files; they match the command-line flag names.
RUN_KEYS = (
    "subcommand", "n", "m", "trials", "seed", "time", "threads", "out", "cap", "b", "scale", "dump"
)

_RANGE = re.compile(r"^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$")


def parse_int_list(field_name: str, text: Any) -> Tuple[int, ...]:
    """'5', '2..5' (inclusive) or '7,10,15'."""
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    if isinstance(text, int):
        return (text,)
    text = str(text).strip()
    match = _RANGE.match(text)
    try:
        if match:
            lo, hi = int(match.group(1)), int(match.group(2))
            if hi < lo:
                raise ConfigError(field_name, f"empty range '{text}'")
            return tuple(range(lo, hi + 1))
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(field_name, f"expected an integer, a range a..b or a comma list, got '{text}'")
    if not values:
        raise ConfigError(field_name, "no values given")
    return values


def parse_time(field_name: str, text: Any) -> float:
    """A float, optionally with a 'pi' suffix ('0.5pi', 'pi')."""
    if isinstance(text, (int, float)):
        return float(text)
    raw = str(text).strip().lower()
    try:
        if raw.endswith("pi"):
            factor = raw[:-2].strip().rstrip("*")
            return (float(factor) if factor else 1.0) * math.pi
        return float(raw)
    except ValueError:
        raise ConfigError(field_name, f"expected a number or a multiple of pi like '0.5pi', got '{text}'")


def parse_float_list(field_name: str, text: Any, times: bool = False) -> Tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ConfigError(field_name, "no values given")
    if times:
        return tuple(parse_time(field_name, p) for p in parts)
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(field_name, f"expected a comma list of numbers, got '{text}'")


def _parse_int(field_name: str, text: Any) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(field_name, f"expected an integer, got '{text}'")


_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _parse_bool(field_name: str, text: Any) -> bool:
    if isinstance(text, bool):
        return text
    raw = str(text).strip().lower()
    if raw in _TRUE:
        return True
    if raw in _FALSE:
        return False
    raise ConfigError(field_name, f"expected true or false, got '{text}'")


@dataclass
class RunConfig:
    """Fully resolved configuration of one subcommand run."""
    subcommand: str
    n_values: Tuple[int, ...]
    m_values: Tuple[int, ...]
    trials: int
    seed: int
    times: Tuple[float, ...]
    out: str
    cap: int = DEFAULT_CAPACITY
    threads: int = 0
    b_values: Tuple[float, ...] = ()
    scale: str = 'desk'
    # Write states, basis and probability tables of trial 0 per cell
    dump: bool = False

    def validate(self) -> 'RunConfig':
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError("subcommand", f"unknown subcommand '{self.subcommand}'")
        if self.scale not in SCALES:
            raise ConfigError("scale", f"expected one of {', '.join(SCALES)}, got '{self.scale}'")
        if any(n < 0 for n in self.n_values):
            raise ConfigError("n", "particle counts must be >= 0")
        if any(m < 1 for m in self.m_values):
            raise ConfigError("m", "mode counts must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials", f"must be >= 1, got {self.trials}")
        if self.cap < 1:
            raise ConfigError("cap", f"must be >= 1, got {self.cap}")
        if self.threads < 0:
            raise ConfigError("threads", f"must be >= 0, got {self.threads}")
        if any(not math.isfinite(t) or t < 0 for t in self.times):
            raise ConfigError("time", "times must be finite and >= 0")
        if self.subcommand == "rwa" and not self.b_values:
            raise ConfigError("b", "rwa needs at least one field strength")
        return self

    def as_flat(self) -> Dict[str, str]:
        """key -> value text, in the syntax load_run_config reads back."""
        return {
            "subcommand": self.subcommand,
            "n": ",".join(str(v) for v in self.n_values),
            "m": ",".join(str(v) for v in self.m_values),
            "trials": str(self.trials),
            "seed": str(self.seed),
            "time": ",".join("%.17g" % t for t in self.times),
            "threads": str(self.threads),
            "out": self.out,
            "cap": str(self.cap),
            "b": ",".join("%.17g" % b for b in self.b_values),
            "scale": self.scale,
            "dump": "true" if self.dump else "false",
        }

    def echo(self) -> str:
        """Sorted key=value lines, re-loadable with --config."""
        return "".join(f"{key}={value}\n" for key, value in sorted(self.as_flat().items()))


def _apply(run: RunConfig, key: str, value: Any) -> RunConfig:
    if value is None or (isinstance(value, str) and value.strip() == "" and key != "b"):
        return run
    if key == "n":
        return replace(run, n_values=parse_int_list("n", value))
    if key == "m":
        return replace(run, m_values=parse_int_list("m", value))
    if key == "trials":
        return replace(run, trials=_parse_int("trials", value))
    if key == "seed":
        return replace(run, seed=_parse_int("seed", value))
    if key == "time":
        return replace(run, times=parse_float_list("time", value, times=True))
    if key == "threads":
        return replace(run, threads=_parse_int("threads", value))
    if key == "out":
        return replace(run, out=str(value))
    if key == "cap":
        return replace(run, cap=_parse_int("cap", value))
    if key == "b":
        return replace(run, b_values=parse_float_list("b", value) if str(value).strip() else ())
    if key == "scale":
        return replace(run, scale=str(value).strip().lower())
    if key == "dump":
        return replace(run, dump=_parse_bool("dump", value))
    if key == "subcommand":
        return run
    raise ConfigError(key, "unknown configuration key")


def read_config_file(path: str) -> Dict[str, Optional[str]]:
    """Flat key=value file (dotenv syntax); unknown keys are rejected."""
    if not os.path.exists(path):
        raise ConfigError("config", f"file not found: {path}")
    values = dotenv_values(path)
    for key in values:
        if key not in RUN_KEYS:
            raise ConfigError(key, f"unknown configuration key in {path}")
    return dict(values)


def load_run_config(
    subcommand: str,
    path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None
) -> RunConfig:
    """Scenario defaults, then the --config file, then command-line flags."""
    env = get_config()
    file_values = read_config_file(path) if path else {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    if file_values.get("subcommand") and file_values["subcommand"] != subcommand:
        raise ConfigError(
            "subcommand",
            f"config file is for '{file_values['subcommand']}', not '{subcommand}'"
        )
    if subcommand not in SUBCOMMANDS:
        raise ConfigError("subcommand", f"unknown subcommand '{subcommand}'")

    scale = str(overrides.get("scale") or file_values.get("scale") or env.SCALE).strip().lower()
    if scale not in SCALES:
        raise ConfigError("scale", f"expected one of {', '.join(SCALES)}, got '{scale}'")
    scenario = get_scenario(subcommand, scale)

    run = RunConfig(
        subcommand=subcommand,
        n_values=scenario.n_values,
        m_values=scenario.m_values,
        trials=scenario.trials,
        seed=scenario.seed,
        times=scenario.times,
        out=os.path.join(env.OUTPUT_DIR, subcommand),
        cap=env.CAPACITY,
        threads=env.THREADS,
        b_values=scenario.b_values,
        scale=scale,
    )
    for source in (file_values, overrides):
        for key, value in source.items():
            run = _apply(run, key, value)
    return run.validate()
