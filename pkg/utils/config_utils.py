import logging
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from utils.builder_utils import (DEFAULT_EXTERNAL_BUDGET, SEPARATOR_POLICIES,
                                 BuilderConfig)
from utils.csv_utils import EXPORT_FORMATS
from utils.error_utils import ConfigValidationError, ParseError
from utils.exact_utils import parse_rational
from utils.set_utils import (AllRationalsIn, ArithmeticProgression, DyadicsIn,
                             ExternalList, FiniteList, OddDenominatorIn,
                             SetSpec, Union)
from utils.sigma_utils import (SPLITS, FiniteTarget, OpenIntervalTarget,
                               SigmaConfig, chain_from_target)

# Paths
ENV_PATH = "config/.env"
DEFAULT_SETTINGS_PATH = "config/settings.yaml"
FALLBACK_SETTINGS_PATH = "config/example.settings.yaml"

MODES = ("build", "eval", "verify", "witness", "sigma", "export")
FORMATS = ("jsonl", "csv", "json")

# Cache for loaded settings
_settings_cache = None


def get_base_dir():
    """Repository root: the directory holding Involutor.py."""
    return Path(__file__).resolve().parent.parent


def resolve_path(relative_path, create_if_missing=False):
    """
    Resolve a file path relative to the repository root. Absolute paths are
    returned as they are.
    """
    path = Path(relative_path)
    resolved = path.resolve() if path.is_absolute() else Path(get_base_dir(), path).resolve()
    logging.debug(f"Resolved path {relative_path} -> {resolved}")

    if create_if_missing and not resolved.exists():
        resolved.parent.mkdir(parents=True, exist_ok=True)
        resolved.touch()
        logging.info(f"Created missing path: {resolved}")

    return resolved


def load_env(env_path=ENV_PATH):
    """
    Load optional overrides (INVOLUTOR_SETTINGS, INVOLUTOR_LOG_LEVEL) from a .env file.
    """
    env_file = resolve_path(env_path)
    if env_file.exists():
        load_dotenv(dotenv_path=env_file)
        logging.info(f"Environment variables loaded from {env_file}")
    else:
        logging.debug(f".env file not found at {env_file}")


def load_settings(settings_path=None, refresh=False):
    """
    Load the YAML settings file once and cache it.
    """
    global _settings_cache
    if _settings_cache is not None and not refresh and settings_path is None:
        return _settings_cache

    load_env()
    candidates = [settings_path or os.getenv("INVOLUTOR_SETTINGS") or DEFAULT_SETTINGS_PATH,
                  FALLBACK_SETTINGS_PATH]
    for candidate in candidates:
        settings_file = resolve_path(candidate)
        if settings_file.exists():
            break
    else:
        logging.error(f"No settings file found among {candidates}")
        raise FileNotFoundError(f"Settings file is missing: {candidates[0]}")

    try:
        with open(settings_file, "r", encoding="utf-8") as f:
            settings = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        logging.error(f"Error parsing YAML settings: {e}")
        raise
    logging.debug(f"Settings loaded from {settings_file}")
    if settings_path is None:
        _settings_cache = settings
    return settings


def default_value(settings, key, fallback):
    return (settings or {}).get("defaults", {}).get(key, fallback)


# ! --- Run configuration ---


@dataclass
class Caps:
    window: int = 20
    envelope_cap: int = 400
    certificate_samples: int = 20
    isolation_depth: int = 256
    oracle_depth: int = 300
    witness_points: int = 50
    chain_depth: int = 32


@dataclass
class RunConfig:
    mode: Optional[str]
    builder: Optional[BuilderConfig] = None
    sigma: Optional[SigmaConfig] = None
    steps: int = 2000
    samples: int = 200
    point: Optional[Fraction] = None
    eval_cap: Optional[int] = None
    caps: Caps = field(default_factory=Caps)
    output_path: Optional[str] = None
    output_format: str = "jsonl"
    log_level: Optional[str] = None

    def with_overrides(self, mode=None, steps=None, point=None, out=None, fmt=None, log_level=None):
        """Command-line flags win over the file."""
        updated = replace(self)
        if mode:
            updated.mode = mode
        if steps is not None:
            updated.steps = _positive_int(steps, "--steps")
            updated.eval_cap = updated.steps
        if point is not None:
            try:
                updated.point = parse_rational(point)
            except ValueError as e:
                raise ParseError(str(e), key="--point") from e
        if out:
            updated.output_path = out
        if fmt:
            if fmt not in FORMATS:
                raise ParseError(f"format must be one of {', '.join(FORMATS)}", key="--format")
            updated.output_format = fmt
        if log_level:
            updated.log_level = log_level
        updated.validate()
        return updated

    def validate(self):
        if self.mode is None:
            raise ConfigValidationError("no mode given in the config or on the command line")
        if self.mode not in MODES:
            raise ConfigValidationError(f"unknown mode {self.mode!r}; use one of {', '.join(MODES)}")
        if self.mode == "sigma" and self.sigma is None:
            raise ConfigValidationError("mode 'sigma' needs a 'sigma' section")
        if self.mode != "sigma" and self.builder is None:
            raise ConfigValidationError(f"mode {self.mode!r} needs a 'builder' section")
        if self.mode == "eval" and self.point is None:
            raise ConfigValidationError("mode 'eval' needs a point")
        if self.mode == "build" and self.output_format not in EXPORT_FORMATS:
            raise ParseError(f"build writes {' or '.join(EXPORT_FORMATS)}, not {self.output_format!r}",
                             key="format")


def _positive_int(value, key):
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise ParseError(f"expected a natural number, got {value!r}", key=key)
    if number < 0:
        raise ParseError(f"expected a natural number, got {number}", key=key)
    return number


class _Reader:
    """Walks a composed YAML node graph so every error has a line and key path."""

    def __init__(self, base_dir: Path):
        self.base_dir = base_dir

    @staticmethod
    def _line(node):
        return node.start_mark.line + 1

    def mapping(self, node, path, allowed, required=()):
        if not isinstance(node, yaml.MappingNode):
            raise ParseError("expected a mapping", self._line(node), path)
        entries = {}
        for key_node, value_node in node.value:
            key = key_node.value
            key_path = f"{path}.{key}" if path else key
            if key not in allowed:
                raise ParseError(f"unknown key (allowed: {', '.join(sorted(allowed))})",
                                 self._line(key_node), key_path)
            if key in entries:
                raise ParseError("duplicate key", self._line(key_node), key_path)
            entries[key] = value_node
        for key in required:
            if key not in entries:
                raise ParseError(f"missing required key '{key}'", self._line(node), path)
        return entries

    def sequence(self, node, path):
        if not isinstance(node, yaml.SequenceNode):
            raise ParseError("expected a list", self._line(node), path)
        return node.value

    def scalar(self, node, path):
        if not isinstance(node, yaml.ScalarNode):
            raise ParseError("expected a single value", self._line(node), path)
        tag = node.tag.rsplit(":", 1)[-1]
        if tag == "float":
            raise ParseError(f"float literal {node.value!r} is not allowed; write rationals as \"p/q\"",
                             self._line(node), path)
        if tag == "int":
            try:
                return int(node.value.replace("_", ""), 0)
            except ValueError:
                raise ParseError(f"bad integer {node.value!r}", self._line(node), path)
        if tag == "bool":
            return node.value.lower() in ("true", "yes", "on")
        if tag == "null":
            return None
        return node.value

    def string(self, node, path):
        value = self.scalar(node, path)
        if not isinstance(value, str):
            raise ParseError("expected a string", self._line(node), path)
        return value

    def natural(self, node, path):
        value = self.scalar(node, path)
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ParseError("expected a natural number", self._line(node), path)
        return value

    def rational(self, node, path):
        value = self.scalar(node, path)
        if isinstance(value, bool):
            raise ParseError("expected a rational", self._line(node), path)
        if isinstance(value, int):
            return Fraction(value)
        try:
            return parse_rational(str(value))
        except ValueError as e:
            raise ParseError(str(e), self._line(node), path)

    # ! --- Set specs ---

    _SET_KEYS = {
        "dyadics": ({"kind", "lo", "hi"}, ("lo", "hi")),
        "odd-denominator": ({"kind", "lo", "hi"}, ("lo", "hi")),
        "all-rationals": ({"kind", "lo", "hi"}, ("lo", "hi")),
        "progression": ({"kind", "start", "step", "count"}, ("start", "step")),
        "list": ({"kind", "values"}, ("values",)),
        "union": ({"kind", "specs"}, ("specs",)),
        "external": ({"kind", "path"}, ("path",)),
    }
    _GRIDS = {"dyadics": DyadicsIn, "odd-denominator": OddDenominatorIn, "all-rationals": AllRationalsIn}

    def set_spec(self, node, path) -> SetSpec:
        kind_entries = self.mapping(node, path, {"kind", "lo", "hi", "start", "step", "count",
                                                 "values", "specs", "path"}, ("kind",))
        kind = self.string(kind_entries["kind"], f"{path}.kind")
        if kind not in self._SET_KEYS:
            raise ParseError(f"unknown set kind {kind!r}; use one of {', '.join(self._SET_KEYS)}",
                             self._line(kind_entries["kind"]), f"{path}.kind")
        allowed, required = self._SET_KEYS[kind]
        e = self.mapping(node, path, allowed, required)
        try:
            if kind in self._GRIDS:
                return self._GRIDS[kind](self.rational(e["lo"], f"{path}.lo"),
                                         self.rational(e["hi"], f"{path}.hi"))
            if kind == "progression":
                count = None
                if "count" in e and self.scalar(e["count"], f"{path}.count") is not None:
                    count = self.natural(e["count"], f"{path}.count")
                return ArithmeticProgression(self.rational(e["start"], f"{path}.start"),
                                             self.rational(e["step"], f"{path}.step"), count)
            if kind == "list":
                items = self.sequence(e["values"], f"{path}.values")
                return FiniteList(tuple(self.rational(v, f"{path}.values[{i}]") for i, v in enumerate(items)))
            if kind == "union":
                items = self.sequence(e["specs"], f"{path}.specs")
                return Union(tuple(self.set_spec(s, f"{path}.specs[{i}]") for i, s in enumerate(items)))
            file_path = Path(self.string(e["path"], f"{path}.path"))
            if not file_path.is_absolute():
                file_path = self.base_dir / file_path
            if not file_path.exists():
                raise ConfigValidationError(f"{path}.path: external list {file_path} does not exist")
            return ExternalList.from_file(file_path)
        except ValueError as err:
            raise ConfigValidationError(f"{path}: {err}") from err


def _builder_section(reader, node, defaults) -> BuilderConfig:
    e = reader.mapping(node, "builder", {"F", "Q", "separator_policy", "validation_resolution",
                                         "external_budget"}, ("F", "Q"))
    F = reader.set_spec(e["F"], "builder.F")
    Q = reader.set_spec(e["Q"], "builder.Q")
    policy = reader.string(e["separator_policy"], "builder.separator_policy") \
        if "separator_policy" in e else "affine"
    if policy not in SEPARATOR_POLICIES:
        raise ConfigValidationError(f"builder.separator_policy must be one of {', '.join(SEPARATOR_POLICIES)}")
    resolution = reader.rational(e["validation_resolution"], "builder.validation_resolution") \
        if "validation_resolution" in e else parse_rational(str(defaults["validation_resolution"]))
    budget = reader.natural(e["external_budget"], "builder.external_budget") \
        if "external_budget" in e else defaults["external_budget"]
    return BuilderConfig(Q=Q, F=F, separator_policy=policy, validation_resolution=resolution,
                         external_budget=budget, isolation_depth=defaults["isolation_depth"])


def _sigma_section(reader, node, depth) -> SigmaConfig:
    e = reader.mapping(node, "sigma", {"X", "split", "chain", "depth"}, ("X", "chain"))
    X = reader.set_spec(e["X"], "sigma.X")
    split_name = reader.string(e["split"], "sigma.split") if "split" in e else "dyadic"
    if split_name not in SPLITS:
        raise ConfigValidationError(f"sigma.split must be one of {', '.join(SPLITS)}")
    if "depth" in e:
        depth = reader.natural(e["depth"], "sigma.depth")
    chain_entries = reader.mapping(e["chain"], "sigma.chain", {"recipe", "u", "w", "points"}, ("recipe",))
    recipe_name = reader.string(chain_entries["recipe"], "sigma.chain.recipe")
    if recipe_name == "interval":
        reader.mapping(e["chain"], "sigma.chain", {"recipe", "u", "w"}, ("u", "w"))
        recipe = OpenIntervalTarget(reader.rational(chain_entries["u"], "sigma.chain.u"),
                                    reader.rational(chain_entries["w"], "sigma.chain.w"))
    elif recipe_name == "finite":
        reader.mapping(e["chain"], "sigma.chain", {"recipe", "points"}, ("points",))
        items = reader.sequence(chain_entries["points"], "sigma.chain.points")
        recipe = FiniteTarget(tuple(reader.rational(p, f"sigma.chain.points[{i}]") for i, p in enumerate(items)))
    else:
        raise ParseError(f"unknown chain recipe {recipe_name!r}; use 'interval' or 'finite'",
                         reader._line(chain_entries["recipe"]), "sigma.chain.recipe")
    return SigmaConfig(X, SPLITS[split_name], chain_from_target(recipe, X, depth))


def parse_config(text, base_dir=None, settings=None) -> RunConfig:
    """Strict parse of a JSON or YAML run configuration."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    settings = settings if settings is not None else load_settings()
    defaults = {
        "steps": default_value(settings, "steps", 2000),
        "samples": default_value(settings, "samples", 200),
        "validation_resolution": default_value(settings, "validation_resolution", "1/1024"),
        "external_budget": default_value(settings, "external_budget", DEFAULT_EXTERNAL_BUDGET),
        "isolation_depth": default_value(settings, "isolation_depth", 256),
    }
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ParseError(f"malformed config: {getattr(e, 'problem', e)}",
                         None if mark is None else mark.line + 1) from e
    if root is None:
        raise ParseError("empty config")

    reader = _Reader(Path(base_dir) if base_dir else get_base_dir())
    e = reader.mapping(root, "", {"mode", "builder", "sigma", "steps", "samples", "point",
                                  "caps", "output", "logging"})

    caps = Caps(**{k: default_value(settings, k, v) for k, v in vars(Caps()).items()})
    if "caps" in e:
        cap_entries = reader.mapping(e["caps"], "caps", set(vars(caps)))
        for key, node in cap_entries.items():
            setattr(caps, key, reader.natural(node, f"caps.{key}"))
    defaults["isolation_depth"] = caps.isolation_depth

    config = RunConfig(
        mode=reader.string(e["mode"], "mode") if "mode" in e else None,
        steps=reader.natural(e["steps"], "steps") if "steps" in e else defaults["steps"],
        samples=reader.natural(e["samples"], "samples") if "samples" in e else defaults["samples"],
        point=reader.rational(e["point"], "point") if "point" in e else None,
        caps=caps,
    )
    if config.mode is not None and config.mode not in MODES:
        raise ConfigValidationError(f"unknown mode {config.mode!r}; use one of {', '.join(MODES)}")
    if "builder" in e:
        config.builder = _builder_section(reader, e["builder"], defaults)
    if "sigma" in e:
        config.sigma = _sigma_section(reader, e["sigma"], caps.chain_depth)
    if "output" in e:
        out = reader.mapping(e["output"], "output", {"path", "format"})
        if "path" in out:
            config.output_path = reader.string(out["path"], "output.path")
        if "format" in out:
            config.output_format = reader.string(out["format"], "output.format")
            if config.output_format not in FORMATS:
                raise ParseError(f"format must be one of {', '.join(FORMATS)}",
                                 reader._line(out["format"]), "output.format")
    if "logging" in e:
        log = reader.mapping(e["logging"], "logging", {"level"})
        if "level" in log:
            config.log_level = reader.string(log["level"], "logging.level")
    if config.builder is None and config.sigma is None:
        raise ConfigValidationError("config needs a 'builder' or a 'sigma' section")
    logging.debug(f"Parsed run config: mode={config.mode}, steps={config.steps}")
    return config


def load_run_config(config_path, settings=None) -> RunConfig:
    path = Path(config_path)
    if not path.exists():
        raise ConfigValidationError(f"config file {config_path} does not exist")
    with open(path, "rb") as f:
        return parse_config(f.read(), base_dir=path.resolve().parent, settings=settings)
