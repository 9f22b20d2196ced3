"""Run configuration: a typed INI-style text format with a canonical form.

Scalars are written as plain values; tuples and nested lists as JSON.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field

from . import __version__
from .cell_solver import SolverParams
from .scenarios import ScenarioSpec
from .stable_norm import DEFAULT_STEPS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunOptions:
    p: tuple = (1.0, 0.0)
    directions: tuple = ()
    n_angles: int = 64
    steps: tuple = DEFAULT_STEPS
    eps: tuple = (0.08, 0.04, 0.02)
    probe_midpoints: bool = False
    out: str = "out"
    cache: bool = True


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    solver: SolverParams = field(default_factory=SolverParams)
    run: RunOptions = field(default_factory=RunOptions)

    # fields that never change numeric results
    UNHASHED: typing.ClassVar = {("run", "out"), ("run", "cache")}

    def to_text(self) -> str:
        lines = []
        for section in ("scenario", "solver", "run"):
            obj = getattr(self, section)
            lines.append(f"[{section}]")
            for f in dataclasses.fields(obj):
                lines.append(f"{f.name} = {_encode(getattr(obj, f.name))}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as err:
            raise ConfigError(str(err)) from err
        unknown = set(cp.sections()) - {"scenario", "solver", "run"}
        if unknown:
            raise ConfigError(f"unknown sections: {sorted(unknown)}")
        parts = {}
        for section, klass in (("scenario", ScenarioSpec), ("solver", SolverParams), ("run", RunOptions)):
            items = dict(cp[section]) if cp.has_section(section) else {}
            parts[section] = _build(klass, items)
        return cls(**parts)

    def replace(self, section: str, **changes) -> "RunConfig":
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})

    def digest(self) -> str:
        lines = []
        for section in ("scenario", "solver", "run"):
            obj = getattr(self, section)
            for f in dataclasses.fields(obj):
                if (section, f.name) not in self.UNHASHED:
                    lines.append(f"{section}.{f.name}={_encode(getattr(obj, f.name))}")
        lines.append(f"version={__version__}")
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def _encode(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (int, str)):
        return str(value)
    if value is None:
        return "none"
    return json.dumps(_plain(value))


def _plain(value):
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, float) and value.is_integer():
        return value
    return value


def _tupleize(value):
    if isinstance(value, list):
        return tuple(_tupleize(v) for v in value)
    return value


def _build(klass, items: dict):
    hints = typing.get_type_hints(klass)
    names = {f.name for f in dataclasses.fields(klass)}
    kwargs = {}
    for key, raw in items.items():
        if key not in names:
            raise ConfigError(f"unknown key {key!r} for {klass.__name__}")
        kwargs[key] = _decode(raw.strip(), hints[key], key)
    try:
        return klass(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err


def _decode(raw: str, hint, key):
    args = typing.get_args(hint)
    optional = type(None) in args
    if optional and raw.lower() == "none":
        return None
    base = next((a for a in args if a is not type(None)), hint) if args else hint
    try:
        if base is bool:
            if raw.lower() not in ("true", "false"):
                raise ValueError(raw)
            return raw.lower() == "true"
        if base is int:
            return int(raw)
        if base is float:
            return float(raw)
        if base is str:
            return raw
        return _tupleize(json.loads(raw))
    except (ValueError, json.JSONDecodeError) as err:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from err
