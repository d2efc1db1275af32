"""System definition files (TOML or JSON) with strict key checking.

    n = 2
    delays = [1.0, 1.0]
    d = [1.0, {constant = 1.0, terms = [{kind = "sin", amplitude = 0.2, frequency = 1.0}]}]
    beta = [2.0, 0.5]
    c = [1.0, 1.0]
    a = [[0.0, 0.0], [0.5, 0.0]]
    nonlinearity = "nicholson"        # or {mackey_glass = 2.0} or "linear"
"""

from __future__ import annotations

import json
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .model import DelaySystem, Nonlinearity
from .signals import QuasiPeriodicSignal

SYSTEM_KEYS = {"n", "delays", "d", "a", "beta", "c", "nonlinearity", "name"}
REQUIRED = {"n", "delays", "d", "a", "beta"}


class ConfigError(ValueError):
    pass


def system_from_dict(data: dict) -> DelaySystem:
    if not isinstance(data, dict):
        raise ConfigError("system document must be a table")
    unknown = set(data) - SYSTEM_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in system file: {sorted(unknown)}")
    missing = REQUIRED - set(data)
    if missing:
        raise ConfigError(f"missing keys in system file: {sorted(missing)}")
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ConfigError("n must be an integer")
    nl = Nonlinearity.from_record(data.get("nonlinearity", "nicholson"))
    if "c" not in data and nl.kind != "linear":
        raise ConfigError("nonlinear systems need c")
    try:
        sig = QuasiPeriodicSignal.from_dict
        return DelaySystem(
            n=n,
            delays=tuple(float(x) for x in data["delays"]),
            d=tuple(sig(x) for x in data["d"]),
            a=tuple(tuple(sig(x) for x in row) for row in data["a"]),
            beta=tuple(sig(x) for x in data["beta"]),
            c=tuple(sig(x) for x in data.get("c", [1.0] * n)),
            nonlinearity=nl,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def system_to_dict(sys: DelaySystem) -> dict:
    return {
        "n": sys.n,
        "delays": list(sys.delays),
        "d": [s.to_dict() for s in sys.d],
        "a": [[s.to_dict() for s in row] for row in sys.a],
        "beta": [s.to_dict() for s in sys.beta],
        "c": [s.to_dict() for s in sys.c],
        "nonlinearity": sys.nonlinearity.to_record(),
    }


def load_system(path) -> DelaySystem:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    else:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return system_from_dict(data)
