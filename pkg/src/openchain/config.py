"""Flat ``key=value`` run configuration.

One assignment per line, ``#`` starts a comment, blank lines are ignored.
Keys are case sensitive (``Gamma`` is the coupling, ``gamma`` the inverse
memory time). ``Gamma``/``gamma`` set both baths; ``Gamma1``, ``gamma2`` and
so on set one. ``gamma=inf`` (or ``markov``) selects the memoryless limit.
"""

from __future__ import annotations

import math

from .errors import ConfigError, ParseError
from .model import ChainConfig, Channel, InitialState

_INT_KEYS = {"N", "n", "sample_every"}
_FLOAT_KEYS = {"J", "delta", "Gamma1", "Gamma2", "gamma1", "gamma2", "t_max", "dt"}
_PAIRED = {"Gamma": ("Gamma1", "Gamma2"), "gamma": ("gamma1", "gamma2")}
_ALIASES = {"Delta": "delta", "tmax": "t_max"}
KEYS = sorted(_INT_KEYS | _FLOAT_KEYS | set(_PAIRED) | set(_ALIASES) | {"channel", "init"})


def _float(key: str, text: str) -> float:
    low = text.lower()
    if key.startswith("gamma") and low in ("inf", "infinity", "markov"):
        return math.inf
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{key}: cannot parse {text!r} as a number") from None
    if math.isnan(v):
        raise ParseError(f"{key}: NaN is not allowed")
    return v


def _int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{key}: cannot parse {text!r} as an integer") from None


def parse_assignments(pairs: list[tuple[str, str]], base: ChainConfig | None = None) -> ChainConfig:
    """Apply ``(key, value)`` strings on top of ``base`` (defaults when omitted)."""
    values: dict = {}
    seen: set[str] = set()
    for key, text in pairs:
        key = _ALIASES.get(key, key)
        targets = _PAIRED.get(key, (key,))
        for t in targets:
            if t in seen:
                raise ParseError(f"{key}: set more than once")
            seen.add(t)
        if key in _INT_KEYS:
            values[key] = _int(key, text)
        elif key in _FLOAT_KEYS or key in _PAIRED:
            v = _float(key, text)
            for t in targets:
                values[t] = v
        elif key == "channel":
            try:
                values[key] = Channel(text.lower())
            except ValueError:
                raise ParseError(f"channel: {text!r} not one of {[c.value for c in Channel]}") from None
        elif key == "init":
            try:
                values[key] = InitialState(text.lower())
            except ValueError:
                raise ParseError(f"init: {text!r} not one of {[s.value for s in InitialState]}") from None
        else:
            raise ParseError(f"unknown key {key!r}; valid keys: {', '.join(KEYS)}")
    base = base or ChainConfig()
    try:
        return base.with_(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text: str, base: ChainConfig | None = None) -> ChainConfig:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ParseError(f"line {lineno}: empty key or value")
        pairs.append((key, value))
    return parse_assignments(pairs, base)


def format_config(cfg: ChainConfig) -> str:
    """Inverse of ``parse_config`` (round-trips every field)."""
    lines = []
    for key, v in cfg.as_dict().items():
        if isinstance(v, float):
            v = "inf" if math.isinf(v) else repr(v)
        lines.append(f"{key}={v}")
    return "\n".join(lines) + "\n"
