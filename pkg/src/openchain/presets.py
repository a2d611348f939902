"""Named figure presets, parameter sweeps and per-run scalar summaries.

Every figure panel maps to exactly one preset. Panels that plot TMI and TLN
of the same run (e.g. fig2c and fig3c) share a configuration; a CSV always
carries both columns. Horizons ``t_max`` are our choices: long enough that
TLN has gone extinct and TMI has settled on the given configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import TrajectoryRecord
from .errors import CatalogError, ConfigError
from .model import MARKOV, ChainConfig, Channel, InitialState

SWEEP_AXES = ("gamma", "Gamma", "n", "N", "delta")
EXTINCTION_TOL = 1e-4
STEADY_WINDOW = 5.0
STEADY_TOL = 1e-6


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    base: ChainConfig
    description: str
    sweep: tuple[str, tuple] | None = None

    def configs(self) -> list[tuple[str, ChainConfig]]:
        """``(label, config)`` pairs; one per sweep value, or the base alone."""
        if self.sweep is None:
            return [(self.name, self.base)]
        axis, values = self.sweep
        return [(f"{self.name}_{axis}={value_label(v)}", apply_axis(self.base, axis, v)) for v in values]


def value_label(v) -> str:
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def apply_axis(base: ChainConfig, axis: str, value) -> ChainConfig:
    if axis == "gamma":
        return base.with_(gamma1=float(value), gamma2=float(value))
    if axis == "Gamma":
        return base.with_(Gamma1=float(value), Gamma2=float(value))
    if axis in ("n", "N"):
        if float(value) != int(value):
            raise ConfigError(f"{axis} must be an integer, got {value}")
        return base.with_(**{axis: int(value)})
    if axis == "delta":
        return base.with_(delta=float(value))
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def sweep_configs(base: ChainConfig, axis: str, values) -> list[ChainConfig]:
    """All derived configs, validated up front (all-or-nothing)."""
    if not values:
        raise ConfigError("sweep needs at least one value")
    return [apply_axis(base, axis, v) for v in values]


# -- catalog -------------------------------------------------------------------

_NEEL = ChainConfig(N=6, n=2, init=InitialState.NEEL, sample_every=20)
_ZEROS = ChainConfig(N=7, n=1, init=InitialState.ALL_ZEROS, sample_every=20)
_GAMMAS = (1.0, 2.0, MARKOV)


def _chain(delta: float) -> dict[str, ExperimentPreset]:
    xx = delta == 0
    label = "XX" if xx else "XXZ"
    neel = _NEEL.with_(delta=delta)
    zeros = _ZEROS.with_(delta=delta)
    # closed runs are cheap; the finer step keeps the density-matrix and
    # state-vector discretizations within 1e-8 of each other over the horizon
    closed = dict(channel=Channel.NONE, Gamma1=0.0, Gamma2=0.0, dt=5e-4, sample_every=40)
    sz = dict(channel=Channel.DEPHASING)
    sm = dict(channel=Channel.DISSIPATION)
    f = (12, 13, 14, 15, 16, 17) if xx else (2, 3, 4, 5, 6, 7)

    runs = {
        "neel_closed": neel.with_(t_max=30.0, **closed),
        "neel_sm": neel.with_(t_max=60.0, **sm),
        "neel_sz": neel.with_(t_max=80.0 if xx else 60.0, **sz),
        "zeros_closed": zeros.with_(t_max=30.0, **closed),
        "zeros_sz": zeros.with_(t_max=120.0, **sz),
        "zeros_sm": zeros.with_(t_max=30.0, **sm),
    }
    out = {}

    def add(name, cfg, desc):
        out[name] = ExperimentPreset(name, cfg, f"{label}: {desc}")

    for panel, what in ((f[0], "TMI"), (f[1], "TLN")):
        add(f"fig{panel}a", runs["neel_closed"], f"{what}, Neel, closed")
        add(f"fig{panel}b", runs["neel_sm"], f"{what}, Neel, sigma^- baths, gamma=5")
        add(f"fig{panel}c", runs["neel_sz"], f"{what}, Neel, sigma^z baths, gamma=5")
    add(f"fig{f[2]}a", runs["zeros_closed"], "TMI, all-zeros, closed")
    add(f"fig{f[2]}b", runs["zeros_closed"], "TLN, all-zeros, closed")
    add(f"fig{f[3]}a", runs["zeros_sz"], "TMI, all-zeros, sigma^z baths")
    add(f"fig{f[3]}b", runs["zeros_sz"], "TLN, all-zeros, sigma^z baths")
    add(f"fig{f[3]}c", runs["zeros_sm"], "TMI, all-zeros, sigma^- baths")
    add(f"fig{f[3]}d", runs["zeros_sm"], "TLN, all-zeros, sigma^- baths")
    for panel, what in ((f[4], "TMI"), (f[5], "TLN")):
        for letter, g in zip("abc", _GAMMAS):
            t_max = {1.0: 150.0, 2.0: 100.0}.get(g, 60.0)
            add(f"fig{panel}{letter}", neel.with_(t_max=t_max, gamma1=g, gamma2=g, **sz),
                f"{what}, Neel, sigma^z baths, gamma={value_label(g)}")
    return out


def _sweep_presets() -> dict[str, ExperimentPreset]:
    sm = _NEEL.with_(channel=Channel.DISSIPATION, t_max=80.0)
    zeros_sz = _ZEROS.with_(channel=Channel.DEPHASING)
    return {
        "fig8": ExperimentPreset("fig8", sm, "XXZ: TMI, Neel, sigma^- baths, gamma sweep", ("gamma", _GAMMAS)),
        "fig9": ExperimentPreset("fig9", sm, "XXZ: TLN, Neel, sigma^- baths, gamma sweep", ("gamma", _GAMMAS)),
        "fig10": ExperimentPreset(
            "fig10", zeros_sz.with_(t_max=200.0), "XXZ: TMI and TLN, all-zeros, sigma^z baths, gamma sweep",
            ("gamma", _GAMMAS),
        ),
        "fig11": ExperimentPreset(
            "fig11", zeros_sz.with_(t_max=200.0), "XXZ: TMI and TLN, all-zeros, sigma^z baths, n sweep",
            ("n", (1, 2, 3)),
        ),
    }


CATALOG: dict[str, ExperimentPreset] = {**_chain(1.0), **_chain(0.0), **_sweep_presets()}


def _sort_key(name: str):
    digits = "".join(ch for ch in name if ch.isdigit())
    return int(digits), name


PRESET_NAMES = tuple(sorted(CATALOG, key=_sort_key))


def get_preset(name: str) -> ExperimentPreset:
    try:
        return CATALOG[name]
    except KeyError:
        raise CatalogError(f"unknown preset {name!r}; valid names: {', '.join(PRESET_NAMES)}") from None


def unique_configs() -> list[ChainConfig]:
    """Every distinct configuration reachable from the catalog."""
    seen: dict[ChainConfig, None] = {}
    for name in PRESET_NAMES:
        for _, cfg in CATALOG[name].configs():
            seen.setdefault(cfg, None)
    return list(seen)


# -- scalar summaries ----------------------------------------------------------


def extinction_time(times: np.ndarray, tln: np.ndarray, tol: float = EXTINCTION_TOL) -> float:
    """First time after the TLN minimum from which ``|TLN| < tol`` holds to the end.

    Returns ``inf`` when TLN is still above ``tol`` at the last sample.
    """
    j = int(np.argmin(tln))
    above = np.flatnonzero(np.abs(tln[j:]) >= tol)
    if above.size == 0:
        return float(times[j])
    k = j + int(above[-1]) + 1
    return float(times[k]) if k < len(times) else math.inf


def negative_duration(times: np.ndarray, tln: np.ndarray, tol: float = EXTINCTION_TOL) -> float:
    """Total time during which ``TLN < -tol`` (sample-count times spacing)."""
    if len(times) < 2:
        return 0.0
    return float(np.count_nonzero(tln < -tol) * (times[1] - times[0]))


def steady_value(times: np.ndarray, x: np.ndarray, window: float = STEADY_WINDOW) -> tuple[float, float]:
    """(mean over the final ``window``, max minus min over that window)."""
    sel = times >= times[-1] - window
    tail = x[sel]
    return float(tail.mean()), float(tail.max() - tail.min())


def summarize(record: TrajectoryRecord) -> dict[str, float | bool]:
    t, tmi, tln = record.times, record["TMI"], record["TLN"]
    steady, spread = steady_value(t, tmi)
    return {
        "min_TMI": float(tmi.min()),
        "t_min_TMI": float(t[int(np.argmin(tmi))]),
        "min_TLN": float(tln.min()),
        "t_min_TLN": float(t[int(np.argmin(tln))]),
        "TLN_extinction": extinction_time(t, tln),
        "TLN_negative_duration": negative_duration(t, tln),
        "steady_TMI": steady,
        "steady_TMI_spread": spread,
        "steady_reached": bool(spread < STEADY_TOL),
        "final_TMI": float(tmi[-1]),
        "final_TLN": float(tln[-1]),
    }


SUMMARY_COLUMNS = (
    "label", "min_TMI", "t_min_TMI", "min_TLN", "t_min_TLN", "TLN_extinction",
    "TLN_negative_duration", "steady_TMI", "steady_TMI_spread", "steady_reached", "final_TMI", "final_TLN",
)
