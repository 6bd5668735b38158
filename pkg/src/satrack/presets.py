"""Named experiment presets and their parameter sweeps.

A preset is a set of config overrides plus sweep axes.  Each axis is an
ordered list of labelled override bundles; the sweep is their cartesian
product, enumerated with the first axis varying slowest.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any

from .config import ScenarioConfig

Overrides = tuple[tuple[str, Any], ...]


@dataclass(frozen=True)
class Axis:
    name: str
    levels: tuple[tuple[str, Overrides], ...]  # (label, overrides)

    @classmethod
    def over(cls, name: str, key: str, values) -> "Axis":
        return cls(name, tuple((str(v), ((key, v),)) for v in values))


@dataclass(frozen=True)
class Variant:
    id: str
    labels: tuple[tuple[str, str], ...]
    config: ScenarioConfig


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    overrides: Overrides
    metrics: tuple[str, ...]
    axes: tuple[Axis, ...] = ()

    def variants(self, base: ScenarioConfig | None = None, only: dict[str, list[str]] | None = None) -> list[Variant]:
        """Every sweep point as a fully built config.

        ``only`` restricts axes to the given labels, e.g. ``{"agents": ["2"]}``.
        """
        base = ScenarioConfig() if base is None else base
        cfg0 = base.with_overrides(dict(self.overrides))
        only = only or {}
        unknown = set(only) - {a.name for a in self.axes}
        if unknown:
            raise KeyError(f"preset {self.name} has no axis {sorted(unknown)}")
        level_lists = []
        for axis in self.axes:
            keep = only.get(axis.name)
            levels = [lv for lv in axis.levels if keep is None or lv[0] in keep]
            if not levels:
                raise KeyError(f"axis {axis.name} has no level among {keep}")
            level_lists.append([(axis.name, lv) for lv in levels])
        out = []
        for combo in itertools.product(*level_lists):
            ov: dict[str, Any] = {}
            for _, (_, pairs) in combo:
                ov.update(dict(pairs))
            labels = tuple((name, label) for name, (label, _) in combo)
            vid = "/".join([self.name] + [f"{n}={lab}" for n, lab in labels])
            out.append(Variant(vid, labels, cfg0.with_overrides(ov)))
        return out


_AGENTS_2_5 = Axis.over("agents", "agents.count", [2, 3, 4, 5])
_SEARCH_ONLY = (("tracking.enabled", False), ("targets.count", 0))

PRESETS: dict[str, ExperimentPreset] = {
    p.name: p
    for p in [
        ExperimentPreset(
            "fig5",
            "cooperative search coverage for 2-5 agents at communication ranges 10 m and 50 m",
            _SEARCH_ONLY,
            ("searched_fraction",),
            (_AGENTS_2_5, Axis.over("comm_range", "agents.comm_range", [10.0, 50.0])),
        ),
        ExperimentPreset(
            "fig6",
            "cooperative planning versus random search coverage for 2 and 4 agents",
            _SEARCH_ONLY + (("agents.comm_range", 50.0),),
            ("searched_fraction",),
            (
                Axis.over("policy", "agents.policy", ["cooperative", "random"]),
                Axis.over("agents", "agents.count", [2, 4]),
            ),
        ),
        ExperimentPreset(
            "fig7",
            "OSPA error with 10 targets spawned at the centre, 2-5 agents, ranges 10 m and 50 m",
            (
                ("targets.count", 10),
                ("targets.birth", "center"),
                ("targets.lifetime_mean", 60.0),
            ),
            ("ospa", "tracking_ratio", "searched_fraction"),
            (_AGENTS_2_5, Axis.over("comm_range", "agents.comm_range", [10.0, 50.0])),
        ),
        ExperimentPreset(
            "fig8",
            "coverage of pure search versus search-and-track with 10 targets, 2-5 agents",
            (("agents.comm_range", 50.0), ("targets.lifetime_mean", 60.0)),
            ("searched_fraction", "ospa", "tracking_ratio"),
            (
                Axis(
                    "task",
                    (
                        ("search", _SEARCH_ONLY),
                        ("sat", (("targets.count", 10),)),
                    ),
                ),
                _AGENTS_2_5,
            ),
        ),
        ExperimentPreset(
            "fig10a",
            "tracking-time ratio with 20 short-lived targets for 2-10 agents, ranges 20 m and 40 m",
            (
                ("targets.count", 20),
                ("targets.lifetime_mean", 30.0),
                ("targets.birth_window", 70),
            ),
            ("tracking_ratio", "ospa", "searched_fraction"),
            (
                Axis.over("comm_range", "agents.comm_range", [20.0, 40.0]),
                Axis.over("agents", "agents.count", [2, 4, 6, 8, 10]),
            ),
        ),
        ExperimentPreset(
            "fig10b",
            "tracking ratio and coverage with and without overlap detection, 15 targets, 5 agents",
            (
                ("targets.count", 15),
                ("targets.lifetime_mean", 30.0),
                ("targets.birth_window", 70),
                ("agents.count", 5),
                ("agents.comm_range", 20.0),
            ),
            ("tracking_ratio", "searched_fraction", "ospa"),
            (Axis.over("overlap", "overlap.enabled", [True, False]),),
        ),
    ]
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def list_presets() -> str:
    width = max(len(n) for n in PRESETS)
    return "\n".join(f"{n:<{width}}  {p.description}" for n, p in PRESETS.items())
