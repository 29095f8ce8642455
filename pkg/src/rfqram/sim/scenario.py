"""Scenario description: geometry, task templates, storyboard and engine settings."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from ..concurrency import CombinationRule, Mode
from ..errors import ConfigurationError
from ..models import DEFAULT_MODELS, CompositionParams, Emcon, MissionParams, ModelSet, SystemParams

ACTIONS = ("request", "cancel", "emcon")


@dataclass(frozen=True)
class Leg:
    duration: float  # s
    velocity: tuple[float, float]  # m/s


@dataclass(frozen=True)
class Mover:
    """Platform or target flying straight constant-velocity legs; the last leg continues forever."""

    name: str
    position: tuple[float, float]
    legs: tuple[Leg, ...] = ()

    def kinematics(self, t: float, offset=(0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
        pos = np.array(self.position, dtype=float) + np.asarray(offset, dtype=float)
        vel = np.zeros(2)
        elapsed = 0.0
        for leg in self.legs:
            vel = np.array(leg.velocity, dtype=float)
            step = min(leg.duration, t - elapsed)
            if step <= 0:
                break
            pos = pos + vel * step
            elapsed += step
        if self.legs and t > elapsed:
            pos = pos + vel * (t - elapsed)
        return pos, vel


@dataclass(frozen=True)
class Target(Mover):
    process_noise: float = 10.0  # filter intensity, m^2/s^3
    truth_noise: float = 1.0  # intensity of the random acceleration in the truth
    rcs: float = 1.0
    priority: float = 1.0


@dataclass(frozen=True, eq=False)
class Template:
    """A kind of task request. ``aim`` names a target or a fixed point."""

    name: str
    task_type: str
    grid: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    weight: float = 1.0
    priority: int = 0
    aim: str | None = None
    band: tuple[float, float] | None = None
    dwell: float | None = None  # s of full-share execution until the request completes
    period: float | None = None  # recurring: active for ``active_for`` s every ``period`` s
    active_for: float | None = None


@dataclass(frozen=True)
class Event:
    t: float
    action: str
    template: str | None = None
    aim: str | None = None
    request_id: str | None = None
    level: Emcon | None = None
    jitter: bool = True
    line: int | None = None  # source line in the configuration file


@dataclass(frozen=True)
class Scenario:
    duration: float
    platform: Mover
    targets: tuple[Target, ...]
    points: Mapping[str, tuple[float, float]]
    templates: Mapping[str, Template]
    events: tuple[Event, ...]
    time_jitter: float = 5.0  # s, uniform half-width
    start_offset: float = 2000.0  # m, uniform half-width per axis
    initial_track_error: float = 300.0  # m
    initial_velocity_error: float = 20.0  # m/s

    def target(self, name: str) -> Target:
        for tgt in self.targets:
            if tgt.name == name:
                return tgt
        raise ConfigurationError(f"unknown target {name!r}")

    def check(self, models: ModelSet = DEFAULT_MODELS) -> list[str]:
        """Reference problems: unknown templates, aims and task types, unordered events."""
        issues = []
        names = {t.name for t in self.targets}
        for tpl in self.templates.values():
            if tpl.task_type not in models:
                issues.append(f"template {tpl.name!r}: unknown task type {tpl.task_type!r}")
            if tpl.aim is not None and tpl.aim not in names and tpl.aim not in self.points:
                issues.append(f"template {tpl.name!r}: aim {tpl.aim!r} is neither a target nor a point")
        last = -math.inf
        for ev in self.events:
            where = f"line {ev.line}: " if ev.line else ""
            if ev.t < last:
                issues.append(f"{where}event times must be nondecreasing ({ev.t} after {last})")
            last = max(last, ev.t)
            if ev.action not in ACTIONS:
                issues.append(f"{where}unknown action {ev.action!r}")
            elif ev.action == "request":
                tpl = self.templates.get(ev.template)
                if tpl is None:
                    issues.append(f"{where}unknown template {ev.template!r}")
                else:
                    aim = ev.aim or tpl.aim
                    if aim is None:
                        issues.append(f"{where}request of {ev.template!r} has no aim")
                    elif aim not in names and aim not in self.points:
                        issues.append(f"{where}unknown aim {aim!r}")
            elif ev.action == "cancel" and not (ev.request_id or ev.template):
                issues.append(f"{where}cancel needs a request id or template")
            elif ev.action == "emcon" and not isinstance(ev.level, Emcon):
                issues.append(f"{where}unknown EMCON level {ev.level!r}")
        return issues


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs besides the seed.

    ``combination`` carries the grouping parameters; its own mode is ignored
    in favour of ``mode`` so one configuration can be replayed in every mode.
    """

    scenario: Scenario
    mode: Mode = Mode.STANDARD
    system: SystemParams = field(default_factory=SystemParams)
    mission: MissionParams = field(default_factory=MissionParams)
    models: ModelSet = DEFAULT_MODELS
    composition: CompositionParams = field(default_factory=CompositionParams)
    combination: CombinationRule = field(default_factory=lambda: CombinationRule(mode=Mode.MULTIOPERATION))
    weights: tuple[float, float] = (0.5, 0.5)
    bounds: tuple[float, float] = (8.0, 1.0)
    mcts_iterations: int = 40
    exploration_c: float = math.sqrt(2.0)
    thinning: int | None = 8

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def rule(self) -> CombinationRule:
        return replace(self.combination, mode=self.mode)

    @property
    def epoch(self) -> float:
        return self.system.epoch

    def with_mode(self, mode: Mode | str) -> "RunConfig":
        return replace(self, mode=Mode(mode))
