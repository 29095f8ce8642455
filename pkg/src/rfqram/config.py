"""YAML run configuration: parsing with line numbers, validation and conversion to a RunConfig.

The same checks back ``rfqram validate`` and ``rfqram run``, so any file one
accepts the other accepts too.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from .concurrency import CombinationRule, Mode
from .errors import ConfigurationError
from .models import MODEL_TYPES, Calibration, CompositionParams, Emcon, MissionParams, ModelSet, SystemParams, TaskSpec
from .qram import config_arrays
from .sim.scenario import Event, Leg, Mover, RunConfig, Scenario, Target, Template

SCHEMA_VERSION = 1
REFERENCE_CONFIG = Path(__file__).with_name("data") / "reference.yaml"


# --------------------------------------------------------------------------
# YAML with source lines
# --------------------------------------------------------------------------

class LocatedDict(dict):
    line: int | None = None

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.lines: dict = {}

    def line_of(self, key) -> int | None:
        return self.lines.get(key, self.line)


class LocatedList(list):
    line: int | None = None

    def __init__(self, *args):
        super().__init__(*args)
        self.lines: list = []

    def line_of(self, index: int) -> int | None:
        return self.lines[index] if index < len(self.lines) else self.line


class _Loader(yaml.SafeLoader):
    pass


def _mapping(loader: _Loader, node):
    loader.flatten_mapping(node)
    out = LocatedDict()
    out.line = node.start_mark.line + 1
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        line = key_node.start_mark.line + 1
        if key in out:
            loader.duplicates.append((line, key))
        out[key] = loader.construct_object(value_node, deep=True)
        out.lines[key] = line
    return out


def _sequence(loader: _Loader, node):
    out = LocatedList(loader.construct_object(child, deep=True) for child in node.value)
    out.line = node.start_mark.line + 1
    out.lines = [child.start_mark.line + 1 for child in node.value]
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _sequence)


@dataclass(frozen=True)
class Issue:
    line: int | None
    message: str
    severity: str = "error"  # error | warning

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{where}{self.severity}: {self.message}"


def parse_yaml(text: str) -> tuple[Any, list[Issue]]:
    loader = _Loader(text)
    loader.duplicates = []
    try:
        data = loader.get_single_data()
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        return None, [Issue(mark.line + 1 if mark else None, f"YAML syntax: {exc.problem or exc}")]
    except yaml.YAMLError as exc:
        return None, [Issue(None, f"YAML syntax: {exc}")]
    finally:
        loader.dispose()
    return data, [Issue(line, f"duplicate key {key!r}") for line, key in loader.duplicates]


# --------------------------------------------------------------------------
# Typed reading with diagnostics
# --------------------------------------------------------------------------

_MISSING = object()


class _Reader:
    def __init__(self):
        self.issues: list[Issue] = []

    def error(self, line, message):
        self.issues.append(Issue(line, message))

    def warn(self, line, message):
        self.issues.append(Issue(line, message, "warning"))

    def section(self, parent: dict, key: str, allowed: tuple[str, ...] | None = None, required: bool = False) -> LocatedDict:
        val = parent.get(key, _MISSING)
        if val is _MISSING or val is None:
            if required:
                self.error(getattr(parent, "line", None), f"missing section {key!r}")
            out = LocatedDict()
            out.line = getattr(parent, "line", None)
            return out
        if not isinstance(val, dict):
            self.error(_line(parent, key), f"{key!r} must be a mapping")
            out = LocatedDict()
            out.line = _line(parent, key)
            return out
        if allowed is not None:
            self.unknown(val, allowed, key)
        return val

    def unknown(self, mapping: dict, allowed, where: str):
        for k in mapping:
            if k not in allowed:
                self.error(_line(mapping, k), f"unknown key {k!r} in {where} (allowed: {', '.join(allowed)})")

    def number(self, mapping: dict, key, default=_MISSING, *, minimum=None, positive=False, integer=False, where=""):
        val = mapping.get(key, _MISSING)
        if val is _MISSING:
            if default is _MISSING:
                self.error(getattr(mapping, "line", None), f"missing {where}{key!r}")
                return None
            return default
        num = _to_number(val)
        if num is None:
            self.error(_line(mapping, key), f"{where}{key!r} must be a number, got {val!r}")
            return default if default is not _MISSING else None
        if integer:
            if num != int(num):
                self.error(_line(mapping, key), f"{where}{key!r} must be an integer")
            num = int(num)
        if positive and not num > 0:
            self.error(_line(mapping, key), f"{where}{key!r} must be positive")
        if minimum is not None and num < minimum:
            self.error(_line(mapping, key), f"{where}{key!r} must be at least {minimum}")
        return num

    def vector(self, mapping: dict, key, length: int, default=_MISSING, where=""):
        val = mapping.get(key, _MISSING)
        if val is _MISSING:
            if default is _MISSING:
                self.error(getattr(mapping, "line", None), f"missing {where}{key!r}")
                return None
            return default
        nums = [_to_number(v) for v in val] if isinstance(val, list) else None
        if nums is None or len(nums) != length or any(n is None for n in nums):
            self.error(_line(mapping, key), f"{where}{key!r} must be a list of {length} numbers")
            return default if default is not _MISSING else None
        return tuple(float(n) for n in nums)


def _line(mapping, key):
    return mapping.line_of(key) if hasattr(mapping, "line_of") else None


def _to_number(val):
    if isinstance(val, bool):
        return None
    if isinstance(val, (int, float)):
        return val
    if isinstance(val, str):
        # YAML 1.1 leaves forms such as 1e-5 as strings
        try:
            return float(val)
        except ValueError:
            return None
    return None


# --------------------------------------------------------------------------
# Building the run configuration
# --------------------------------------------------------------------------

_TOP = ("version", "system", "mission", "allocation", "concurrency", "composition", "models", "scenario", "templates", "storyboard", "run")
_SYSTEM = tuple(f.name for f in fields(SystemParams))
_TEMPLATE = ("type", "grid", "weight", "priority", "aim", "band", "dwell", "period", "active_for")


@dataclass
class LoadedConfig:
    config: RunConfig | None
    seeds: list[int] = field(default_factory=lambda: [0])
    issues: list[Issue] = field(default_factory=list)
    path: Path | None = None

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]


def _system(r: _Reader, sec: dict) -> SystemParams:
    r.unknown(sec, _SYSTEM, "system")
    kw = {}
    for name in ("duty_limit", "noise_temperature", "element_power", "element_gain", "element_spacing", "epoch", "detection_floor_db", "error_cap"):
        if name in sec:
            kw[name] = float(r.number(sec, name, 1.0, where="system."))
    if "n_elements" in sec:
        kw["n_elements"] = r.number(sec, "n_elements", 256, integer=True, positive=True, where="system.")
    if "calibration" in sec:
        cal = r.section(sec, "calibration", ("config", "range", "snr_db", "rcs"))
        cfg = r.section(cal, "config", ("n_az", "n_el", "n_p", "tau", "wavelength"), required=True)
        kw["calibration"] = Calibration(
            config={k: float(r.number(cfg, k, 1.0, where="calibration.config.")) for k in ("n_az", "n_el", "n_p", "tau", "wavelength")},
            range=float(r.number(cal, "range", 100e3, positive=True, where="calibration.")),
            snr_db=float(r.number(cal, "snr_db", 13.0, where="calibration.")),
            rcs=float(r.number(cal, "rcs", 1.0, positive=True, where="calibration.")),
        )
    try:
        return SystemParams(**kw)
    except (ValueError, TypeError) as exc:
        r.error(sec.line, f"system: {exc}")
        return SystemParams()


def _emcon(r: _Reader, value, line) -> Emcon | None:
    try:
        return Emcon(str(value).upper())
    except ValueError:
        r.error(line, f"unknown EMCON level {value!r} (known: {', '.join(e.value for e in Emcon)})")
        return None


def _mover(r: _Reader, sec: dict, name: str, extra: tuple[str, ...] = ()) -> dict:
    allowed = ("name", "position", "legs") + extra
    r.unknown(sec, allowed, name)
    legs = []
    raw = sec.get("legs", [])
    if not isinstance(raw, list):
        r.error(_line(sec, "legs"), f"{name}.legs must be a list")
        raw = []
    for leg in raw:
        if not isinstance(leg, dict):
            r.error(getattr(raw, "line", None), f"{name}: each leg is a mapping with duration and velocity")
            continue
        r.unknown(leg, ("duration", "velocity"), f"{name} leg")
        legs.append(Leg(float(r.number(leg, "duration", 0.0, minimum=0.0, where="leg.")), r.vector(leg, "velocity", 2, (0.0, 0.0), where="leg.")))
    return dict(position=r.vector(sec, "position", 2, (0.0, 0.0), where=f"{name}."), legs=tuple(legs))


def _scenario(r: _Reader, data: dict) -> Scenario:
    sec = r.section(data, "scenario", ("duration", "randomization", "initial_track_error", "initial_velocity_error", "platform", "targets", "points"), required=True)
    rnd = r.section(sec, "randomization", ("time_jitter", "start_offset"))
    platform = Mover("platform", **_mover(r, r.section(sec, "platform", None, required=True), "platform"))
    targets = []
    names = set()
    raw_targets = sec.get("targets", []) or []
    for i, tgt in enumerate(raw_targets if isinstance(raw_targets, list) else []):
        if not isinstance(tgt, dict) or not isinstance(tgt.get("name"), str):
            r.error(raw_targets.line_of(i) if hasattr(raw_targets, "line_of") else None, "each target needs a name")
            continue
        if tgt["name"] in names:
            r.error(tgt.line, f"duplicate target name {tgt['name']!r}")
        names.add(tgt["name"])
        kw = _mover(r, tgt, f"target {tgt['name']}", ("process_noise", "truth_noise", "rcs", "priority"))
        targets.append(Target(
            tgt["name"], **kw,
            process_noise=float(r.number(tgt, "process_noise", 10.0, minimum=0.0)),
            truth_noise=float(r.number(tgt, "truth_noise", 1.0, minimum=0.0)),
            rcs=float(r.number(tgt, "rcs", 1.0, positive=True)),
            priority=float(r.number(tgt, "priority", 1.0, positive=True)),
        ))
    points = {}
    raw_points = r.section(sec, "points")
    for name in raw_points:
        vec = r.vector(raw_points, name, 2, None, where="point ")
        if vec is not None:
            points[str(name)] = vec
            if name in names:
                r.error(_line(raw_points, name), f"point {name!r} clashes with a target name")
    templates = _templates(r, data)
    events = _storyboard(r, data)
    return Scenario(
        duration=float(r.number(sec, "duration", positive=True, where="scenario.") or 1.0),
        platform=platform,
        targets=tuple(targets),
        points=points,
        templates=templates,
        events=tuple(events),
        time_jitter=float(r.number(rnd, "time_jitter", 5.0, minimum=0.0)),
        start_offset=float(r.number(rnd, "start_offset", 2000.0, minimum=0.0)),
        initial_track_error=float(r.number(sec, "initial_track_error", 300.0, positive=True)),
        initial_velocity_error=float(r.number(sec, "initial_velocity_error", 20.0, positive=True)),
    )


def _templates(r: _Reader, data: dict) -> dict[str, Template]:
    out = {}
    sec = r.section(data, "templates", None, required=True)
    for name, tpl in sec.items():
        if not isinstance(tpl, dict):
            r.error(_line(sec, name), f"template {name!r} must be a mapping")
            continue
        r.unknown(tpl, _TEMPLATE, f"template {name}")
        kind = tpl.get("type")
        if kind not in MODEL_TYPES:
            r.error(_line(tpl, "type"), f"template {name!r}: unknown task type {kind!r} (known: {', '.join(MODEL_TYPES)})")
            continue
        grid = {}
        raw = r.section(tpl, "grid")
        model_cls = MODEL_TYPES[kind]
        for key, values in raw.items():
            if key not in model_cls.grid_keys:
                r.error(_line(raw, key), f"template {name!r}: unknown grid dimension {key!r} for {kind} (allowed: {', '.join(model_cls.grid_keys)})")
                continue
            vals = values if isinstance(values, list) else [values]
            nums = [_to_number(v) for v in vals]
            if not nums:
                r.error(_line(raw, key), f"template {name!r}: grid dimension {key!r} is empty")
            elif any(n is None or not n > 0 for n in nums):
                r.error(_line(raw, key), f"template {name!r}: grid dimension {key!r} needs positive numbers")
            else:
                grid[key] = tuple(float(n) for n in nums)
        band = r.vector(tpl, "band", 2, None) if "band" in tpl else None
        aim = tpl.get("aim")
        out[str(name)] = Template(
            name=str(name),
            task_type=kind,
            grid=grid,
            weight=float(r.number(tpl, "weight", 1.0, minimum=0.0)),
            priority=int(r.number(tpl, "priority", 0, integer=True)),
            aim=None if aim is None else str(aim),
            band=band,
            dwell=None if tpl.get("dwell") is None else float(r.number(tpl, "dwell", 1.0, positive=True)),
            period=None if tpl.get("period") is None else float(r.number(tpl, "period", 1.0, positive=True)),
            active_for=None if tpl.get("active_for") is None else float(r.number(tpl, "active_for", 1.0, positive=True)),
        )
    return out


def _storyboard(r: _Reader, data: dict) -> list[Event]:
    raw = data.get("storyboard", [])
    if raw is None:
        return []
    if not isinstance(raw, list):
        r.error(_line(data, "storyboard"), "storyboard must be a list of events")
        return []
    events = []
    for i, ev in enumerate(raw):
        line = raw.line_of(i) if hasattr(raw, "line_of") else None
        if not isinstance(ev, dict):
            r.error(line, "each storyboard event is a mapping")
            continue
        r.unknown(ev, ("t", "request", "cancel", "emcon", "aim", "id", "jitter"), "storyboard event")
        t = r.number(ev, "t", 0.0, minimum=0.0, where="event ")
        actions = [a for a in ("request", "cancel", "emcon") if a in ev]
        if len(actions) != 1:
            r.error(ev.line, "each event needs exactly one of request, cancel or emcon")
            continue
        action = actions[0]
        jitter = ev.get("jitter", action != "emcon")
        if not isinstance(jitter, bool):
            r.error(_line(ev, "jitter"), "jitter must be true or false")
            jitter = True
        if action == "emcon":
            level = _emcon(r, ev["emcon"], _line(ev, "emcon"))
            if level is None:
                continue
            events.append(Event(float(t), "emcon", level=level, jitter=jitter, line=ev.line))
        elif action == "request":
            events.append(Event(float(t), "request", template=str(ev["request"]), aim=ev.get("aim"), request_id=ev.get("id"), jitter=jitter, line=ev.line))
        else:
            target = str(ev["cancel"])
            events.append(Event(float(t), "cancel", template=target, request_id=ev.get("id", None), jitter=jitter, line=ev.line))
    return events


def build_config(data: Any, *, overrides: dict | None = None) -> LoadedConfig:
    """Convert parsed YAML into a RunConfig, collecting every problem found."""
    r = _Reader()
    if not isinstance(data, dict):
        r.error(None, "configuration must be a mapping at the top level")
        return LoadedConfig(None, issues=r.issues)
    r.unknown(data, _TOP, "the top level")
    version = data.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        r.error(_line(data, "version"), f"unsupported schema version {version!r} (expected {SCHEMA_VERSION})")
    overrides = overrides or {}

    system = _system(r, r.section(data, "system"))
    if overrides.get("epoch") is not None:
        try:
            system = SystemParams(**{**{f.name: getattr(system, f.name) for f in fields(SystemParams)}, "epoch": float(overrides["epoch"])})
        except ValueError as exc:
            r.error(None, f"--epoch: {exc}")

    msec = r.section(data, "mission", ("false_alarm_rate", "volume_sr", "emcon"))
    emcon = _emcon(r, msec.get("emcon", "NONE"), _line(msec, "emcon")) or Emcon.NONE
    mission = MissionParams(
        false_alarm_rate=float(r.number(msec, "false_alarm_rate", 1e-6, positive=True)),
        volume_sr=float(r.number(msec, "volume_sr", 2.0, positive=True)),
        emcon=emcon,
    )

    asec = r.section(data, "allocation", ("weights", "bounds", "thinning"))
    weights = r.vector(asec, "weights", 2, (0.5, 0.5))
    if weights and (min(weights) < 0 or abs(sum(weights) - 1.0) > 1e-9):
        r.error(_line(asec, "weights"), "allocation.weights must be nonnegative and sum to 1")
    bounds = r.vector(asec, "bounds", 2, (8.0, 1.0))
    if bounds and min(bounds) <= 0:
        r.error(_line(asec, "bounds"), "allocation.bounds must be positive")
    thinning = asec.get("thinning", 8)
    if thinning is not None:
        thinning = r.number(asec, "thinning", 8, integer=True, positive=True)

    csec = r.section(data, "concurrency", ("max_group_size", "angle_threshold_deg", "band_overlap_hz", "multifunction_pairs", "multifunction_sector_deg", "mcts_iterations", "exploration_c"))
    pairs = csec.get("multifunction_pairs", [["surveillance", "datalink"]])
    ok_pairs = []
    for i, p in enumerate(pairs if isinstance(pairs, list) else []):
        if not (isinstance(p, list) and len(p) == 2 and all(x in MODEL_TYPES for x in p)):
            r.error(pairs.line_of(i) if hasattr(pairs, "line_of") else None, f"multifunction pair {p!r} must name two known task types")
        else:
            ok_pairs.append(tuple(p))
    rule = CombinationRule(
        mode=Mode.MULTIOPERATION,
        max_group_size=max(1, int(r.number(csec, "max_group_size", 2, integer=True, positive=True))),
        angle_threshold=math.radians(float(r.number(csec, "angle_threshold_deg", 5.0, minimum=0.0))),
        band_overlap=float(r.number(csec, "band_overlap_hz", 0.0, minimum=0.0)),
        multifunction_pairs=ok_pairs,
        multifunction_sector=math.radians(float(r.number(csec, "multifunction_sector_deg", 30.0, minimum=0.0))),
    )
    iterations = int(r.number(csec, "mcts_iterations", 40, integer=True, positive=True))
    if overrides.get("mcts_iterations") is not None:
        iterations = int(overrides["mcts_iterations"])
        if iterations < 1:
            r.error(None, "--mcts-iterations must be at least 1")

    comp = r.section(data, "composition", ("multifunction_factor", "isolation_db"))
    composition = CompositionParams(
        multifunction_factor=float(r.number(comp, "multifunction_factor", 0.9, positive=True)),
        isolation_db=float(r.number(comp, "isolation_db", 3.0, minimum=0.0)),
    )

    msec = r.section(data, "models")
    params = {}
    for kind, block in msec.items():
        if kind not in MODEL_TYPES:
            r.error(_line(msec, kind), f"models: unknown task type {kind!r}")
            continue
        if not isinstance(block, dict):
            r.error(_line(msec, kind), f"models.{kind} must be a mapping")
            continue
        known = MODEL_TYPES[kind].defaults
        params[kind] = {}
        for k in block:
            if k not in known:
                r.error(_line(block, k), f"models.{kind}: unknown parameter {k!r} (allowed: {', '.join(known)})")
            else:
                params[kind][k] = float(r.number(block, k, known[k]))
    models = ModelSet(params)

    scenario = _scenario(r, data)

    rsec = r.section(data, "run", ("mode", "seeds"))
    mode_name = overrides.get("mode") or rsec.get("mode", "standard")
    try:
        mode = Mode(str(mode_name).lower())
    except ValueError:
        r.error(_line(rsec, "mode"), f"unknown mode {mode_name!r} (known: {', '.join(m.value for m in Mode)})")
        mode = Mode.STANDARD
    if overrides.get("seeds") is not None:
        seeds = parse_seeds(overrides["seeds"], r, None, "--seeds: ")
    else:
        seeds = parse_seeds(rsec.get("seeds", 1), r, _line(rsec, "seeds"))

    config = RunConfig(
        scenario=scenario, mode=mode, system=system, mission=mission, models=models,
        composition=composition, combination=rule, weights=weights or (0.5, 0.5), bounds=bounds or (8.0, 1.0),
        mcts_iterations=max(iterations, 1), exploration_c=float(r.number(csec, "exploration_c", math.sqrt(2.0), minimum=0.0)),
        thinning=thinning,
    )
    _check_references(r, data, scenario, models)
    _check_feasibility(r, data, scenario, system, models)
    return LoadedConfig(config, seeds, r.issues)


def parse_seeds(value, r: _Reader | None = None, line=None, where: str = "") -> list[int]:
    """``n`` means seeds 0..n-1; a list or comma-separated string is taken literally."""
    def fail(msg):
        msg = where + msg
        if r is None:
            raise ConfigurationError(msg)
        r.error(line, msg)
        return [0]

    if isinstance(value, str):
        parts = [p for p in value.replace(" ", "").split(",") if p]
        if len(parts) == 1 and "," not in value:
            value = parts[0]
            if not value.lstrip("-").isdigit():
                return fail(f"seeds must be a count or a list of integers, got {value!r}")
            n = int(value)
            return list(range(n)) if n >= 1 else fail("seed count must be at least 1")
        if not parts or not all(p.lstrip("-").isdigit() for p in parts):
            return fail(f"seeds must be a count or a list of integers, got {value!r}")
        value = [int(p) for p in parts]
    if isinstance(value, bool):
        return fail("seeds must be a count or a list of integers")
    if isinstance(value, int):
        return list(range(value)) if value >= 1 else fail("seed count must be at least 1")
    if isinstance(value, list):
        if not value or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            return fail("seed list must hold at least one integer")
        if min(value) < 0:
            return fail("seeds must be non-negative")
        if len(set(value)) != len(value):
            return fail("seed list has duplicates")
        return list(value)
    return fail(f"seeds must be a count or a list of integers, got {value!r}")


def _check_references(r: _Reader, data: dict, scenario: Scenario, models: ModelSet):
    names = {t.name for t in scenario.targets}
    sec = data.get("templates") or {}
    for ev in scenario.events:
        if ev.t > scenario.duration:
            r.warn(ev.line, f"event at t={ev.t} s lies after the end of the scenario ({scenario.duration} s)")
    for msg in scenario.check(models):
        line = None
        if msg.startswith("line "):
            head, msg = msg.split(": ", 1)
            line = int(head.split()[1])
        r.error(line, msg)
    for tpl in scenario.templates.values():
        if tpl.task_type in ("track", "hrrp") and tpl.aim is not None and tpl.aim not in names:
            r.error(_line(sec, tpl.name), f"template {tpl.name!r}: {tpl.task_type} must aim at a target")


def _check_feasibility(r: _Reader, data: dict, scenario: Scenario, system: SystemParams, models: ModelSet):
    sec = data.get("templates") or {}
    for tpl in scenario.templates.values():
        spec = TaskSpec(tpl.name, tpl.task_type, tpl.grid)
        try:
            cfg = config_arrays(spec, models, interleaved=True, system=system)
        except ConfigurationError as exc:
            r.error(_line(sec, tpl.name), str(exc))
            continue
        n = len(next(iter(cfg.values()))) if cfg else 0
        if n == 0:
            r.warn(_line(sec, tpl.name), f"template {tpl.name!r}: no feasible configuration besides off (element count or duty cycle {system.duty_limit})")
            continue
        standalone = config_arrays(spec, models, system=system)
        if len(next(iter(standalone.values()))) == 0:
            r.warn(_line(sec, tpl.name), f"template {tpl.name!r}: only interleaved configurations are feasible")


def load_config(path: str | Path, overrides: dict | None = None) -> LoadedConfig:
    """Read and check a configuration file; never raises for content problems."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        return LoadedConfig(None, issues=[Issue(None, f"configuration file not found: {path}")], path=path)
    except OSError as exc:
        return LoadedConfig(None, issues=[Issue(None, f"cannot read {path}: {exc}")], path=path)
    data, issues = parse_yaml(text)
    if data is None and issues:
        return LoadedConfig(None, issues=issues, path=path)
    loaded = build_config(data, overrides=overrides)
    loaded.issues = issues + loaded.issues
    loaded.path = path
    return loaded


def reference_config(mode: Mode | str | None = None, **overrides) -> tuple[RunConfig, list[int]]:
    """The shipped reference scenario."""
    loaded = load_config(REFERENCE_CONFIG, {"mode": None if mode is None else Mode(mode).value, **overrides})
    if loaded.issues:
        raise ConfigurationError("; ".join(map(str, loaded.issues)))
    return loaded.config, loaded.seeds
