"""Epoch-based scenario engine: requests, allocation, timeline scheduling, execution and tracking."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..concurrency import (
    BlockChoice,
    CombinationLeaf,
    LeafEvaluator,
    Mode,
    feasible_blocks,
    mcts_search,
    singleton_leaf,
)
from ..errors import ConfigurationError
from ..models import Emcon, Environment, TaskSpec, measurement_sigmas, snr
from ..qram import DEFAULT_WEIGHTS, Allocation
from .metrics import EpochRecord, MetricsSeries, scan_epoch
from .scenario import RunConfig, Template
from .tracker import Track, init_track, polar_covariance, predict, process_covariance, transition, update

RESTRICTED = ("radar", "ea")  # categories silenced by EMCON BRAVO
_TOL = 1e-9


@dataclass(frozen=True)
class TimelineEntry:
    start: float  # s from epoch start
    duration: float  # s
    element_offset: float
    element_fraction: float
    task_ids: tuple[str, ...]
    task_types: tuple[str, ...]
    transmit: bool
    radar: bool  # radar or EA emission
    duty: float
    block: int

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass
class Request:
    id: str
    template: Template
    aim: str
    t_start: float
    progress: float = 0.0  # s of full-share execution
    executions: int = 0

    def active(self, t: float) -> bool:
        tpl = self.template
        if tpl.period is None:
            return True
        return (t - self.t_start) % tpl.period < (tpl.active_for if tpl.active_for is not None else tpl.period) - _TOL


@dataclass
class EpochResult:
    t: float
    emcon: Emcon
    leaf: CombinationLeaf | None
    allocation: Allocation | None
    blocks: tuple[BlockChoice, ...]
    entries: tuple[TimelineEntry, ...]
    dropped: tuple[str, ...]
    utilities: dict[str, tuple[str, float]]  # request id -> (task type, realised utility)
    track_errors: dict[str, float]
    predicted_utility: float
    sar_active: bool

    def record(self) -> EpochRecord:
        return EpochRecord(self.t, self.emcon, self.entries, self.dropped)


@dataclass
class ScenarioState:
    t: float
    step: int
    seed: int
    platform_offset: np.ndarray
    target_offsets: dict[str, np.ndarray]
    deviations: dict[str, np.ndarray]  # truth departure from the nominal legs, [x, vx, y, vy]
    events: list  # (jittered time, event), time ordered
    next_event: int = 0
    requests: dict[str, Request] = field(default_factory=dict)
    tracks: dict[str, Track] = field(default_factory=dict)
    emcon: Emcon = Emcon.NONE
    rng_truth: np.random.Generator | None = None
    rng_meas: np.random.Generator | None = None
    completed: dict[str, float] = field(default_factory=dict)  # request id -> completion time
    stretch: dict[str, float] = field(default_factory=dict)  # s beyond the nominal dwell

    def platform(self, config: RunConfig) -> tuple[np.ndarray, np.ndarray]:
        return config.scenario.platform.kinematics(self.t, self.platform_offset)

    def truth(self, config: RunConfig, name: str) -> tuple[np.ndarray, np.ndarray]:
        pos, vel = config.scenario.target(name).kinematics(self.t, self.target_offsets[name])
        d = self.deviations[name]
        return pos + d[[0, 2]], vel + d[[1, 3]]


def initial_state(config: RunConfig, seed: int) -> ScenarioState:
    """Draw the randomised starting points and event timings of one run."""
    sc = config.scenario
    setup, truth, meas = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))
    platform_offset = setup.uniform(-sc.start_offset, sc.start_offset, 2)
    offsets = {tgt.name: setup.uniform(-sc.start_offset, sc.start_offset, 2) for tgt in sc.targets}
    jitter = setup.uniform(-sc.time_jitter, sc.time_jitter, len(sc.events))
    timed = []
    for k, (ev, j) in enumerate(zip(sc.events, jitter)):
        t = ev.t + j if ev.jitter and ev.t > 0 else ev.t
        timed.append((min(max(t, 0.0), sc.duration), k, ev))
    timed.sort(key=lambda x: (x[0], x[1]))
    return ScenarioState(
        t=0.0,
        step=0,
        seed=seed,
        platform_offset=platform_offset,
        target_offsets=offsets,
        deviations={tgt.name: np.zeros(4) for tgt in sc.targets},
        events=[(t, ev) for t, _, ev in timed],
        rng_truth=truth,
        rng_meas=meas,
    )


# --------------------------------------------------------------------------
# Storyboard
# --------------------------------------------------------------------------

def _apply_events(state: ScenarioState, config: RunConfig) -> None:
    sc = config.scenario
    while state.next_event < len(state.events) and state.events[state.next_event][0] <= state.t + _TOL:
        t_ev, ev = state.events[state.next_event]
        state.next_event += 1
        if ev.action == "emcon":
            state.emcon = ev.level
        elif ev.action == "request":
            tpl = sc.templates[ev.template]
            aim = ev.aim or tpl.aim
            rid = ev.request_id or (f"{tpl.name}:{aim}" if ev.aim else tpl.name)
            if rid in state.requests:
                continue
            state.requests[rid] = Request(rid, tpl, aim, state.t)
            if tpl.task_type == "track" and aim not in state.tracks:
                pos, vel = state.truth(config, aim)
                rng = state.rng_meas
                sp, sv = sc.initial_track_error / math.sqrt(2), sc.initial_velocity_error / math.sqrt(2)
                state.tracks[aim] = init_track(
                    pos + rng.normal(0, sp, 2), vel + rng.normal(0, sv, 2), sp, sv,
                    sc.target(aim).process_noise, state.t,
                )
        elif ev.action == "cancel":
            for rid in [r for r, req in state.requests.items() if r == ev.request_id or (ev.request_id is None and req.template.name == ev.template)]:
                req = state.requests.pop(rid)
                if req.template.task_type == "track":
                    state.tracks.pop(req.aim, None)


# --------------------------------------------------------------------------
# Task construction
# --------------------------------------------------------------------------

_SPECS: dict = {}


def _spec(req: Request) -> TaskSpec:
    key = (req.id, req.template)
    spec = _SPECS.get(key)
    if spec is None:
        tpl = req.template
        spec = TaskSpec(req.id, tpl.task_type, tpl.grid, tpl.weight, tpl.priority, 0.0, tpl.band)
        if len(_SPECS) > 1024:
            _SPECS.clear()
        _SPECS[key] = spec
    return spec


def _geometry(state: ScenarioState, config: RunConfig, aim: str, estimate: bool):
    """Relative position and velocity of the aim point as seen from the platform."""
    p_pos, p_vel = state.platform(config)
    sc = config.scenario
    if aim in state.deviations:
        track = state.tracks.get(aim)
        if estimate and track is not None:
            pos, vel = track.position, track.velocity
        else:
            pos, vel = state.truth(config, aim)
    else:
        pos, vel = np.asarray(sc.points[aim], dtype=float), np.zeros(2)
    rel = pos - p_pos
    rng = max(float(np.hypot(rel[0], rel[1])), 1.0)
    bearing = math.atan2(rel[1], rel[0])
    radial = float(np.dot(vel - p_vel, rel) / rng)
    return rng, bearing, radial


def _environment(state: ScenarioState, config: RunConfig, req: Request, estimate: bool = True) -> tuple[Environment, float]:
    rng, bearing, radial = _geometry(state, config, req.aim, estimate)
    kwargs = {}
    if req.aim in state.deviations:
        tgt = config.scenario.target(req.aim)
        kwargs = dict(target_priority=tgt.priority, process_noise=tgt.process_noise, rcs=tgt.rcs)
        track = state.tracks.get(req.aim)
        if estimate and req.template.task_type == "track" and track is not None:
            kwargs["coast_error"] = track.coast_rms(config.epoch)
    env = Environment(target_range=rng, radial_velocity=radial, system=config.system, mission=config.mission, **kwargs)
    return env, bearing


# --------------------------------------------------------------------------
# Scheduling
# --------------------------------------------------------------------------

def schedule_timeline(
    blocks: Sequence[BlockChoice],
    tasks: Sequence[TaskSpec],
    epoch: float,
    weights=DEFAULT_WEIGHTS,
    models=None,
) -> tuple[list[TimelineEntry], list[BlockChoice]]:
    """First-fit placement of allocated blocks on the epoch timeline.

    Blocks are placed back to back in decreasing utility per compound
    resource. A multioperation block is one slice with its members side by
    side on disjoint element ranges; an interleaved block is a run of
    consecutive whole-aperture slices; a multifunction block is one slice on
    the whole aperture. Returns the entries and the blocks that did not fit.
    """
    from ..models import DEFAULT_MODELS

    models = models or DEFAULT_MODELS
    w = np.asarray(weights, dtype=float)

    def ratio(b: BlockChoice) -> float:
        h = float(np.asarray(b.resources) @ w)
        return b.utility / h if h > 0 else math.inf

    order = sorted(range(len(blocks)), key=lambda i: (-ratio(blocks[i]), i))
    entries: list[TimelineEntry] = []
    dropped: list[BlockChoice] = []
    cursor = 0.0
    for i in order:
        b = blocks[i]
        length = float(b.resources[1]) * epoch
        if cursor + length > epoch * (1.0 + _TOL):
            dropped.append(b)
            continue
        info = []
        for m in b.members:
            spec = tasks[m.task]
            model = models[spec.task_type]
            duty = float(m.config.get("prf", 0.0) * m.config.get("tau", 0.0)) if model.transmits else 0.0
            info.append((spec.name, spec.task_type, model.transmits, model.category in RESTRICTED, duty))
        if b.mode is Mode.MULTIFUNCTION:
            entries.append(TimelineEntry(
                cursor, length, 0.0, 1.0,
                tuple(x[0] for x in info), tuple(x[1] for x in info),
                any(x[2] for x in info), any(x[3] for x in info), max(x[4] for x in info), i,
            ))
        elif b.mode is Mode.MULTIOPERATION:
            offset = 0.0
            for m, (name, kind, tx, radar, duty) in zip(b.members, info):
                e = float(m.resources[0])
                entries.append(TimelineEntry(cursor, float(m.resources[1]) * epoch, offset, e, (name,), (kind,), tx, radar, duty, i))
                offset += e
        else:  # singleton or interleaved: consecutive whole-aperture slices
            sub = cursor
            for m, (name, kind, tx, radar, duty) in zip(b.members, info):
                d = float(m.resources[1]) * epoch
                entries.append(TimelineEntry(sub, d, 0.0, float(m.resources[0]), (name,), (kind,), tx, radar, duty, i))
                sub += d
        cursor += length
    entries.sort(key=lambda e: (e.start, e.element_offset))
    return entries, dropped


# --------------------------------------------------------------------------
# Epoch step
# --------------------------------------------------------------------------

def _allocate(tasks, envs, config: RunConfig, state: ScenarioState):
    n = len(tasks)
    evaluator = LeafEvaluator(
        tasks, envs, config.bounds, rule=config.rule, models=config.models,
        weights=config.weights, composition=config.composition, thinning=config.thinning,
    )
    base = singleton_leaf(n)
    if config.mode is Mode.STANDARD:
        leaf = base
        allocation, utility = evaluator.evaluate(leaf)
    else:
        blocks = feasible_blocks(tasks, config.rule, config.models)
        if len(blocks) == n:
            leaf = base
            allocation, utility = evaluator.evaluate(leaf)
        else:
            result = mcts_search(
                tasks, config.rule, iterations=config.mcts_iterations, exploration_c=config.exploration_c,
                seed=(state.seed * 1_000_003 + state.step) % 2**32, evaluator=evaluator, blocks=blocks,
                initial=[base],
            )
            leaf, allocation, utility = result.leaf, result.allocation, result.utility
    return leaf, allocation, utility, evaluator.decode(leaf, allocation)


def _measure(state: ScenarioState, config: RunConfig, req: Request, cfg, penalty_db: float, factor: float) -> bool:
    """Draw one measurement of the target truth and update its track; False on a miss."""
    env, bearing = _environment(state, config, req, estimate=False)
    s = snr(cfg, env, penalty_db)
    if s < config.system.detection_floor_db:
        return False
    sig_r, sig_az, _ = measurement_sigmas(cfg, env, s)
    sig_r, sig_az = float(sig_r) / factor, float(sig_az) / factor
    pos, _ = state.truth(config, req.aim)
    c, si = math.cos(bearing), math.sin(bearing)
    n_r, n_c = state.rng_meas.normal(0.0, 1.0, 2)
    z = pos + np.array([c, si]) * sig_r * n_r + np.array([-si, c]) * sig_az * n_c
    update(state.tracks[req.aim], z, polar_covariance(sig_r, sig_az, bearing))
    return True


def step_epoch(state: ScenarioState, config: RunConfig) -> tuple[ScenarioState, EpochResult]:
    """Advance the scenario by one allocation epoch.

    Storyboard events due by the epoch start are applied, tracks are predicted
    to the epoch start (their errors are the ones recorded for this epoch),
    the admissible requests are allocated, scheduled and executed, and the
    truth is moved on by one epoch. ``state`` is updated in place and returned.
    """
    sc, epoch, system = config.scenario, config.epoch, config.system
    _apply_events(state, config)

    errors = {}
    for name, track in state.tracks.items():
        predict(track, state.t)
        pos, _ = state.truth(config, name)
        errors[name] = min(float(np.hypot(*(track.position - pos))), system.error_cap)

    active = [r for r in state.requests.values() if r.active(state.t)]
    if state.emcon is Emcon.BRAVO:
        active = [r for r in active if config.models[r.template.task_type].category not in RESTRICTED]
    tasks, envs = [], []
    for req in active:
        env, bearing = _environment(state, config, req)
        tasks.append(_spec(req).pointed(bearing))
        envs.append(env)

    leaf = allocation = None
    blocks: list[BlockChoice] = []
    predicted = 0.0
    if tasks:
        leaf, allocation, predicted, blocks = _allocate(tasks, envs, config, state)
    entries, dropped = schedule_timeline(blocks, tasks, epoch, config.weights, config.models)
    dropped_ids = {id(b) for b in dropped}

    utilities: dict[str, tuple[str, float]] = {}
    for b in blocks:
        if id(b) in dropped_ids:
            continue
        combined = len(b.members) > 1
        penalty = config.composition.isolation_db if combined and b.mode is Mode.MULTIOPERATION else 0.0
        factor = config.composition.multifunction_factor if combined and b.mode is Mode.MULTIFUNCTION else 1.0
        for m in b.members:
            req = active[m.task]
            req.executions += 1
            kind = req.template.task_type
            if kind == "track":
                _measure(state, config, req, m.config, penalty, factor)
                continue
            if kind == "sar" or req.template.dwell is not None:
                req.progress += m.config.get("share", 1.0) * epoch
            utilities[req.id] = (kind, m.utility)

    # realised tracking value follows the actual error of every requested track
    model = config.models["track"]
    for req in state.requests.values():
        if req.template.task_type == "track" and req.aim in errors:
            env, _ = _environment(state, config, req)
            u = req.template.weight * model.weight(env) * -math.expm1(-model.p("beta") / max(errors[req.aim], 1e-9))
            utilities[req.id] = ("track", u)

    sar_active = any(r.template.task_type == "sar" for r in state.requests.values())
    for req in list(state.requests.values()):
        dwell = req.template.dwell
        if dwell is not None and req.progress >= dwell - _TOL:
            done = state.t + epoch
            state.completed[req.id] = done
            state.stretch[req.id] = max(done - req.t_start - dwell, 0.0)
            del state.requests[req.id]

    result = EpochResult(
        t=state.t,
        emcon=state.emcon,
        leaf=leaf,
        allocation=allocation,
        blocks=tuple(blocks),
        entries=tuple(entries),
        dropped=tuple(tasks[m.task].name for b in dropped for m in b.members),
        utilities=utilities,
        track_errors=errors,
        predicted_utility=float(predicted),
        sar_active=sar_active,
    )

    # truth moves on; every target draws its noise every epoch so all modes see the same truth
    f = transition(epoch)
    for tgt in sc.targets:
        q = process_covariance(tgt.truth_noise, epoch)
        noise = state.rng_truth.multivariate_normal(np.zeros(4), q, method="cholesky") if tgt.truth_noise > 0 else np.zeros(4)
        state.deviations[tgt.name] = f @ state.deviations[tgt.name] + noise
    state.t = (state.step + 1) * epoch
    state.step += 1
    return state, result


def run_scenario(config: RunConfig, seed: int, *, run_id: int | str | None = None, keep_log: bool = True) -> MetricsSeries:
    """Run every epoch of the scenario for one seed."""
    issues = config.scenario.check(config.models)
    if issues:
        raise ConfigurationError("; ".join(issues))
    state = initial_state(config, seed)
    n = int(math.floor(config.scenario.duration / config.epoch + _TOL))
    types = tuple(config.models)
    t = np.empty(n)
    err_mean = np.full(n, np.nan)
    per_target = {tgt.name: np.full(n, np.nan) for tgt in config.scenario.targets}
    util = {k: np.zeros(n) for k in types}
    sar = np.zeros(n, dtype=bool)
    predicted = np.zeros(n)
    health = {"drops": 0, "element_violations": 0, "duty_violations": 0, "time_violations": 0, "emcon_violations": 0}
    log = [] if keep_log else None
    for k in range(n):
        state, res = step_epoch(state, config)
        t[k] = res.t
        if res.track_errors:
            err_mean[k] = float(np.mean(list(res.track_errors.values())))
            for name, e in res.track_errors.items():
                per_target[name][k] = e
        for kind, u in res.utilities.values():
            util[kind][k] += u
        sar[k] = res.sar_active
        predicted[k] = res.predicted_utility
        record = res.record()
        for key, v in scan_epoch(record, config.epoch, config.system.duty_limit).items():
            health[key] += v
        if log is not None:
            log.append(record)
    total = np.sum([util[k] for k in types], axis=0) if types else np.zeros(n)
    return MetricsSeries(
        run_id=seed if run_id is None else run_id,
        mode=config.mode.value,
        seed=seed,
        t=t,
        track_error_mean=err_mean,
        track_errors=per_target,
        utility_by_type=util,
        utility_total=total,
        predicted_utility=predicted,
        sar_active=sar,
        sar_stretch=float(sum(state.stretch.values())),
        health=health,
        log=log,
    )
