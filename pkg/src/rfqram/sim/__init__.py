"""Desk-scale scenario simulator."""
from .engine import (
    EpochResult,
    Request,
    ScenarioState,
    TimelineEntry,
    initial_state,
    run_scenario,
    schedule_timeline,
    step_epoch,
)
from .metrics import EpochRecord, MetricsSeries, aggregate_runs, box_stats, scan_epoch, scan_safety
from .scenario import Event, Leg, Mover, RunConfig, Scenario, Target, Template
from .tracker import Track, init_track, predict, update, update_tracks
