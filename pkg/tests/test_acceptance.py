"""The ten acceptance criteria. Each records a one-line verdict that the
terminal summary prints as ``criterion N: PASS|FAIL``."""
import math
import random
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import evaluated_vectors, leaf_count, majorant_ok, random_instance, riccati_prior_variance
from rfqram import Environment, SystemParams
from rfqram.concurrency import Mode, enumerate_leaves, mcts_search
from rfqram.config import reference_config
from rfqram.models import (
    UtilityParams,
    measurement_sigmas,
    snr,
    task_duration,
    track_error_model,
    tracking_quality,
    tracking_resources,
    tracking_utility,
    tracking_weight,
)
from rfqram.models import Emcon
from rfqram.qram import allocate_exact, allocate_greedy, concave_frontier


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)
    assert ok, f"criterion {n}: {detail}"


def all_pair_blocks(n):
    return [(i,) for i in range(n)] + [(i, j) for i in range(n) for j in range(i + 1, n)]


# 1 ---------------------------------------------------------------------------

def _largest_step(frontiers):
    steps = [b.utility - a.utility for f in frontiers for a, b in zip(f.points, f.points[1:])]
    return max(steps, default=0.0)


def _scalar_instance(rng):
    """Exactly concave one-direction instance with dyadic numbers (sums are exact)."""
    tasks, steps = [], []
    for i in range(int(rng.integers(1, 5))):
        while True:
            m = int(rng.integers(1, 6))
            cost = rng.integers(1, 9, m) / 64.0
            gain = rng.integers(1, 65, m) / 16.0
            order = np.argsort(-gain / cost, kind="stable")
            cost, gain = cost[order], gain[order]
            slope = gain / cost
            if np.all(np.diff(slope) < 0):
                break
        c, u = np.cumsum(cost), np.cumsum(gain)
        tasks.append(evaluated_vectors([((x, x), y) for x, y in zip(c, u)]))
        steps += [(-s, i, lvl, dc) for lvl, (s, dc) in enumerate(zip(slope, cost))]
    steps.sort()
    k = int(rng.integers(1, len(steps) + 1))
    budget = math.fsum(s[3] for s in steps[:k])
    return tasks, np.array([budget, budget])


def test_criterion_1_allocator_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    misses = []
    for n in range(200):
        tasks, bounds = random_instance(rng)
        frontiers = [concave_frontier(t, bounds=bounds) for t in tasks]
        greedy = allocate_greedy(frontiers, bounds)
        exact = allocate_exact(tasks, bounds)
        assert np.all(greedy.total_resources <= bounds + 1e-12)
        if greedy.total_utility < exact.total_utility - _largest_step(frontiers) - 1e-9:
            misses.append(n)
    unequal = 0
    for _ in range(200):
        tasks, bounds = _scalar_instance(rng)
        frontiers = [concave_frontier(t, bounds=bounds) for t in tasks]
        # exactly concave input: the unrestricted hull keeps every point
        assert all(len(concave_frontier(t)) == len(t) for t in tasks)
        if allocate_greedy(frontiers, bounds).total_utility != allocate_exact(tasks, bounds).total_utility:
            unequal += 1
    dt = time.perf_counter() - t0
    record(
        1,
        not misses and unequal == 0 and dt < 5.0,
        f"greedy below exact-minus-step on {len(misses)}/200 instances {misses}, "
        f"breakpoint inequalities {unequal}/200, {dt:.2f} s",
    )


# 2 ---------------------------------------------------------------------------

def _point_set(rng):
    """Random cloud; half are drawn on a coarse grid so ties, duplicates,
    collinear runs and zero utilities all occur."""
    m = int(rng.integers(0, 13))
    if rng.random() < 0.5:
        cost = rng.integers(1, 6, (m, 2)) / 4.0
        util = rng.integers(0, 6, m) / 2.0
    else:
        cost = rng.uniform(1e-6, 5.0, (m, 2))
        util = rng.uniform(0.0, 5.0, m)
    return [(tuple(c), float(u)) for c, u in zip(cost, util)]


def _frontier_ok(evs, bounds):
    f = concave_frontier(evs, bounds=bounds)
    p = f.points
    ok = (p[0].compound, p[0].utility, p[0].index) == (0.0, 0.0, 0)
    ok &= all(y.compound > x.compound and y.utility > x.utility for x, y in zip(p, p[1:]))
    slopes = f.slopes()
    ok &= all(s1 > s2 for s1, s2 in zip(slopes, slopes[1:]))
    # hull soundness: exhaustive scan of every input point against the interpolant
    scale = np.ones(2) if bounds is None else bounds
    pts = [(float(np.mean(np.asarray(e.resources) / scale)), e.utility if e.utility >= 1e-12 else 0.0) for e in evs[1:]]
    ok &= majorant_ok(pts, f)
    # every frontier point is an input point
    ok &= all(evs[q.index].utility == q.utility for q in p)
    ok &= concave_frontier(evs, bounds=bounds) == f
    return ok


def test_criterion_2_frontier_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    failures = []
    for n in range(1000):
        evs = evaluated_vectors(_point_set(rng))
        bounds = rng.uniform(0.1, 3.0, 2)
        if not (_frontier_ok(evs, None) and _frontier_ok(evs, bounds)):
            failures.append(n)
    dt = time.perf_counter() - t0
    record(2, not failures and dt < 5.0, f"1000 point sets, {len(failures)} failures {failures[:5]}, {dt:.2f} s")


# 3 ---------------------------------------------------------------------------

def test_criterion_3_formula_conformance():
    rel = 1e-9
    checks = {}
    capped = Environment(target_range=2e6, system=SystemParams(error_cap=500.0))
    cfg = {"n_az": 16, "n_el": 16, "prf": 2000.0, "n_p": 16, "tau": 1e-5, "bandwidth": 5e6, "wavelength": 0.03}
    checks["quality e_t=500 m"] = (float(tracking_quality(cfg, capped, 1.0)["q"]), 0.002)
    small = Environment(target_range=10e3, system=SystemParams(n_elements=32))
    checks["element fraction 4x8 of 32"] = (float(tracking_resources({**cfg, "n_az": 4, "n_el": 8}, small)[0]), 1.0)
    checks["T_task example"] = (float(task_duration(10, 1000.0, 10e-6, 150e3, c=3e8)), 10.01e-3)
    unit = Environment(target_range=1.0, radial_velocity=1.0 + 20e3)
    checks["utility at q=1/500"] = (float(tracking_utility(1 / 500, unit)), 1 - math.exp(-2))
    checks["utility at q=0"] = (float(tracking_utility(0.0, unit)), 0.0)
    heavy = Environment(target_range=100e3, radial_velocity=300.0)
    checks["weight example"] = (float(tracking_weight(heavy, UtilityParams(k_r=20e3))), 0.0025)
    bad = [k for k, (got, want) in checks.items() if not got == pytest.approx(want, rel=rel, abs=1e-300)]
    # affine in pulse count: constant finite difference equal to the PRI
    prf, h = 1700.0, []
    for n in range(2, 40):
        h.append(float(task_duration(n + 1, prf, 1e-5, 40e3) - task_duration(n, prf, 1e-5, 40e3)))
    affine = all(d == pytest.approx(1 / prf, rel=rel) for d in h)
    record(3, not bad and affine, f"{len(checks) - len(bad)}/{len(checks)} worked examples, affine-in-n_p {'ok' if affine else 'FAILED'} {bad}")


# 4 ---------------------------------------------------------------------------

def test_criterion_4_track_error_oracle():
    rng = np.random.default_rng(44)
    worst, n = 0.0, 0
    while n < 100:
        cfg = {
            "n_az": float(rng.choice([8, 16])),
            "n_el": float(rng.choice([8, 16])),
            "prf": float(rng.uniform(500, 5000)),
            "n_p": float(rng.integers(4, 33)),
            "tau": float(rng.uniform(1e-6, 4e-5)),
            "bandwidth": float(rng.uniform(1e6, 2e7)),
            "wavelength": 0.03,
        }
        env = Environment(target_range=float(rng.uniform(10e3, 120e3)), process_noise=float(rng.uniform(0.1, 50.0)))
        dt = float(rng.uniform(0.25, 4.0))
        got = float(track_error_model(cfg, env, dt))
        if got >= env.system.error_cap:
            continue  # lost track: no steady state to compare
        sr, sa, _ = (float(x) for x in measurement_sigmas(cfg, env, snr(cfg, env)))
        want = math.sqrt(riccati_prior_variance(sr, env.process_noise, dt) + riccati_prior_variance(sa, env.process_noise, dt))
        worst = max(worst, abs(got - want) / want)
        n += 1
    record(4, worst <= 1e-6, f"100 draws, worst relative deviation {worst:.2e}")


# 5 ---------------------------------------------------------------------------

def test_criterion_5_tree_counts():
    t0 = time.perf_counter()
    counts = [len(enumerate_leaves(n, blocks=all_pair_blocks(n))) for n in range(1, 6)]
    dt = time.perf_counter() - t0
    expected = [leaf_count(n) for n in range(1, 6)]
    record(5, counts == [1, 2, 4, 10, 26] == expected and dt < 1.0, f"leaf counts {counts}, {dt * 1e3:.1f} ms")


# 6 ---------------------------------------------------------------------------

def test_criterion_6_mcts_convergence():
    t0 = time.perf_counter()
    rates, monotone = {}, True
    for n in range(1, 6):
        blocks = all_pair_blocks(n)
        leaves = enumerate_leaves(n, blocks=blocks)
        hits = 0
        for seed in range(100):
            rnd = random.Random(seed * 7919 + n)
            values = {leaf.groups: rnd.random() for leaf in leaves}
            res = mcts_search(n, iterations=20 * leaf_count(n), seed=seed, evaluate=lambda leaf: (None, values[leaf.groups]), blocks=blocks)
            hits += res.utility == max(values.values())
            monotone &= all(a <= b for a, b in zip(res.history, res.history[1:]))
        rates[n] = hits / 100
    dt = time.perf_counter() - t0
    ok = min(rates.values()) >= 0.95 and monotone and dt < 30.0
    record(6, ok, f"recovery rates {rates}, monotone {monotone}, {dt:.1f} s")


# 7-10: the reference desk scenario ---------------------------------------------------------------

def _stat(runs, mode, attr, fn):
    return float(fn([getattr(s, attr) for s in runs[mode]]))


@pytest.mark.slow
def test_criterion_7_sar_window(reference_runs):
    runs, seconds = reference_runs
    std = _stat(runs, Mode.STANDARD, "sar_window_error", np.mean)
    mo = _stat(runs, Mode.MULTIOPERATION, "sar_window_error", np.mean)
    il = _stat(runs, Mode.INTERLEAVED, "sar_window_error", np.mean)
    wall = seconds[Mode.STANDARD] + seconds[Mode.MULTIOPERATION] + seconds[Mode.INTERLEAVED]
    seeds = {len(v) for v in runs.values()}
    ok = seeds == {25} and std >= 3 * mo and mo < il < std and wall < 300.0
    record(7, ok, f"mean SAR-window error STANDARD {std:.0f} m, INTERLEAVED {il:.0f} m, MULTIOPERATION {mo:.0f} m (ratio {std / mo:.2f}), {wall:.0f} s")


@pytest.mark.slow
def test_criterion_8_total_track_error(reference_runs):
    runs, _ = reference_runs
    std = _stat(runs, Mode.STANDARD, "total_track_error", np.median)
    mo = _stat(runs, Mode.MULTIOPERATION, "total_track_error", np.median)
    record(8, mo <= 0.8 * std, f"median total track error MULTIOPERATION {mo:.1f} m vs STANDARD {std:.1f} m (ratio {mo / std:.2f})")


@pytest.mark.slow
def test_criterion_9_utility_ordering(reference_runs):
    runs, _ = reference_runs
    med = {m: _stat(runs, m, "cumulative_utility", np.median) for m in Mode}
    var = {m: _stat(runs, m, "cumulative_utility", np.var) for m in (Mode.STANDARD, Mode.MULTIFUNCTION)}
    order = med[Mode.MULTIOPERATION] > med[Mode.INTERLEAVED] > max(med[Mode.STANDARD], med[Mode.MULTIFUNCTION])
    ok = order and var[Mode.MULTIFUNCTION] <= var[Mode.STANDARD]
    detail = ", ".join(f"{m.value} {v:.1f}" for m, v in med.items())
    record(9, ok, f"median cumulative utility {detail}; variance MF {var[Mode.MULTIFUNCTION]:.0f} vs STD {var[Mode.STANDARD]:.0f}")


def _scan(log, epoch, duty_limit, emcon_from):
    """Scan written independently of the simulator's own health counters."""
    counts = {"bounds": 0, "duty": 0, "emcon": 0}
    tol = 1e-9
    for rec in log:
        es = rec.entries
        for e in es:
            if e.start < -tol or e.start + e.duration > epoch + tol or e.duration < 0:
                counts["bounds"] += 1
            if e.element_offset < -tol or e.element_offset + e.element_fraction > 1 + tol:
                counts["bounds"] += 1
            if e.transmit and e.duty > duty_limit + 1e-12:
                counts["duty"] += 1
            if e.radar and rec.t >= emcon_from - tol:
                counts["emcon"] += 1
        # busy time may not exceed the epoch
        spans = sorted((e.start, e.start + e.duration) for e in es)
        busy, reach = 0.0, -math.inf
        for a, b in spans:
            a = max(a, reach)
            if b > a:
                busy += b - a
                reach = b
        if busy > epoch + tol:
            counts["bounds"] += 1
        # entries that overlap in time must use disjoint parts of the aperture
        for i, a in enumerate(es):
            for b in es[i + 1:]:
                both_on = min(a.start + a.duration, b.start + b.duration) - max(a.start, b.start) > tol
                shared = min(a.element_offset + a.element_fraction, b.element_offset + b.element_fraction) - max(a.element_offset, b.element_offset) > tol
                if both_on and shared:
                    counts["bounds"] += 1
    return counts


@pytest.mark.slow
def test_criterion_10_safety(reference_runs):
    runs, _ = reference_runs
    config, _ = reference_config()
    emcon_from = min((ev.t for ev in config.scenario.events if ev.action == "emcon" and ev.level is Emcon.BRAVO), default=math.inf)
    assert math.isfinite(emcon_from)
    total = {"bounds": 0, "duty": 0, "emcon": 0}
    n_runs = n_epochs = 0
    for series in runs.values():
        for s in series:
            assert s.log is not None and len(s.log) == len(s.t)
            for k, v in _scan(s.log, config.epoch, config.system.duty_limit, emcon_from).items():
                total[k] += v
            n_runs += 1
            n_epochs += len(s.log)
    record(10, not any(total.values()), f"{n_runs} runs, {n_epochs} epochs scanned, violations {total}")
