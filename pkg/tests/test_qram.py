import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_exact, evaluated, evaluated_vectors, majorant_ok, random_instance
from rfqram import DomainError, Environment, SizeError, SystemParams, TaskSpec
from rfqram.models import tracking_quality, tracking_resources, tracking_weight
from rfqram.qram import (
    allocate_exact,
    allocate_greedy,
    compound_resource,
    concave_frontier,
    enumerate_configs,
    frontier_from_arrays,
)


def _pairs(frontier):
    return [(p.compound, p.utility) for p in frontier.points]


# compound resource -------------------------------------------------------

def test_compound_resource_examples():
    assert compound_resource((0.2, 0.4), (0.5, 0.5)) == pytest.approx(0.3, rel=1e-15)
    assert compound_resource((0.0, 0.0), (0.9, 0.1)) == 0.0
    assert compound_resource((1.0, 0.0), (0.3, 0.7)) == pytest.approx(0.3, rel=1e-15)


def test_compound_resource_rejects_negative_and_bad_weights():
    with pytest.raises(DomainError):
        compound_resource((-0.1, 0.2))
    with pytest.raises(DomainError):
        compound_resource((0.1, 0.2), (0.6, 0.6))


@given(st.lists(st.floats(0, 10), min_size=2, max_size=2), st.floats(0, 1), st.integers(0, 1), st.floats(0, 5))
def test_compound_resource_monotone(r, w0, j, bump):
    w = (w0, 1.0 - w0)
    bigger = list(r)
    bigger[j] += bump
    assert compound_resource(bigger, w) >= compound_resource(r, w) - 1e-12


# frontier ----------------------------------------------------------------

def test_frontier_drops_point_below_chord():
    f = concave_frontier(evaluated([(1, 1), (2, 1.5), (3, 3)]))
    # (2, 1.5) sits below the chord value 2; (1, 1) sits on the chord (0,0)-(3,3)
    # and is merged so that slopes stay strictly decreasing
    assert _pairs(f) == [(0, 0), (3, 3)]
    assert f.value_at(2.0) == pytest.approx(2.0)
    assert f.value_at(1.0) == pytest.approx(1.0)


def test_frontier_keeps_strictly_concave_kink():
    f = concave_frontier(evaluated([(1, 1.2), (2, 1.5), (3, 3)]))
    assert _pairs(f) == [(0, 0), (1, 1.2), (3, 3)]


def test_frontier_singleton():
    f = concave_frontier(evaluated([]))
    assert _pairs(f) == [(0, 0)]
    assert f.points[0].index == 0


def test_frontier_duplicate_resources_keep_best():
    f = concave_frontier(evaluated([(1, 1), (1, 2)]))
    assert _pairs(f) == [(0, 0), (1, 2)]
    assert f.points[1].index == 2


def test_frontier_requires_off_first():
    with pytest.raises(DomainError):
        concave_frontier(evaluated([(1, 1)])[1:])


def test_frontier_ignores_dust_and_zero_cost_points():
    f = concave_frontier(evaluated([(0, 5), (1, 1e-14), (2, 1)]))
    assert _pairs(f) == [(0, 0), (2, 1)]


# every real configuration consumes some resource, so costs are drawn strictly positive
point_sets = st.lists(
    st.tuples(st.floats(1e-6, 5, allow_nan=False), st.floats(0, 5, allow_nan=False)), max_size=12
)


@settings(max_examples=300)
@given(point_sets)
def test_frontier_properties(points):
    evs = evaluated(points)
    f = concave_frontier(evs)
    p = f.points
    assert (p[0].compound, p[0].utility, p[0].index) == (0.0, 0.0, 0)
    # strictly increasing, strictly decreasing slopes
    for a, b in zip(p, p[1:]):
        assert b.compound > a.compound and b.utility > a.utility
    slopes = f.slopes()
    assert all(s1 > s2 for s1, s2 in zip(slopes, slopes[1:]))
    # every frontier point is an input point
    for q in p:
        assert compound_resource(evs[q.index].resources) == pytest.approx(q.compound, abs=1e-12)
        assert evs[q.index].utility == q.utility
    assert majorant_ok([(r, u if u >= 1e-12 else 0.0) for r, u in points], f)
    assert concave_frontier(evs) == f


def test_frontier_with_bounds_measures_fractions_of_bounds():
    evs = evaluated_vectors([((0.2, 0.1), 1.0), ((0.1, 0.4), 1.3)])
    f = concave_frontier(evs, bounds=(0.4, 0.5))
    assert [p.index for p in f.points] == [0, 1, 2]
    assert f.points[1].compound == pytest.approx(0.5 * (0.2 / 0.4 + 0.1 / 0.5))
    assert f.points[2].compound == pytest.approx(0.5 * (0.1 / 0.4 + 0.4 / 0.5))


def test_frontier_with_bounds_ranks_by_scarce_resource():
    # (0.32, 0.03) ranks first on the plain hull but eats most of the scarce element bound
    evs = evaluated_vectors([((0.09, 0.41), 9.97), ((0.32, 0.03), 7.87)])
    bounds = (0.27, 0.53)
    assert [p.index for p in concave_frontier(evs).points] == [0, 2, 1]
    f = concave_frontier(evs, bounds=bounds)
    assert [p.index for p in f.points] == [0, 1]
    assert allocate_greedy([concave_frontier(evs)], bounds).total_utility == 0.0
    assert allocate_greedy([f], bounds).total_utility == pytest.approx(9.97)


# greedy and exact ---------------------------------------------------------

def test_greedy_two_task_example():
    evs = evaluated([(1, 1), (2, 1.5)])
    frontiers = [concave_frontier(evs)] * 2
    alloc = allocate_greedy(frontiers, (2.0, 2.0))
    assert alloc.total_utility == 2.0
    assert alloc.choices == (1, 1)
    exact = allocate_exact([evs, evs], (2.0, 2.0))
    assert exact.total_utility == 2.0


def test_greedy_nothing_fits():
    f = concave_frontier(evaluated([(1, 1)]))
    alloc = allocate_greedy([f], (0.5, 0.5))
    assert alloc.choices == (0,) and alloc.total_utility == 0.0


def test_greedy_empty_task_list():
    alloc = allocate_greedy([], (1.0, 1.0))
    assert alloc.total_utility == 0.0 and alloc.choices == ()


def test_greedy_rejects_nonpositive_bounds():
    with pytest.raises(DomainError):
        allocate_greedy([], (1.0, 0.0))


def test_greedy_checks_full_vector_not_compound():
    # compound 0.5 fits a compound budget of 0.6, but the element component does not
    evs = evaluated_vectors([((1.0, 0.0), 5.0)])
    alloc = allocate_greedy([concave_frontier(evs)], (0.6, 1.0))
    assert alloc.choices == (0,)


def test_greedy_priority_served_first():
    low = evaluated([(1, 10)])
    high = evaluated([(1, 1)])
    alloc = allocate_greedy([concave_frontier(low), concave_frontier(high)], (1.0, 1.0), priorities=[0, 1])
    assert alloc.choices == (0, 1)


def test_greedy_tie_goes_to_lowest_index():
    evs = evaluated([(1, 1)])
    f = concave_frontier(evs)
    alloc = allocate_greedy([f, f, f], (1.0, 1.0))
    assert alloc.choices == (1, 0, 0)


def test_exact_all_off():
    evs = evaluated([(2, 1)])
    alloc = allocate_exact([evs, evs], (1.0, 1.0))
    assert alloc.choices == (0, 0) and alloc.total_utility == 0.0


def test_exact_single_task_is_argmax():
    evs = evaluated([(0.2, 1), (0.5, 3), (0.9, 2), (1.5, 9)])
    assert allocate_exact([evs], (1.0, 1.0)).choices == (2,)


def test_exact_tie_break_lexicographic():
    evs = evaluated([(1, 1)])
    assert allocate_exact([evs, evs], (1.0, 1.0)).choices == (0, 1)


def test_exact_guard():
    evs = evaluated([(0.1, 1)] * 9)  # 10 entries
    with pytest.raises(SizeError):
        allocate_exact([evs] * 7, (1.0, 1.0))


def test_exact_matches_plain_loop():
    rng = np.random.default_rng(5)
    for _ in range(50):
        tasks, bounds = random_instance(rng)
        value, idx = brute_exact(tasks, bounds)
        alloc = allocate_exact(tasks, bounds)
        assert alloc.total_utility == pytest.approx(value, rel=1e-12)
        assert alloc.choices == idx


@settings(max_examples=150)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_greedy_feasible_and_deterministic(seed, aware):
    rng = np.random.default_rng(seed)
    tasks, bounds = random_instance(rng)
    frontiers = [concave_frontier(t, bounds=bounds if aware else None) for t in tasks]
    alloc = allocate_greedy(frontiers, bounds)
    assert np.all(alloc.total_resources <= bounds + 1e-9)
    picked = sum(np.asarray(t[c].resources) for t, c in zip(tasks, alloc.choices))
    assert np.allclose(picked, alloc.total_resources)
    assert alloc.total_utility == pytest.approx(sum(t[c].utility for t, c in zip(tasks, alloc.choices)))
    again = allocate_greedy(frontiers, bounds)
    assert again.choices == alloc.choices and again.total_utility == alloc.total_utility
    exact, wider = allocate_exact(tasks, bounds), bounds * rng.uniform(1.0, 2.0, 2)
    assert allocate_exact(tasks, wider).total_utility >= exact.total_utility


@settings(max_examples=300)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_greedy_monotone_in_bounds_along_one_direction(seed, aware):
    rng = np.random.default_rng(seed)
    tasks = []
    for _ in range(int(rng.integers(1, 5))):
        m = int(rng.integers(1, 6))
        tasks.append(evaluated_vectors([((c, c), u) for c, u in zip(rng.uniform(0, 0.6, m), rng.uniform(0, 10, m))]))
    small = float(rng.uniform(0.2, 1.5))
    values = []
    for b in (small, small * float(rng.uniform(1.0, 2.0))):
        frontiers = [concave_frontier(t, bounds=(b, b) if aware else None) for t in tasks]
        values.append(allocate_greedy(frontiers, (b, b)).total_utility)
    assert values[1] >= values[0] - 1e-9


def test_greedy_can_lose_utility_when_two_bounds_grow():
    """Known limit of a non-retracting greedy with per-component checks: a
    wider bound lets an early high-ratio step in that later blocks a better
    combination. The exact optimum does not shrink."""
    rng = np.random.default_rng(367)
    tasks, bounds = random_instance(rng)
    wider = bounds * rng.uniform(1.0, 2.0, 2)
    frontiers = [concave_frontier(t) for t in tasks]
    narrow_alloc, wide_alloc = allocate_greedy(frontiers, bounds), allocate_greedy(frontiers, wider)
    assert wide_alloc.total_utility < narrow_alloc.total_utility
    assert allocate_exact(tasks, wider).total_utility >= allocate_exact(tasks, bounds).total_utility


# enumeration --------------------------------------------------------------

def _env(**kw):
    return Environment(target_range=50e3, radial_velocity=200.0, process_noise=10.0, **kw)


def test_enumerate_tracking_grid_cardinality():
    task = TaskSpec("t", "track", {"n_az": [8, 16], "n_el": [8, 16], "n_p": [8, 16]})
    out = enumerate_configs(task, _env())
    assert len(out) == 9
    assert out[0].is_off and out[0].utility == 0.0 and not np.any(out[0].resources)


def test_enumerate_duty_infeasible_grid_leaves_off_only():
    task = TaskSpec("t", "track", {"prf": [20e3, 40e3], "tau": [2e-5]})  # duty 0.4 and 0.8 > 0.25
    out = enumerate_configs(task, _env())
    assert len(out) == 1 and out[0].is_off


def test_enumerate_element_count_filter():
    task = TaskSpec("t", "track", {"n_az": [16, 32], "n_el": [16]})
    assert len(enumerate_configs(task, _env())) == 2


def test_enumerate_unknown_type():
    from rfqram import ConfigurationError

    with pytest.raises(ConfigurationError):
        enumerate_configs(TaskSpec("x", "teleport", {}), _env())


def test_enumerated_utilities_match_hand_formulas():
    env = _env()
    task = TaskSpec("t", "track", {"n_az": [4, 8, 16], "n_el": [16]})
    out = enumerate_configs(task, env)
    assert len(out) == 4
    for ev in out[1:]:
        cfg = {"n_az": ev.config["n_az"], "n_el": 16.0, "prf": 2000.0, "n_p": 16.0, "tau": 1e-5, "bandwidth": 5e6, "wavelength": 0.03}
        e_t = float(tracking_quality(cfg, env, 1.0)["track_error"])
        q = 1.0 / e_t
        w = 1.0 * 200.0 / (50e3 + 20e3)
        assert ev.utility == pytest.approx(w * (1.0 - math.exp(-1000.0 * q)), rel=1e-12)
        assert w == pytest.approx(tracking_weight(env), rel=1e-15)
        assert np.allclose(ev.resources, tracking_resources(cfg, env), rtol=1e-15)
        assert ev.quality["q"] == pytest.approx(q, rel=1e-12)


def test_frontier_from_arrays_matches_list_version():
    rng = np.random.default_rng(3)
    res = np.vstack([[0, 0], rng.uniform(0, 1, (20, 2))])
    util = np.concatenate([[0], rng.uniform(0, 5, 20)])
    evs = evaluated_vectors(list(zip(res[1:], util[1:])))
    assert frontier_from_arrays(res, util) == concave_frontier(evs)


def test_system_params_guard():
    with pytest.raises(DomainError):
        SystemParams(duty_limit=0.0)
