"""Q-RAM allocation: configuration enumeration, concave frontiers and greedy allocation.

Each task is embedded into (compound resource, utility) space, reduced to the
upper concave majorant of its points and then advanced step by step by a
global greedy that always takes the step with the best marginal utility per
marginal compound resource whose full resource vector still fits.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, SizeError
from .models import DEFAULT_MODELS, UTILITY_DUST, Environment, ModelSet, TaskSpec

DEFAULT_WEIGHTS = (0.5, 0.5)
EXACT_GUARD = 10**6
_FIT_TOL = 1e-12

__all__ = [
    "DEFAULT_WEIGHTS",
    "EvaluatedConfig",
    "FrontierPoint",
    "Frontier",
    "Allocation",
    "resource_vector",
    "config_arrays",
    "enumerate_configs",
    "compound_resource",
    "concave_frontier",
    "frontier_from_arrays",
    "allocate_greedy",
    "allocate_exact",
]


def resource_vector(values) -> np.ndarray:
    r = np.asarray(values, dtype=float)
    if r.ndim != 1:
        raise DomainError("a resource vector is one-dimensional")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise DomainError(f"resource components must be finite and nonnegative: {r}")
    return r


@dataclass(frozen=True, eq=False)
class EvaluatedConfig:
    """A configuration joined with its resources, quality and utility.

    ``config`` is ``None`` for the task-off configuration. Combined blocks
    carry their member evaluations in ``parts``.
    """

    config: Mapping[str, float] | tuple | None
    resources: np.ndarray
    quality: Mapping[str, float] | tuple
    utility: float
    parts: tuple = ()

    @property
    def is_off(self) -> bool:
        return self.config is None


def off_config(k: int = 2) -> EvaluatedConfig:
    return EvaluatedConfig(None, np.zeros(k), {}, 0.0)


class FrontierPoint(NamedTuple):
    compound: float
    utility: float
    index: int
    resources: tuple


@dataclass(frozen=True)
class Frontier:
    points: tuple[FrontierPoint, ...]

    def __len__(self):
        return len(self.points)

    def slopes(self) -> list[float]:
        p = self.points
        return [(p[i + 1].utility - p[i].utility) / (p[i + 1].compound - p[i].compound) for i in range(len(p) - 1)]

    def value_at(self, compound: float) -> float:
        """Piecewise-linear interpolant; flat beyond the last point."""
        pts = self.points
        if compound >= pts[-1].compound:
            return pts[-1].utility
        for a, b in zip(pts, pts[1:]):
            if compound <= b.compound:
                return a.utility + (b.utility - a.utility) * (compound - a.compound) / (b.compound - a.compound)
        return pts[-1].utility


@dataclass(frozen=True)
class Allocation:
    choices: tuple[int, ...]
    total_utility: float
    total_resources: np.ndarray


# --------------------------------------------------------------------------
# Enumeration
# --------------------------------------------------------------------------

_GRID_CACHE: dict = {}


def config_arrays(task: TaskSpec, models: ModelSet | None = None, *, interleaved: bool = False, system=None):
    """Feasible grid points of ``task`` as a dict of equally long arrays (cached per grid)."""
    models = models or DEFAULT_MODELS
    model = models[task.task_type]
    limits = None if system is None else (system.n_elements, system.duty_limit)
    key = (task.task_type, task.grid_key, interleaved, limits)
    hit = _GRID_CACHE.get(key)
    if hit is not None:
        return hit
    cfg = model.expand(task.grid)
    if system is not None:
        mask = model.feasible(cfg, system)
        if not interleaved:
            mask = mask & model.standalone(cfg)
        cfg = {k: v[mask] for k, v in cfg.items()}
    if len(_GRID_CACHE) > 4096:
        _GRID_CACHE.clear()
    _GRID_CACHE[key] = cfg
    return cfg


def enumerate_configs(
    task_spec: TaskSpec,
    env: Environment,
    models: ModelSet | None = None,
    *,
    interleaved: bool = False,
) -> list[EvaluatedConfig]:
    """Off configuration followed by every feasible grid point, evaluated.

    Hard feasibility: element count within the array and, for transmitting
    tasks, ``PRF * tau`` within the duty limit. Continuous tasks only offer
    their full-share configurations unless ``interleaved`` is set.
    """
    models = models or DEFAULT_MODELS
    model = models[task_spec.task_type]
    cfg = config_arrays(task_spec, models, interleaved=interleaved, system=env.system)
    out = [off_config()]
    n = len(next(iter(cfg.values()))) if cfg else 0
    if n == 0:
        return out
    res, qual, util = model.evaluate(cfg, env)
    util = np.asarray(util, dtype=float) * task_spec.weight
    keys = model.grid_keys
    for i in range(n):
        out.append(
            EvaluatedConfig(
                config={k: float(cfg[k][i]) for k in keys},
                resources=np.array(res[i], dtype=float),
                quality={k: float(v[i]) for k, v in qual.items()},
                utility=0.0 if util[i] < UTILITY_DUST else float(util[i]),
            )
        )
    return out


# --------------------------------------------------------------------------
# Compound resource and frontier
# --------------------------------------------------------------------------

_WEIGHT_CACHE: dict = {}


def _check_weights(weights, k: int) -> np.ndarray:
    if isinstance(weights, tuple):
        hit = _WEIGHT_CACHE.get((weights, k))
        if hit is not None:
            return hit
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise DomainError(f"weights must be {k} nonnegative reals summing to 1, got {weights}")
    if isinstance(weights, tuple):
        w.setflags(write=False)
        _WEIGHT_CACHE[(weights, k)] = w
    return w


def compound_resource(r, weights=DEFAULT_WEIGHTS) -> float:
    """Weighted sum of the resource components (a convex combination)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError(f"negative resource component in {r}")
    w = _check_weights(weights, r.shape[-1])
    return float(r @ w)


def frontier_from_arrays(resources: np.ndarray, utilities: np.ndarray, weights=DEFAULT_WEIGHTS, bounds=None) -> Frontier:
    """Upper concave majorant of points given as arrays; row 0 must be the off configuration.

    With ``bounds``, each component is measured as a fraction of its bound
    before weighting, so the scarcer resource dominates the ranking.
    """
    resources = np.asarray(resources, dtype=float)
    utilities = np.asarray(utilities, dtype=float)
    w = _check_weights(weights, resources.shape[1])
    h = resources @ w if bounds is None else (resources / np.asarray(bounds, dtype=float)) @ w
    u = np.where(utilities < UTILITY_DUST, 0.0, utilities)
    hull = [(0.0, 0.0, 0)]
    # zero-cost configurations other than off cannot sit on a frontier that
    # is strictly increasing in resource
    cand = np.nonzero((h > 0) & (u > 0))[0]
    order = cand[np.lexsort((cand, -u[cand], h[cand]))]
    # Pareto filter: walking up in cost, keep only strict utility improvements
    uo = u[order]
    if uo.size:
        prev = np.maximum.accumulate(np.concatenate(([0.0], uo[:-1])))
        order = order[uo > prev]
    for i in order.tolist():
        hi, ui = float(h[i]), float(u[i])
        while len(hull) >= 2:
            (h1, u1, _), (h2, u2, _) = hull[-2], hull[-1]
            # drop the middle point unless slopes strictly decrease
            if (u2 - u1) * (hi - h2) <= (ui - u2) * (h2 - h1):
                hull.pop()
            else:
                break
        if hull[-1][0] == hi:  # same cost, higher utility
            hull.pop()
        hull.append((hi, ui, int(i)))
    return Frontier(tuple(FrontierPoint(hh, uu, ii, tuple(resources[ii])) for hh, uu, ii in hull))


def concave_frontier(evaluated: Sequence[EvaluatedConfig], weights=DEFAULT_WEIGHTS, bounds=None) -> Frontier:
    """Upper-left concave majorant in (compound resource, utility) space.

    Expects the off configuration at index 0. See :func:`frontier_from_arrays`
    for the effect of ``bounds``.
    """
    if not evaluated or not evaluated[0].is_off:
        raise DomainError("the evaluated list must start with the off configuration")
    res = np.array([e.resources for e in evaluated], dtype=float)
    util = np.array([e.utility for e in evaluated], dtype=float)
    return frontier_from_arrays(res, util, weights, bounds)


# --------------------------------------------------------------------------
# Allocation
# --------------------------------------------------------------------------

def allocate_greedy(
    frontiers: Sequence[Frontier],
    bounds,
    weights=DEFAULT_WEIGHTS,
    priorities: Sequence[int] | None = None,
) -> Allocation:
    """Non-retracting greedy over frontier steps.

    Every task starts at its off point. Each round takes, among the next
    steps whose full resource delta fits the remaining bounds, the one with
    the largest marginal utility per marginal compound resource (ties: lowest
    task index). Tasks with a higher ``priority`` are served before any
    lower-priority step is considered.
    """
    bounds = [float(b) for b in (bounds.tolist() if isinstance(bounds, np.ndarray) else bounds)]
    if not all(0 < b < math.inf for b in bounds):
        raise DomainError(f"bounds must be finite and componentwise positive: {bounds}")
    k = len(bounds)
    n = len(frontiers)
    prio = list(priorities) if priorities is not None else [0] * n
    pts = [f.points for f in frontiers]
    level = [0] * n
    used = [0.0] * k
    limit = [float(b) + _FIT_TOL for b in bounds]
    dims = range(k)

    def key(i: int):
        a, b = pts[i][level[i]], pts[i][level[i] + 1]
        ratio = (b.utility - a.utility) / (b.compound - a.compound)
        return (-prio[i], -ratio, i)

    heap = [key(i) for i in range(n) if len(pts[i]) > 1]
    heapq.heapify(heap)
    blocked: list[int] = []
    while heap:
        _, _, i = heapq.heappop(heap)
        a, b = pts[i][level[i]], pts[i][level[i] + 1]
        delta = [b.resources[j] - a.resources[j] for j in dims]
        if all(used[j] + delta[j] <= limit[j] for j in dims):
            used = [used[j] + delta[j] for j in dims]
            level[i] += 1
            if level[i] + 1 < len(pts[i]):
                heapq.heappush(heap, key(i))
            if blocked and any(d < 0 for d in delta):
                # a component was released; earlier rejects may fit now
                for j in blocked:
                    heapq.heappush(heap, key(j))
                blocked.clear()
        else:
            blocked.append(i)
    chosen = [p[level[i]] for i, p in enumerate(pts)]
    total = [math.fsum(p.resources[j] for p in chosen) for j in dims]
    utility = math.fsum(p.utility for p in chosen)
    return Allocation(tuple(p.index for p in chosen), utility, np.array(total, dtype=float))


def allocate_exact(evaluated: Sequence[Sequence[EvaluatedConfig]], bounds) -> Allocation:
    """Exhaustive optimum of the allocation problem (test oracle).

    Ties go to the lexicographically smallest index tuple.
    """
    bounds = resource_vector(bounds)
    k = len(bounds)
    size = math.prod(len(e) for e in evaluated)
    if size > EXACT_GUARD:
        raise SizeError(f"{size} configuration tuples exceed the guard of {EXACT_GUARD}")
    if not evaluated:
        return Allocation((), 0.0, np.zeros(k))
    util = np.zeros(())
    res = np.zeros((k,))
    for evs in evaluated:
        u = np.array([e.utility for e in evs], dtype=float)
        r = np.array([e.resources for e in evs], dtype=float).reshape(len(evs), k)
        util = util[..., None] + u
        res = res[..., None, :] + r
    feasible = np.all(res <= bounds + _FIT_TOL, axis=-1)
    score = np.where(feasible, util, -np.inf)
    flat = int(np.argmax(score))
    idx = np.unravel_index(flat, score.shape)
    choices = tuple(int(i) for i in idx)
    total = np.zeros(k)
    for evs, c in zip(evaluated, choices):
        total = total + np.asarray(evs[c].resources, dtype=float)
    return Allocation(choices, math.fsum(evs[c].utility for evs, c in zip(evaluated, choices)), total)
