"""Task-combination tree for concurrent operation and its Monte Carlo tree search.

A leaf of the tree partitions the active tasks into blocks: singletons and
groups executed together under the current concurrency mode. Every leaf is
valued by one Q-RAM run over its blocks; UCT search picks the leaf to
schedule when the tree is too large to evaluate exhaustively.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import SizeError
from .models import (
    DEFAULT_MODELS,
    UTILITY_DUST,
    CompositionParams,
    Environment,
    ModelSet,
    TaskSpec,
)
from .qram import DEFAULT_WEIGHTS, Allocation, Frontier, allocate_greedy, config_arrays, frontier_from_arrays

LEAF_GUARD = 12

__all__ = [
    "Mode",
    "CombinationRule",
    "CombinationLeaf",
    "MemberChoice",
    "BlockChoice",
    "LeafEvaluator",
    "SearchResult",
    "feasible_blocks",
    "enumerate_leaves",
    "evaluate_leaf",
    "mcts_search",
    "singleton_leaf",
]


class Mode(str, Enum):
    STANDARD = "standard"
    INTERLEAVED = "interleaved"
    MULTIFUNCTION = "multifunction"
    MULTIOPERATION = "multioperation"


def _pairs(items: Iterable[Iterable[str]]) -> frozenset:
    return frozenset(frozenset(p) for p in items)


@dataclass(frozen=True)
class CombinationRule:
    """Which groups of tasks may form a block.

    Two beams pointing within ``angle_threshold`` of each other whose bands
    overlap by more than ``band_overlap`` Hz never share a block. A
    multifunction waveform is a single beam, so its members must lie within
    ``multifunction_sector`` of each other and form a registered type pair.
    """

    mode: Mode = Mode.STANDARD
    max_group_size: int = 2
    angle_threshold: float = math.radians(5.0)
    band_overlap: float = 0.0
    multifunction_pairs: frozenset = field(default_factory=lambda: _pairs([("surveillance", "datalink")]))
    multifunction_sector: float = math.radians(30.0)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "multifunction_pairs", _pairs(self.multifunction_pairs))
        if self.max_group_size < 1:
            raise ValueError("max_group_size must be at least 1")
        if self.mode is Mode.STANDARD:
            object.__setattr__(self, "max_group_size", 1)


@dataclass(frozen=True)
class CombinationLeaf:
    groups: tuple[tuple[int, ...], ...]

    @property
    def key(self) -> tuple[tuple[int, ...], ...]:
        return self.groups

    def tasks(self) -> list[int]:
        return sorted(i for g in self.groups for i in g)

    def __str__(self):
        return " ".join("{" + ",".join(map(str, g)) + "}" for g in self.groups)


def singleton_leaf(n: int) -> CombinationLeaf:
    return CombinationLeaf(tuple((i,) for i in range(n)))


def _separation(a: float, b: float) -> float:
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def _band(task: TaskSpec, models: ModelSet) -> tuple[float, float]:
    if task.band is not None:
        return task.band
    model = models[task.task_type]
    cache = model.__dict__.setdefault("_band_cache", {})
    hit = cache.get(task.grid_key)
    if hit is None:
        hit = cache[task.grid_key] = model.band(task.grid)
    return hit


def _pair_ok(a: TaskSpec, b: TaskSpec, rule: CombinationRule, models: ModelSet) -> bool:
    ma, mb = models[a.task_type], models[b.task_type]
    sep = _separation(a.direction, b.direction)
    if rule.mode is Mode.MULTIFUNCTION:
        return frozenset((a.task_type, b.task_type)) in rule.multifunction_pairs and sep <= rule.multifunction_sector
    (la, ha), (lb, hb) = _band(a, models), _band(b, models)
    overlap = min(ha, hb) - max(la, lb)
    if sep < rule.angle_threshold and overlap > rule.band_overlap:
        return False
    if rule.mode is Mode.INTERLEAVED:
        # interleaving two beam-level tasks equals running them back to back;
        # it only matters when one of them would otherwise hold the timeline
        return ma.continuous != mb.continuous
    if rule.mode is Mode.MULTIOPERATION:
        # no simultaneous transmit and receive on different subarrays
        return ma.transmits == mb.transmits
    return False


def feasible_blocks(tasks: Sequence[TaskSpec], rule: CombinationRule, models: ModelSet | None = None) -> list[tuple[int, ...]]:
    """All singletons plus every group of size 2..max passing the pairwise rules."""
    models = models or DEFAULT_MODELS
    n = len(tasks)
    blocks = [(i,) for i in range(n)]
    if rule.mode is Mode.STANDARD or rule.max_group_size < 2:
        return blocks
    ok = {
        (i, j): _pair_ok(tasks[i], tasks[j], rule, models)
        for i, j in itertools.combinations(range(n), 2)
    }
    for size in range(2, rule.max_group_size + 1):
        for group in itertools.combinations(range(n), size):
            if all(ok[p] for p in itertools.combinations(group, 2)):
                blocks.append(group)
    blocks.sort(key=lambda b: (b[0], len(b), b))
    return blocks


def _by_min(blocks: Iterable[tuple[int, ...]]) -> dict[int, list[tuple[int, ...]]]:
    out: dict[int, list[tuple[int, ...]]] = {}
    for b in blocks:
        out.setdefault(min(b), []).append(tuple(sorted(b)))
    return out


def enumerate_leaves(
    tasks: Sequence[TaskSpec] | int,
    rule: CombinationRule | None = None,
    blocks: Sequence[tuple[int, ...]] | None = None,
    models: ModelSet | None = None,
) -> list[CombinationLeaf]:
    """Every partition of the tasks into allowed blocks, canonically ordered."""
    n = tasks if isinstance(tasks, int) else len(tasks)
    if n > LEAF_GUARD:
        raise SizeError(f"{n} tasks exceed the enumeration guard of {LEAF_GUARD}")
    if blocks is None:
        blocks = feasible_blocks(tasks, rule, models)
    by_min = _by_min(blocks)
    leaves: list[CombinationLeaf] = []

    def extend(groups: list, remaining: tuple):
        if not remaining:
            leaves.append(CombinationLeaf(tuple(groups)))
            return
        rest = set(remaining)
        for b in by_min.get(remaining[0], ()):
            if rest.issuperset(b):
                extend(groups + [b], tuple(i for i in remaining if i not in b))

    extend([], tuple(range(n)))
    return leaves


def _check_partition(leaf: CombinationLeaf, n: int) -> None:
    members = leaf.tasks()
    assert members == list(range(n)), f"leaf {leaf} is not a partition of {n} tasks"


# --------------------------------------------------------------------------
# Leaf evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MemberChoice:
    task: int
    config: Mapping[str, float]
    resources: np.ndarray
    quality: Mapping[str, float]
    utility: float


@dataclass(frozen=True, eq=False)
class BlockChoice:
    block: tuple[int, ...]
    mode: Mode
    resources: np.ndarray
    utility: float
    priority: int
    members: tuple[MemberChoice, ...]


@dataclass(eq=False)
class _Members:
    cfg: dict
    resources: np.ndarray
    quality: dict
    utility: np.ndarray


@dataclass(eq=False)
class _Table:
    resources: np.ndarray
    utility: np.ndarray
    picks: np.ndarray  # (m, group) indices into member lists, row 0 = off
    frontier: Frontier
    priority: int


class LeafEvaluator:
    """Values leaves of one allocation epoch, caching per-block frontiers and per-leaf results.

    Singleton blocks use the task's full standalone grid. Multi-task blocks
    use the cross-product of each member's positive-utility configurations,
    thinned to the ``thinning`` best by utility per compound resource, with
    member quality evaluated under the mode's penalty.
    """

    def __init__(
        self,
        tasks: Sequence[TaskSpec],
        env: Environment | Sequence[Environment],
        bounds,
        *,
        rule: CombinationRule = CombinationRule(),
        models: ModelSet | None = None,
        weights=DEFAULT_WEIGHTS,
        composition: CompositionParams = CompositionParams(),
        thinning: int | None = None,
    ):
        self.tasks = list(tasks)
        self.envs = list(env) if isinstance(env, (list, tuple)) else [env] * len(self.tasks)
        self.bounds = np.asarray(bounds, dtype=float)
        self.rule = rule
        self.models = models or DEFAULT_MODELS
        self.weights = weights
        self.w = np.asarray(weights, dtype=float)
        self.composition = composition
        self.thinning = thinning
        self._members: dict = {}
        self._tables: dict = {}
        self._memo: dict = {}

    # member lists -----------------------------------------------------
    def _member_list(self, i: int, context: str) -> _Members:
        key = (i, context)
        hit = self._members.get(key)
        if hit is not None:
            return hit
        task, env = self.tasks[i], self.envs[i]
        model = self.models[task.task_type]
        if context == "standalone":
            cfg = config_arrays(task, self.models, system=env.system)
            res, qual, util = model.evaluate(cfg, env)
            util = np.asarray(util, dtype=float) * task.weight
            out = _Members(cfg, np.asarray(res, dtype=float).reshape(-1, 2), qual, np.where(util < UTILITY_DUST, 0.0, util))
        else:
            mode = Mode(context)
            if mode is Mode.INTERLEAVED and model.continuous:
                base_cfg = config_arrays(task, self.models, interleaved=True, system=env.system)
                res, _, util = model.evaluate(base_cfg, env)
                res = np.asarray(res, dtype=float).reshape(-1, 2)
                util = np.asarray(util, dtype=float) * task.weight
            else:
                # same grid as the standalone list, so its ranking can be reused
                base = self._member_list(i, "standalone")
                base_cfg, res, util = base.cfg, base.resources, base.utility
            keep = np.nonzero(util >= UTILITY_DUST)[0]
            if self.thinning is not None and len(keep) > self.thinning:
                ratio = util[keep] / np.maximum((res[keep] / self.bounds) @ self.w, 1e-300)
                order = np.lexsort((keep, -ratio))
                keep = np.sort(keep[order[: self.thinning]])
            cfg = {k: v[keep] for k, v in base_cfg.items()}
            penalty = self.composition.isolation_db if mode is Mode.MULTIOPERATION else 0.0
            factor = self.composition.multifunction_factor if mode is Mode.MULTIFUNCTION else 1.0
            res, qual, util = model.evaluate(cfg, env, penalty, factor)
            util = np.asarray(util, dtype=float) * task.weight
            out = _Members(cfg, np.asarray(res, dtype=float).reshape(-1, 2), qual, np.where(util < UTILITY_DUST, 0.0, util))
        self._members[key] = out
        return out

    # block tables -----------------------------------------------------
    def table(self, block: tuple[int, ...]) -> _Table:
        hit = self._tables.get(block)
        if hit is not None:
            return hit
        prio = max(self.tasks[i].priority for i in block)
        k = len(self.bounds)
        if len(block) == 1:
            m = self._member_list(block[0], "standalone")
            size = len(m.utility)
            res = np.zeros((size + 1, k))
            res[1:] = m.resources
            util = np.zeros(size + 1)
            util[1:] = m.utility
            picks = np.arange(-1, size).reshape(-1, 1)
        else:
            mode = self.rule.mode
            lists = [self._member_list(i, mode.value) for i in block]
            sizes = [len(m.utility) for m in lists]
            if min(sizes) == 0:
                grid = np.zeros((0, len(block)), dtype=int)
            else:
                grid = np.indices(sizes).reshape(len(block), -1).T
            e = t = u = None
            for j, m in enumerate(lists):
                r = m.resources[grid[:, j]]
                uj = m.utility[grid[:, j]]
                if e is None:
                    e, t, u = r[:, 0].copy(), r[:, 1].copy(), uj.copy()
                    continue
                u += uj
                if mode is Mode.MULTIOPERATION:
                    e += r[:, 0]
                    np.maximum(t, r[:, 1], out=t)
                elif mode is Mode.MULTIFUNCTION:
                    np.maximum(t, r[:, 1], out=t)
                else:
                    np.maximum(e, r[:, 0], out=e)
                    t += r[:, 1]
            if mode is Mode.MULTIOPERATION:
                valid = e <= 1.0 + 1e-12
            elif mode is Mode.MULTIFUNCTION:
                e[:] = 1.0
                valid = np.ones(len(grid), dtype=bool)
            else:
                valid = t <= 1.0 + 1e-12
            idx = np.nonzero(valid)[0]
            res = np.zeros((len(idx) + 1, k))
            res[1:, 0] = e[idx]
            res[1:, 1] = t[idx]
            util = np.zeros(len(idx) + 1)
            util[1:] = u[idx]
            picks = np.full((len(idx) + 1, len(block)), -1, dtype=int)
            picks[1:] = grid[idx]
        table = _Table(res, util, picks, frontier_from_arrays(res, util, self.weights, self.bounds), prio)
        self._tables[block] = table
        return table

    def evaluate(self, leaf: CombinationLeaf) -> tuple[Allocation, float]:
        hit = self._memo.get(leaf.key)
        if hit is not None:
            return hit
        _check_partition(leaf, len(self.tasks))
        tables = [self.table(b) for b in leaf.groups]
        alloc = allocate_greedy([t.frontier for t in tables], self.bounds, self.weights, [t.priority for t in tables])
        out = (alloc, alloc.total_utility)
        self._memo[leaf.key] = out
        return out

    def decode(self, leaf: CombinationLeaf, allocation: Allocation) -> list[BlockChoice]:
        """Chosen configuration of every block that is switched on."""
        out = []
        for block, idx in zip(leaf.groups, allocation.choices):
            if idx == 0:
                continue
            table = self.table(block)
            mode = Mode.STANDARD if len(block) == 1 else self.rule.mode
            context = "standalone" if len(block) == 1 else mode.value
            members = []
            for j, i in enumerate(block):
                m = self._member_list(i, context)
                p = int(table.picks[idx, j])
                model = self.models[self.tasks[i].task_type]
                members.append(
                    MemberChoice(
                        task=i,
                        config={key: float(m.cfg[key][p]) for key in model.grid_keys},
                        resources=m.resources[p].copy(),
                        quality={key: float(v[p]) for key, v in m.quality.items()},
                        utility=float(m.utility[p]),
                    )
                )
            out.append(BlockChoice(block, mode, table.resources[idx].copy(), float(table.utility[idx]), table.priority, tuple(members)))
        return out

    @property
    def evaluations(self) -> int:
        return len(self._memo)


def evaluate_leaf(
    leaf: CombinationLeaf,
    tasks: Sequence[TaskSpec],
    env: Environment | Sequence[Environment],
    bounds,
    **kwargs,
) -> tuple[Allocation, float]:
    """One Q-RAM run over the blocks of ``leaf``; see :class:`LeafEvaluator` for options."""
    return LeafEvaluator(tasks, env, bounds, **kwargs).evaluate(leaf)


# --------------------------------------------------------------------------
# Monte Carlo tree search
# --------------------------------------------------------------------------

class _Node:
    __slots__ = ("groups", "remaining", "untried", "children", "visits", "total", "solved")

    def __init__(self, groups: tuple, remaining: tuple, options: list):
        self.groups = groups
        self.remaining = remaining
        self.untried = options
        self.children: list[_Node] = []
        self.visits = 0
        self.total = 0.0
        self.solved = not remaining


@dataclass
class SearchResult:
    leaf: CombinationLeaf
    allocation: Allocation | None
    utility: float
    history: list[float]
    evaluations: int
    iterations: int


def mcts_search(
    tasks: Sequence[TaskSpec] | int,
    rule: CombinationRule | None = None,
    env: Environment | Sequence[Environment] | None = None,
    bounds=None,
    iterations: int = 100,
    exploration_c: float = math.sqrt(2.0),
    seed: int = 0,
    *,
    evaluate: Callable[[CombinationLeaf], tuple[Allocation | None, float]] | None = None,
    evaluator: LeafEvaluator | None = None,
    blocks: Sequence[tuple[int, ...]] | None = None,
    models: ModelSet | None = None,
    initial: Sequence[CombinationLeaf] = (),
    **evaluator_kwargs,
) -> SearchResult:
    """UCT search over the partition tree.

    Each iteration selects by mean value (normalised by the best value seen)
    plus ``exploration_c * sqrt(ln N_parent / N_child)``, expands one
    untried child, completes the partition uniformly at random and
    backpropagates the leaf utility. Leaf values are memoised, fully explored
    subtrees are skipped, and the best leaf seen is returned. Leaves in
    ``initial`` are evaluated before the first iteration and compete for
    "best" without entering the tree statistics.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    n = tasks if isinstance(tasks, int) else len(tasks)
    if evaluate is None:
        if evaluator is None:
            evaluator = LeafEvaluator(tasks, env, bounds, rule=rule or CombinationRule(), models=models, **evaluator_kwargs)
        evaluate = evaluator.evaluate
    if blocks is None:
        blocks = feasible_blocks(tasks, rule or CombinationRule(), models)
    by_min = _by_min(blocks)
    rng = random.Random(seed)
    memo: dict = {}

    def options(remaining: tuple) -> list:
        if not remaining:
            return []
        rest = set(remaining)
        return [b for b in by_min.get(remaining[0], ()) if rest.issuperset(b)]

    def child_of(node: _Node, block: tuple) -> _Node:
        remaining = tuple(i for i in node.remaining if i not in block)
        return _Node(node.groups + (block,), remaining, options(remaining))

    def value_of(leaf: CombinationLeaf) -> float:
        hit = memo.get(leaf.key)
        if hit is None:
            _check_partition(leaf, n)
            hit = memo[leaf.key] = evaluate(leaf)
        return hit[1]

    root = _Node((), tuple(range(n)), options(tuple(range(n))))
    best_leaf, best_value = None, -math.inf
    history: list[float] = []
    for leaf in initial:
        value = value_of(leaf)
        if value > best_value:
            best_leaf, best_value = leaf, value
    done = 0
    for _ in range(iterations):
        if root.solved and best_leaf is not None:
            break
        done += 1
        node, path = root, [root]
        while not node.untried and node.children:
            scale = max(abs(best_value), 1e-300) if best_value > -math.inf else 1.0
            log_n = math.log(node.visits) if node.visits > 0 else 0.0
            best_score, pick = -math.inf, None
            for child in node.children:
                if child.solved:
                    continue
                score = child.total / child.visits / scale + exploration_c * math.sqrt(log_n / child.visits)
                if score > best_score:
                    best_score, pick = score, child
            if pick is None:
                break
            node = pick
            path.append(node)
        if node.untried:
            block = node.untried.pop(rng.randrange(len(node.untried)))
            child = child_of(node, block)
            node.children.append(child)
            node = child
            path.append(node)
        groups, remaining = list(node.groups), list(node.remaining)
        while remaining:
            choices = options(tuple(remaining))
            block = choices[rng.randrange(len(choices))]
            groups.append(block)
            remaining = [i for i in remaining if i not in block]
        leaf = CombinationLeaf(tuple(groups))
        value = value_of(leaf)
        if value > best_value:
            best_leaf, best_value = leaf, value
        for visited in path:
            visited.visits += 1
            visited.total += value
        for visited in reversed(path):
            if visited.remaining and not visited.untried and all(c.solved for c in visited.children):
                visited.solved = True
            elif visited.remaining:
                break
        history.append(best_value)
    allocation = memo[best_leaf.key][0]
    return SearchResult(best_leaf, allocation, best_value, history, len(memo), done)
