"""Brute-force MEV oracle over a discretized move universe.

Enumerates every trace of bounded length built from each node's move grid
and keeps the best gain.  Reverting moves are never expanded: a trace with a
failing move has the same gain as the trace without it, and the shorter one
wins ties anyway.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterator, Optional

from mevc.core import ContractSystem, SysState

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    def __init__(self, result: "OracleResult"):
        super().__init__(f"node budget exhausted after {result.nodes_expanded} nodes")
        self.result = result


@dataclass(frozen=True)
class GridSpec:
    amount_step: float
    amount_max: float
    max_depth: int
    include_mempool: bool = True
    distinguished: bool = True

    def __post_init__(self):
        if not self.amount_step > 0:
            raise ValueError(f"amount_step must be positive, got {self.amount_step}")
        if not self.amount_step <= self.amount_max:
            raise ValueError(f"amount_step {self.amount_step} exceeds amount_max {self.amount_max}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be at least 1, got {self.max_depth}")

    def amounts(self) -> list:
        n = int(math.floor(self.amount_max / self.amount_step + 1e-9))
        return [i * self.amount_step for i in range(1, n + 1)]

    def to_dict(self) -> dict:
        return {
            "amount_step": self.amount_step,
            "amount_max": self.amount_max,
            "max_depth": self.max_depth,
            "include_mempool": self.include_mempool,
            "distinguished": self.distinguished,
        }


@dataclass
class OracleResult:
    value: float
    trace: list
    nodes_expanded: int
    exhausted: bool
    grid: Optional[GridSpec] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "trace": [str(m) for m in self.trace],
            "nodes_expanded": self.nodes_expanded,
            "exhausted": self.exhausted,
            "grid": None if self.grid is None else self.grid.to_dict(),
        }


class _OutOfBudget(Exception):
    pass


def _tie(v: float) -> float:
    return 1e-10 * max(1.0, abs(v))


def branch_and_bound_prune(sys: ContractSystem, root: SysState, node: SysState) -> float:
    """Admissible bound on any trace through ``node``: gain so far plus what is still capturable."""
    return sys.gain_state(root, node) + sys.capturable_value(node)


class _Search:
    def __init__(self, sys, root, grid, prune, budget):
        self.sys = sys
        self.root = root
        self.grid = grid
        self.prune = prune
        self.budget = budget
        self.nodes = 0
        self.best_value = 0.0
        self.best_path: tuple = ()
        self.best_moves: list = []

    def _better(self, v, path) -> bool:
        if v > self.best_value + _tie(self.best_value):
            return True
        if abs(v - self.best_value) <= _tie(self.best_value):
            return (len(path), path) < (len(self.best_path), self.best_path)
        return False

    def dfs(self, state, path, moves, limit):
        if len(path) == limit:
            return
        sys = self.sys
        for idx, m in enumerate(sys.move_grid(state, self.grid)):
            after = sys.semantics(state, m)
            if after is None:
                continue
            self.nodes += 1
            if self.nodes > self.budget:
                raise _OutOfBudget
            if self.prune:
                bound = branch_and_bound_prune(sys, self.root, after)
                if bound <= self.best_value + _tie(self.best_value):
                    continue
            p = path + (idx,)
            mv = moves + [m]
            g = sys.gain_state(self.root, after)
            if self._better(g, p):
                self.best_value, self.best_path, self.best_moves = g, p, mv
            self.dfs(after, p, mv, limit)

    def run(self) -> OracleResult:
        exhausted = True
        # With pruning, iterative deepening keeps ties resolved towards shorter traces.
        limits = range(1, self.grid.max_depth + 1) if self.prune else [self.grid.max_depth]
        try:
            for limit in limits:
                if self.prune and branch_and_bound_prune(self.sys, self.root, self.root) <= self.best_value + _tie(
                    self.best_value
                ):
                    break
                self.dfs(self.root, (), [], limit)
        except _OutOfBudget:
            exhausted = False
            self.nodes = self.budget
        return OracleResult(self.best_value, self.best_moves, self.nodes, exhausted, self.grid)


def default_budget() -> int:
    env = os.environ.get("MEVC_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def brute_force_mev(
    sys: ContractSystem,
    sigma: SysState,
    grid: GridSpec,
    prune: bool = True,
    budget: Optional[int] = None,
    raise_on_budget: bool = False,
) -> OracleResult:
    """Best gain over all grid traces of length at most ``grid.max_depth``.

    Ties go to the shortest trace, then to the lexicographically smallest
    sequence of grid positions.  When the node budget runs out the best
    trace found so far is returned with ``exhausted=False``, or
    :class:`BudgetExceeded` is raised if asked for.
    """
    search = _Search(sys, sigma, grid, prune, budget if budget is not None else default_budget())
    result = search.run()
    if raise_on_budget and not result.exhausted:
        raise BudgetExceeded(result)
    return result


def mempool_interleavings(sys: ContractSystem, sigma: SysState, grid: GridSpec) -> Iterator[list]:
    """All non-reverting grid traces up to the depth limit.

    A mempool transaction leaves the pool once it succeeds, so each pending
    id appears at most once per trace, interleaved with adversarial moves.
    """
    yield []

    def walk(state, prefix):
        if len(prefix) == grid.max_depth:
            return
        for m in sys.move_grid(state, grid):
            after = sys.semantics(state, m)
            if after is None:
                continue
            tr = prefix + [m]
            yield tr
            yield from walk(after, tr)

    yield from walk(sigma, [])
