"""Numerical harness for the MEV characterization conditions.

A guess function is certified as the MEV of a state when a witness trace
reaches it (coherence) and no single move gains more than the drop in the
guess (soundness), on every state satisfying an invariant preserved by all
moves.  Coherence is checked exactly.  Invariant and guess soundness are
refutation-tested by sampling random reachable walks: a pass is evidence,
not a proof.
"""

from __future__ import annotations

import logging
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional, Sequence

from mevc.core import EPS_VALUE, ContractSystem, SysState, gain_trace

log = logging.getLogger(__name__)

MAX_WALK = 8


class InvariantViolated(ValueError):
    pass


class InvariantViolatedAtInit(InvariantViolated):
    pass


class OracleDiverged(RuntimeError):
    pass


class NotConverging(RuntimeError):
    pass


@dataclass
class GuessSpec:
    """Invariant, candidate MEV per invariant state, and a trace achieving it."""

    name: str
    invariant: Callable[[SysState], bool]
    guess: Callable[[SysState], float]
    witness: Callable[[SysState], list]


@dataclass
class MevClaim:
    state: SysState
    value: float
    kind: str  # "mev" or "mevsup"
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"extractable value cannot be negative, got {self.value}")
        if self.kind not in ("mev", "mevsup"):
            raise ValueError(f"unknown claim kind {self.kind!r}")


def _state_dict(sys: ContractSystem, sigma: SysState) -> dict:
    return {"contract": sys.describe(sigma.s), "adversary": sigma.delta.as_dict()}


@dataclass
class Counterexample:
    state: SysState
    move: Any
    successor: Optional[SysState]
    slack: float = 0.0

    def to_dict(self, sys: ContractSystem) -> dict:
        out = {"state": _state_dict(sys, self.state), "move": str(self.move), "slack": self.slack}
        if self.successor is not None:
            out["successor"] = _state_dict(sys, self.successor)
        return out


@dataclass
class CoherenceResult:
    claimed: float
    witness_gain: float
    witness: list
    passed: bool

    def to_dict(self) -> dict:
        return {
            "claimed": self.claimed,
            "witness_gain": self.witness_gain,
            "witness": [str(m) for m in self.witness],
            "passed": self.passed,
        }


@dataclass
class InvariantSoundnessResult:
    samples: int
    counterexamples: list

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def to_dict(self, sys) -> dict:
        return {
            "samples": self.samples,
            "counterexamples": [c.to_dict(sys) for c in self.counterexamples],
            "passed": self.passed,
            "status": "refutation-tested",
        }


@dataclass
class GuessSoundnessResult:
    samples: int
    max_violation: float
    warnings: int
    counterexamples: list

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def to_dict(self, sys) -> dict:
        return {
            "samples": self.samples,
            "max_violation": self.max_violation,
            "float_noise_warnings": self.warnings,
            "counterexamples": [c.to_dict(sys) for c in self.counterexamples],
            "passed": self.passed,
            "status": "refutation-tested",
        }


@dataclass
class TelescopingResult:
    traces: int
    all_bounded: bool
    max_excess: float

    @property
    def passed(self) -> bool:
        return self.all_bounded

    def to_dict(self) -> dict:
        return {"traces": self.traces, "all_bounded": self.all_bounded, "max_excess": self.max_excess}


@dataclass
class OracleCrosscheck:
    oracle_value: float
    guess: float
    exhausted: bool
    nodes_expanded: int
    trace: list

    @property
    def gap(self) -> float:
        return self.oracle_value - self.guess

    @property
    def passed(self) -> bool:
        # Oracle must never beat the guess; when the grid was fully searched it must also reach it.
        if self.gap > EPS_VALUE:
            return False
        return not self.exhausted or self.gap >= -EPS_VALUE

    def to_dict(self) -> dict:
        return {
            "oracle_value": self.oracle_value,
            "gap": self.gap,
            "exhausted": self.exhausted,
            "nodes_expanded": self.nodes_expanded,
            "trace": [str(m) for m in self.trace],
            "passed": self.passed,
        }


@dataclass
class VerificationReport:
    coherence: CoherenceResult
    invariant_soundness: InvariantSoundnessResult
    guess_soundness: GuessSoundnessResult
    telescoping: TelescopingResult
    oracle: Optional[OracleCrosscheck] = None

    @property
    def passed(self) -> bool:
        parts = [self.coherence, self.invariant_soundness, self.guess_soundness, self.telescoping]
        if self.oracle is not None:
            parts.append(self.oracle)
        return all(p.passed for p in parts)

    def to_dict(self, sys: ContractSystem) -> dict:
        return {
            "coherence": self.coherence.to_dict(),
            "invariant_soundness": self.invariant_soundness.to_dict(sys),
            "guess_soundness": self.guess_soundness.to_dict(sys),
            "telescoping_replay": self.telescoping.to_dict(),
            "oracle_crosscheck": None if self.oracle is None else self.oracle.to_dict(),
            "passed": self.passed,
        }


class MoveSampler:
    """Random adversarial moves: log-uniform amounts, uniform mempool picks.

    A fraction of draws comes from the contract's distinguished moves so
    that boundary states (exact triggers, tight states) are visited.
    """

    def __init__(
        self,
        sys: ContractSystem,
        step: float,
        cap: float,
        p_mempool: float = 0.25,
        p_distinguished: float = 0.15,
    ):
        if not 0 < step <= cap:
            raise ValueError(f"need 0 < step <= cap, got step={step}, cap={cap}")
        self.sys = sys
        self.lo = math.log(step)
        self.hi = math.log(cap)
        self.p_mempool = p_mempool
        self.p_distinguished = p_distinguished

    @classmethod
    def for_state(cls, sys: ContractSystem, sigma0: SysState, step: Optional[float] = None, **kw) -> "MoveSampler":
        cap = max(10.0 * sys.honest_value(sigma0), 1.0)
        if step is None:
            step = cap * 1e-6
        return cls(sys, min(step, cap), cap, **kw)

    def amount(self, rng: random.Random) -> float:
        return math.exp(rng.uniform(self.lo, self.hi))

    def sample(self, sigma: SysState, rng: random.Random):
        u = rng.random()
        mempool = self.sys.mempool_moves(sigma)
        if mempool and u < self.p_mempool:
            return rng.choice(mempool)
        if u < self.p_mempool + self.p_distinguished:
            special = self.sys.distinguished_moves(sigma)
            if special:
                return rng.choice(special)
        return rng.choice(self.sys.adv_moves(sigma, self.amount(rng)))


def _walk_transitions(
    sys: ContractSystem,
    spec: GuessSpec,
    sigma0: SysState,
    sampler: MoveSampler,
    seed: int,
    tag: str,
    max_draws: int,
) -> Iterator[tuple]:
    """Defined transitions along random walks from ``sigma0``.

    Every walk has its own RNG keyed on (seed, tag, walk index), so the
    sequence is reproducible and independent of how walks are scheduled.
    A walk ends early once it leaves the invariant.
    """
    draws = 0
    walk = 0
    while draws < max_draws:
        rng = random.Random(f"{seed}:{tag}:{walk}")
        state = sigma0
        for _ in range(rng.randint(1, MAX_WALK)):
            draws += 1
            m = sampler.sample(state, rng)
            after = sys.semantics(state, m)
            if after is None:
                continue
            yield state, m, after
            if not spec.invariant(after):
                break
            state = after
        walk += 1


def check_coherence(sys: ContractSystem, sigma: SysState, spec: GuessSpec, eps: float = EPS_VALUE) -> CoherenceResult:
    if not spec.invariant(sigma):
        raise InvariantViolatedAtInit(f"{spec.name}: invariant does not hold at the initial state")
    claimed = spec.guess(sigma)
    witness = list(spec.witness(sigma))
    gain = gain_trace(sys, sigma, witness)
    return CoherenceResult(claimed, gain, witness, abs(gain - claimed) <= eps)


def check_transition_invariant(spec: GuessSpec, sigma0: SysState, m, sigma1: SysState) -> Optional[Counterexample]:
    if spec.invariant(sigma0) and not spec.invariant(sigma1):
        return Counterexample(sigma0, m, sigma1)
    return None


def check_invariant_soundness(
    sys: ContractSystem,
    spec: GuessSpec,
    sigma0: SysState,
    sampler: MoveSampler,
    n: int,
    seed: int = 0,
    max_counterexamples: int = 10,
) -> InvariantSoundnessResult:
    if not spec.invariant(sigma0):
        raise InvariantViolatedAtInit(f"{spec.name}: invariant does not hold at the initial state")
    found = []
    samples = 0
    for state, m, after in _walk_transitions(sys, spec, sigma0, sampler, seed, "inv", 50 * n):
        samples += 1
        cex = check_transition_invariant(spec, state, m, after)
        if cex is not None:
            found.append(cex)
            if len(found) >= max_counterexamples:
                break
        if samples >= n:
            break
    return InvariantSoundnessResult(samples, found)


def soundness_slack(sys: ContractSystem, spec: GuessSpec, sigma0: SysState, sigma1: SysState) -> float:
    """gain(sigma0, sigma1) + guess(sigma1) - guess(sigma0); positive means violated."""
    return sys.gain_state(sigma0, sigma1) + spec.guess(sigma1) - spec.guess(sigma0)


def check_guess_soundness(
    sys: ContractSystem,
    spec: GuessSpec,
    sigma0: SysState,
    sampler: MoveSampler,
    n: int,
    seed: int = 0,
    eps: float = EPS_VALUE,
    max_counterexamples: int = 10,
) -> GuessSoundnessResult:
    if not spec.invariant(sigma0):
        raise InvariantViolatedAtInit(f"{spec.name}: invariant does not hold at the initial state")
    found = []
    samples = 0
    warnings = 0
    worst = -math.inf
    for state, m, after in _walk_transitions(sys, spec, sigma0, sampler, seed, "guess", 50 * n):
        if not spec.invariant(after):
            continue
        samples += 1
        slack = soundness_slack(sys, spec, state, after)
        worst = max(worst, slack)
        if slack > eps:
            # Re-evaluate from scratch before reporting.
            again = sys.semantics(state, m)
            if again is not None and soundness_slack(sys, spec, state, again) > eps:
                found.append(Counterexample(state, m, again, slack))
                if len(found) >= max_counterexamples:
                    break
        elif slack > 0:
            warnings += 1
            log.debug("float-noise soundness slack %.3g at %s", slack, m)
        if samples >= n:
            break
    return GuessSoundnessResult(samples, worst if samples else 0.0, warnings, found)


def random_traces(
    sys: ContractSystem,
    sigma0: SysState,
    sampler: MoveSampler,
    count: int,
    length: int = 6,
    seed: int = 0,
) -> list:
    """Random traces; moves are drawn along the replayed states so few revert."""
    traces = []
    for i in range(count):
        rng = random.Random(f"{seed}:trace:{i}")
        state = sigma0
        tr = []
        for _ in range(length):
            m = sampler.sample(state, rng)
            tr.append(m)
            after = sys.semantics(state, m)
            if after is not None:
                state = after
        traces.append(tr)
    return traces


def replay_telescoping(
    sys: ContractSystem,
    spec: GuessSpec,
    sigma0: SysState,
    traces: Sequence[list],
    eps: float = EPS_VALUE,
) -> TelescopingResult:
    """Walk each trace and check the running sum gain-so-far + guess never increases.

    The running sum starts at guess(sigma0) and ends at gain + guess(final)
    >= gain, so a non-increasing sequence bounds the trace gain.
    """
    if not spec.invariant(sigma0):
        raise InvariantViolatedAtInit(f"{spec.name}: invariant does not hold at the initial state")
    g0 = spec.guess(sigma0)
    bounded = True
    worst = -math.inf
    for tr in traces:
        state = sigma0
        running = g0
        for m in tr:
            after = sys.semantics(state, m)
            if after is None:
                continue
            if not spec.invariant(after):
                bounded = False
                break
            nxt = sys.gain_state(sigma0, after) + spec.guess(after)
            if nxt > running + eps:
                bounded = False
            running = nxt
            state = after
        total = sys.gain_state(sigma0, state)
        worst = max(worst, total - g0)
        if total > g0 + eps:
            bounded = False
    return TelescopingResult(len(traces), bounded, worst if traces else 0.0)


def grid_states(sys: ContractSystem, sigma0: SysState, grid, depth: int, invariant=None) -> list:
    """States reachable from ``sigma0`` by at most ``depth`` grid moves, breadth-first."""
    invariant = invariant or (lambda s: True)
    seen = {sigma0}
    order = [sigma0]
    frontier = deque([(sigma0, 0)])
    while frontier:
        state, d = frontier.popleft()
        if d == depth:
            continue
        for m in sys.move_grid(state, grid):
            after = sys.semantics(state, m)
            if after is None or after in seen or not invariant(after):
                continue
            seen.add(after)
            order.append(after)
            frontier.append((after, d + 1))
    return order


def check_grid_soundness(
    sys: ContractSystem,
    spec: GuessSpec,
    states: Sequence[SysState],
    grid,
    eps: float = EPS_VALUE,
) -> GuessSoundnessResult:
    """Exhaustive soundness over the given states and every grid move at each."""
    found = []
    samples = 0
    warnings = 0
    worst = -math.inf
    for state in states:
        if not spec.invariant(state):
            continue
        for m in sys.move_grid(state, grid):
            after = sys.semantics(state, m)
            if after is None or not spec.invariant(after):
                continue
            samples += 1
            slack = soundness_slack(sys, spec, state, after)
            worst = max(worst, slack)
            if slack > eps:
                found.append(Counterexample(state, m, after, slack))
            elif slack > 0:
                warnings += 1
    return GuessSoundnessResult(samples, worst if samples else 0.0, warnings, found)


def build_guess_from_oracle(
    sys: ContractSystem,
    invariant: Callable[[SysState], bool],
    oracle: Callable[[SysState], Any],
) -> GuessSpec:
    """Guess function mapping each state to its oracle MEV, witnessed by the oracle's trace."""
    cache: dict = {}

    def run(sigma):
        res = cache.get(sigma)
        if res is None:
            res = oracle(sigma)
            if not res.exhausted:
                raise OracleDiverged(f"oracle hit its node budget after {res.nodes_expanded} nodes")
            cache[sigma] = res
        return res

    return GuessSpec(
        name="oracle",
        invariant=invariant,
        guess=lambda sigma: run(sigma).value,
        witness=lambda sigma: list(run(sigma).trace),
    )


def estimate_mev_sup(
    sys: ContractSystem,
    sigma: SysState,
    family: Callable[[float], list],
    xs: Sequence[float],
    supremum: float,
    eps_schedule: Sequence[float] = (1.0, 0.1, 0.01),
    tol: float = EPS_VALUE,
) -> MevClaim:
    """Evaluate a trace family on increasing parameters and check it climbs towards ``supremum``."""
    xs = sorted(xs)
    gains = [gain_trace(sys, sigma, family(x)) for x in xs]
    for (x1, g1), (x2, g2) in zip(zip(xs, gains), zip(xs[1:], gains[1:])):
        if g2 < g1 - tol:
            raise NotConverging(f"gain drops from {g1} at x={x1} to {g2} at x={x2}")
    gaps = [supremum - g for g in gains]
    if len(xs) < 2:
        verdict = "insufficient schedule"
    elif all(b < a for a, b in zip(gaps, gaps[1:])) and all(g > 0 for g in gaps):
        verdict = "converging"
    else:
        verdict = "not strictly converging"
    reached = {}
    for eps in eps_schedule:
        hit = next((x for x, gap in zip(xs, gaps) if gap <= eps), None)
        reached[repr(eps)] = hit
    details = {
        "xs": list(xs),
        "gains": gains,
        "gaps": gaps,
        "strictly_below": all(g < supremum for g in gains),
        "verdict": verdict,
        "x_reaching_eps": reached,
    }
    return MevClaim(sigma, supremum, "mevsup", details)
