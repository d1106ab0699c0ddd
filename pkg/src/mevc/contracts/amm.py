"""Constant-product AMM over two tokens, without fees.

Swap output follows x = v0 * r_out / (r_in + v0).  Besides the semantics this
module holds the closed-form strategy machinery: extractable value, the
arbitrage move, the tight state of a pending swap, the sandwich plan, and the
trace family approaching the supremum when a pending swap has no slippage
bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from mevc.core import (
    ADV,
    EPS_TOKEN,
    AdvCraft,
    ContractSystem,
    FromMempool,
    Mempool,
    Participant,
    SysState,
    Wallet,
    apply_trace,
)
from mevc.verify import GuessSpec, InvariantViolated

T0 = "T0"
T1 = "T1"


class ProductMismatch(ValueError):
    pass


class DegenerateTx(ValueError):
    pass


def other(token: str) -> str:
    return T1 if token == T0 else T0


@dataclass(frozen=True)
class Swap:
    sender: Participant
    v0: float
    tin: str
    vmin: float = 0.0

    def __post_init__(self):
        if not self.v0 > 0:
            raise ValueError(f"swap input must be positive, got {self.v0}")
        if not self.vmin >= 0:
            raise ValueError(f"swap minimum output must be non-negative, got {self.vmin}")
        if self.tin not in (T0, T1):
            raise ValueError(f"unknown input token {self.tin!r}")

    @property
    def tout(self) -> str:
        return other(self.tin)

    def adv_craftable(self) -> bool:
        return self.sender.adversary

    def __str__(self) -> str:
        return f"{self.sender}:swap{self.tin[1]}({self.v0:.10g}, {self.vmin:.10g})"


@dataclass(frozen=True)
class AmmState:
    r: Wallet
    wal: Wallet
    mempool: Mempool = ()

    def __post_init__(self):
        if not (self.r[T0] > 0 and self.r[T1] > 0):
            raise ValueError(f"reserves must be positive, got {self.r}")
        if not self.wal.is_nonnegative():
            raise ValueError(f"honest wallet must be non-negative, got {self.wal}")

    @property
    def k(self) -> float:
        return self.r[T0] * self.r[T1]


def swap_output(r_in: float, r_out: float, v0: float) -> float:
    return v0 * r_out / (r_in + v0)


class AMM(ContractSystem):
    tokens = (T0, T1)
    kind = "amm"

    def state(self, reserves, wal=None, mempool: Mempool = (), delta=None) -> SysState:
        r0, r1 = reserves
        s = AmmState(Wallet.of(self.tokens, {T0: r0, T1: r1}), Wallet.of(self.tokens, wal), tuple(mempool))
        return SysState(Wallet.of(self.tokens, delta), s)

    def exec_tx(self, sigma: SysState, tx: Swap):
        s = sigma.s
        r_in, r_out = s.r[tx.tin], s.r[tx.tout]
        x = swap_output(r_in, r_out, tx.v0)
        # r_out - x cancels badly for large inputs; this form keeps the product.
        rest = r_out * r_in / (r_in + tx.v0)
        if x + EPS_TOKEN < tx.vmin or not rest > 0:
            return None
        r = s.r.credit(tx.tin, tx.v0).set(tx.tout, rest)
        if tx.sender.adversary:
            delta = sigma.delta.debit(tx.tin, tx.v0).credit(tx.tout, x)
            return SysState(delta, replace(s, r=r))
        if tx.v0 > s.wal[tx.tin]:
            return None
        wal = s.wal.debit(tx.tin, tx.v0).credit(tx.tout, x)
        return SysState(sigma.delta, replace(s, r=r, wal=wal))

    def hon_tokens(self, s: AmmState) -> Wallet:
        return s.r + s.wal

    def adv_moves(self, sigma, amount):
        return [AdvCraft(Swap(ADV, amount, T0)), AdvCraft(Swap(ADV, amount, T1))]

    def distinguished_moves(self, sigma):
        s = sigma.s
        moves = []
        arb = arbitrage_move(s, self.prices)
        if arb is not None:
            moves.append(arb)
        for _, tx in s.mempool:
            if tx.vmin > 0:
                front = move_to_state(s, tight_state(s, tx))
                if front is not None:
                    moves.append(front)
            moves.append(AdvCraft(Swap(ADV, tx.v0, tx.tin)))
        return moves

    def describe(self, s: AmmState) -> str:
        ids = [i for i, _ in s.mempool]
        return f"AMM{s.r} | Hon{s.wal} | mempool {ids}"


def extractable(s: AmmState, prices) -> float:
    """Value gained by rebalancing the reserves to the external prices."""
    a = prices[T0] * s.r[T0]
    b = prices[T1] * s.r[T1]
    # Expanded square; exact when a*b is a perfect square.
    return max(0.0, a + b - 2.0 * math.sqrt(a * b))


def balanced_reserves(k: float, prices) -> tuple[float, float]:
    if not k > 0:
        raise ValueError(f"reserve product must be positive, got {k}")
    p0, p1 = prices[T0], prices[T1]
    return math.sqrt(k * p1 / p0), math.sqrt(k * p0 / p1)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= EPS_TOKEN * max(1.0, abs(a), abs(b))


def move_to_state(s: AmmState, target: AmmState) -> Optional[AdvCraft]:
    """The single adversarial swap taking the reserves of ``s`` to those of ``target``."""
    if abs(s.k - target.k) > 1e-9 * max(s.k, target.k):
        raise ProductMismatch(f"reserve products differ: {s.k} vs {target.k}")
    if _close(s.r[T0], target.r[T0]) and _close(s.r[T1], target.r[T1]):
        return None
    tin = T0 if target.r[T0] > s.r[T0] else T1
    return AdvCraft(Swap(ADV, target.r[tin] - s.r[tin], tin, 0.0))


def arbitrage_move(s: AmmState, prices) -> Optional[AdvCraft]:
    b0, b1 = balanced_reserves(s.k, prices)
    target = replace(s, r=s.r.set(T0, b0).set(T1, b1))
    return move_to_state(s, target)


def tight_state(s: AmmState, tx: Swap) -> AmmState:
    """Reserves with the same product at which ``tx`` outputs exactly its minimum.

    The input reserve is the positive root of
    vmin*r^2 + vmin*v0*r - k*v0 = 0, evaluated in the cancellation-free form.
    """
    if tx.vmin <= 0:
        raise DegenerateTx("a swap without minimum output has no tight state")
    k, v0, vmin = s.k, tx.v0, tx.vmin
    b = vmin * v0
    r_in = 2.0 * k * v0 / (b + math.sqrt(b * b + 4.0 * vmin * k * v0))
    r = s.r.set(tx.tin, r_in).set(tx.tout, k / r_in)
    return replace(s, r=r)


def _single_tx(sigma: SysState):
    mp = sigma.s.mempool
    if len(mp) != 1:
        return None
    return mp[0]


def one_or_less(sigma: SysState) -> bool:
    mp = sigma.s.mempool
    if not mp:
        return True
    if len(mp) > 1:
        return False
    tx = mp[0][1]
    return tx.vmin > 0 and not tx.sender.adversary


def is_empty(sigma: SysState) -> bool:
    return len(sigma.s.mempool) == 0


def tx_is_useful(sys: AMM, s: AmmState, tx: Swap) -> bool:
    """Pending swap is executable by its sender and gives away more value than it asks for."""
    p = sys.prices
    return tx.v0 <= s.wal[tx.tin] and tx.v0 * p[tx.tin] > tx.vmin * p[tx.tout]


@dataclass(frozen=True)
class SandwichPlan:
    front_run: Optional[AdvCraft]
    mempool_move: FromMempool
    back_run: Optional[AdvCraft]
    tight_state: AmmState
    post_tx_state: AmmState

    @property
    def trace(self) -> list:
        moves = [self.front_run, self.mempool_move, self.back_run]
        return [m for m in moves if m is not None]


def sandwich_plan(sys: AMM, sigma: SysState) -> SandwichPlan:
    entry = _single_tx(sigma)
    if entry is None:
        raise InvariantViolated("sandwich needs exactly one pending swap")
    tx_id, tx = entry
    s = sigma.s
    tight = tight_state(s, tx)
    front = move_to_state(s, tight)
    at_tight = SysState(sigma.delta, tight)
    after = sys.semantics(at_tight, FromMempool(tx_id))
    if after is None:
        raise InvariantViolated(f"pending swap {tx} does not execute at its tight state")
    post = after.s
    return SandwichPlan(front, FromMempool(tx_id), arbitrage_move(post, sys.prices), tight, post)


def amm_guess_empty(sys: AMM, sigma: SysState) -> float:
    if not is_empty(sigma):
        raise InvariantViolated("mempool is not empty")
    return extractable(sigma.s, sys.prices)


def amm_guess_singleton(sys: AMM, sigma: SysState) -> float:
    if not one_or_less(sigma):
        raise InvariantViolated("mempool must be empty or one honest swap with positive minimum output")
    s = sigma.s
    if not s.mempool:
        return extractable(s, sys.prices)
    tx = s.mempool[0][1]
    if not tx_is_useful(sys, s, tx):
        return extractable(s, sys.prices)
    plan = sandwich_plan(sys, sigma)
    front_gain = 0.0
    if plan.front_run is not None:
        front_gain = sys.gain_state(sigma, sys.semantics(sigma, plan.front_run))
    return front_gain + extractable(plan.post_tx_state, sys.prices)


def amm_witness_empty(sys: AMM, sigma: SysState) -> list:
    arb = arbitrage_move(sigma.s, sys.prices)
    return [arb] if arb is not None else []


def amm_witness_singleton(sys: AMM, sigma: SysState) -> list:
    s = sigma.s
    if s.mempool and tx_is_useful(sys, s, s.mempool[0][1]):
        return sandwich_plan(sys, sigma).trace
    return amm_witness_empty(sys, sigma)


def empty_guess_spec(sys: AMM) -> GuessSpec:
    return GuessSpec(
        name="amm-empty",
        invariant=is_empty,
        guess=lambda sigma: amm_guess_empty(sys, sigma),
        witness=lambda sigma: amm_witness_empty(sys, sigma),
    )


def singleton_guess_spec(sys: AMM) -> GuessSpec:
    return GuessSpec(
        name="amm-one-or-less",
        invariant=one_or_less,
        guess=lambda sigma: amm_guess_singleton(sys, sigma),
        witness=lambda sigma: amm_witness_singleton(sys, sigma),
    )


# Pending swap without slippage bound: no maximum exists, only a supremum.


def in_mevsup_regime(sigma: SysState) -> bool:
    entry = _single_tx(sigma)
    if entry is None:
        return False
    tx = entry[1]
    return tx.vmin == 0 and not tx.sender.adversary and tx.v0 <= sigma.s.wal[tx.tin]


def _mevsup_tx(sigma: SysState):
    if not in_mevsup_regime(sigma):
        raise DegenerateTx("needs exactly one executable honest swap with zero minimum output")
    return sigma.s.mempool[0]


def mevsup_value(sys: AMM, sigma: SysState) -> float:
    _, tx = _mevsup_tx(sigma)
    return extractable(sigma.s, sys.prices) + tx.v0 * sys.prices[tx.tin]


def mevsup_trace_family(sys: AMM, sigma: SysState, x: float) -> list:
    """Rebalance, push ``x`` more of the victim's input token, let the victim swap, rebalance."""
    tx_id, tx = _mevsup_tx(sigma)
    trace = []
    first = arbitrage_move(sigma.s, sys.prices)
    if first is not None:
        trace.append(first)
    trace += [AdvCraft(Swap(ADV, x, tx.tin)), FromMempool(tx_id)]
    end = apply_trace(sys, sigma, trace)
    last = arbitrage_move(end.s, sys.prices)
    if last is not None:
        trace.append(last)
    return trace


def mevsup_gain_closed_form(sys: AMM, sigma: SysState, x: float) -> float:
    _, tx = _mevsup_tx(sigma)
    p = sys.prices
    b = dict(zip((T0, T1), balanced_reserves(sigma.s.k, p)))
    b_in = b[tx.tin]
    gap = p[tx.tout] * b[T0] * b[T1] * tx.v0 / ((b_in + x + tx.v0) * (b_in + x))
    return mevsup_value(sys, sigma) - gap
