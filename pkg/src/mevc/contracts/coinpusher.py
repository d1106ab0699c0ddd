"""CoinPusher: whoever tips the balance to the threshold wins all of it."""

from __future__ import annotations

from dataclasses import dataclass, replace

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
)
from mevc.verify import GuessSpec, InvariantViolated

T0 = "T0"


def reaches(amount: float, threshold: float) -> bool:
    # Win condition is >= threshold, with float slack.
    return amount >= threshold - EPS_TOKEN


@dataclass(frozen=True)
class Push:
    sender: Participant
    v: float

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError(f"push amount must be positive, got {self.v}")

    def adv_craftable(self) -> bool:
        return self.sender.adversary

    def __str__(self) -> str:
        return f"{self.sender}:push({self.v:.10g})"


@dataclass(frozen=True)
class CoinPusherState:
    threshold: float
    bal: float
    wal: Wallet
    mempool: Mempool = ()

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.bal < 0:
            raise ValueError(f"contract balance must be non-negative, got {self.bal}")
        if not self.wal.is_nonnegative():
            raise ValueError(f"honest wallet must be non-negative, got {self.wal}")


class CoinPusher(ContractSystem):
    tokens = (T0,)
    kind = "coinpusher"

    def __init__(self, price: float = 1.0):
        super().__init__({T0: price})

    def state(self, threshold, bal=0.0, wal=0.0, mempool: Mempool = (), delta=None) -> SysState:
        s = CoinPusherState(float(threshold), float(bal), Wallet.of(self.tokens, {T0: wal}), tuple(mempool))
        return SysState(Wallet.of(self.tokens, delta), s)

    def exec_tx(self, sigma: SysState, tx: Push):
        s = sigma.s
        adv = tx.sender.adversary
        if not adv and tx.v > s.wal[T0]:
            return None
        bal = s.bal + tx.v
        payout = 0.0
        if reaches(bal, s.threshold):
            payout, bal = bal, 0.0
        if adv:
            delta = sigma.delta.credit(T0, payout - tx.v)
            return SysState(delta, replace(s, bal=bal))
        wal = s.wal.credit(T0, payout - tx.v)
        return SysState(sigma.delta, replace(s, bal=bal, wal=wal))

    def hon_tokens(self, s: CoinPusherState) -> Wallet:
        return s.wal.credit(T0, s.bal)

    def adv_moves(self, sigma, amount):
        return [AdvCraft(Push(ADV, amount))]

    def distinguished_moves(self, sigma):
        s = sigma.s
        moves = [AdvCraft(Push(ADV, s.threshold))]
        if 0 < s.bal < s.threshold:
            moves.insert(0, AdvCraft(Push(ADV, s.threshold - s.bal)))
        return moves

    def describe(self, s: CoinPusherState) -> str:
        ids = [i for i, _ in s.mempool]
        return f"CoinPusher{{bal: {s.bal:.10g}, threshold: {s.threshold:.10g}}} | Hon{s.wal} | mempool {ids}"


def _trigger(s: CoinPusherState) -> AdvCraft:
    return AdvCraft(Push(ADV, s.threshold))


def is_empty(sigma: SysState) -> bool:
    return len(sigma.s.mempool) == 0


def one_or_less(sigma: SysState) -> bool:
    mp = sigma.s.mempool
    return len(mp) == 0 or (len(mp) == 1 and not mp[0][1].sender.adversary)


def coinpusher_guess_empty(sys: CoinPusher, sigma: SysState) -> float:
    if not is_empty(sigma):
        raise InvariantViolated("mempool is not empty")
    return sys.prices[T0] * sigma.s.bal


def tx_loads_balance(s: CoinPusherState, tx: Push) -> bool:
    """The pending push is executable and stays below the threshold on an empty balance."""
    return not reaches(tx.v, s.threshold) and tx.v <= s.wal[T0]


def coinpusher_guess_singleton(sys: CoinPusher, sigma: SysState) -> float:
    if not one_or_less(sigma):
        raise InvariantViolated("mempool must be empty or a single honest push")
    s = sigma.s
    if not s.mempool:
        return sys.prices[T0] * s.bal
    tx = s.mempool[0][1]
    extra = tx.v if tx_loads_balance(s, tx) else 0.0
    return sys.prices[T0] * (s.bal + extra)


def coinpusher_witness_empty(sigma: SysState) -> list:
    return [_trigger(sigma.s)]


def coinpusher_witness_singleton(sigma: SysState) -> list:
    s = sigma.s
    if not s.mempool:
        return coinpusher_witness_empty(sigma)
    tx_id = s.mempool[0][0]
    return [_trigger(s), FromMempool(tx_id), _trigger(s)]


def coinpusher_strategy_general(sigma: SysState) -> list:
    """Trigger, then each pending push in mempool order followed by a trigger."""
    s = sigma.s
    trace = [_trigger(s)]
    for tx_id, _ in s.mempool:
        trace += [FromMempool(tx_id), _trigger(s)]
    return trace


def general_strategy_value(sys: CoinPusher, sigma: SysState) -> float:
    """Closed form of what the in-order interleaving extracts.

    The cumulative honest wallet shrinks as pending pushes land, so a push is
    counted only if it is still affordable when its turn comes.
    """
    s = sigma.s
    wal = s.wal[T0]
    total = s.bal
    for _, tx in s.mempool:
        if tx.sender.adversary or tx.v > wal:
            continue
        if not reaches(tx.v, s.threshold):
            total += tx.v
            wal -= tx.v
    return sys.prices[T0] * total


def empty_guess_spec(sys: CoinPusher) -> GuessSpec:
    return GuessSpec(
        name="coinpusher-empty",
        invariant=is_empty,
        guess=lambda sigma: coinpusher_guess_empty(sys, sigma),
        witness=coinpusher_witness_empty,
    )


def singleton_guess_spec(sys: CoinPusher) -> GuessSpec:
    return GuessSpec(
        name="coinpusher-one-or-less",
        invariant=one_or_less,
        guess=lambda sigma: coinpusher_guess_singleton(sys, sigma),
        witness=coinpusher_witness_singleton,
    )
