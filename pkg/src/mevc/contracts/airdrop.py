"""Airdrop: anyone may withdraw any part of the contract balance."""

from __future__ import annotations

from dataclasses import dataclass, replace

from mevc.core import ADV, AdvCraft, ContractSystem, Mempool, Participant, SysState, Wallet
from mevc.verify import GuessSpec

T0 = "T0"


@dataclass(frozen=True)
class Drop:
    sender: Participant
    v: float

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError(f"drop amount must be positive, got {self.v}")

    def adv_craftable(self) -> bool:
        return self.sender.adversary

    def __str__(self) -> str:
        return f"{self.sender}:drop({self.v:.10g})"


@dataclass(frozen=True)
class AirdropState:
    bal: float
    wal: Wallet
    mempool: Mempool = ()

    def __post_init__(self):
        if self.bal < 0:
            raise ValueError(f"contract balance must be non-negative, got {self.bal}")
        if not self.wal.is_nonnegative():
            raise ValueError(f"honest wallet must be non-negative, got {self.wal}")


class Airdrop(ContractSystem):
    tokens = (T0,)
    kind = "airdrop"

    def __init__(self, price: float = 1.0):
        super().__init__({T0: price})

    def state(self, bal: float, wal: float = 0.0, mempool: Mempool = (), delta=None) -> SysState:
        d = Wallet.of(self.tokens, delta)
        return SysState(d, AirdropState(float(bal), Wallet.of(self.tokens, {T0: wal}), tuple(mempool)))

    def exec_tx(self, sigma: SysState, tx: Drop):
        s = sigma.s
        if tx.v > s.bal:
            return None
        s2 = replace(s, bal=s.bal - tx.v)
        if tx.sender.adversary:
            return SysState(sigma.delta.credit(T0, tx.v), s2)
        return SysState(sigma.delta, replace(s2, wal=s.wal.credit(T0, tx.v)))

    def hon_tokens(self, s: AirdropState) -> Wallet:
        return s.wal.credit(T0, s.bal)

    def adv_moves(self, sigma, amount):
        return [AdvCraft(Drop(ADV, amount))]

    def distinguished_moves(self, sigma):
        bal = sigma.s.bal
        return [AdvCraft(Drop(ADV, bal))] if bal > 0 else []

    def describe(self, s: AirdropState) -> str:
        ids = [i for i, _ in s.mempool]
        return f"Airdrop{{bal: {s.bal:.10g}}} | Hon{s.wal} | mempool {ids}"


def airdrop_guess(sys: Airdrop, sigma: SysState) -> float:
    return sys.prices[T0] * sigma.s.bal


def airdrop_witness(sys: Airdrop, sigma: SysState) -> list:
    bal = sigma.s.bal
    return [AdvCraft(Drop(ADV, bal))] if bal > 0 else []


def guess_spec(sys: Airdrop) -> GuessSpec:
    return GuessSpec(
        name="airdrop",
        invariant=lambda sigma: True,
        guess=lambda sigma: airdrop_guess(sys, sigma),
        witness=lambda sigma: airdrop_witness(sys, sigma),
    )
