"""Adversarial transition-system model shared by all contracts.

A system state pairs the adversary's signed wallet with the honest side of a
contract (contract variables, cumulative honest wallet, mempool).  Contracts
plug in by subclassing :class:`ContractSystem` and providing the semantics of
a single transaction.  Everything here is immutable; states can be hashed and
shared freely.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

EPS_TOKEN = 1e-9
EPS_VALUE = 1e-6


class NotCraftable(ValueError):
    """Raised when an adversarial move carries a transaction the adversary cannot sign."""


@dataclass(frozen=True)
class Wallet:
    """Total map from the token universe to amounts.

    Used both for honest wallets (non-negative, enforced by the contract
    states) and for the adversary's wallet, which may go negative.
    """

    tokens: tuple[str, ...]
    amounts: tuple[float, ...]

    @classmethod
    def zero(cls, tokens: Sequence[str]) -> "Wallet":
        return cls(tuple(tokens), (0.0,) * len(tokens))

    @classmethod
    def of(cls, tokens: Sequence[str], holdings: Optional[Mapping[str, float]] = None) -> "Wallet":
        holdings = dict(holdings or {})
        unknown = set(holdings) - set(tokens)
        if unknown:
            raise KeyError(f"tokens outside the universe {tuple(tokens)}: {sorted(unknown)}")
        return cls(tuple(tokens), tuple(float(holdings.get(t, 0.0)) for t in tokens))

    def __getitem__(self, token: str) -> float:
        try:
            return self.amounts[self.tokens.index(token)]
        except ValueError:
            return 0.0

    def credit(self, token: str, amount: float) -> "Wallet":
        i = self.tokens.index(token)
        amounts = list(self.amounts)
        amounts[i] = amounts[i] + amount
        return Wallet(self.tokens, tuple(amounts))

    def debit(self, token: str, amount: float) -> "Wallet":
        return self.credit(token, -amount)

    def set(self, token: str, amount: float) -> "Wallet":
        i = self.tokens.index(token)
        amounts = list(self.amounts)
        amounts[i] = float(amount)
        return Wallet(self.tokens, tuple(amounts))

    def _check_universe(self, other: "Wallet") -> None:
        if self.tokens != other.tokens:
            raise ValueError(f"token universes differ: {self.tokens} vs {other.tokens}")

    def __add__(self, other: "Wallet") -> "Wallet":
        self._check_universe(other)
        return Wallet(self.tokens, tuple(a + b for a, b in zip(self.amounts, other.amounts)))

    def __sub__(self, other: "Wallet") -> "Wallet":
        self._check_universe(other)
        return Wallet(self.tokens, tuple(a - b for a, b in zip(self.amounts, other.amounts)))

    def __le__(self, other: "Wallet") -> bool:
        self._check_universe(other)
        return all(a <= b for a, b in zip(self.amounts, other.amounts))

    def is_nonnegative(self) -> bool:
        return all(a >= 0 for a in self.amounts)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.tokens, self.amounts))

    def __repr__(self) -> str:
        inner = ", ".join(f"{t}: {_fmt(a)}" for t, a in zip(self.tokens, self.amounts))
        return "{" + inner + "}"


def _fmt(x: float) -> str:
    return f"{x:.10g}"


@dataclass(frozen=True)
class Participant:
    name: str
    adversary: bool = False

    def __str__(self) -> str:
        return self.name


ADV = Participant("Adv", adversary=True)


def honest(name: str) -> Participant:
    return Participant(name)


# Mempools are ordered association lists of (TxId, Tx).
Mempool = tuple


def make_mempool(entries: Iterable[tuple[str, Any]]) -> Mempool:
    entries = tuple((str(i), tx) for i, tx in entries)
    ids = [i for i, _ in entries]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate transaction ids in mempool: {ids}")
    return entries


def mempool_lookup(mempool: Mempool, tx_id: str) -> Any:
    for i, tx in mempool:
        if i == tx_id:
            return tx
    return None


def mempool_remove(mempool: Mempool, tx_id: str) -> Mempool:
    return tuple((i, tx) for i, tx in mempool if i != tx_id)


@dataclass(frozen=True)
class AdvCraft:
    """Adversary appends a transaction it crafted and signed itself."""

    tx: Any

    def __post_init__(self):
        if not self.tx.adv_craftable():
            raise NotCraftable(f"adversary cannot craft {self.tx!r}")

    def __str__(self) -> str:
        return str(self.tx)


@dataclass(frozen=True)
class FromMempool:
    """Adversary appends the pending honest transaction with the given id."""

    id: str

    def __str__(self) -> str:
        return f"mempool({self.id})"


Move = Union[AdvCraft, FromMempool]
Trace = list


@dataclass(frozen=True)
class SysState:
    delta: Wallet
    s: Any


def token_value(prices: Mapping[str, float], w: Wallet) -> float:
    """Linear valuation of a wallet; summation follows the wallet's token order."""
    total = 0.0
    for token, amount in zip(w.tokens, w.amounts):
        total += prices[token] * amount
    return total


def gain_state(prices: Mapping[str, float], sigma: SysState, sigma2: SysState) -> float:
    return token_value(prices, sigma2.delta) - token_value(prices, sigma.delta)


class ContractSystem(ABC):
    """A contract plugged into the adversarial transition system.

    Subclasses supply the token universe, prices, the effect of executing a
    single transaction, and how honest tokens are counted.  Move dispatch and
    mempool bookkeeping are shared: a mempool transaction is removed only
    when it succeeds, and a failing move leaves the state untouched.
    """

    tokens: tuple[str, ...] = ()
    kind: str = ""

    def __init__(self, prices: Mapping[str, float]):
        missing = set(self.tokens) - set(prices)
        if missing:
            raise ValueError(f"missing prices for {sorted(missing)}")
        for t in self.tokens:
            if not prices[t] > 0:
                raise ValueError(f"price of {t} must be positive, got {prices[t]}")
        self.prices = {t: float(prices[t]) for t in self.tokens}

    @abstractmethod
    def exec_tx(self, sigma: SysState, tx: Any) -> Optional[SysState]:
        """Execute one transaction; None when it reverts."""

    @abstractmethod
    def hon_tokens(self, s: Any) -> Wallet:
        """Tokens held by the contract and all honest participants."""

    @abstractmethod
    def adv_moves(self, sigma: SysState, amount: float) -> list:
        """Adversarial moves spending ``amount`` units, one per direction."""

    def distinguished_moves(self, sigma: SysState) -> list:
        """State-dependent moves whose amounts realise known optima."""
        return []

    def adv_craftable(self, tx: Any) -> bool:
        return tx.adv_craftable()

    def semantics(self, sigma: SysState, m: Move) -> Optional[SysState]:
        if isinstance(m, AdvCraft):
            return self.exec_tx(sigma, m.tx)
        if isinstance(m, FromMempool):
            tx = mempool_lookup(sigma.s.mempool, m.id)
            if tx is None:
                return None
            after = self.exec_tx(sigma, tx)
            if after is None:
                return None
            return replace(after, s=replace(after.s, mempool=mempool_remove(after.s.mempool, m.id)))
        raise TypeError(f"not a move: {m!r}")

    def mempool_moves(self, sigma: SysState) -> list:
        return [FromMempool(i) for i, _ in sigma.s.mempool]

    def move_grid(self, sigma: SysState, grid) -> list:
        """Finite move universe at ``sigma`` for exhaustive search.

        Order: mempool moves, grid amounts ascending, then distinguished
        moves.  Duplicates keep their first position.
        """
        moves = []
        if grid.include_mempool:
            moves.extend(self.mempool_moves(sigma))
        for amount in grid.amounts():
            moves.extend(self.adv_moves(sigma, amount))
        if grid.distinguished:
            moves.extend(self.distinguished_moves(sigma))
        seen = set()
        unique = []
        for m in moves:
            if m not in seen:
                seen.add(m)
                unique.append(m)
        return unique

    def token_value(self, w: Wallet) -> float:
        return token_value(self.prices, w)

    def gain_state(self, sigma: SysState, sigma2: SysState) -> float:
        return gain_state(self.prices, sigma, sigma2)

    def honest_value(self, sigma: SysState) -> float:
        return self.token_value(self.hon_tokens(sigma.s))

    def capturable_value(self, sigma: SysState) -> float:
        """Upper bound on the adversary's further gain from ``sigma``.

        Honest wallets change only through honest transactions, so once the
        mempool is empty only the contract's own holdings are up for grabs.
        """
        wal = getattr(sigma.s, "wal", None)
        if sigma.s.mempool or wal is None:
            return self.honest_value(sigma)
        return self.token_value(self.hon_tokens(sigma.s) - wal)

    def describe(self, s: Any) -> str:
        return repr(s)


def apply_move(sys: ContractSystem, sigma: SysState, m: Move) -> Optional[SysState]:
    return sys.semantics(sigma, m)


def apply_trace(sys: ContractSystem, sigma: SysState, tr: Iterable[Move]) -> SysState:
    for m in tr:
        after = sys.semantics(sigma, m)
        if after is not None:
            sigma = after
    return sigma


def trace_steps(sys: ContractSystem, sigma: SysState, tr: Iterable[Move]) -> list:
    """Replay a trace, returning (move, state_before, state_after_or_None) per move."""
    steps = []
    for m in tr:
        after = sys.semantics(sigma, m)
        steps.append((m, sigma, after))
        if after is not None:
            sigma = after
    return steps


def gain_trace(sys: ContractSystem, sigma: SysState, tr: Iterable[Move]) -> float:
    return sys.gain_state(sigma, apply_trace(sys, sigma, tr))


def check_token_preservation(sys: ContractSystem, sigma: SysState, m: Move, eps: float = EPS_TOKEN) -> bool:
    after = sys.semantics(sigma, m)
    if after is None:
        return True
    before_total = sys.hon_tokens(sigma.s) + sigma.delta
    after_total = sys.hon_tokens(after.s) + after.delta
    for a, b in zip(before_total.amounts, after_total.amounts):
        if abs(a - b) > eps * max(1.0, abs(a)):
            return False
    return True
