import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mevc.contracts import AMM, Airdrop, CoinPusher, Drop, Push, Swap
from mevc.core import (
    ADV,
    AdvCraft,
    FromMempool,
    NotCraftable,
    Wallet,
    apply_trace,
    check_token_preservation,
    gain_trace,
    honest,
    make_mempool,
    token_value,
    trace_steps,
)

amounts = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestWallet:
    def test_total_map(self):
        w = Wallet.of(("T0", "T1"), {"T0": 2})
        assert w["T0"] == 2.0
        assert w["T1"] == 0.0
        assert w["T9"] == 0.0

    def test_rejects_foreign_tokens(self):
        with pytest.raises(KeyError):
            Wallet.of(("T0",), {"T1": 1})

    def test_arithmetic(self):
        a = Wallet.of(("T0", "T1"), {"T0": 1, "T1": 2})
        b = Wallet.of(("T0", "T1"), {"T0": 3})
        assert (a + b).as_dict() == {"T0": 4.0, "T1": 2.0}
        assert (a - b).as_dict() == {"T0": -2.0, "T1": 2.0}
        assert not (a <= b)
        assert Wallet.zero(("T0",)) <= Wallet.of(("T0",), {"T0": 1})

    def test_universe_mismatch(self):
        with pytest.raises(ValueError):
            Wallet.zero(("T0",)) + Wallet.zero(("T1",))

    @given(amounts, amounts, st.floats(min_value=0, max_value=100), st.floats(min_value=0, max_value=100))
    def test_token_value_linear(self, x, y, p0, p1):
        tokens = ("T0", "T1")
        w1 = Wallet.of(tokens, {"T0": x})
        w2 = Wallet.of(tokens, {"T1": y})
        prices = {"T0": p0, "T1": p1}
        assert math.isclose(
            token_value(prices, w1 + w2),
            token_value(prices, w1) + token_value(prices, w2),
            rel_tol=1e-12,
            abs_tol=1e-6,
        )


def test_adversary_cannot_craft_honest_tx():
    with pytest.raises(NotCraftable):
        AdvCraft(Push(honest("A"), 1.0))
    AdvCraft(Push(ADV, 1.0))


def test_duplicate_mempool_ids_rejected():
    with pytest.raises(ValueError):
        make_mempool([("a", Push(honest("A"), 1.0)), ("a", Push(honest("B"), 2.0))])


def test_mempool_tx_removed_only_on_success(cp_sys):
    sigma = cp_sys.state(10.0, 0.0, 1.0, [("big", Push(honest("A"), 5.0)), ("ok", Push(honest("B"), 1.0))])
    assert cp_sys.semantics(sigma, FromMempool("big")) is None
    after = cp_sys.semantics(sigma, FromMempool("ok"))
    assert [i for i, _ in after.s.mempool] == ["big"]
    assert cp_sys.semantics(after, FromMempool("ok")) is None


def test_unknown_mempool_id_fails(cp_state, cp_sys):
    assert cp_sys.semantics(cp_state, FromMempool("nope")) is None


def test_failing_move_skipped_in_trace(airdrop_sys):
    sigma = airdrop_sys.state(5.0)
    tr = [AdvCraft(Drop(ADV, 7.0)), AdvCraft(Drop(ADV, 2.0))]
    assert gain_trace(airdrop_sys, sigma, tr) == 2.0
    steps = trace_steps(airdrop_sys, sigma, tr)
    assert steps[0][2] is None
    assert steps[1][1] == sigma


def test_states_are_immutable_and_hashable(sandwich_state, amm_sys):
    after = amm_sys.semantics(sandwich_state, FromMempool("a"))
    assert sandwich_state.s.r["T0"] == 6.0
    assert len({sandwich_state, after, sandwich_state}) == 2


def test_empty_trace_gain_zero(sandwich_state, amm_sys):
    assert apply_trace(amm_sys, sandwich_state, []) == sandwich_state
    assert gain_trace(amm_sys, sandwich_state, []) == 0.0


def test_prices_validated():
    with pytest.raises(ValueError):
        AMM({"T0": 1.0})
    with pytest.raises(ValueError):
        AMM({"T0": 1.0, "T1": 0.0})


@settings(max_examples=300, deadline=None)
@given(
    r0=st.floats(0.01, 1e4),
    r1=st.floats(0.01, 1e4),
    v=st.floats(1e-3, 1e4),
    tin=st.sampled_from(["T0", "T1"]),
    who=st.booleans(),
)
def test_amm_preserves_tokens(r0, r1, v, tin, who):
    sys = AMM({"T0": 2.0, "T1": 3.0})
    sigma = sys.state((r0, r1), {"T0": 1e4, "T1": 1e4}, [("h", Swap(honest("H"), v, tin))])
    m = AdvCraft(Swap(ADV, v, tin)) if who else FromMempool("h")
    assert check_token_preservation(sys, sigma, m)


@settings(max_examples=300, deadline=None)
@given(bal=st.floats(0, 100), wal=st.floats(0, 100), v=st.floats(0.01, 200), threshold=st.floats(1, 100))
def test_coinpusher_preserves_tokens(bal, wal, v, threshold):
    sys = CoinPusher()
    sigma = sys.state(threshold, bal, wal, [("h", Push(honest("H"), v))])
    for m in (AdvCraft(Push(ADV, v)), FromMempool("h")):
        assert check_token_preservation(sys, sigma, m)


@settings(max_examples=200, deadline=None)
@given(bal=st.floats(0, 100), v=st.floats(0.01, 200))
def test_airdrop_preserves_tokens(bal, v):
    sys = Airdrop()
    sigma = sys.state(bal, 0.0, [("h", Drop(honest("H"), v))])
    for m in (AdvCraft(Drop(ADV, v)), FromMempool("h")):
        assert check_token_preservation(sys, sigma, m)
