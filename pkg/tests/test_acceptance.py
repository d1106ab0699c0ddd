"""Acceptance gate: one test per criterion, each at its stated tolerance and time limit.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary prints
one PASS/FAIL line per criterion.
"""

import math
import random
import time

import pytest

from mevc import verify
from mevc.contracts import AMM, Airdrop, CoinPusher, Drop, Push, Swap, airdrop, amm, coinpusher
from mevc.core import (
    ADV,
    AdvCraft,
    FromMempool,
    apply_trace,
    check_token_preservation,
    gain_trace,
    honest,
)
from mevc.oracle import GridSpec, brute_force_mev, mempool_interleavings

TOL = 1e-9
SAMPLES = 10_000


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def prices49():
    return AMM({"T0": 4.0, "T1": 9.0})


@pytest.mark.criterion(1)
def test_coinpusher_single_push():
    with Timer() as t:
        sys = CoinPusher()
        sigma = sys.state(100.0, 0.0, 1.0, [("p", Push(honest("A"), 1.0))])
        spec = coinpusher.singleton_guess_spec(sys)
        guess = spec.guess(sigma)
        witness_gain = gain_trace(sys, sigma, spec.witness(sigma))
        res = brute_force_mev(sys, sigma, GridSpec(1.0, 200.0, 4))
    assert guess == pytest.approx(1.0, abs=TOL)
    assert witness_gain == pytest.approx(1.0, abs=TOL)
    assert res.exhausted and res.value == pytest.approx(1.0, abs=TOL)
    assert t.elapsed < 5.0


@pytest.mark.criterion(2)
def test_coinpusher_empty_mempool():
    with Timer() as t:
        sys = CoinPusher()
        sigma = sys.state(100.0, 0.0, 1.0)
        spec = coinpusher.empty_guess_spec(sys)
        guess = spec.guess(sigma)
        witness_gain = gain_trace(sys, sigma, spec.witness(sigma))
        res = brute_force_mev(sys, sigma, GridSpec(1.0, 200.0, 4))
    assert guess == 0.0 and witness_gain == 0.0
    assert res.exhausted and res.value == 0.0
    assert t.elapsed < 1.0


@pytest.mark.criterion(3)
def test_amm_arbitrage():
    with Timer() as t:
        sys = prices49()
        sigma = sys.state((6.0, 6.0))
        value = amm.extractable(sigma.s, sys.prices)
        arb = amm.arbitrage_move(sigma.s, sys.prices)
        replay = gain_trace(sys, sigma, [arb])
        res = brute_force_mev(sys, sigma, GridSpec(1.0, 12.0, 2))
    assert value == 6.0
    assert arb == AdvCraft(Swap(ADV, 3.0, "T0", 0.0))
    assert replay == pytest.approx(6.0, abs=TOL)
    assert res.value == pytest.approx(6.0, abs=TOL)
    assert t.elapsed < 5.0


@pytest.mark.criterion(4)
def test_amm_sandwich():
    with Timer() as t:
        sys = prices49()
        sigma = sys.state((6.0, 6.0), {"T0": 3.0}, [("a", Swap(honest("A"), 3.0, "T0", 1.0))])
        guess = amm.amm_guess_singleton(sys, sigma)
        replay = gain_trace(sys, sigma, amm.sandwich_plan(sys, sigma).trace)
        grid = GridSpec(1.0, 12.0, 3)
        res = brute_force_mev(sys, sigma, grid)
        best = max(gain_trace(sys, sigma, tr) for tr in mempool_interleavings(sys, sigma, grid))
    assert guess == pytest.approx(9.0, abs=TOL)
    assert replay == pytest.approx(9.0, abs=TOL)
    assert res.value == pytest.approx(9.0, abs=TOL)
    assert best <= 9.0 + 1e-6
    assert t.elapsed < 30.0


@pytest.mark.criterion(5)
def test_tight_state_root():
    rng = random.Random(20240501)
    worst = 0.0
    for _ in range(1000):
        k = 10 ** rng.uniform(-6, 12)
        v0 = 10 ** rng.uniform(-4, 6)
        vmin = 10 ** rng.uniform(-9, 0) * math.sqrt(k)
        r0 = math.sqrt(k)
        s = amm.AmmState(amm.Wallet.of(("T0", "T1"), {"T0": r0, "T1": k / r0}), amm.Wallet.zero(("T0", "T1")))
        tx = Swap(honest("A"), v0, rng.choice(["T0", "T1"]), vmin)
        tight = amm.tight_state(s, tx)
        out = amm.swap_output(tight.r[tx.tin], tight.r[tx.tout], v0)
        worst = max(worst, abs(out - vmin) / vmin)
    assert worst <= 1e-9


@pytest.mark.criterion(6)
def test_mevsup_without_slippage_bound():
    # Checked exactly as stated: supremum 12 and gain 12 - 972/((9+x)(6+x)).
    with Timer() as t:
        sys = prices49()
        sigma = sys.state((6.0, 6.0), {"T0": 3.0}, [("a", Swap(honest("A"), 3.0, "T0", 0.0))])
        sup = amm.mevsup_value(sys, sigma)
        rows = []
        for x in (1.0, 10.0, 100.0, 1000.0):
            g = gain_trace(sys, sigma, amm.mevsup_trace_family(sys, sigma, x))
            rows.append((x, g, 12.0 - 972.0 / ((9.0 + x) * (6.0 + x))))
    print(f"supremum reported {sup}")
    for x, g, stated in rows:
        print(f"x={x:g}: replayed {g:.9f}  stated {stated:.9f}")
    assert t.elapsed < 5.0
    assert all(g < 12.0 for _, g, _ in rows)
    assert sup == pytest.approx(12.0, abs=1e-6)
    for x, g, stated in rows:
        assert g == pytest.approx(stated, abs=1e-6)


def case_study_specs():
    cp = CoinPusher()
    a = prices49()
    ad = Airdrop()
    return [
        (ad, airdrop.guess_spec(ad), ad.state(5.0)),
        (cp, coinpusher.empty_guess_spec(cp), cp.state(100.0, 30.0, 1.0)),
        (cp, coinpusher.singleton_guess_spec(cp), cp.state(100.0, 0.0, 1.0, [("p", Push(honest("A"), 1.0))])),
        (cp, coinpusher.singleton_guess_spec(cp), cp.state(10.0, 4.0, 8.0, [("p", Push(honest("A"), 3.0))])),
        (a, amm.empty_guess_spec(a), a.state((6.0, 6.0))),
        (a, amm.singleton_guess_spec(a), a.state((6.0, 6.0), {"T0": 3.0}, [("a", Swap(honest("A"), 3.0, "T0", 1.0))])),
        (a, amm.singleton_guess_spec(a), a.state((2.0, 50.0), {"T1": 20.0}, [("b", Swap(honest("B"), 20.0, "T1", 0.1))])),
    ]


def corrupt(spec, branch):
    return verify.GuessSpec(
        spec.name + "+1", spec.invariant, lambda s: spec.guess(s) + (1.0 if branch(s) else 0.0), spec.witness
    )


@pytest.mark.criterion(7)
def test_characterization_harness():
    for sys, spec, sigma in case_study_specs():
        sampler = verify.MoveSampler.for_state(sys, sigma)
        inv = verify.check_invariant_soundness(sys, spec, sigma, sampler, SAMPLES, seed=0)
        snd = verify.check_guess_soundness(sys, spec, sigma, sampler, SAMPLES, seed=0)
        assert inv.samples >= SAMPLES and inv.passed, spec.name
        assert snd.samples >= SAMPLES and snd.passed, (spec.name, snd.max_violation)

    cp, a, ad = CoinPusher(), prices49(), Airdrop()
    corrupted = [
        (cp, corrupt(coinpusher.singleton_guess_spec(cp), coinpusher.is_empty),
         cp.state(100.0, 0.0, 1.0, [("p", Push(honest("A"), 1.0))])),
        (a, corrupt(amm.singleton_guess_spec(a), amm.is_empty),
         a.state((6.0, 6.0), {"T0": 3.0}, [("a", Swap(honest("A"), 3.0, "T0", 1.0))])),
        (ad, corrupt(airdrop.guess_spec(ad), lambda s: s.s.bal == 0.0), ad.state(5.0)),
    ]
    for sys, spec, sigma in corrupted:
        sampler = verify.MoveSampler.for_state(sys, sigma)
        refuted = 0
        for seed in range(20):
            res = verify.check_guess_soundness(sys, spec, sigma, sampler, SAMPLES, seed=seed, max_counterexamples=1)
            refuted += not res.passed
        assert refuted / 20 >= 0.99, (spec.name, refuted)


def random_case(rng):
    """A random system, state and trace drawn across all three contracts."""
    kind = rng.choice(["airdrop", "coinpusher", "amm"])
    if kind == "airdrop":
        sys = Airdrop(rng.uniform(0.1, 10))
        sigma = sys.state(rng.uniform(0, 100), rng.uniform(0, 10), [("h", Drop(honest("H"), rng.uniform(0.1, 50)))])
        amount = lambda: rng.uniform(0.01, 120)
        mk = lambda: AdvCraft(Drop(ADV, amount()))
    elif kind == "coinpusher":
        sys = CoinPusher(rng.uniform(0.1, 10))
        th = rng.uniform(1, 100)
        pool = [(f"h{i}", Push(honest(f"H{i}"), rng.uniform(0.1, th))) for i in range(rng.randint(0, 3))]
        sigma = sys.state(th, rng.uniform(0, th * 0.99), rng.uniform(0, 100), pool)
        mk = lambda: AdvCraft(Push(ADV, rng.uniform(0.01, 1.5 * th)))
    else:
        sys = AMM({"T0": rng.uniform(0.1, 10), "T1": rng.uniform(0.1, 10)})
        pool = []
        for i in range(rng.randint(0, 2)):
            pool.append((f"h{i}", Swap(honest(f"H{i}"), rng.uniform(0.1, 50), rng.choice(["T0", "T1"]), rng.uniform(0, 5))))
        sigma = sys.state((rng.uniform(0.1, 100), rng.uniform(0.1, 100)), {"T0": rng.uniform(0, 60), "T1": rng.uniform(0, 60)}, pool)
        mk = lambda: AdvCraft(Swap(ADV, 10 ** rng.uniform(-3, 3), rng.choice(["T0", "T1"]), rng.choice([0.0, rng.uniform(0, 5)])))

    def move(state):
        ids = [i for i, _ in state.s.mempool]
        if ids and rng.random() < 0.3:
            return FromMempool(rng.choice(ids))
        return mk()

    return sys, sigma, move


@pytest.mark.criterion(8)
def test_global_properties():
    rng = random.Random(8)
    bad = {"preservation": 0, "bound": 0, "transitivity": 0, "product": 0}
    for _ in range(SAMPLES):
        sys, sigma, move = random_case(rng)
        # token preservation of a single move
        if not check_token_preservation(sys, sigma, move(sigma)):
            bad["preservation"] += 1
        # gain of a random trace never exceeds the honest value at its start
        tr, state, mid = [], sigma, None
        n = rng.randint(1, 6)
        for i in range(n):
            m = move(state)
            tr.append(m)
            state = sys.semantics(state, m) or state
            if i == n // 2:
                mid = state
        g = gain_trace(sys, sigma, tr)
        hv = sys.honest_value(sigma)
        if g > hv + 1e-6 * max(1.0, hv):
            bad["bound"] += 1
        # gain is transitive through an intermediate state
        end = apply_trace(sys, sigma, tr)
        lhs = sys.gain_state(sigma, end)
        rhs = sys.gain_state(sigma, mid) + sys.gain_state(mid, end)
        if abs(lhs - rhs) > 1e-9 * max(1.0, abs(lhs), abs(rhs)):
            bad["transitivity"] += 1
    for _ in range(SAMPLES):
        sys = AMM({"T0": 1.0, "T1": 1.0})
        sigma = sys.state((10 ** rng.uniform(-3, 6), 10 ** rng.uniform(-3, 6)), {"T0": 1e9, "T1": 1e9})
        tin = rng.choice(["T0", "T1"])
        v = 10 ** rng.uniform(-3, 6)
        m = AdvCraft(Swap(ADV, v, tin)) if rng.random() < 0.5 else None
        if m is None:
            sigma = sys.state((sigma.s.r["T0"], sigma.s.r["T1"]), {"T0": 1e9, "T1": 1e9}, [("h", Swap(honest("H"), v, tin))])
            m = FromMempool("h")
        after = sys.semantics(sigma, m)
        if after is not None and abs(after.s.k - sigma.s.k) > 1e-9 * sigma.s.k:
            bad["product"] += 1
    assert bad == {"preservation": 0, "bound": 0, "transitivity": 0, "product": 0}


@pytest.mark.criterion(9)
def test_completeness_from_oracle():
    sys = CoinPusher()
    grid = GridSpec(2.0, 10.0, 4)  # amounts 2, 4, 6, 8, 10
    assert len(grid.amounts()) == 5
    sigma0 = sys.state(10.0, 0.0, 4.0, [("p", Push(honest("A"), 4.0))])
    closed = coinpusher.singleton_guess_spec(sys)
    oracle_spec = verify.build_guess_from_oracle(sys, coinpusher.one_or_less, lambda s: brute_force_mev(sys, s, grid))
    states = verify.grid_states(sys, sigma0, grid, 2, invariant=coinpusher.one_or_less)
    assert len(states) > 10
    for s in states:
        assert oracle_spec.guess(s) == pytest.approx(closed.guess(s), abs=TOL)
        assert verify.check_coherence(sys, s, oracle_spec, eps=TOL).passed
    res = verify.check_grid_soundness(sys, oracle_spec, states, grid, eps=TOL)
    assert res.samples > 0 and res.passed, res.max_violation


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
