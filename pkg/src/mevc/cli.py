"""mevc: offline MEV analysis of scenario files.

    mevc analyze  scenario.json   closed-form MEV + characterization checks + oracle
    mevc oracle   scenario.json   brute-force search only
    mevc mevsup   scenario.json   supremum approach for an AMM swap without slippage bound
    mevc trace    scenario.json "swap0(3,0); mempool(a); swap1(1,0)"

Exit codes: 0 pass, 2 invalid input, 3 a check failed, 4 oracle budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys as _sys
from typing import Optional

from mevc import __version__
from mevc.contracts import airdrop, amm, coinpusher
from mevc.core import ADV, EPS_VALUE, AdvCraft, FromMempool, trace_steps
from mevc.oracle import GridSpec, brute_force_mev
from mevc.scenario import Scenario, ScenarioError, load_scenario, state_summary
from mevc import verify

log = logging.getLogger("mevc")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CHECK_FAILED = 3
EXIT_BUDGET = 4

DEFAULT_SAMPLES = 10_000
DEFAULT_X_SCHEDULE = (1.0, 10.0, 100.0, 1000.0)


class UsageError(Exception):
    pass


def guess_spec_for(scenario: Scenario, sys):
    n = len(scenario.mempool)
    if scenario.kind == "airdrop":
        return airdrop.guess_spec(sys)
    if n > 1:
        raise UsageError(f"mempool: {n} pending transactions; closed-form MEV covers at most one")
    if scenario.kind == "coinpusher":
        return coinpusher.singleton_guess_spec(sys) if n else coinpusher.empty_guess_spec(sys)
    return amm.singleton_guess_spec(sys) if n else amm.empty_guess_spec(sys)


def default_grid(scenario: Scenario, sigma) -> GridSpec:
    n = len(scenario.mempool)
    if scenario.kind == "airdrop":
        top = max(scenario.bal, 1.0)
        depth = 2
    elif scenario.kind == "coinpusher":
        top = scenario.threshold
        depth = 2 * n + 1 if n else 2
    else:
        top = 2.0 * max(scenario.reserves.values())
        depth = 3 if n else 2
    return GridSpec(top / 10.0, top, depth)


def resolve_grid(scenario: Scenario, sigma, args) -> GridSpec:
    base = default_grid(scenario, sigma)
    o = scenario.oracle
    step = args.grid_step if args.grid_step is not None else o.get("grid_step", base.amount_step)
    top = args.grid_max if args.grid_max is not None else o.get("grid_max", base.amount_max)
    depth = args.depth if args.depth is not None else o.get("depth", base.max_depth)
    include = o.get("include_mempool", True)
    try:
        return GridSpec(float(step), float(top), int(depth), include)
    except ValueError as exc:
        raise UsageError(f"oracle: {exc}") from exc


def _seed(scenario, args) -> int:
    return args.seed if args.seed is not None else scenario.sampler.get("seed", 0)


def _samples(scenario, args) -> int:
    return args.samples if args.samples is not None else scenario.sampler.get("samples", DEFAULT_SAMPLES)


def replay_dump(sys, sigma, trace) -> dict:
    """Per-move replay with the state after each move and running gain."""
    moves = []
    for m, before, after in trace_steps(sys, sigma, trace):
        reverted = after is None
        now = before if reverted else after
        moves.append(
            {
                "move": str(m),
                "reverted": reverted,
                "gain": 0.0 if reverted else sys.gain_state(before, after),
                "cumulative_gain": sys.gain_state(sigma, now),
                "state_after": state_summary(sys, now),
            }
        )
    final = moves[-1]["cumulative_gain"] if moves else 0.0
    return {"initial_state": state_summary(sys, sigma), "moves": moves, "gain": final}


def _header(command: str, scenario: Scenario) -> dict:
    return {"tool": "mevc", "version": __version__, "command": command, "scenario": scenario.to_dict()}


def run_analyze(scenario: Scenario, args) -> tuple:
    sys, sigma = scenario.build()
    spec = guess_spec_for(scenario, sys)
    seed = _seed(scenario, args)
    n = _samples(scenario, args)
    grid = resolve_grid(scenario, sigma, args)
    sampler = verify.MoveSampler.for_state(sys, sigma, step=grid.amount_step)

    coherence = verify.check_coherence(sys, sigma, spec)
    inv = verify.check_invariant_soundness(sys, spec, sigma, sampler, n, seed=seed)
    sound = verify.check_guess_soundness(sys, spec, sigma, sampler, n, seed=seed)
    traces = verify.random_traces(sys, sigma, sampler, max(1, n // 50), seed=seed)
    tele = verify.replay_telescoping(sys, spec, sigma, traces)
    res = brute_force_mev(sys, sigma, grid)
    cross = verify.OracleCrosscheck(res.value, coherence.claimed, res.exhausted, res.nodes_expanded, res.trace)
    report = verify.VerificationReport(coherence, inv, sound, tele, cross)

    doc = _header("analyze", scenario)
    doc.update(
        {
            "seed": seed,
            "guess_spec": spec.name,
            "claim": {
                "kind": "mev",
                "value": coherence.claimed,
                "status": "refutation-tested" if report.passed else "refuted",
            },
            "witness": replay_dump(sys, sigma, coherence.witness),
            "verification": report.to_dict(sys),
            "oracle": res.to_dict(),
            "passed": report.passed,
        }
    )
    return doc, EXIT_OK if report.passed else EXIT_CHECK_FAILED


def run_oracle(scenario: Scenario, args) -> tuple:
    sys, sigma = scenario.build()
    grid = resolve_grid(scenario, sigma, args)
    res = brute_force_mev(sys, sigma, grid)
    doc = _header("oracle", scenario)
    doc["oracle"] = res.to_dict()
    doc["witness"] = replay_dump(sys, sigma, res.trace)
    return doc, EXIT_OK if res.exhausted else EXIT_BUDGET


def run_mevsup(scenario: Scenario, args) -> tuple:
    sys, sigma = scenario.build()
    if scenario.kind != "amm" or not amm.in_mevsup_regime(sigma):
        raise UsageError("mempool: mevsup needs an amm scenario with one executable honest swap with vmin 0")
    xs = args.x if args.x else list(DEFAULT_X_SCHEDULE)
    sup = amm.mevsup_value(sys, sigma)
    claim = verify.estimate_mev_sup(sys, sigma, lambda x: amm.mevsup_trace_family(sys, sigma, x), xs, sup)
    doc = _header("mevsup", scenario)
    rows = []
    for x, g, gap in zip(claim.details["xs"], claim.details["gains"], claim.details["gaps"]):
        closed = amm.mevsup_gain_closed_form(sys, sigma, x)
        rows.append(
            {
                "x": x,
                "gain": g,
                "closed_form": closed,
                "gap": gap,
                "trace": [str(m) for m in amm.mevsup_trace_family(sys, sigma, x)],
            }
        )
    doc.update(
        {
            "claim": {"kind": claim.kind, "value": claim.value},
            "extractable": amm.extractable(sigma.s, sys.prices),
            "schedule": rows,
            "strictly_below": claim.details["strictly_below"],
            "verdict": claim.details["verdict"],
            "closed_form_matches": all(abs(r["gain"] - r["closed_form"]) <= EPS_VALUE for r in rows),
        }
    )
    return doc, EXIT_OK


_MOVE_RE = re.compile(r"^\s*(\w+)\s*\(([^)]*)\)\s*$")


def parse_trace(kind: str, text: str) -> list:
    moves = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        m = _MOVE_RE.match(chunk)
        if not m:
            raise UsageError(f"trace: cannot parse move {chunk.strip()!r}")
        name, args = m.group(1), [a.strip() for a in m.group(2).split(",") if a.strip()]
        try:
            if name in ("mempool", "mp") and len(args) == 1:
                moves.append(FromMempool(args[0]))
            elif kind == "airdrop" and name == "drop" and len(args) == 1:
                moves.append(AdvCraft(airdrop.Drop(ADV, float(args[0]))))
            elif kind == "coinpusher" and name == "push" and len(args) == 1:
                moves.append(AdvCraft(coinpusher.Push(ADV, float(args[0]))))
            elif kind == "amm" and name in ("swap0", "swap1") and len(args) in (1, 2):
                vmin = float(args[1]) if len(args) == 2 else 0.0
                moves.append(AdvCraft(amm.Swap(ADV, float(args[0]), "T" + name[-1], vmin)))
            else:
                raise UsageError(f"trace: {chunk.strip()!r} is not a move of {kind} scenarios")
        except ValueError as exc:
            raise UsageError(f"trace: {chunk.strip()!r}: {exc}") from exc
    return moves


def format_replay(sys, sigma, trace) -> str:
    lines = [f"     {sys.describe(sigma.s)} | Adv{sigma.delta}"]
    now = sigma
    for i, (m, before, after) in enumerate(trace_steps(sys, sigma, trace), 1):
        if after is None:
            lines.append(f"({i}) {m}  reverted")
            lines.append(f"  -> {sys.describe(before.s)} | Adv{before.delta}  (unchanged)")
            continue
        g = sys.gain_state(before, after)
        total = sys.gain_state(sigma, after)
        lines.append(f"({i}) {m}  gain {g:+.10g}  total {total:+.10g}")
        lines.append(f"  -> {sys.describe(after.s)} | Adv{after.delta}")
        now = after
    lines.append(f"gain {sys.gain_state(sigma, now):+.10g}")
    return "\n".join(lines) + "\n"


def run_trace(scenario: Scenario, args) -> tuple:
    sys, sigma = scenario.build()
    trace = parse_trace(scenario.kind, args.trace)
    if args.json:
        doc = _header("trace", scenario)
        doc["replay"] = replay_dump(sys, sigma, trace)
        return doc, EXIT_OK
    return format_replay(sys, sigma, trace), EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mevc", description="Exact MEV analysis of adversarial contract scenarios.")
    p.add_argument("--version", action="version", version=f"mevc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("-v", "--verbose", action="store_true")

    def grid_flags(sp):
        sp.add_argument("--grid-step", type=float)
        sp.add_argument("--grid-max", type=float)
        sp.add_argument("--depth", type=int)

    a = sub.add_parser("analyze", help="closed-form MEV with characterization checks and oracle cross-check")
    common(a)
    grid_flags(a)
    a.add_argument("--samples", type=int, help=f"soundness samples (default {DEFAULT_SAMPLES})")
    a.add_argument("--seed", type=int)

    o = sub.add_parser("oracle", help="brute-force MEV over the move grid")
    common(o)
    grid_flags(o)

    s = sub.add_parser("mevsup", help="supremum approach for a pending swap with vmin 0")
    common(s)
    s.add_argument("--x", type=float, action="append", help="trace-family parameter; repeatable")

    t = sub.add_parser("trace", help="replay a trace literal, e.g. \"swap0(3,0); mempool(a)\"")
    common(t)
    t.add_argument("trace", help="moves separated by ';'")
    t.add_argument("--json", action="store_true", help="emit a JSON replay instead of text")
    return p


COMMANDS = {"analyze": run_analyze, "oracle": run_oracle, "mevsup": run_mevsup, "trace": run_trace}


def emit(payload, out: Optional[str]) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        scenario = load_scenario(args.scenario, allow_zero_vmin=args.command in ("mevsup", "oracle", "trace"))
        payload, code = COMMANDS[args.command](scenario, args)
    except ScenarioError as exc:
        for line in exc.errors:
            print(f"error: {line}", file=_sys.stderr)
        return EXIT_INVALID
    except UsageError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INVALID
    except verify.InvariantViolated as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_INVALID
    emit(payload, args.out)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
