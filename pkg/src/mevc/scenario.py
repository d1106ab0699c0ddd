"""Scenario files: JSON description of a contract state to analyse.

Amounts may be given as decimal strings (preferred, locale-proof) or JSON
numbers.  Structural problems are reported by JSON Schema validation,
semantic ones by the per-kind checks below; both produce ``path: message``
diagnostics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema

from mevc.contracts import airdrop, amm, coinpusher
from mevc.core import SysState, honest, make_mempool

SCHEMA_VERSION = 1

_AMOUNT = {
    "oneOf": [
        {"type": "string", "pattern": r"^\s*[-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?\s*$"},
        {"type": "number"},
    ]
}
_WALLET = {"type": "object", "additionalProperties": _AMOUNT}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kind", "prices"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": ["airdrop", "coinpusher", "amm"]},
        "prices": _WALLET,
        "bal": _AMOUNT,
        "threshold": _AMOUNT,
        "reserves": _WALLET,
        "wal": _WALLET,
        "adversary": _WALLET,
        "mempool": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "sender"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "sender": {"type": "string", "minLength": 1},
                    "v": _AMOUNT,
                    "v0": _AMOUNT,
                    "tin": {"enum": ["T0", "T1"]},
                    "vmin": _AMOUNT,
                },
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grid_step": _AMOUNT,
                "grid_max": _AMOUNT,
                "depth": {"type": "integer", "minimum": 1},
                "include_mempool": {"type": "boolean"},
            },
        },
        "sampler": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer"},
                "samples": {"type": "integer", "minimum": 1},
            },
        },
    },
}

TOKENS = {"airdrop": ("T0",), "coinpusher": ("T0",), "amm": ("T0", "T1")}
ADVERSARY_NAME = "Adv"


class ScenarioError(ValueError):
    def __init__(self, errors: list):
        super().__init__("; ".join(errors))
        self.errors = errors


def _num(x: Any) -> float:
    return float(x.strip()) if isinstance(x, str) else float(x)


def _amt(x: float) -> str:
    return repr(float(x))


@dataclass
class MempoolEntry:
    id: str
    sender: str
    v: Optional[float] = None
    v0: Optional[float] = None
    tin: Optional[str] = None
    vmin: Optional[float] = None

    def to_dict(self) -> dict:
        out = {"id": self.id, "sender": self.sender}
        for key in ("v", "v0", "vmin"):
            val = getattr(self, key)
            if val is not None:
                out[key] = _amt(val)
        if self.tin is not None:
            out["tin"] = self.tin
        return out


@dataclass
class Scenario:
    kind: str
    prices: dict
    wal: dict
    adversary: dict
    mempool: list
    bal: Optional[float] = None
    threshold: Optional[float] = None
    reserves: Optional[dict] = None
    oracle: dict = field(default_factory=dict)
    sampler: dict = field(default_factory=dict)

    @property
    def tokens(self) -> tuple:
        return TOKENS[self.kind]

    def to_dict(self) -> dict:
        """Canonical form; loading it back gives an equal Scenario."""
        out: dict = {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "prices": {t: _amt(v) for t, v in self.prices.items()},
            "wal": {t: _amt(v) for t, v in self.wal.items()},
            "adversary": {t: _amt(v) for t, v in self.adversary.items()},
            "mempool": [e.to_dict() for e in self.mempool],
        }
        if self.bal is not None:
            out["bal"] = _amt(self.bal)
        if self.threshold is not None:
            out["threshold"] = _amt(self.threshold)
        if self.reserves is not None:
            out["reserves"] = {t: _amt(v) for t, v in self.reserves.items()}
        oracle = {}
        for key, val in self.oracle.items():
            oracle[key] = _amt(val) if key in ("grid_step", "grid_max") else val
        if oracle:
            out["oracle"] = oracle
        if self.sampler:
            out["sampler"] = dict(self.sampler)
        return out

    def system(self):
        if self.kind == "airdrop":
            return airdrop.Airdrop(self.prices["T0"])
        if self.kind == "coinpusher":
            return coinpusher.CoinPusher(self.prices["T0"])
        return amm.AMM(self.prices)

    def _tx(self, e: MempoolEntry):
        who = honest(e.sender)
        if self.kind == "airdrop":
            return airdrop.Drop(who, e.v)
        if self.kind == "coinpusher":
            return coinpusher.Push(who, e.v)
        return amm.Swap(who, e.v0, e.tin, e.vmin or 0.0)

    def build(self):
        """Return (system, initial state)."""
        sys = self.system()
        mempool = make_mempool((e.id, self._tx(e)) for e in self.mempool)
        if self.kind == "airdrop":
            sigma = sys.state(self.bal, self.wal.get("T0", 0.0), mempool, self.adversary)
        elif self.kind == "coinpusher":
            sigma = sys.state(self.threshold, self.bal, self.wal.get("T0", 0.0), mempool, self.adversary)
        else:
            sigma = sys.state((self.reserves["T0"], self.reserves["T1"]), self.wal, mempool, self.adversary)
        return sys, sigma


def parse_scenario(doc: Any, allow_zero_vmin: bool = False) -> Scenario:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = []
    for err in sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path))):
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        errors.append(f"{path}: {err.message}")
    if errors:
        raise ScenarioError(errors)

    kind = doc["kind"]
    tokens = TOKENS[kind]

    def wallet(name, positive=False, nonneg=True):
        raw = doc.get(name, {})
        out = {}
        for t, v in raw.items():
            if t not in tokens:
                errors.append(f"{name}/{t}: token not in the {kind} universe {list(tokens)}")
                continue
            x = _num(v)
            if positive and not x > 0:
                errors.append(f"{name}/{t}: must be positive, got {v}")
            elif nonneg and x < 0:
                errors.append(f"{name}/{t}: must be non-negative, got {v}")
            out[t] = x
        return {t: out.get(t, 0.0) for t in tokens}

    prices = wallet("prices", positive=True)
    for t in tokens:
        if t not in doc["prices"]:
            errors.append(f"prices/{t}: required")
    wal = wallet("wal")
    adversary = wallet("adversary", nonneg=False)

    bal = threshold = reserves = None
    if kind in ("airdrop", "coinpusher"):
        if "bal" not in doc:
            errors.append("bal: required")
        else:
            bal = _num(doc["bal"])
            if bal < 0:
                errors.append(f"bal: must be non-negative, got {doc['bal']}")
        if "reserves" in doc:
            errors.append(f"reserves: not a field of {kind} scenarios")
    if kind == "coinpusher":
        if "threshold" not in doc:
            errors.append("threshold: required")
        else:
            threshold = _num(doc["threshold"])
            if not threshold > 0:
                errors.append(f"threshold: must be positive, got {doc['threshold']}")
    elif "threshold" in doc:
        errors.append(f"threshold: not a field of {kind} scenarios")
    if kind == "amm":
        if "reserves" not in doc:
            errors.append("reserves: required")
        else:
            reserves = wallet("reserves", positive=True)
            for t in tokens:
                if t not in doc["reserves"]:
                    errors.append(f"reserves/{t}: required")
        if "bal" in doc:
            errors.append("bal: not a field of amm scenarios (use reserves)")

    mempool = []
    seen = set()
    for i, raw in enumerate(doc.get("mempool", [])):
        where = f"mempool/{i}"
        if raw["id"] in seen:
            errors.append(f"{where}/id: duplicate id {raw['id']!r}")
        seen.add(raw["id"])
        if raw["sender"] == ADVERSARY_NAME:
            errors.append(f"{where}/sender: adversarial mempool transactions are not supported")
        entry = MempoolEntry(raw["id"], raw["sender"])
        if kind == "amm":
            for key in ("v0", "tin", "vmin"):
                if key not in raw:
                    errors.append(f"{where}/{key}: required for amm swaps")
            if "v" in raw:
                errors.append(f"{where}/v: amm swaps use v0")
            if "v0" in raw:
                entry.v0 = _num(raw["v0"])
                if not entry.v0 > 0:
                    errors.append(f"{where}/v0: must be positive, got {raw['v0']}")
            entry.tin = raw.get("tin")
            if "vmin" in raw:
                entry.vmin = _num(raw["vmin"])
                if entry.vmin < 0:
                    errors.append(f"{where}/vmin: must be non-negative, got {raw['vmin']}")
                elif entry.vmin == 0 and not allow_zero_vmin:
                    errors.append(f"{where}/vmin: zero minimum output has no MEV, only a supremum (use `mevsup`)")
        else:
            for key in ("v0", "tin", "vmin"):
                if key in raw:
                    errors.append(f"{where}/{key}: not a field of {kind} transactions")
            if "v" not in raw:
                errors.append(f"{where}/v: required")
            else:
                entry.v = _num(raw["v"])
                if not entry.v > 0:
                    errors.append(f"{where}/v: must be positive, got {raw['v']}")
        mempool.append(entry)

    oracle = {}
    for key, val in doc.get("oracle", {}).items():
        oracle[key] = _num(val) if key in ("grid_step", "grid_max") else val
    if "grid_step" in oracle and not oracle["grid_step"] > 0:
        errors.append("oracle/grid_step: must be positive")
    if "grid_step" in oracle and "grid_max" in oracle and oracle["grid_step"] > oracle["grid_max"]:
        errors.append("oracle/grid_max: must be at least grid_step")

    if errors:
        raise ScenarioError(errors)
    return Scenario(
        kind=kind,
        prices=prices,
        wal=wal,
        adversary=adversary,
        mempool=mempool,
        bal=bal,
        threshold=threshold,
        reserves=reserves,
        oracle=oracle,
        sampler=dict(doc.get("sampler", {})),
    )


def load_scenario(path, allow_zero_vmin: bool = False) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError([f"<file>: {exc}"]) from exc
    return parse_scenario(doc, allow_zero_vmin=allow_zero_vmin)


def state_summary(sys, sigma: SysState) -> dict:
    return {"contract": sys.describe(sigma.s), "adversary": sigma.delta.as_dict()}
