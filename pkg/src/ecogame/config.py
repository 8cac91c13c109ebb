"""JSON run configuration: nested dict -> SystemConfig + IntegratorSettings.

Layout::

    {
      "pop1": {"d_sp0": 3, "d_rt0": -0.5, "d_tr1": 10, "d_ps1": 6,
               "theta": 0.75, "alpha": 1.0},
      "pop2": {"d_sp0": -1, "d_rt0": -1, "d_tr1": 10, "d_ps1": 6,
               "theta": 0.75, "alpha": 0.25},
      "epsilon": 0.1,
      "integrator": {"method": "rk4_fixed", "dt": 0.01, ...},
      "seed": 0,
      "output_path": null
    }

A population may give ``"matrices": {"depleted": [[R0, S0], [T0, P0]],
"abundant": [[R1, S1], [T1, P1]]}`` instead of the four deltas. Missing keys
fall back to the reference configuration.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Iterable, Optional

from .dynamics import IntegratorSettings
from .errors import InvalidParameter
from .model import (
    PayoffMatrixPair,
    PolicyDeltas,
    PopulationSpec,
    SystemConfig,
    deltas_from_matrices,
)

DEFAULTS: Dict[str, Any] = {
    "pop1": {"d_sp0": 3.0, "d_rt0": -0.5, "d_tr1": 10.0, "d_ps1": 6.0,
             "theta": 0.75, "alpha": 1.0},
    "pop2": {"d_sp0": -1.0, "d_rt0": -1.0, "d_tr1": 10.0, "d_ps1": 6.0,
             "theta": 0.75, "alpha": 0.25},
    "epsilon": 0.1,
    "integrator": asdict(IntegratorSettings()),
    "seed": 0,
    "output_path": None,
}

# short names accepted by --set and --vary
ALIASES = {
    "alpha1": "pop1.alpha",
    "alpha2": "pop2.alpha",
    "theta1": "pop1.theta",
    "theta2": "pop2.theta",
    "d_sp0": "pop1.d_sp0",
    "d_rt0": "pop1.d_rt0",
    "d_tr1": "pop1.d_tr1",
    "d_ps1": "pop1.d_ps1",
}

_POP_KEYS = {"d_sp0", "d_rt0", "d_tr1", "d_ps1", "theta", "alpha", "matrices"}
_INTEGRATOR_KEYS = {f.name for f in fields(IntegratorSettings)}


@dataclass(frozen=True)
class RunConfig:
    system: SystemConfig
    integrator: IntegratorSettings
    seed: int = 0
    output_path: Optional[str] = None


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def canonical_key(key: str) -> str:
    key = ALIASES.get(key, key)
    parts = key.split(".")
    known = (
        (len(parts) == 1 and parts[0] in ("epsilon", "seed", "output_path"))
        or (len(parts) == 2 and parts[0] in ("pop1", "pop2") and parts[1] in _POP_KEYS - {"matrices"})
        or (len(parts) == 2 and parts[0] == "integrator" and parts[1] in _INTEGRATOR_KEYS)
    )
    if not known:
        raise InvalidParameter(f"unknown parameter {key!r}")
    return key


def set_path(doc: dict, key: str, value) -> None:
    key = canonical_key(key)
    parts = key.split(".")
    node = doc
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides: Iterable[str]) -> dict:
    doc = copy.deepcopy(doc)
    for item in overrides:
        if "=" not in item:
            raise InvalidParameter(f"override {item!r} is not KEY=VALUE")
        k, v = item.split("=", 1)
        set_path(doc, k.strip(), _parse_value(v.strip()))
    return doc


def _number(section: str, key: str, v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise InvalidParameter(f"{section}.{key} must be a finite number, got {v!r}")
    return float(v)


def _population(name: str, d: dict) -> PopulationSpec:
    unknown = set(d) - _POP_KEYS
    if unknown:
        raise InvalidParameter(f"unknown keys in {name}: {sorted(unknown)}")
    deltas = PolicyDeltas(*(_number(name, k, d[k]) for k in ("d_sp0", "d_rt0", "d_tr1", "d_ps1")))
    return PopulationSpec(deltas, _number(name, "theta", d["theta"]), _number(name, "alpha", d["alpha"]))


def build_document(raw: Optional[dict] = None, overrides: Iterable[str] = ()) -> dict:
    doc = _merge(DEFAULTS, raw or {})
    for pop in ("pop1", "pop2"):
        m = doc[pop].pop("matrices", None)
        if m is not None:
            try:
                deltas = deltas_from_matrices(PayoffMatrixPair(m["depleted"], m["abundant"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidParameter(f"bad {pop}.matrices: {exc}") from exc
            doc[pop].update(asdict(deltas))
    return apply_overrides(doc, overrides)


def run_config_from_document(doc: dict) -> RunConfig:
    unknown = set(doc) - set(DEFAULTS)
    if unknown:
        raise InvalidParameter(f"unknown top-level keys: {sorted(unknown)}")
    system = SystemConfig(
        _population("pop1", doc["pop1"]),
        _population("pop2", doc["pop2"]),
        _number("", "epsilon", doc["epsilon"]),
    )
    integ = dict(doc["integrator"])
    unknown = set(integ) - _INTEGRATOR_KEYS
    if unknown:
        raise InvalidParameter(f"unknown integrator keys: {sorted(unknown)}")
    settings = IntegratorSettings(**integ)
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise InvalidParameter(f"seed must be a nonnegative integer, got {seed!r}")
    return RunConfig(system, settings, seed, doc.get("output_path"))


def read_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParameter(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidParameter("config must be a JSON object")
    return raw


def load_run_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> RunConfig:
    raw = read_config_file(path) if path else None
    return run_config_from_document(build_document(raw, overrides))
