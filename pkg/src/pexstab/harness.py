"""Experiment configuration, run orchestration, and JSON report emission."""

from __future__ import annotations

import json
import os

import jsonschema
import numpy as np

from . import __version__
from .control import ConstantControl, Control, PowerControl, TableControl, corollary_coefficients, minimal_lipschitz
from .domain import (
    Carrier,
    GroupK,
    LatticeCarrier,
    ModularCarrier,
    build_group,
    check_doubling,
)
from .errors import (
    ConfigError,
    HypothesisViolated,
    LambdaNotContractive,
    MaxIterations,
    NoFiniteStep,
    NotContractive,
    PexstabError,
    ZeroDenominatorViolation,
)
from .funcspace import DenseTable, PolyPlusTable, beta_norm
from .oracle import PexiderTriple, make_exact_triple, perturb
from .stabilizer import stabilize, uniqueness_probe

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_NONCONVERGENCE = 3
EXIT_CONFIG = 4

SCHEMA_VERSION = 1

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["version", "carrier", "beta", "control", "truth"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "preset": {"enum": ["cauchy", "sigma", "general"]},
        "sigma": {"type": "array"},
        "carrier": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["modular", "lattice"]},
                "modulus": {"type": "integer", "minimum": 2},
                "dimension": {"type": "integer", "minimum": 1},
                "radius": {"type": "integer", "minimum": 1},
            },
        },
        "generators": {"type": "array", "items": {"type": "array"}},
        "target_dim": {"type": "integer", "minimum": 1},
        "beta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "control": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["constant", "power", "table"]},
                "theta": {"type": "number", "minimum": 0},
                "p": {"type": "number", "exclusiveMinimum": 0},
                "entries": {"type": "array"},
            },
        },
        "strategy": {"enum": ["half", "full"]},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "nmax": {"type": "integer", "minimum": 1},
        "noise": {
            "type": "object",
            "properties": {
                "delta": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "support_radius": {"type": "number", "minimum": 0},
                "targets": {"type": "array", "items": {"enum": ["f", "g", "h"]}},
                "include_origin": {"type": "boolean"},
            },
        },
        "truth": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["poly", "tables"]},
                "quadratic": {"type": "array"},
                "linear": {"type": "array"},
                "a": {"type": "array"},
                "b": {"type": "array"},
                "f": {"type": "array"},
                "g": {"type": "array"},
                "h": {"type": "array"},
            },
        },
        "uniqueness_steps": {"type": "integer", "minimum": 0},
    },
}


def max_threads() -> int:
    """Parallelism cap from the environment; scans currently run serially."""
    raw = os.environ.get("PEXSTAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"PEXSTAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("PEXSTAB_THREADS must be >= 1")
    return n


def load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def expand_preset(cfg: dict) -> dict:
    """Resolve a preset name into concrete generators and constraint checks."""
    cfg = dict(cfg)
    preset = cfg.get("preset")
    if preset is None or preset == "general":
        return cfg
    dim = cfg.get("carrier", {}).get("dimension", 1)
    if preset == "cauchy":
        cfg["generators"] = []
    elif preset == "sigma":
        sigma = cfg.get("sigma")
        if sigma is None:
            sigma = (-np.eye(dim, dtype=int)).tolist()
        cfg["generators"] = [sigma]
    return cfg


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from None
    cfg = expand_preset(cfg)
    kind = cfg["carrier"]["kind"]
    if kind == "modular" and "modulus" not in cfg["carrier"]:
        raise ConfigError("modular carrier requires a modulus")
    if kind == "lattice" and "radius" not in cfg["carrier"]:
        raise ConfigError("lattice carrier requires a radius")
    if cfg["truth"]["kind"] == "poly" and kind != "lattice":
        raise ConfigError("polynomial truth requires a lattice carrier")
    if cfg["truth"]["kind"] == "tables" and kind != "modular":
        raise ConfigError("table truth requires a modular carrier")
    return cfg


def build_carrier(cfg: dict) -> Carrier:
    spec = cfg["carrier"]
    if spec["kind"] == "modular":
        return ModularCarrier(spec["modulus"], spec.get("dimension", 1))
    return LatticeCarrier(spec.get("dimension", 1), spec["radius"])


def build_control(cfg: dict, carrier: Carrier) -> Control:
    spec = cfg["control"]
    if spec["kind"] == "constant":
        return ConstantControl(spec["theta"])
    if spec["kind"] == "power":
        return PowerControl(carrier, spec["theta"], spec["p"])
    entries = {
        (tuple(e["x"]), tuple(e["y"])): e["value"] for e in spec.get("entries", [])
    }
    return TableControl(carrier, entries)


def build_truth(cfg: dict, carrier: Carrier, group: GroupK) -> PexiderTriple:
    truth = cfg["truth"]
    r = cfg.get("target_dim", 1)
    if truth["kind"] == "poly":
        d = carrier.dimension
        quad = np.asarray(truth.get("quadratic", np.zeros((r, d, d))), dtype=float)
        lin = np.asarray(truth.get("linear", np.zeros((r, d))), dtype=float)
        quadratic = PolyPlusTable(carrier, np.zeros(r), np.zeros((r, d)), quad)
        jensen = PolyPlusTable(carrier, np.zeros(r), lin, np.zeros((r, d, d)))
        a = truth.get("a", [0.0] * r)
        b = truth.get("b", [0.0] * r)
        return make_exact_triple(quadratic, jensen, a, b, group, check_pairs=20000)
    f = DenseTable.from_array(carrier, truth["f"])
    g = DenseTable.from_array(carrier, truth["g"])
    h = DenseTable.from_array(carrier, truth["h"])
    return PexiderTriple(f, g, h)


def _corollary_block(cfg: dict, group: GroupK) -> dict | None:
    spec = cfg["control"]
    if spec["kind"] != "power":
        return None
    try:
        cf, cg, ch = corollary_coefficients(
            spec["theta"], spec["p"], cfg["beta"], group.order)
    except PexstabError as exc:
        return {"valid": False, "reason": str(exc)}
    return {"valid": True, "f": cf, "g": cg, "h": ch}


def run_config(cfg: dict) -> tuple[dict, int]:
    """Execute the full pipeline for one configuration.

    Returns (report, exit code); the report is always produced, with the
    failure stage recorded when the exit code is nonzero.
    """
    report: dict = {"version": SCHEMA_VERSION, "tool": __version__}
    try:
        cfg = validate_config(cfg)
        report["config"] = cfg
        report["threads"] = max_threads()
        carrier = build_carrier(cfg)
        group = build_group(cfg.get("generators", []), carrier)
        control = build_control(cfg, carrier)
        beta = cfg["beta"]
        triple = build_truth(cfg, carrier, group)
    except (ConfigError, ValueError, KeyError) as exc:
        report["error"] = {"stage": "config", "message": str(exc)}
        report["exit_status"] = EXIT_CONFIG
        return report, EXIT_CONFIG

    doubling_ok, doubling_ratio = check_doubling(carrier, group)
    report["doubling"] = {"holds": doubling_ok, "max_ratio": doubling_ratio}
    report["group_order"] = group.order

    noise = cfg.get("noise")
    if noise and noise.get("delta", 0.0) > 0.0:
        triple, certified, degenerate = perturb(
            triple, group, noise["delta"], noise.get("seed", 0),
            noise.get("support_radius", 0.0),
            tuple(noise.get("targets", ["f"])),
            include_origin=noise.get("include_origin", False),
            beta=beta,
        )
        report["noise_certificate"] = {
            "control": certified.to_dict(), "degenerate": degenerate}

    try:
        cert = minimal_lipschitz(control, group, carrier, beta)
    except (NotContractive, ZeroDenominatorViolation) as exc:
        report["error"] = {"stage": "contraction", "message": str(exc)}
        report["exit_status"] = EXIT_NONCONVERGENCE
        return report, EXIT_NONCONVERGENCE
    report["lipschitz"] = {
        "value": cert.value,
        "worst_pair": [list(cert.worst_pair[0]), list(cert.worst_pair[1])],
    }

    try:
        decomp, stab = stabilize(
            triple, control, group, beta,
            strategy=cfg.get("strategy", "full"),
            tol=cfg.get("tol", 1e-10), nmax=cfg.get("nmax", 10000), cert=cert)
    except HypothesisViolated as exc:
        report["error"] = {"stage": "hypothesis", "message": str(exc)}
        report["exit_status"] = EXIT_HYPOTHESIS
        return report, EXIT_HYPOTHESIS
    except (LambdaNotContractive, NoFiniteStep, MaxIterations, NotContractive) as exc:
        report["error"] = {"stage": "iteration", "message": str(exc)}
        report["exit_status"] = EXIT_NONCONVERGENCE
        return report, EXIT_NONCONVERGENCE

    report["stability"] = stab.to_dict()
    report["decomposition"] = {
        "g0": decomp.g0.tolist(),
        "h0": decomp.h0.tolist(),
        "quadratic": _serialize_rep(decomp.quadratic),
        "jensen": _serialize_rep(decomp.jensen),
    }
    report["uniqueness"] = uniqueness_probe(
        triple, decomp, control, group, beta, cert.value,
        steps=cfg.get("uniqueness_steps", 10))

    if cfg["truth"]["kind"] == "poly":
        truth = cfg["truth"]
        r = cfg.get("target_dim", 1)
        d = carrier.dimension
        quad_truth = np.asarray(truth.get("quadratic", np.zeros((r, d, d))), dtype=float)
        lin_truth = np.asarray(truth.get("linear", np.zeros((r, d))), dtype=float)
        report["oracle_comparison"] = {
            "quadratic_coeff_dev": float(
                np.max(np.abs(decomp.quadratic.quadratic - quad_truth))),
            "jensen_coeff_dev": float(np.max(np.abs(decomp.jensen.linear - lin_truth))),
        }

    coro = _corollary_block(cfg, group)
    if coro is not None:
        report["corollary_coefficients"] = coro

    report["exit_status"] = EXIT_OK
    return report, EXIT_OK


def _serialize_rep(rep) -> dict:
    if isinstance(rep, PolyPlusTable):
        out = rep.to_dict()
        out["kind"] = "poly"
        return out
    return {"kind": "dense", "values": rep.to_rows()}


def dump_report(report: dict, path: str | None) -> str:
    text = json.dumps(report, sort_keys=True, indent=2)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text
