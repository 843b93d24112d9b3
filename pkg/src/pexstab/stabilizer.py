"""Full recovery pipeline: perturbed Pexider triple -> q + j + offsets.

The quadratic component is the fixed point of the halving average started
from the K-symmetrized input (minus the offsets); the Jensen component is
recovered from the antisymmetric remainder, either with the same halving
operator ("half" strategy) or with the full average ("full" strategy,
default).  Solutions of the Jensen equation are fixed by the full average
but halved by the halving operator, so only the full route recovers
genuine Jensen components; both routes are exposed and their disagreement
is reported rather than hidden.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control import (
    Control,
    LipschitzCert,
    diagonal,
    jensen_branch_weight,
    minimal_lipschitz,
    quad_branch_weight,
    verify_hypothesis,
)
from .domain import GroupK
from .errors import HypothesisViolated, LambdaNotContractive
from .fixpoint import FULL, HALF, AveragingOp, IterationTrace, apply_op, iterate
from .funcspace import (
    INF,
    FuncRep,
    beta_norm,
    residual_jensen,
    residual_quadratic,
    side_condition_defect,
    sup_weighted_distance,
    symmetrize,
)
from .oracle import PexiderTriple

RATIO_SLACK = 1e-9
FULL_MODULUS_SLACK = 1e-12

STRATEGY_HALF = "half"
STRATEGY_FULL = "full"


@dataclass
class Decomposition:
    quadratic: FuncRep
    jensen: FuncRep
    g0: np.ndarray
    h0: np.ndarray


@dataclass
class BoundCheck:
    name: str
    min_margin: float
    worst_point: tuple
    curve: list[dict] = field(default_factory=list)


@dataclass
class StabilityReport:
    lipschitz: float
    strategy: str
    hypothesis_margin: float
    bounds: dict[str, BoundCheck]
    laws: dict[str, float]
    traces: dict[str, IterationTrace]
    fixed_point_devs: dict[str, float]
    flags: list[str]

    def to_dict(self) -> dict:
        return {
            "L": self.lipschitz,
            "strategy": self.strategy,
            "hypothesis_margin": self.hypothesis_margin,
            "bounds": {
                name: {
                    "min_margin": b.min_margin,
                    "worst_x": list(b.worst_point),
                    "curve": b.curve,
                }
                for name, b in self.bounds.items()
            },
            "laws": dict(self.laws),
            "traces": {name: t.to_rows() for name, t in self.traces.items()},
            "fixed_point_devs": dict(self.fixed_point_devs),
            "flags": list(self.flags),
        }


def _bound_weights(phi: Control, group: GroupK, beta: float):
    carrier = group.carrier
    quad_w = quad_branch_weight(phi, group, carrier, beta)
    jen_w = jensen_branch_weight(phi, group, carrier, beta)
    return quad_w, jen_w


def verify_bounds(triple: PexiderTriple, decomp: Decomposition, phi: Control,
                  group: GroupK, beta: float, lipschitz: float,
                  with_curves: bool = True) -> dict[str, BoundCheck]:
    """Margins (right minus left side) of the three stability bounds."""
    carrier = triple.f.carrier
    quad_w, jen_w = _bound_weights(phi, group, beta)
    zero = carrier.zero
    amp = 1.0 / ((2.0**beta) * (1.0 - lipschitz))
    checks = {}
    for name in ("f", "g", "h"):
        worst_margin = INF
        worst_x = zero
        curve = []
        for x in carrier.points():
            if name == "f":
                lhs = beta_norm(
                    triple.f.eval(x) - decomp.quadratic.eval(x) - decomp.jensen.eval(x)
                    - decomp.g0 - decomp.h0, beta)
                rhs = 2.0 * amp * jen_w(x, x) + amp * quad_w(x, x)
            elif name == "g":
                lhs = beta_norm(
                    triple.g.eval(x) - decomp.quadratic.eval(x) - decomp.jensen.eval(x)
                    - decomp.g0, beta)
                rhs = phi(x, zero) + 2.0 * amp * jen_w(x, x) + amp * quad_w(x, x)
            else:
                lhs = beta_norm(
                    triple.h.eval(x) - decomp.quadratic.eval(x) - decomp.h0, beta)
                rhs = amp * quad_w(x, x) + phi(zero, x)
            margin = rhs - lhs
            if with_curves:
                curve.append({"x": list(x), "lhs": lhs, "rhs": rhs})
            if margin < worst_margin:
                worst_margin = margin
                worst_x = x
        checks[name] = BoundCheck(name, worst_margin, worst_x, curve)
    return checks


def verify_laws(decomp: Decomposition, group: GroupK, beta: float) -> dict[str, float]:
    """Max residuals of the quadratic law, Jensen law, and side condition."""
    carrier = decomp.quadratic.carrier
    pts = carrier.points()
    quad = max(
        residual_quadratic(decomp.quadratic, group, x, y, beta) for x in pts for y in pts
    )
    jen = max(residual_jensen(decomp.jensen, group, x, y, beta) for x in pts for y in pts)
    side = max(side_condition_defect(decomp.jensen, group, x, beta) for x in pts)
    return {"quadratic": quad, "jensen": jen, "side_condition": side}


def stabilize(triple: PexiderTriple, phi: Control, group: GroupK, beta: float,
              strategy: str = STRATEGY_FULL, tol: float = 1e-10, nmax: int = 10000,
              cert: LipschitzCert | None = None, with_curves: bool = True):
    """Recover the decomposition and verify every claimed inequality.

    Returns (Decomposition, StabilityReport).  Raises HypothesisViolated,
    NotContractive, LambdaNotContractive, NoFiniteStep or MaxIterations.
    """
    if strategy not in (STRATEGY_HALF, STRATEGY_FULL):
        raise ValueError(f"unknown strategy {strategy!r}")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must satisfy 0 < beta <= 1")
    carrier = triple.f.carrier

    margin, worst_pair = verify_hypothesis(
        triple.f, triple.g, triple.h, phi, group, carrier, beta)
    if margin < 0.0:
        raise HypothesisViolated(f"margin {margin} at pair {worst_pair}")

    if cert is None:
        cert = minimal_lipschitz(phi, group, carrier, beta)
    lip = cert.value

    g0 = np.array(triple.g.eval(carrier.zero), dtype=float)
    h0 = np.array(triple.h.eval(carrier.zero), dtype=float)
    symmetric = symmetrize(triple.f, group)
    centered = symmetric.add_const(-(g0 + h0))
    remainder = triple.f - symmetric

    quad_w, jen_w = _bound_weights(phi, group, beta)
    half_op = AveragingOp(HALF, group)
    full_op = AveragingOp(FULL, group)

    quadratic, quad_trace = iterate(
        half_op, centered, diagonal(quad_w), beta, lip, tol, nmax)

    if strategy == STRATEGY_FULL:
        full_modulus = (2.0**beta) * lip
        if full_modulus > 1.0 + FULL_MODULUS_SLACK:
            raise LambdaNotContractive(
                f"full-average modulus {full_modulus} exceeds one")
        jensen, jen_trace = iterate(
            full_op, remainder, diagonal(jen_w), beta, min(full_modulus, 1.0), tol, nmax)
        jensen_modulus = min(full_modulus, 1.0)
    else:
        jensen, jen_trace = iterate(
            half_op, remainder, diagonal(jen_w), beta, lip, tol, nmax)
        jensen_modulus = lip

    decomp = Decomposition(quadratic=quadratic, jensen=jensen, g0=g0, h0=h0)

    bounds = verify_bounds(triple, decomp, phi, group, beta, lip, with_curves)
    laws = verify_laws(decomp, group, beta)
    half_fix_dev = max(
        beta_norm(apply_op(half_op, quadratic).eval(x) - quadratic.eval(x), beta)
        for x in carrier.points())
    full_fix_dev = max(
        beta_norm(apply_op(full_op, jensen).eval(x) - jensen.eval(x), beta)
        for x in carrier.points())

    flags = []
    for name, check in bounds.items():
        if check.min_margin < 0.0:
            flags.append(f"bound_violated:{name}")
    if laws["jensen"] > 1e-6:
        flags.append("jensen_law_violated")
    if laws["quadratic"] > 1e-6:
        flags.append("quadratic_law_violated")
    if laws["side_condition"] > 1e-6:
        flags.append("side_condition_violated")
    if beta_norm(quadratic.eval(carrier.zero), beta) > 1e-6:
        flags.append("quadratic_nonzero_at_origin")
    for trace_name, trace, modulus in (
        ("quadratic", quad_trace, lip),
        ("jensen", jen_trace, jensen_modulus),
    ):
        if any(r > modulus + RATIO_SLACK for r in trace.ratios):
            flags.append(f"contraction_ratio_exceeded:{trace_name}")

    report = StabilityReport(
        lipschitz=lip,
        strategy=strategy,
        hypothesis_margin=margin,
        bounds=bounds,
        laws=laws,
        traces={"quadratic": quad_trace, "jensen": jen_trace},
        fixed_point_devs={"quadratic_half": half_fix_dev, "jensen_full": full_fix_dev},
        flags=flags,
    )
    return decomp, report


def uniqueness_probe(triple: PexiderTriple, decomp: Decomposition, phi: Control,
                     group: GroupK, beta: float, lipschitz: float,
                     steps: int = 10) -> dict:
    """Decay tables of the two uniqueness iterations.

    a_n: halving iterates of h - h(0) approach the quadratic component with
    rate L^n.  b_n: full-average iterates of f - q - g(0) - h(0) approach
    the Jensen component; the geometric envelope uses the full modulus and
    is checked only while that modulus is at most one.
    """
    carrier = triple.f.carrier
    quad_w, jen_w = _bound_weights(phi, group, beta)
    half_op = AveragingOp(HALF, group)
    full_op = AveragingOp(FULL, group)
    pts = carrier.points()

    a = []
    u = triple.h.add_const(-decomp.h0)
    for _ in range(steps + 1):
        a.append(sup_weighted_distance(u, decomp.quadratic, diagonal(quad_w), beta, pts))
        u = apply_op(half_op, u)

    b = []
    v = (triple.f - decomp.quadratic).add_const(-(decomp.g0 + decomp.h0))
    for _ in range(steps + 1):
        b.append(sup_weighted_distance(v, decomp.jensen, diagonal(jen_w), beta, pts))
        v = apply_op(full_op, v)

    full_modulus = (2.0**beta) * lipschitz
    a_ok = all(
        a[n] <= lipschitz**n * a[0] + RATIO_SLACK for n in range(len(a))
    ) if a[0] < INF else None
    b_ok = None
    if full_modulus <= 1.0 and b[0] < INF:
        b_ok = all(b[n] <= full_modulus**n * b[0] + RATIO_SLACK for n in range(len(b)))
    return {
        "halving_to_quadratic": a,
        "full_to_jensen": b,
        "halving_envelope_ok": a_ok,
        "full_envelope_ok": b_ok,
        "full_modulus": full_modulus,
    }
