"""Control functions, the contraction certificate, and derived weights."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import Carrier, GroupK, Point, act, add_points
from .errors import ConstraintViolation, NotContractive, ZeroDenominatorViolation
from .funcspace import residual_pexider


class Control:
    """Nonnegative bound phi(x, y) on the Pexider defect."""

    def __call__(self, x, y) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class ConstantControl(Control):
    def __init__(self, theta: float):
        if theta < 0:
            raise ValueError("theta must be nonnegative")
        self.theta = float(theta)

    def __call__(self, x, y) -> float:
        return self.theta

    def to_dict(self):
        return {"kind": "constant", "theta": self.theta}


class PowerControl(Control):
    """theta * (||x||^p + ||y||^p) with the carrier's point norm."""

    def __init__(self, carrier: Carrier, theta: float, p: float):
        if theta < 0:
            raise ValueError("theta must be nonnegative")
        if p <= 0:
            raise ValueError("p must be positive")
        self.carrier = carrier
        self.theta = float(theta)
        self.p = float(p)

    def __call__(self, x, y) -> float:
        return self.theta * (self.carrier.norm(x) ** self.p + self.carrier.norm(y) ** self.p)

    def to_dict(self):
        return {"kind": "power", "theta": self.theta, "p": self.p}


class TableControl(Control):
    def __init__(self, carrier: Carrier, entries: dict):
        self.carrier = carrier
        self.entries = {}
        for (x, y), v in entries.items():
            if v < 0:
                raise ValueError("control values must be nonnegative")
            self.entries[(carrier.reduce(x), carrier.reduce(y))] = float(v)

    def __call__(self, x, y) -> float:
        key = (self.carrier.reduce(x), self.carrier.reduce(y))
        try:
            return self.entries[key]
        except KeyError:
            raise KeyError(f"table control undefined at {key}") from None

    def to_dict(self):
        return {
            "kind": "table",
            "entries": [
                {"x": list(x), "y": list(y), "value": v}
                for (x, y), v in sorted(self.entries.items())
            ],
        }


@dataclass(frozen=True)
class LipschitzCert:
    """Measured supremum of the averaged-control ratio over the enumeration."""

    value: float
    worst_pair: tuple[Point, Point]
    beta: float
    group_order: int


def minimal_lipschitz(phi: Control, group: GroupK, carrier: Carrier, beta: float) -> LipschitzCert:
    """Smallest L with sum_k phi(x+k.x, y+k.y) <= (2|K|)^beta L phi(x, y).

    The supremum runs over all enumerated pairs with phi > 0; pairs where
    phi vanishes must have a vanishing numerator.
    """
    denom_scale = (2 * group.order) ** beta
    best = -1.0
    worst = None
    seen_positive = False
    for x in carrier.points():
        moved_x = [add_points(x, act(k, x, carrier)) for k in group.elements]
        for y in carrier.points():
            moved_y = [add_points(y, act(k, y, carrier)) for k in group.elements]
            num = sum(phi(mx, my) for mx, my in zip(moved_x, moved_y))
            den = phi(x, y)
            if den == 0.0:
                if num > 0.0:
                    raise ZeroDenominatorViolation(
                        f"phi({x},{y}) = 0 but averaged control is {num}"
                    )
                continue
            seen_positive = True
            ratio = num / (denom_scale * den)
            if ratio > best:
                best = ratio
                worst = (x, y)
    if not seen_positive:
        raise NotContractive("control vanishes identically; no contraction ratio")
    if best >= 1.0:
        raise NotContractive(f"measured ratio {best} >= 1 at pair {worst}")
    return LipschitzCert(value=best, worst_pair=worst, beta=beta, group_order=group.order)


def quad_branch_weight(phi: Control, group: GroupK, carrier: Carrier, beta: float):
    """Weight controlling the quadratic-branch distance (also the h-bound)."""
    order = group.order
    a = order / order**beta
    b = 1.0 / order**beta
    zero = carrier.zero

    def weight(x, y) -> float:
        moved = [act(k, x, carrier) for k in group.elements]
        return a * phi(zero, y) + b * sum(phi(kx, y) + phi(kx, zero) for kx in moved)

    return weight


def jensen_branch_weight(phi: Control, group: GroupK, carrier: Carrier, beta: float):
    """Quadratic-branch weight plus the direct control terms."""
    base = quad_branch_weight(phi, group, carrier, beta)
    zero = carrier.zero

    def weight(x, y) -> float:
        return base(x, y) + phi(x, y) + phi(x, zero) + phi(zero, y)

    return weight


def diagonal(weight):
    return lambda x: weight(x, x)


def verify_hypothesis(f, g, h, phi: Control, group: GroupK, carrier: Carrier, beta: float):
    """Min over enumerated pairs of phi(x, y) minus the Pexider residual."""
    margin = math.inf
    worst = None
    for x in carrier.points():
        for y in carrier.points():
            m = phi(x, y) - residual_pexider(f, g, h, group, x, y, beta)
            if m < margin:
                margin = m
                worst = (x, y)
    return margin, worst


def corollary_coefficients(theta: float, p: float, beta: float, order: int):
    """Closed-form bound coefficients for the power control presets.

    Returns the (f, g, h) coefficients of ||x||^p in the three stability
    bounds, after validating the parameter constraints.
    """
    if order < 1:
        raise ConstraintViolation("group order must be >= 1")
    if theta < 0:
        raise ConstraintViolation("theta >= 0 violated")
    alpha = math.log(order) / math.log(2.0)
    if not (alpha / (alpha + 1.0) < beta < 1.0):
        raise ConstraintViolation(
            f"alpha/(alpha+1) < beta < 1 violated (alpha={alpha}, beta={beta})"
        )
    p_max = beta + (beta - 1.0) * alpha
    if not (0.0 < p < p_max):
        raise ConstraintViolation(f"0 < p < beta+(beta-1)*alpha violated (p={p}, max={p_max})")
    front = (theta / 2**beta) * (2 * order) ** beta / ((2 * order) ** beta - 2**p * order)
    bracket_f = (order / order**beta) * (6.0 + 6.0 * 3.0**p) + 8.0
    bracket_h = (order / order**beta) * (2.0 + 2.0 * 3.0**p)
    coeff_f = front * bracket_f
    coeff_g = coeff_f + theta
    coeff_h = front * bracket_h + theta
    return coeff_f, coeff_g, coeff_h
