"""Function representations, the beta-norm, averages, residuals, metric.

Functions map carrier points to R^r.  On a modular carrier they are dense
tables; on the lattice they split into an exactly-transformable polynomial
part (degree <= 2) and a finite-support noise table, so averaging
iterations stay exact.
"""

from __future__ import annotations

import numpy as np

from .domain import Carrier, GroupK, LatticeCarrier, ModularCarrier, Point, act, add_points
from .errors import OutOfCarrier

INF = float("inf")


def as_value(v, r: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    if r is not None and arr.shape != (r,):
        raise ValueError(f"expected value of length {r}, got shape {arr.shape}")
    return arr


def beta_norm(v, beta: float) -> float:
    """Sum of |v_i|^beta; a beta-norm on R^r for 0 < beta <= 1."""
    return float(np.sum(np.abs(np.asarray(v, dtype=float)) ** beta))


class FuncRep:
    """Common surface of the two function representations."""

    carrier: Carrier
    r: int

    def eval(self, x) -> np.ndarray:
        raise NotImplementedError

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __add__(self, other):
        return self._combine(other, 1.0)


class DenseTable(FuncRep):
    """Total table over the full modular carrier enumeration."""

    def __init__(self, carrier: ModularCarrier, values: dict[Point, np.ndarray], r: int):
        self.carrier = carrier
        self.r = r
        self.values = {carrier.reduce(p): as_value(v, r) for p, v in values.items()}

    @classmethod
    def from_array(cls, carrier: ModularCarrier, rows) -> "DenseTable":
        pts = carrier.points()
        if len(rows) != len(pts):
            raise ValueError("array length does not match carrier enumeration")
        r = len(np.atleast_1d(rows[0]))
        return cls(carrier, dict(zip(pts, rows)), r)

    @classmethod
    def constant(cls, carrier: ModularCarrier, value) -> "DenseTable":
        v = as_value(value)
        return cls(carrier, {p: v for p in carrier.points()}, len(v))

    def eval(self, x) -> np.ndarray:
        key = self.carrier.reduce(x)
        try:
            return self.values[key]
        except KeyError:
            raise OutOfCarrier(f"{key} not in table") from None

    def _combine(self, other: "DenseTable", sign: float) -> "DenseTable":
        vals = {p: self.values[p] + sign * other.values[p] for p in self.values}
        return DenseTable(self.carrier, vals, self.r)

    def scale(self, a: float) -> "DenseTable":
        return DenseTable(self.carrier, {p: a * v for p, v in self.values.items()}, self.r)

    def add_const(self, c) -> "DenseTable":
        cv = as_value(c, self.r)
        return DenseTable(self.carrier, {p: v + cv for p, v in self.values.items()}, self.r)

    def to_rows(self) -> list[list[float]]:
        return [self.values[p].tolist() for p in self.carrier.points()]


class PolyPlusTable(FuncRep):
    """Degree <= 2 polynomial plus finite-support noise on the lattice."""

    def __init__(self, carrier: LatticeCarrier, const, linear, quadratic, noise=None):
        self.carrier = carrier
        d = carrier.dimension
        self.const = as_value(const)
        self.r = len(self.const)
        self.linear = np.asarray(linear, dtype=float).reshape(self.r, d)
        quad = np.asarray(quadratic, dtype=float).reshape(self.r, d, d)
        # store the symmetric part; x^T A x only sees it anyway
        self.quadratic = 0.5 * (quad + np.transpose(quad, (0, 2, 1)))
        self.noise: dict[Point, np.ndarray] = {}
        for p, v in (noise or {}).items():
            key = tuple(int(c) for c in p)
            if not carrier.contains(key):
                raise ValueError(f"noise support point {key} outside window")
            vv = as_value(v, self.r)
            if np.any(vv != 0.0):
                self.noise[key] = vv

    @classmethod
    def zero(cls, carrier: LatticeCarrier, r: int = 1) -> "PolyPlusTable":
        d = carrier.dimension
        return cls(carrier, np.zeros(r), np.zeros((r, d)), np.zeros((r, d, d)))

    def eval(self, x) -> np.ndarray:
        xa = np.asarray(x, dtype=float)
        val = self.const + self.linear @ xa + np.einsum("i,rij,j->r", xa, self.quadratic, xa)
        n = self.noise.get(tuple(int(c) for c in x))
        return val if n is None else val + n

    def _combine(self, other: "PolyPlusTable", sign: float) -> "PolyPlusTable":
        noise = dict(self.noise)
        for p, v in other.noise.items():
            noise[p] = noise.get(p, 0.0) + sign * v
        return PolyPlusTable(
            self.carrier,
            self.const + sign * other.const,
            self.linear + sign * other.linear,
            self.quadratic + sign * other.quadratic,
            noise,
        )

    def scale(self, a: float) -> "PolyPlusTable":
        return PolyPlusTable(
            self.carrier,
            a * self.const,
            a * self.linear,
            a * self.quadratic,
            {p: a * v for p, v in self.noise.items()},
        )

    def add_const(self, c) -> "PolyPlusTable":
        return PolyPlusTable(
            self.carrier, self.const + as_value(c, self.r), self.linear, self.quadratic, self.noise
        )

    def to_dict(self) -> dict:
        return {
            "constant": self.const.tolist(),
            "linear": self.linear.tolist(),
            "quadratic": self.quadratic.tolist(),
            "noise": [
                {"point": list(p), "value": self.noise[p].tolist()}
                for p in sorted(self.noise)
            ],
        }


def avg_translate(f: FuncRep, group: GroupK, x, y) -> np.ndarray:
    """Mean over k of f(x + k.y)."""
    acc = None
    for k in group.elements:
        v = f.eval(add_points(x, act(k, y, f.carrier)))
        acc = v if acc is None else acc + v
    return acc / group.order


def symmetrize(f: FuncRep, group: GroupK) -> FuncRep:
    """K-average x -> mean_k f(k.x); exact on polynomial coefficients."""
    order = group.order
    if isinstance(f, DenseTable):
        vals = {}
        for x in f.carrier.points():
            acc = None
            for k in group.elements:
                v = f.values[act(k, x, f.carrier)]
                acc = v if acc is None else acc + v
            vals[x] = acc / order
        return DenseTable(f.carrier, vals, f.r)
    const = f.const.copy()
    lin = np.zeros_like(f.linear)
    quad = np.zeros_like(f.quadratic)
    for k in group.elements:
        m = k.matrix.astype(float)
        lin += f.linear @ m
        quad += np.einsum("ji,rjk,kl->ril", m, f.quadratic, m)
    lin /= order
    quad /= order
    noise = {}
    for x in f.carrier.points():
        acc = np.zeros(f.r)
        hit = False
        for k in group.elements:
            v = f.noise.get(act(k, x, f.carrier))
            if v is not None:
                acc = acc + v
                hit = True
        if hit and np.any(acc != 0.0):
            noise[x] = acc / order
    return PolyPlusTable(f.carrier, const, lin, quad, noise)


def residual_pexider(f, g, h, group: GroupK, x, y, beta: float) -> float:
    return beta_norm(avg_translate(f, group, x, y) - g.eval(x) - h.eval(y), beta)


def residual_quadratic(q: FuncRep, group: GroupK, x, y, beta: float) -> float:
    return beta_norm(avg_translate(q, group, x, y) - q.eval(x) - q.eval(y), beta)


def residual_jensen(j: FuncRep, group: GroupK, x, y, beta: float) -> float:
    return beta_norm(avg_translate(j, group, x, y) - j.eval(x), beta)


def side_condition_defect(j: FuncRep, group: GroupK, x, beta: float) -> float:
    """beta-norm of mean_k j(k.x)."""
    acc = None
    for k in group.elements:
        v = j.eval(act(k, x, j.carrier))
        acc = v if acc is None else acc + v
    return beta_norm(acc / group.order, beta)


def sup_weighted_distance(g: FuncRep, h: FuncRep, weight, beta: float, points=None) -> float:
    """Weighted sup distance over the enumeration; 0/0 = 0, positive/0 = inf."""
    if points is None:
        points = g.carrier.points()
    best = 0.0
    for x in points:
        num = beta_norm(g.eval(x) - h.eval(x), beta)
        den = weight(x)
        if den == 0.0:
            if num > 0.0:
                return INF
            continue
        best = max(best, num / den)
    return best
