"""Averaging operators, the fixed-point iteration, and its certificates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .domain import GroupK, act, add_points, identity_automorphism
from .errors import MaxIterations, NoFiniteStep
from .funcspace import (
    INF,
    DenseTable,
    FuncRep,
    PolyPlusTable,
    beta_norm,
    sup_weighted_distance,
)

HALF = "half"  # x -> (1/(2|K|)) sum_k f(x + k.x)
FULL = "full"  # x -> (1/|K|)   sum_k f(x + k.x)


@dataclass(frozen=True)
class AveragingOp:
    kind: str
    group: GroupK

    def __post_init__(self):
        if self.kind not in (HALF, FULL):
            raise ValueError(f"unknown operator kind {self.kind!r}")

    @property
    def normalizer(self) -> int:
        return 2 * self.group.order if self.kind == HALF else self.group.order


def apply_op(op: AveragingOp, f: FuncRep) -> FuncRep:
    """One application of the averaging operator, exact per representation."""
    group = op.group
    carrier = f.carrier
    norm = float(op.normalizer)
    if isinstance(f, DenseTable):
        vals = {}
        for x in carrier.points():
            acc = None
            for k in group.elements:
                v = f.values[carrier.reduce(add_points(x, act(k, x, carrier)))]
                acc = v if acc is None else acc + v
            vals[x] = acc / norm
        return DenseTable(carrier, vals, f.r)

    d = carrier.dimension
    eye = np.eye(d, dtype=np.int64)
    subs = [eye + k.matrix for k in group.elements]
    const = f.const * (group.order / norm)
    lin = np.zeros_like(f.linear)
    quad = np.zeros_like(f.quadratic)
    for m in subs:
        mf = m.astype(float)
        lin += f.linear @ mf
        quad += np.einsum("ji,rjk,kl->ril", mf, f.quadratic, mf)
    lin /= norm
    quad /= norm
    noise = {}
    if f.noise:
        for x in carrier.points():
            xa = np.asarray(x, dtype=np.int64)
            acc = np.zeros(f.r)
            hit = False
            for m in subs:
                v = f.noise.get(tuple(int(c) for c in m @ xa))
                if v is not None:
                    acc = acc + v
                    hit = True
            if hit and np.any(acc != 0.0):
                noise[x] = acc / norm
    return PolyPlusTable(carrier, const, lin, quad, noise)


@dataclass
class IterationTrace:
    """Successive weighted distances and measured contraction ratios."""

    distances: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    first_finite_step: int | None = None
    converged: bool = False
    terminal_bound: float = INF

    @property
    def steps(self) -> int:
        return len(self.distances)

    def to_rows(self) -> list[dict]:
        rows = []
        prev = None
        for i, d in enumerate(self.distances):
            ratio = None
            if prev is not None and 0.0 < prev < INF and d < INF:
                ratio = d / prev
            rows.append({"step": i, "distance": d, "ratio": ratio})
            prev = d
        return rows


def iterate(op: AveragingOp, start: FuncRep, weight, beta: float, lipschitz: float,
            tol: float = 1e-10, nmax: int = 10000):
    """Iterate the operator until the successive weighted distance certifies
    distance <= tol to the fixed point (geometric tail bound).

    `weight` is a one-argument diagonal weight; `lipschitz` the certified
    contraction modulus of the operator in that weighted metric.  A modulus
    of exactly one is tolerated: the threshold degenerates to zero, so only
    an exactly attained fixed point counts as converged.
    """
    points = start.carrier.points()
    threshold = tol * max(1.0 - lipschitz, 0.0)
    trace = IterationTrace()
    current = start
    prev_d = None
    for step in range(nmax):
        nxt = apply_op(op, current)
        d = sup_weighted_distance(nxt, current, weight, beta, points)
        trace.distances.append(d)
        if d < INF and trace.first_finite_step is None:
            trace.first_finite_step = step
        if prev_d is not None and 0.0 < prev_d < INF and d < INF:
            trace.ratios.append(d / prev_d)
        if d <= threshold:
            trace.converged = True
            trace.terminal_bound = 0.0 if d == 0.0 else d / (1.0 - lipschitz)
            return nxt, trace
        prev_d = d
        current = nxt
    if trace.first_finite_step is None:
        raise NoFiniteStep(f"no finite successive distance within {nmax} steps")
    raise MaxIterations(f"no convergence within {nmax} steps (last distance {trace.distances[-1]})")


def diaz_margolis_bound(start: FuncRep, fix: FuncRep, op: AveragingOp, lipschitz: float,
                        weight, beta: float) -> float:
    """Margin of d(y, fix) <= d(y, op y)/(1 - L) with y = start.

    Nonnegative (up to float noise) whenever the fixed-point alternative
    applies; infinity when the one-step distance is infinite.
    """
    points = start.carrier.points()
    d_step = sup_weighted_distance(apply_op(op, start), start, weight, beta, points)
    d_fix = sup_weighted_distance(start, fix, weight, beta, points)
    if lipschitz >= 1.0:
        return INF if d_fix < INF else 0.0
    if d_step == INF:
        return INF
    return d_step / (1.0 - lipschitz) - d_fix


def power_formula_check(h: FuncRep, group: GroupK, n: int, beta: float) -> float:
    """Compare the n-fold operator power against its expanded sum.

    The expansion evaluates, for every tuple (k_1..k_n), the argument
    x + sum over nonempty index subsets of the subset product applied to x,
    normalized by (2|K|)^n.  Returns the max pointwise beta-norm deviation.
    """
    if n < 1 or n > 3:
        raise ValueError("expansion check supports 1 <= n <= 3")
    carrier = h.carrier
    op = AveragingOp(HALF, group)
    composed = h
    for _ in range(n):
        composed = apply_op(op, composed)

    d = carrier.dimension
    eye = np.eye(d, dtype=np.int64)
    offsets = []
    for ks in itertools.product(group.elements, repeat=n):
        total = np.zeros((d, d), dtype=np.int64)
        for size in range(1, n + 1):
            for subset in itertools.combinations(range(n), size):
                prod = eye
                for i in subset:
                    prod = prod @ ks[i].matrix
                total = total + prod
        offsets.append(total)

    scale = float((2 * group.order) ** n)
    worst = 0.0
    for x in carrier.points():
        xa = np.asarray(x, dtype=np.int64)
        acc = np.zeros(h.r)
        for total in offsets:
            acc = acc + h.eval(add_points(x, tuple(int(c) for c in total @ xa)))
        dev = beta_norm(acc / scale - composed.eval(x), beta)
        worst = max(worst, dev)
    return worst
