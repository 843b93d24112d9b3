"""Ground truth: exact solution spaces, triple construction, seeded noise.

Solution spaces of the K-averaged quadratic and Jensen equations are found
by brute-force linear algebra: assemble the defining constraints as a
linear system and take its nullspace with rank-revealing elimination.
The results are the independent oracle the recovery pipeline is checked
against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .control import ConstantControl, Control, PowerControl
from .domain import Carrier, GroupK, LatticeCarrier, ModularCarrier, Point, act, add_points
from .errors import CertificateImpossible, LawViolation
from .funcspace import (
    DenseTable,
    FuncRep,
    PolyPlusTable,
    as_value,
    residual_jensen,
    residual_pexider,
    residual_quadratic,
    side_condition_defect,
)

PIVOT_TOL = 1e-9

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Deterministic cross-platform PRNG for reproducible noise."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def uniform_signed(self) -> float:
        """Uniform in [-1, 1)."""
        return 2.0 * (self.next_u64() / 2.0**64) - 1.0


def nullspace(matrix: np.ndarray, tol: float = PIVOT_TOL) -> list[np.ndarray]:
    """Kernel basis via Gaussian elimination with partial pivoting.

    Columns whose pivot magnitude stays below `tol` are treated as free.
    """
    a = np.array(matrix, dtype=float)
    if a.size == 0:
        return []
    rows, cols = a.shape
    pivot_cols = []
    row = 0
    for col in range(cols):
        if row >= rows:
            break
        pivot = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[pivot, col]) <= tol:
            continue
        a[[row, pivot]] = a[[pivot, row]]
        a[row] = a[row] / a[row, col]
        for rr in range(rows):
            if rr != row and a[rr, col] != 0.0:
                a[rr] = a[rr] - a[rr, col] * a[row]
        pivot_cols.append(col)
        row += 1
    free_cols = [c for c in range(cols) if c not in pivot_cols]
    basis = []
    for free in free_cols:
        vec = np.zeros(cols)
        vec[free] = 1.0
        for r, pc in enumerate(pivot_cols):
            vec[pc] = -a[r, free]
        basis.append(vec)
    return basis


@dataclass(frozen=True)
class SolutionBasis:
    elements: tuple[FuncRep, ...]
    dimension: int


def _monomials(d: int):
    """Basis of degree <= 2 polynomials: 1, x_i, x_i x_j (i <= j)."""
    entries = [("const", None)]
    entries += [("lin", i) for i in range(d)]
    entries += [("quad", (i, j)) for i in range(d) for j in range(i, d)]

    def evaluate(x) -> np.ndarray:
        out = np.empty(len(entries))
        for idx, (kind, meta) in enumerate(entries):
            if kind == "const":
                out[idx] = 1.0
            elif kind == "lin":
                out[idx] = x[meta]
            else:
                i, j = meta
                out[idx] = x[i] * x[j]
        return out

    return entries, evaluate


def _coeffs_to_poly(carrier: LatticeCarrier, entries, coeffs) -> PolyPlusTable:
    d = carrier.dimension
    const = np.zeros(1)
    lin = np.zeros((1, d))
    quad = np.zeros((1, d, d))
    for (kind, meta), c in zip(entries, coeffs):
        if kind == "const":
            const[0] = c
        elif kind == "lin":
            lin[0, meta] = c
        else:
            i, j = meta
            if i == j:
                quad[0, i, i] = c
            else:
                quad[0, i, j] = quad[0, j, i] = c / 2.0
    return PolyPlusTable(carrier, const, lin, quad)


def _probe_points(carrier: Carrier) -> list[Point]:
    if isinstance(carrier, ModularCarrier):
        return carrier.points()
    probe = LatticeCarrier(carrier.dimension, min(carrier.radius, 2))
    return probe.points()


def _law_rows_dense(carrier: ModularCarrier, group: GroupK, jensen: bool,
                    with_side: bool) -> np.ndarray:
    points = carrier.points()
    index = {p: i for i, p in enumerate(points)}
    rows = []
    inv = 1.0 / group.order
    for x in points:
        for y in points:
            row = np.zeros(len(points))
            for k in group.elements:
                row[index[carrier.reduce(add_points(x, act(k, y, carrier)))]] += inv
            row[index[x]] -= 1.0
            if not jensen:
                row[index[y]] -= 1.0
            rows.append(row)
    if with_side:
        for x in points:
            row = np.zeros(len(points))
            for k in group.elements:
                row[index[act(k, x, carrier)]] += inv
            rows.append(row)
    return np.array(rows)


def _law_rows_poly(carrier: LatticeCarrier, group: GroupK, jensen: bool,
                   with_side: bool) -> tuple[np.ndarray, list]:
    entries, evaluate = _monomials(carrier.dimension)
    pts = _probe_points(carrier)
    rows = []
    inv = 1.0 / group.order
    for x in pts:
        for y in pts:
            row = np.zeros(len(entries))
            for k in group.elements:
                row += inv * evaluate(add_points(x, act(k, y, carrier)))
            row -= evaluate(x)
            if not jensen:
                row -= evaluate(y)
            rows.append(row)
    if with_side:
        for x in pts:
            row = np.zeros(len(entries))
            for k in group.elements:
                row += inv * evaluate(act(k, x, carrier))
            rows.append(row)
    return np.array(rows), entries


def _verify_basis(basis: list[FuncRep], group: GroupK, law: str, with_side: bool) -> None:
    residual = residual_jensen if law == "jensen" else residual_quadratic
    pts = _probe_points(basis[0].carrier) if basis else []
    for elem in basis:
        worst = max(residual(elem, group, x, y, 1.0) for x in pts for y in pts)
        if worst > 1e-9:
            raise LawViolation(f"nullspace element fails the {law} law: residual {worst}")
        if with_side:
            worst = max(side_condition_defect(elem, group, x, 1.0) for x in pts)
            if worst > 1e-9:
                raise LawViolation(f"nullspace element fails the side condition: {worst}")


def _solution_space(group: GroupK, carrier: Carrier, jensen: bool,
                    with_side: bool) -> SolutionBasis:
    if isinstance(carrier, ModularCarrier):
        rows = _law_rows_dense(carrier, group, jensen, with_side)
        vecs = nullspace(rows)
        basis = [DenseTable.from_array(carrier, [[v] for v in vec]) for vec in vecs]
    else:
        rows, entries = _law_rows_poly(carrier, group, jensen, with_side)
        vecs = nullspace(rows)
        basis = [_coeffs_to_poly(carrier, entries, vec) for vec in vecs]
    _verify_basis(basis, group, "jensen" if jensen else "quadratic", with_side)
    return SolutionBasis(elements=tuple(basis), dimension=len(basis))


def quadratic_solution_space(group: GroupK, carrier: Carrier) -> SolutionBasis:
    """Exact solutions of the K-averaged quadratic equation."""
    return _solution_space(group, carrier, jensen=False, with_side=False)


def jensen_solution_space(group: GroupK, carrier: Carrier,
                          with_side_condition: bool) -> SolutionBasis:
    """Exact solutions of the K-averaged Jensen equation."""
    return _solution_space(group, carrier, jensen=True, with_side=with_side_condition)


@dataclass(frozen=True)
class PexiderTriple:
    f: FuncRep
    g: FuncRep
    h: FuncRep

    def __post_init__(self):
        if not (self.f.carrier is self.g.carrier is self.h.carrier):
            raise ValueError("triple components must share a carrier")
        if not (self.f.r == self.g.r == self.h.r):
            raise ValueError("triple components must share the target dimension")


def make_exact_triple(quadratic: FuncRep, jensen: FuncRep, a, b, group: GroupK,
                      check_pairs: int | None = None) -> PexiderTriple:
    """Compose exact law solutions into an exact Pexider triple.

    f = q + j + a + b, g = q + j + a, h = q + b; the zero residual is
    asserted on the enumeration at build time.
    """
    av = as_value(a, quadratic.r)
    bv = as_value(b, quadratic.r)
    f = (quadratic + jensen).add_const(av + bv)
    g = (quadratic + jensen).add_const(av)
    h = quadratic.add_const(bv)
    triple = PexiderTriple(f, g, h)
    pts = quadratic.carrier.points()
    if check_pairs is not None and len(pts) ** 2 > check_pairs:
        pts = _probe_points(quadratic.carrier)
    worst = max(
        residual_pexider(f, g, h, group, x, y, 1.0) for x in pts for y in pts
    )
    if worst > 1e-12:
        raise LawViolation(f"constructed triple has Pexider residual {worst}")
    return triple


def _noise_support(carrier: Carrier, radius: float, include_origin: bool) -> list[Point]:
    pts = []
    for p in carrier.points():
        n = carrier.norm(p)
        if n == 0.0 and not include_origin:
            continue
        if n <= radius:
            pts.append(p)
    return pts


def _add_noise(rep: FuncRep, noise: dict[Point, np.ndarray]) -> FuncRep:
    if isinstance(rep, DenseTable):
        vals = dict(rep.values)
        for p, v in noise.items():
            vals[p] = vals[p] + v
        return DenseTable(rep.carrier, vals, rep.r)
    merged = dict(rep.noise)
    for p, v in noise.items():
        merged[p] = merged.get(p, 0.0) + v
    return PolyPlusTable(rep.carrier, rep.const, rep.linear, rep.quadratic, merged)


def perturb(triple: PexiderTriple, group: GroupK, delta: float, seed: int,
            support_radius: float, noise_targets=("f",), certificate: str = "constant",
            power_p: float | None = None, include_origin: bool = False,
            beta: float = 1.0):
    """Add seeded uniform noise in [-delta, delta]^r and certify a control.

    Returns (perturbed triple, certified control, degenerate flag).  The
    certificate is the smallest constant (or power-shaped) control that the
    measured residual satisfies with nonnegative margin by construction.
    """
    carrier = triple.f.carrier
    rng = SplitMix64(seed)
    support = _noise_support(carrier, support_radius, include_origin)
    parts = {"f": triple.f, "g": triple.g, "h": triple.h}
    r = triple.f.r
    for name in ("f", "g", "h"):
        if name not in noise_targets:
            continue
        noise = {}
        for p in support:
            noise[p] = np.array([delta * rng.uniform_signed() for _ in range(r)])
        parts[name] = _add_noise(parts[name], noise)
    noisy = PexiderTriple(parts["f"], parts["g"], parts["h"])

    pts = carrier.points()
    if certificate == "constant":
        theta = max(
            residual_pexider(noisy.f, noisy.g, noisy.h, group, x, y, beta)
            for x in pts for y in pts
        )
        # the measured residual itself is the hypothesis margin certificate
        return noisy, ConstantControl(theta), theta == 0.0
    if certificate == "power":
        if power_p is None:
            raise ValueError("power certificate needs an exponent")
        theta = 0.0
        for x in pts:
            for y in pts:
                res = residual_pexider(noisy.f, noisy.g, noisy.h, group, x, y, beta)
                shape = carrier.norm(x) ** power_p + carrier.norm(y) ** power_p
                if shape == 0.0:
                    if res > 0.0:
                        raise CertificateImpossible(
                            f"residual {res} at a zero of the power control"
                        )
                    continue
                theta = max(theta, res / shape)
        return noisy, PowerControl(carrier, theta if theta > 0 else 0.0, power_p), theta == 0.0
    raise ValueError(f"unknown certificate kind {certificate!r}")
