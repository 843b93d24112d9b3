"""Carrier groups and finite abelian automorphism groups acting on them.

Two concrete carriers stand in for an abstract abelian group: the finite
modular group Z_m^d (points stored as centered representatives) and an
integer lattice Z^d evaluated on a bounded window.  Automorphisms are
integer matrices; the group K is a finite abelian set of them, closed
under composition.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ClosureOverflow, NonAbelian, NonInvertible

Point = tuple[int, ...]

CLOSURE_CAP = 64


def _int_det(mat: np.ndarray) -> int:
    """Exact integer determinant by cofactor expansion (matrices are tiny)."""
    n = mat.shape[0]
    if n == 1:
        return int(mat[0, 0])
    total = 0
    sub = np.delete(mat, 0, axis=0)
    for j in range(n):
        minor = np.delete(sub, j, axis=1)
        total += (-1) ** j * int(mat[0, j]) * _int_det(minor)
    return total


class Carrier:
    """Common interface of the two carrier variants."""

    dimension: int

    def reduce(self, x) -> Point:
        raise NotImplementedError

    def points(self) -> list[Point]:
        raise NotImplementedError

    def contains(self, x) -> bool:
        raise NotImplementedError

    def norm(self, x) -> float:
        """Euclidean norm of the (centered) representative of x."""
        return math.sqrt(sum(c * c for c in self.reduce(x)))

    @property
    def zero(self) -> Point:
        return (0,) * self.dimension


class ModularCarrier(Carrier):
    """Z_m^d with centered representatives in (-m/2, m/2]."""

    def __init__(self, modulus: int, dimension: int):
        if modulus < 2:
            raise ValueError("modulus must be >= 2")
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.modulus = modulus
        self.dimension = dimension

    def _center(self, c: int) -> int:
        r = c % self.modulus
        if 2 * r > self.modulus:
            r -= self.modulus
        return r

    def reduce(self, x) -> Point:
        return tuple(self._center(int(c)) for c in x)

    def points(self) -> list[Point]:
        if not hasattr(self, "_points"):
            axis = sorted(self._center(c) for c in range(self.modulus))
            self._points = [tuple(p) for p in itertools.product(axis, repeat=self.dimension)]
        return self._points

    def contains(self, x) -> bool:
        return len(x) == self.dimension

    def __repr__(self):
        return f"ModularCarrier(modulus={self.modulus}, dimension={self.dimension})"


class LatticeCarrier(Carrier):
    """Z^d with a Euclidean evaluation window of the given radius."""

    def __init__(self, dimension: int, radius: int):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        if radius < 1:
            raise ValueError("radius must be >= 1")
        self.dimension = dimension
        self.radius = radius

    def reduce(self, x) -> Point:
        return tuple(int(c) for c in x)

    def points(self) -> list[Point]:
        if not hasattr(self, "_points"):
            rng = range(-self.radius, self.radius + 1)
            self._points = [
                p
                for p in itertools.product(rng, repeat=self.dimension)
                if sum(c * c for c in p) <= self.radius * self.radius
            ]
        return self._points

    def contains(self, x) -> bool:
        return sum(c * c for c in x) <= self.radius * self.radius

    def __repr__(self):
        return f"LatticeCarrier(dimension={self.dimension}, radius={self.radius})"


class Automorphism:
    """Integer matrix acting on carrier points by multiplication."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=np.int64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("automorphism matrix must be square")

    def canonical(self, carrier: Carrier) -> "Automorphism":
        """Normalize entries (mod m on modular carriers) for comparison."""
        if isinstance(carrier, ModularCarrier):
            return Automorphism(self.matrix % carrier.modulus)
        return self

    def _key(self):
        return (self.matrix.shape[0], self.matrix.tobytes())

    def __eq__(self, other):
        return isinstance(other, Automorphism) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"Automorphism({self.matrix.tolist()})"


def identity_automorphism(dimension: int) -> Automorphism:
    return Automorphism(np.eye(dimension, dtype=np.int64))


@dataclass(frozen=True)
class GroupK:
    """Finite abelian automorphism group, identity first, no duplicates."""

    elements: tuple[Automorphism, ...]
    carrier: Carrier

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> Automorphism:
        return self.elements[0]


def _check_invertible(a: Automorphism, carrier: Carrier) -> None:
    det = _int_det(a.matrix)
    if isinstance(carrier, ModularCarrier):
        if math.gcd(det % carrier.modulus, carrier.modulus) != 1:
            raise NonInvertible(f"determinant {det} not coprime to {carrier.modulus}")
    else:
        if det not in (1, -1):
            raise NonInvertible(f"determinant {det} not a unit on the lattice")


def _compose(a: Automorphism, b: Automorphism, carrier: Carrier) -> Automorphism:
    return Automorphism(a.matrix @ b.matrix).canonical(carrier)


def build_group(generators, carrier: Carrier, cap: int = CLOSURE_CAP) -> GroupK:
    """Close the generators under composition and verify the group axioms."""
    d = carrier.dimension
    ident = identity_automorphism(d).canonical(carrier)
    gens = []
    for g in generators:
        a = g if isinstance(g, Automorphism) else Automorphism(g)
        if a.matrix.shape[0] != d:
            raise NonInvertible(f"generator has shape {a.matrix.shape}, carrier dimension {d}")
        _check_invertible(a, carrier)
        gens.append(a.canonical(carrier))

    elems = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for e in frontier:
            for g in gens:
                prod = _compose(e, g, carrier)
                if prod not in elems:
                    elems.add(prod)
                    nxt.append(prod)
                    if len(elems) > cap:
                        raise ClosureOverflow(f"closure exceeds cap {cap}")
        frontier = nxt

    ordered = [ident] + sorted((e for e in elems if e != ident), key=lambda a: a._key())
    for a, b in itertools.combinations(ordered, 2):
        if _compose(a, b, carrier) != _compose(b, a, carrier):
            raise NonAbelian(f"{a} and {b} do not commute")
    for a in ordered:
        if not any(_compose(a, b, carrier) == ident for b in ordered):
            raise NonAbelian(f"inverse of {a} missing from closure")
    return GroupK(elements=tuple(ordered), carrier=carrier)


def act(k: Automorphism, x, carrier: Carrier) -> Point:
    """Apply the automorphism and reduce to the carrier representative."""
    return carrier.reduce(k.matrix @ np.asarray(x, dtype=np.int64))


def point_norm(x, carrier: Carrier) -> float:
    return carrier.norm(x)


def add_points(x, y) -> Point:
    return tuple(int(a + b) for a, b in zip(x, y))


def check_doubling(carrier: Carrier, group: GroupK) -> tuple[bool, float]:
    """Exhaustively test ||x + k.x|| <= 2 ||x|| over the enumeration.

    Returns (holds, worst ratio).  Zero points are skipped; a false verdict
    is a valid answer, not an error.
    """
    worst = 0.0
    for x in carrier.points():
        nx = carrier.norm(x)
        if nx == 0.0:
            continue
        for k in group.elements:
            moved = add_points(x, act(k, x, carrier))
            ratio = carrier.norm(moved) / nx
            worst = max(worst, ratio)
    return worst <= 2.0 + 1e-12, worst
