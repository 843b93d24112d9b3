import numpy as np
import pytest

from pexstab.control import ConstantControl, PowerControl
from pexstab.domain import LatticeCarrier, ModularCarrier, build_group
from pexstab.errors import CertificateImpossible, LawViolation
from pexstab.funcspace import DenseTable, PolyPlusTable, residual_pexider
from pexstab.oracle import (
    PexiderTriple,
    SplitMix64,
    jensen_solution_space,
    make_exact_triple,
    nullspace,
    perturb,
    quadratic_solution_space,
)


@pytest.fixture
def mod5_sign():
    c = ModularCarrier(modulus=5, dimension=1)
    return c, build_group([[[-1]]], c)


@pytest.fixture
def lat_sign():
    c = LatticeCarrier(dimension=1, radius=16)
    return c, build_group([[[-1]]], c)


def test_splitmix64_reference_sequence():
    rng = SplitMix64(0)
    # first three outputs of splitmix64 seeded with zero
    assert rng.next_u64() == 0xE220A8397B1DCDAF
    assert rng.next_u64() == 0x6E789E6AA1B965F4
    assert rng.next_u64() == 0x06C45D188009454F


def test_splitmix64_uniform_range():
    rng = SplitMix64(42)
    vals = [rng.uniform_signed() for _ in range(1000)]
    assert all(-1.0 <= v < 1.0 for v in vals)
    assert abs(sum(vals) / len(vals)) < 0.1


def test_nullspace_simple_systems():
    basis = nullspace(np.array([[1.0, 1.0]]))
    assert len(basis) == 1
    assert abs(basis[0][0] + basis[0][1]) <= 1e-12
    assert nullspace(np.eye(3)) == []
    basis = nullspace(np.zeros((2, 3)))
    assert len(basis) == 3


def test_nullspace_vectors_annihilated():
    rng = SplitMix64(3)
    a = np.array([[rng.uniform_signed() for _ in range(6)] for _ in range(3)])
    for v in nullspace(a):
        assert np.max(np.abs(a @ v)) <= 1e-9


def test_solution_dimensions_modular(mod5_sign):
    c, g = mod5_sign
    assert quadratic_solution_space(g, c).dimension == 0
    assert jensen_solution_space(g, c, with_side_condition=True).dimension == 0
    free = jensen_solution_space(g, c, with_side_condition=False)
    assert free.dimension == 1
    # the free direction is the constants
    elem = free.elements[0]
    vals = {elem.eval(x)[0] for x in c.points()}
    assert max(vals) - min(vals) <= 1e-12


def test_solution_dimensions_lattice_polynomials():
    c = LatticeCarrier(dimension=2, radius=2)
    g = build_group([[[-1, 0], [0, -1]]], c)
    assert quadratic_solution_space(g, c).dimension == 3
    assert jensen_solution_space(g, c, with_side_condition=True).dimension == 2


def test_make_exact_triple_zero_residual(lat_sign):
    c, g = lat_sign
    quad = PolyPlusTable(c, [0.0], [[0.0]], [[[2.0]]])
    jen = PolyPlusTable(c, [0.0], [[3.0]], [[[0.0]]])
    triple = make_exact_triple(quad, jen, [0.5], [0.5], g)
    assert triple.g.eval((0,))[0] == pytest.approx(0.5)
    assert triple.h.eval((0,))[0] == pytest.approx(0.5)
    worst = max(
        residual_pexider(triple.f, triple.g, triple.h, g, x, y, 1.0)
        for x in [(-2,), (0,), (3,)] for y in [(-1,), (0,), (2,)])
    assert worst <= 1e-12


def test_make_exact_triple_rejects_non_solution(lat_sign):
    c, g = lat_sign
    quad = PolyPlusTable(c, [0.0], [[0.0]], [[[2.0]]])
    not_jensen = PolyPlusTable(c, [0.0], [[0.0]], [[[1.0]]])
    with pytest.raises(LawViolation):
        make_exact_triple(quad, not_jensen, [0.0], [0.0], g)


def test_triple_component_consistency(mod5_sign):
    c, _ = mod5_sign
    other = ModularCarrier(modulus=5, dimension=1)
    t = DenseTable.constant(c, [0.0])
    s = DenseTable.constant(other, [0.0])
    with pytest.raises(ValueError):
        PexiderTriple(t, t, s)


def test_perturb_support_and_determinism(lat_sign):
    c, g = lat_sign
    quad = PolyPlusTable(c, [0.0], [[0.0]], [[[2.0]]])
    jen = PolyPlusTable(c, [0.0], [[3.0]], [[[0.0]]])
    clean = make_exact_triple(quad, jen, [0.5], [0.5], g)
    noisy1, cert1, deg1 = perturb(clean, g, 1e-3, 7, support_radius=4.0)
    noisy2, cert2, deg2 = perturb(clean, g, 1e-3, 7, support_radius=4.0)
    assert not deg1
    assert cert1.theta == cert2.theta
    for x in c.points():
        d = noisy1.f.eval(x) - clean.f.eval(x)
        assert np.array_equal(noisy1.f.eval(x), noisy2.f.eval(x))
        if c.norm(x) > 4.0 or c.norm(x) == 0.0:
            assert np.all(d == 0.0)  # origin excluded, support respected
        assert np.max(np.abs(d)) <= 1e-3
    # g and h untouched by default
    assert np.array_equal(noisy1.g.eval((1,)), clean.g.eval((1,)))
    assert np.array_equal(noisy1.h.eval((1,)), clean.h.eval((1,)))


def test_perturb_certificate_covers_residual(lat_sign):
    c, g = lat_sign
    clean = make_exact_triple(
        PolyPlusTable.zero(c), PolyPlusTable.zero(c), [0.0], [0.0], g)
    noisy, cert, _ = perturb(clean, g, 1e-2, 11, support_radius=3.0)
    assert isinstance(cert, ConstantControl)
    worst = max(
        residual_pexider(noisy.f, noisy.g, noisy.h, g, x, y, 1.0)
        for x in c.points() for y in c.points())
    assert worst <= cert.theta + 1e-15


def test_perturb_zero_delta_is_degenerate(lat_sign):
    c, g = lat_sign
    clean = make_exact_triple(
        PolyPlusTable.zero(c), PolyPlusTable.zero(c), [0.0], [0.0], g)
    _, cert, degenerate = perturb(clean, g, 0.0, 1, support_radius=3.0)
    assert degenerate
    assert cert.theta == 0.0


def test_perturb_power_certificate(lat_sign):
    c, g = lat_sign
    clean = make_exact_triple(
        PolyPlusTable.zero(c), PolyPlusTable.zero(c), [0.0], [0.0], g)
    noisy, cert, _ = perturb(
        clean, g, 1e-2, 13, support_radius=3.0, certificate="power", power_p=0.5)
    assert isinstance(cert, PowerControl)
    assert cert.theta > 0.0
    # noise at the origin makes the power shape infeasible
    with pytest.raises(CertificateImpossible):
        perturb(clean, g, 1e-2, 13, support_radius=3.0, certificate="power",
                power_p=0.5, include_origin=True)
