import numpy as np
import pytest

from pexstab.control import ConstantControl, PowerControl, minimal_lipschitz
from pexstab.domain import LatticeCarrier, ModularCarrier, build_group
from pexstab.errors import HypothesisViolated, LambdaNotContractive
from pexstab.funcspace import DenseTable, PolyPlusTable
from pexstab.oracle import jensen_solution_space, make_exact_triple, perturb
from pexstab.selfcheck import dense_case, exact_recovery_case, noisy_case
from pexstab.stabilizer import Decomposition, stabilize, uniqueness_probe, verify_laws


@pytest.fixture(scope="module")
def exact_full():
    return exact_recovery_case()


@pytest.fixture(scope="module")
def noisy():
    return noisy_case()


def test_exact_recovery_coefficients(exact_full):
    d = exact_full["decomp"]
    assert d.quadratic.quadratic[0, 0, 0] == pytest.approx(2.0, abs=1e-8)
    assert d.jensen.linear[0, 0] == pytest.approx(3.0, abs=1e-8)
    assert d.g0[0] == pytest.approx(0.5, abs=1e-8)
    assert d.h0[0] == pytest.approx(0.5, abs=1e-8)


def test_exact_recovery_report_clean(exact_full):
    rep = exact_full["report"]
    assert rep.flags == []
    assert all(b.min_margin >= 0.0 for b in rep.bounds.values())
    assert rep.hypothesis_margin >= 0.0
    assert max(rep.fixed_point_devs.values()) <= 1e-10
    assert rep.strategy == "full"


def test_exact_recovery_lipschitz(exact_full):
    # power control p = 0.25 at beta = 0.5: measured modulus 2^(p - 2 beta)
    assert exact_full["cert"].value == pytest.approx(2.0 ** -0.75, rel=1e-12)


def test_noisy_laws_and_bounds(noisy):
    rep = noisy["report"]
    assert rep.laws["quadratic"] <= 1e-9
    assert rep.laws["jensen"] <= 1e-9
    assert rep.laws["side_condition"] <= 1e-9
    assert all(b.min_margin >= 0.0 for b in rep.bounds.values())
    assert "bound_violated:f" not in rep.flags


def test_noisy_traces_contract(noisy):
    rep, lip = noisy["report"], noisy["cert"].value
    assert all(r <= lip + 1e-9 for r in rep.traces["quadratic"].ratios)
    assert all(r <= 1.0 + 1e-9 for r in rep.traces["jensen"].ratios)
    assert rep.traces["quadratic"].converged
    assert rep.traces["jensen"].converged


def test_dense_case_half_strategy():
    case = dense_case()
    rep = case["report"]
    assert rep.strategy == "half"
    assert all(b.min_margin >= 0.0 for b in rep.bounds.values())
    assert rep.laws["quadratic"] <= 1e-6


def test_hypothesis_violation_raises():
    c = LatticeCarrier(dimension=1, radius=8)
    g = build_group([[[-1]]], c)
    quad = PolyPlusTable(c, [0.0], [[0.0]], [[[2.0]]])
    clean = make_exact_triple(quad, PolyPlusTable.zero(c), [0.0], [0.0], g)
    noisy_triple, _, _ = perturb(clean, g, 1e-3, 5, support_radius=4.0)
    with pytest.raises(HypothesisViolated):
        stabilize(noisy_triple, ConstantControl(1e-9), g, 1.0)


def test_full_strategy_gate():
    # p = 1.2 at beta = 1 gives full-average modulus 2^1.2 / 2 > 1
    c = LatticeCarrier(dimension=1, radius=8)
    g = build_group([[[-1]]], c)
    quad = PolyPlusTable(c, [0.0], [[0.0]], [[[2.0]]])
    triple = make_exact_triple(quad, PolyPlusTable.zero(c), [0.0], [0.0], g)
    phi = PowerControl(c, 1e-6, 1.2)
    with pytest.raises(LambdaNotContractive):
        stabilize(triple, phi, g, 1.0, strategy="full")
    # the halving route still works at the same parameters
    decomp, rep = stabilize(triple, phi, g, 1.0, strategy="half")
    assert decomp.quadratic.quadratic[0, 0, 0] == pytest.approx(2.0, abs=1e-8)


def test_invalid_arguments():
    c = LatticeCarrier(dimension=1, radius=8)
    g = build_group([[[-1]]], c)
    triple = make_exact_triple(
        PolyPlusTable.zero(c), PolyPlusTable.zero(c), [0.0], [0.0], g)
    with pytest.raises(ValueError):
        stabilize(triple, ConstantControl(1e-6), g, 1.0, strategy="middle")
    with pytest.raises(ValueError):
        stabilize(triple, ConstantControl(1e-6), g, 1.5)


def test_half_route_flags_jensen_discrepancy():
    case = exact_recovery_case(strategy="half")
    rep = case["report"]
    # the halving route shrinks the genuine Jensen part towards zero
    assert abs(case["decomp"].jensen.linear[0, 0]) <= 1e-6
    assert "bound_violated:f" in rep.flags


def test_verify_laws_on_oracle_solutions():
    c = ModularCarrier(modulus=5, dimension=1)
    g = build_group([[[-1]]], c)
    const = jensen_solution_space(g, c, with_side_condition=False).elements[0]
    zero = DenseTable.constant(c, [0.0])
    laws = verify_laws(
        Decomposition(quadratic=zero, jensen=const, g0=np.zeros(1), h0=np.zeros(1)), g, 1.0)
    assert laws["jensen"] <= 1e-9
    assert laws["quadratic"] <= 1e-9
    # constants fail the side condition unless they vanish
    assert laws["side_condition"] > 1e-6


def test_uniqueness_probe_structure(noisy):
    probe = noisy["probe"]
    a = probe["halving_to_quadratic"]
    b = probe["full_to_jensen"]
    assert len(a) == 11 and len(b) == 11
    assert probe["halving_envelope_ok"]
    assert probe["full_modulus"] == pytest.approx(1.0)
    lip = noisy["cert"].value
    assert all(a[n] <= lip**n * a[0] + 1e-9 for n in range(len(a)))
