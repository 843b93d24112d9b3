"""Built-in verification scenarios and the self-test runner.

The scenario builders here are shared between the `selftest` CLI command
and the test suite, so both exercise identical configurations.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from .control import (
    ConstantControl,
    PowerControl,
    corollary_coefficients,
    diagonal,
    jensen_branch_weight,
    minimal_lipschitz,
    quad_branch_weight,
)
from .domain import Automorphism, LatticeCarrier, ModularCarrier, build_group
from .errors import ConstraintViolation
from .fixpoint import FULL, HALF, AveragingOp, apply_op, diaz_margolis_bound, power_formula_check
from .funcspace import (
    DenseTable,
    PolyPlusTable,
    avg_translate,
    beta_norm,
    sup_weighted_distance,
    symmetrize,
)
from .oracle import (
    SplitMix64,
    jensen_solution_space,
    make_exact_triple,
    perturb,
    quadratic_solution_space,
)
from .stabilizer import stabilize, uniqueness_probe, verify_laws


def lattice_setup(radius: int = 32):
    """Shared d=1 lattice with K = {identity, negation}."""
    carrier = LatticeCarrier(dimension=1, radius=radius)
    group = build_group([Automorphism([[-1]])], carrier)
    return carrier, group


def modular_setup(modulus: int = 5):
    carrier = ModularCarrier(modulus=modulus, dimension=1)
    group = build_group([Automorphism([[-1]])], carrier)
    return carrier, group


def exact_lattice_triple(carrier, group):
    """Truth: quadratic 2x^2, Jensen 3x, offsets a = b = 0.5."""
    quadratic = PolyPlusTable(carrier, [0.0], [[0.0]], [[[2.0]]])
    jensen = PolyPlusTable(carrier, [0.0], [[3.0]], [[[0.0]]])
    return make_exact_triple(quadratic, jensen, [0.5], [0.5], group, check_pairs=20000)


def exact_recovery_case(strategy: str = "full"):
    """Noise-free recovery under a power control at beta = 0.5."""
    carrier, group = lattice_setup()
    triple = exact_lattice_triple(carrier, group)
    beta = 0.5
    control = PowerControl(carrier, theta=1e-6, p=0.25)
    cert = minimal_lipschitz(control, group, carrier, beta)
    decomp, report = stabilize(triple, control, group, beta, strategy=strategy, cert=cert)
    probe = uniqueness_probe(triple, decomp, control, group, beta, cert.value)
    return {
        "carrier": carrier, "group": group, "triple": triple, "beta": beta,
        "control": control, "cert": cert, "decomp": decomp, "report": report,
        "probe": probe,
        "truth": {"quadratic": 2.0, "jensen_linear": 3.0, "g0": 0.5, "h0": 0.5},
    }


def noisy_case(seed: int = 20240817):
    """Seeded noise on f, constant control theta = delta = 1e-3, beta = 1."""
    carrier, group = lattice_setup()
    triple = exact_lattice_triple(carrier, group)
    beta = 1.0
    delta = 1e-3
    noisy, certified, _ = perturb(
        triple, group, delta, seed, support_radius=8.0, noise_targets=("f",), beta=beta)
    control = ConstantControl(delta)
    cert = minimal_lipschitz(control, group, carrier, beta)
    decomp, report = stabilize(noisy, control, group, beta, strategy="full", cert=cert)
    probe = uniqueness_probe(noisy, decomp, control, group, beta, cert.value)
    return {
        "carrier": carrier, "group": group, "triple": noisy, "clean": triple,
        "beta": beta, "delta": delta, "control": control, "cert": cert,
        "decomp": decomp, "report": report, "probe": probe,
        "certified": certified,
    }


def dense_case(seed: int = 7, delta: float = 1e-2):
    """Modular carrier, zero truth components plus offsets plus noise."""
    carrier, group = modular_setup()
    a, b = [0.3], [0.4]
    zero = DenseTable.constant(carrier, [0.0])
    triple = make_exact_triple(zero, zero, a, b, group)
    beta = 1.0
    noisy, certified, _ = perturb(
        triple, group, delta, seed, support_radius=10.0, noise_targets=("f",), beta=beta)
    cert = minimal_lipschitz(certified, group, carrier, beta)
    decomp, report = stabilize(noisy, certified, group, beta, strategy="half", cert=cert)
    return {
        "carrier": carrier, "group": group, "triple": noisy, "beta": beta,
        "control": certified, "cert": cert, "decomp": decomp, "report": report,
    }


def random_dense_table(carrier, rng: SplitMix64, scale: float = 1.0, r: int = 1) -> DenseTable:
    vals = {
        p: np.array([scale * rng.uniform_signed() for _ in range(r)])
        for p in carrier.points()
    }
    return DenseTable(carrier, vals, r)


# ---------------------------------------------------------------------------
# individual checks (each returns (ok, detail))


def check_beta_norm_axioms():
    rng = SplitMix64(11)
    for beta in (0.3, 0.5, 1.0):
        for _ in range(50):
            v = np.array([3 * rng.uniform_signed() for _ in range(3)])
            w = np.array([3 * rng.uniform_signed() for _ in range(3)])
            lam = 2.5 * rng.uniform_signed()
            if beta_norm(v, beta) == 0.0 and np.any(v != 0):
                return False, "definiteness failed"
            hom = abs(beta_norm(lam * v, beta) - abs(lam) ** beta * beta_norm(v, beta))
            if hom > 1e-9 * max(1.0, beta_norm(v, beta)):
                return False, f"homogeneity defect {hom}"
            tri = beta_norm(v + w, beta) - beta_norm(v, beta) - beta_norm(w, beta)
            if tri > 1e-12:
                return False, f"triangle defect {tri}"
    return True, "definiteness, homogeneity, triangle"


def check_beta_above_one_fails():
    # beta = 1.5 must break the triangle inequality somewhere
    v = np.array([1.0])
    w = np.array([1.0])
    gap = beta_norm(v + w, 1.5) - beta_norm(v, 1.5) - beta_norm(w, 1.5)
    return gap > 0, f"triangle violated by {gap} at beta=1.5"


def check_metric_axioms():
    carrier, group = modular_setup()
    control = ConstantControl(1.0)
    weight = diagonal(quad_branch_weight(control, group, carrier, 1.0))
    rng = SplitMix64(23)
    pts = carrier.points()
    for _ in range(30):
        f = random_dense_table(carrier, rng)
        g = random_dense_table(carrier, rng)
        h = random_dense_table(carrier, rng)
        dfg = sup_weighted_distance(f, g, weight, 1.0, pts)
        dgf = sup_weighted_distance(g, f, weight, 1.0, pts)
        if abs(dfg - dgf) > 1e-12:
            return False, "symmetry failed"
        if sup_weighted_distance(f, f, weight, 1.0, pts) != 0.0:
            return False, "identity failed"
        dfh = sup_weighted_distance(f, h, weight, 1.0, pts)
        dhg = sup_weighted_distance(h, g, weight, 1.0, pts)
        if dfg > dfh + dhg + 1e-12:
            return False, "triangle failed"
    return True, "symmetry, identity, triangle on random tables"


def check_symmetrize_properties():
    carrier, group = modular_setup()
    rng = SplitMix64(31)
    pts = carrier.points()
    for _ in range(10):
        f = random_dense_table(carrier, rng)
        s = symmetrize(f, group)
        ss = symmetrize(s, group)
        for y in pts:
            if beta_norm(ss.eval(y) - s.eval(y), 1.0) > 1e-12:
                return False, "symmetrize not idempotent"
            if beta_norm(avg_translate(f, group, carrier.zero, y) - s.eval(y), 1.0) > 1e-12:
                return False, "average at zero differs from symmetrization"
    return True, "idempotent; matches translate average at the origin"


def check_operator_linearity():
    carrier, group = modular_setup()
    rng = SplitMix64(47)
    pts = carrier.points()
    for kind in (HALF, FULL):
        op = AveragingOp(kind, group)
        f = random_dense_table(carrier, rng)
        g = random_dense_table(carrier, rng)
        lhs = apply_op(op, f.scale(2.0) + g.scale(-3.0))
        rhs = apply_op(op, f).scale(2.0) + apply_op(op, g).scale(-3.0)
        for x in pts:
            if beta_norm(lhs.eval(x) - rhs.eval(x), 1.0) > 1e-12:
                return False, f"linearity failed for {kind}"
    return True, "both operators linear on random tables"


def check_contraction_law():
    carrier, group = modular_setup()
    control = ConstantControl(0.7)
    beta = 1.0
    cert = minimal_lipschitz(control, group, carrier, beta)
    rng = SplitMix64(59)
    pts = carrier.points()
    op = AveragingOp(HALF, group)
    for weight_fn in (quad_branch_weight, jensen_branch_weight):
        weight = diagonal(weight_fn(control, group, carrier, beta))
        for _ in range(20):
            f = random_dense_table(carrier, rng)
            g = random_dense_table(carrier, rng)
            before = sup_weighted_distance(f, g, weight, beta, pts)
            after = sup_weighted_distance(apply_op(op, f), apply_op(op, g), weight, beta, pts)
            if after > cert.value * before + 1e-9:
                return False, f"contraction violated: {after} > {cert.value} * {before}"
    return True, f"measured modulus below certificate {cert.value}"


def check_power_formula():
    carrier, group = modular_setup()
    rng = SplitMix64(71)
    worst = 0.0
    for _ in range(20):
        f = random_dense_table(carrier, rng)
        for n in (2, 3):
            worst = max(worst, power_formula_check(f, group, n, 1.0))
    return worst <= 1e-12, f"max deviation {worst}"


def check_oracle_dimensions():
    carrier, group = modular_setup()
    qd = quadratic_solution_space(group, carrier).dimension
    jw = jensen_solution_space(group, carrier, with_side_condition=True).dimension
    jwo = jensen_solution_space(group, carrier, with_side_condition=False).dimension
    lat = LatticeCarrier(dimension=2, radius=2)
    lat_group = build_group([Automorphism([[-1, 0], [0, -1]])], lat)
    lqd = quadratic_solution_space(lat_group, lat).dimension
    ljw = jensen_solution_space(lat_group, lat, with_side_condition=True).dimension
    dims = (qd, jw, jwo, lqd, ljw)
    return dims == (0, 0, 1, 3, 2), f"dimensions {dims}"


def check_oracle_fixed_points():
    lat = LatticeCarrier(dimension=2, radius=2)
    group = build_group([Automorphism([[-1, 0], [0, -1]])], lat)
    half = AveragingOp(HALF, group)
    full = AveragingOp(FULL, group)
    worst = 0.0
    for elem in quadratic_solution_space(group, lat).elements:
        out = apply_op(half, elem)
        worst = max(worst, max(beta_norm(out.eval(x) - elem.eval(x), 1.0) for x in lat.points()))
    for elem in jensen_solution_space(group, lat, with_side_condition=True).elements:
        out = apply_op(full, elem)
        worst = max(worst, max(beta_norm(out.eval(x) - elem.eval(x), 1.0) for x in lat.points()))
    return worst <= 1e-9, f"max fixed-point deviation {worst}"


def check_exact_recovery():
    case = exact_recovery_case()
    decomp = case["decomp"]
    dev = max(
        abs(float(decomp.quadratic.quadratic[0, 0, 0]) - 2.0),
        abs(float(decomp.jensen.linear[0, 0]) - 3.0),
        abs(float(decomp.g0[0]) - 0.5),
        abs(float(decomp.h0[0]) - 0.5),
    )
    margins = [b.min_margin for b in case["report"].bounds.values()]
    ok = dev <= 1e-8 and all(m >= 0.0 for m in margins)
    return ok, f"coefficient dev {dev}, min margins {margins}"


def check_noisy_bounds():
    case = noisy_case()
    triple, decomp = case["triple"], case["decomp"]
    sup = max(
        beta_norm(
            triple.f.eval(x) - decomp.quadratic.eval(x) - decomp.jensen.eval(x)
            - decomp.g0 - decomp.h0, 1.0)
        for x in case["carrier"].points())
    margins = [b.min_margin for b in case["report"].bounds.values()]
    ok = (
        abs(case["cert"].value - 0.5) <= 1e-12
        and sup <= 15.0 * case["delta"]
        and all(m >= 0.0 for m in margins)
    )
    return ok, f"sup {sup} vs {15 * case['delta']}, L {case['cert'].value}"


def check_contraction_and_banach():
    ok = True
    details = []
    for case in (exact_recovery_case(), noisy_case(), dense_case()):
        report, cert = case["report"], case["cert"]
        for name, trace in report.traces.items():
            if any(r > cert.value + 1e-9 for r in trace.ratios):
                ok = False
                details.append(f"{name} ratio exceeds {cert.value}")
        group, control, beta = case["group"], case["control"], case["beta"]
        carrier = case["carrier"]
        weight = diagonal(quad_branch_weight(control, group, carrier, beta))
        g0h0 = case["decomp"].g0 + case["decomp"].h0
        start = symmetrize(case["triple"].f, group).add_const(-g0h0)
        margin = diaz_margolis_bound(
            start, case["decomp"].quadratic, AveragingOp(HALF, group),
            cert.value, weight, beta)
        if margin < -1e-9:
            ok = False
            details.append(f"fixed-point gap margin {margin}")
    return ok, "; ".join(details) if details else "ratios and gap margins within bounds"


def check_uniqueness_decay():
    case = noisy_case()
    probe = case["probe"]
    a = probe["halving_to_quadratic"]
    lip = case["cert"].value
    ok = all(a[n] <= lip**n * a[0] + 1e-9 for n in range(min(len(a), 11)))
    return ok, f"decay table head {a[:4]}"


def check_corollary_calculator():
    cf, cg, ch = corollary_coefficients(1.0, 0.5, 0.9, 2)
    ok = 72.0 < cf < 74.0 and abs(cg - cf - 1.0) < 1e-12 and ch > 0
    cf2, _, _ = corollary_coefficients(2.0, 0.5, 0.9, 2)
    ok = ok and abs(cf2 - 2.0 * cf) < 1e-9
    try:
        corollary_coefficients(1.0, 0.9, 0.9, 2)  # needs p < 2*beta - 1 = 0.8
        return False, "constraint violation not raised"
    except ConstraintViolation as exc:
        detail = str(exc)
    return ok, f"f coefficient {cf}; rejected: {detail}"


def check_route_discrepancy():
    full = exact_recovery_case(strategy="full")
    half = exact_recovery_case(strategy="half")
    pts = full["carrier"].points()
    gap = max(
        beta_norm(full["decomp"].jensen.eval(x) - half["decomp"].jensen.eval(x), 1.0)
        for x in pts)
    full_laws = verify_laws(full["decomp"], full["group"], full["beta"])
    half_flags = half["report"].flags
    ok = (
        gap >= 1.0
        and full_laws["jensen"] <= 1e-9
        and full_laws["side_condition"] <= 1e-9
        and not full["report"].flags
        and any(flag.startswith("bound_violated") for flag in half_flags)
    )
    return ok, f"route gap {gap}; halving-route flags {half_flags}"


def check_determinism():
    a = noisy_case(seed=99)
    b = noisy_case(seed=99)
    pts = a["carrier"].points()
    same = all(
        beta_norm(a["triple"].f.eval(x) - b["triple"].f.eval(x), 1.0) == 0.0 for x in pts
    )
    same = same and a["certified"].theta == b["certified"].theta
    return same, "identical seeds give identical noise and certificates"


CHECKS = [
    ("beta-norm axioms", check_beta_norm_axioms),
    ("beta above one breaks triangle", check_beta_above_one_fails),
    ("weighted sup metric axioms", check_metric_axioms),
    ("symmetrization properties", check_symmetrize_properties),
    ("averaging operator linearity", check_operator_linearity),
    ("weighted contraction law", check_contraction_law),
    ("operator power expansion", check_power_formula),
    ("oracle solution dimensions", check_oracle_dimensions),
    ("oracle fixed-point identities", check_oracle_fixed_points),
    ("exact recovery", check_exact_recovery),
    ("noisy bound margins", check_noisy_bounds),
    ("contraction ratios and gap bounds", check_contraction_and_banach),
    ("uniqueness decay", check_uniqueness_decay),
    ("corollary coefficient calculator", check_corollary_calculator),
    ("half/full route discrepancy", check_route_discrepancy),
    ("seeded determinism", check_determinism),
]


def selftest(stream=None) -> bool:
    """Run every built-in check; print one PASS/FAIL line per check."""
    stream = stream or sys.stdout
    all_ok = True
    start = time.perf_counter()
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})", file=stream)
    elapsed = time.perf_counter() - start
    print(f"{'OK' if all_ok else 'FAILED'} in {elapsed:.1f}s", file=stream)
    return all_ok
