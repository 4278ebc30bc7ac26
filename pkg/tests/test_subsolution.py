import math

import numpy as np
import pytest

from dhym import (
    BackgroundForm,
    DomainError,
    GridSpec,
    ScalarField,
    build_structure,
    check_c_subsolution,
    check_c_subsolution_bruteforce,
    check_dichotomy,
    check_supersolution,
    largest_dichotomy_theta,
    solve,
)
from dhym.solver import manufacture_exact
from dhym.analytic import AnalyticPotential
from dhym.subsolution import subsolution_margins

from conftest import constant_problem


def diagonal_instance(lam, points=8):
    n = len(lam)
    spec = GridSpec(n, points)
    S = build_structure("flat", {}, spec)
    return spec, S, BackgroundForm.from_matrix(S, np.diag(lam))


def random_instances(count, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(2, 4))
        lam = rng.uniform(0.1, 5.0, size=n)
        h = rng.uniform((n - 1) * math.pi / 2, n * math.pi / 2)
        if h <= (n - 1) * math.pi / 2 or h >= n * math.pi / 2:
            continue
        out.append((lam, h))
    return out


def test_subsolution_example_strict_pass():
    spec, S, g = constant_problem(2.0)
    rep = check_c_subsolution(ScalarField.constant(spec, 0.0), 3 * math.pi / 4, g, S)
    assert rep.is_subsolution
    assert rep.worst_margin == pytest.approx(math.atan(2) - math.pi / 4)
    assert rep.worst_margin == pytest.approx(0.3217, abs=1e-4)
    assert len(rep.per_j_margins) == 2


def test_subsolution_example_zero_margin_fails():
    spec, S, g = constant_problem(1.0)
    rep = check_c_subsolution(ScalarField.constant(spec, 0.0), 3 * math.pi / 4, g, S)
    assert not rep.is_subsolution
    assert rep.worst_margin == pytest.approx(0.0, abs=1e-15)


def test_subsolution_rejects_non_hypercritical_h():
    spec, S, g = constant_problem(2.0)
    with pytest.raises(DomainError):
        check_c_subsolution(ScalarField.constant(spec, 0.0), 1.0, g, S)


def test_solution_is_subsolution_of_its_own_target():
    spec, S, g = constant_problem(2.0, points=8, preset="twisted")
    u_star = AnalyticPotential("0.05*cos(x1) + 0.03*sin(x2 + x4)", 2)
    h = manufacture_exact(u_star, g, S)
    u, c, _ = solve(h, ScalarField.constant(spec, 0.0), 0.0, g, S)
    rep = check_c_subsolution(u, h + c, g, S)
    assert rep.is_subsolution
    assert rep.worst_margin > 0


def test_subsolution_monotone_in_h():
    spec, S, g = constant_problem(2.0, preset="twisted")
    u = ScalarField.from_function(spec, lambda *x: 0.05 * np.cos(x[0]))
    margins = [check_c_subsolution(u, h, g, S).worst_margin for h in (1.9, 2.0, 2.2, 2.5)]
    assert all(b <= a for a, b in zip(margins, margins[1:]))


def test_subsolution_invariant_under_constants():
    spec, S, g = constant_problem(2.0, preset="twisted")
    rng = np.random.default_rng(0)
    # dyadic values keep u + 5 exactly representable, so the stencils see identical differences
    q = np.round(0.01 * rng.standard_normal(spec.shape) * 2 ** 20) / 2 ** 20
    u = ScalarField(spec, q)
    assert check_c_subsolution(u, 2.2, g, S) == check_c_subsolution(u + 5.0, 2.2, g, S)


def test_bruteforce_examples():
    assert check_c_subsolution_bruteforce([2.0, 2.0], 3 * math.pi / 4, box=1e3)
    for box in (1e2, 1e3, 1e4):
        assert not check_c_subsolution_bruteforce([1.0, 1.0], 3 * math.pi / 4, box=box)
    assert check_c_subsolution_bruteforce([100.0, 100.0], 3 * math.pi / 4, box=1e3)


def test_criterion_agrees_with_bruteforce_on_random_instances():
    disagreements = []
    for k, (lam, h) in enumerate(random_instances(200)):
        criterion = bool(np.min(subsolution_margins(lam, h)) > 0)
        oracle = check_c_subsolution_bruteforce(lam, h, seed=k)
        if criterion != oracle:
            disagreements.append((lam.tolist(), h, criterion, oracle))
    assert not disagreements


def test_field_check_matches_margin_core():
    for lam, h in random_instances(12, seed=1):
        if len(lam) != 2:
            continue
        spec, S, g = diagonal_instance(lam)
        rep = check_c_subsolution(ScalarField.constant(spec, 0.0), h, g, S)
        core = subsolution_margins(np.sort(lam)[::-1], h)
        assert rep.worst_margin == pytest.approx(float(np.min(core)), abs=1e-14)


def test_supersolution_examples():
    spec, S, g = constant_problem(math.tan(0.9))
    u_hat = ScalarField.constant(spec, 0.0)
    rep = check_supersolution(u_hat, 2.0, g, S)
    assert rep.is_supersolution and rep.hypercritical and rep.theorem_hypotheses
    assert np.allclose(rep.theta0.values, 1.8, atol=1e-15)
    rep = check_supersolution(u_hat, 1.7, g, S)
    assert not rep.is_supersolution
    assert rep.min_slack == pytest.approx(-0.1, abs=1e-14)
    exact = check_supersolution(u_hat, rep.theta0, g, S)
    assert exact.is_supersolution and exact.min_slack == 0.0


def test_dichotomy_constant_solution_branch_b():
    spec, S, g = constant_problem(math.tan(1.0))
    u = ScalarField.constant(spec, 0.0)
    rep = check_dichotomy(u, u, 1.0 / 2, 2.0, g, S)
    assert rep.branch_a_points + rep.branch_b_points + rep.neither_points == spec.size
    assert rep.neither_points == 0
    assert rep.trace_min == pytest.approx(2 / (1 + math.tan(1.0) ** 2))


def test_dichotomy_manufactured_small_and_large_theta():
    spec, S, g = constant_problem(2.0, preset="twisted")
    h = manufacture_exact(AnalyticPotential("0.05*cos(x1) + 0.03*sin(x2 + x4)", 2), g, S)
    u, c, _ = solve(h, ScalarField.constant(spec, 0.0), 0.0, g, S)
    u_sub = ScalarField.constant(spec, 0.0)
    small = check_dichotomy(u_sub, u, 1e-3, h + c, g, S)
    assert small.neither_points == 0
    big = check_dichotomy(u_sub, u, 10.0, h + c, g, S)
    assert big.neither_points > 0
    assert len(big.details) <= 20
    theta = largest_dichotomy_theta(u_sub, u, h + c, g, S)
    assert theta >= 1e-3
    assert check_dichotomy(u_sub, u, theta, h + c, g, S).neither_points == 0
    if theta < 1.0:
        assert check_dichotomy(u_sub, u, theta * 1.01, h + c, g, S).neither_points > 0


def test_dichotomy_rejects_nonpositive_theta():
    spec, S, g = constant_problem(2.0)
    u = ScalarField.constant(spec, 0.0)
    with pytest.raises(DomainError):
        check_dichotomy(u, u, 0.0, 2.2, g, S)
