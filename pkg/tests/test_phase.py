import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dhym import (
    BackgroundForm,
    DegenerateArgumentError,
    DomainError,
    GridSpec,
    PhaseCones,
    ScalarField,
    build_structure,
    cone_membership,
    hat_theta,
    hessian_coeffs,
    linearization_coeffs,
    phase,
    phase_properties_check,
    relative_eigenvalues,
)
from dhym.monitors import random_hermitian
from dhym.phase import linearization_matrix, relative_eigh, second_derivative_form


def hypercritical_lambdas(rng, n, count):
    """Random lambda with every entry positive and phase above (n-1) pi / 2.

    Gaps ``pi/2 - arctan(lambda_i)`` are drawn so their sum stays below pi/2.
    """
    w = rng.dirichlet(np.ones(n), size=count)
    total = rng.uniform(0.02, 0.98, size=(count, 1)) * math.pi / 2
    gaps = np.maximum(w * total, 2e-3)
    return 1.0 / np.tan(gaps)


def test_relative_eigenvalues_examples():
    assert np.allclose(relative_eigenvalues(np.diag([3.0, 1.0]), np.eye(2)), [3.0, 1.0])
    assert np.allclose(relative_eigenvalues(2 * np.eye(2), 2 * np.eye(2)), [1.0, 1.0])
    lam = relative_eigenvalues(np.array([[4.0, 1.0], [1.0, 1.0]]), np.diag([2.0, 1.0]))
    oracle = np.sort(np.roots([2.0, -6.0, 3.0]))[::-1]
    assert np.allclose(lam, oracle, atol=1e-14)
    assert np.allclose(lam, [(3 + math.sqrt(3)) / 2, (3 - math.sqrt(3)) / 2], atol=1e-14)


def test_relative_eigenvalues_rejects_indefinite_chi():
    with pytest.raises(DomainError, match="min eigenvalue"):
        relative_eigenvalues(np.eye(2), np.diag([1.0, -1.0]))


def random_pd(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + n * np.eye(n)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_relative_eigenvalue_identities(n):
    rng = np.random.default_rng(n)
    chi = random_pd(rng, n)
    assert np.allclose(relative_eigenvalues(chi, chi), np.ones(n), atol=1e-12)
    gt = random_hermitian(rng, n)
    lam = relative_eigenvalues(gt, chi)
    assert np.all(np.diff(lam) <= 0)
    assert np.allclose(relative_eigenvalues(2.5 * gt, chi), 2.5 * lam, atol=1e-12)
    for value in lam:
        assert abs(np.linalg.det(gt - value * chi)) <= 1e-10 * np.linalg.norm(gt) ** n + 1e-10


def test_relative_eigh_normalization():
    rng = np.random.default_rng(11)
    chi = random_pd(rng, 3)
    gt = random_hermitian(rng, 3)
    lam, vec = relative_eigh(gt, chi)
    assert np.allclose(vec.conj().T @ chi @ vec, np.eye(3), atol=1e-12)
    assert np.allclose(vec.conj().T @ gt @ vec, np.diag(lam), atol=1e-12)


def test_relative_eigenvalues_deterministic():
    rng = np.random.default_rng(12)
    chi, gt = random_pd(rng, 3), random_hermitian(rng, 3)
    assert np.array_equal(relative_eigenvalues(gt, chi), relative_eigenvalues(gt.copy(), chi.copy()))


def test_phase_examples():
    assert phase([1.0, 1.0]) == pytest.approx(math.pi / 2, abs=1e-15)
    assert phase([0.0, 0.0, 0.0]) == 0.0
    # direct summation: atan(2.3660) + atan(0.6340) = 1.73596
    assert phase([2.3660, 0.6340]) == pytest.approx(math.atan(2.3660) + math.atan(0.6340), abs=1e-15)
    assert phase([2.3660, 0.6340]) == pytest.approx(1.7360, abs=1e-4)


def test_linearization_coeff_examples():
    assert np.array_equal(linearization_coeffs([0.0]), [1.0])
    assert np.allclose(linearization_coeffs([1.0, 1.0]), [0.5, 0.5])
    assert np.allclose(linearization_coeffs([3.0, 1.0]), [0.1, 0.5])


def test_hessian_coeff_examples():
    diag, off = hessian_coeffs([0.0, 0.0])
    assert np.all(diag == 0)
    diag, off = hessian_coeffs([1.0, 1.0])
    assert np.allclose(diag, [-0.5, -0.5])
    assert off[0, 1] == pytest.approx(-0.5)
    _, off = hessian_coeffs([2.0, 0.5])
    assert off[0, 1] == pytest.approx(-0.4)


def test_off_diagonal_is_divided_difference_of_first_derivative():
    # (F'_i - F'_k) / (lam_i - lam_k) for arctan is -(l_i + l_k) F'_i F'_k
    lam = np.array([2.0, 0.5])
    fp = linearization_coeffs(lam)
    _, off = hessian_coeffs(lam)
    assert off[0, 1] == pytest.approx((fp[0] - fp[1]) / (lam[0] - lam[1]), rel=1e-14)


def test_cone_membership_examples():
    rep = cone_membership([2.0, 2.0], 2.0)
    assert rep["in_gamma_n"] and rep["in_gamma"] and rep["in_gamma_sigma"]
    assert rep["margins"]["gamma_sigma"] == pytest.approx(2 * math.atan(2) - 2.0)
    assert rep["margins"]["gamma_sigma"] == pytest.approx(0.2143, abs=1e-4)
    assert not cone_membership([1.0, -1.0], 2.0)["in_gamma"]
    for sigma in (math.pi / 2 + 1e-9, 2.0, 3.0):
        rep = cone_membership([1.0, 1.0], sigma)
        assert not rep["in_gamma_sigma"]
        assert rep["margins"]["gamma_sigma"] < 0


@pytest.mark.parametrize("sigma", [math.pi / 2, math.pi, 1.0])
def test_phase_cones_reject_sigma(sigma):
    with pytest.raises(DomainError):
        PhaseCones(2, sigma)


def test_phase_properties_examples():
    rep = phase_properties_check([2.0, 2.0])
    assert rep["pass"]
    assert all(rep[k] == "pass" for k in ("derivative_positive", "hypercritical_positive", "ray_limit"))
    rep = phase_properties_check([5.0, -0.1])
    assert rep["phase"] == pytest.approx(1.273, abs=1e-3)
    assert rep["hypercritical_positive"] == "not-applicable"
    rep = phase_properties_check([1.0, 1.0, 1.0])
    assert np.all(np.diff(rep["ray_values"]) > 0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_derivative_consistency_in_gamma(n):
    rng = np.random.default_rng(20 + n)
    delta = 1e-4
    count = 0
    while count < 200:
        lam = rng.uniform(0.2, 5.0, size=n)
        if phase(lam) <= (n - 1) * math.pi / 2:
            continue
        count += 1
        fp = linearization_coeffs(lam)
        diag, _ = hessian_coeffs(lam)
        for i in range(n):
            e = np.zeros(n)
            e[i] = delta
            first = (phase(lam + e) - phase(lam - e)) / (2 * delta)
            second = (phase(lam + e) - 2 * phase(lam) + phase(lam - e)) / delta ** 2
            assert abs(first - fp[i]) <= 1e-6
            assert abs(second - diag[i]) <= 1e-5


@pytest.mark.parametrize("n", [2, 3, 4])
def test_second_derivative_form_matches_matrix_finite_difference(n):
    # independent oracle: differentiate phase(eig(diag(lam) + s B)) twice in s
    rng = np.random.default_rng(30 + n)
    lam_all = hypercritical_lambdas(rng, n, 20)
    lam_all = lam_all[np.max(lam_all, axis=1) < 50]
    s = 1e-3
    for lam in lam_all:
        b = random_hermitian(rng, n)
        base = np.diag(lam)

        def f(t):
            return phase(np.linalg.eigvalsh(base + t * b))

        fd = (f(s) - 2 * f(0.0) + f(-s)) / s ** 2
        assert abs(second_derivative_form(lam, b) - fd) <= 1e-5 * max(1.0, abs(fd))


def test_linearization_matrix_is_gradient_of_phase():
    rng = np.random.default_rng(40)
    chi = random_pd(rng, 3)
    gt = chi @ np.diag([3.0, 2.0, 4.0]) + random_hermitian(rng, 3) * 0.1
    gt = 0.5 * (gt + gt.conj().T)
    lam, vec = relative_eigh(gt, chi)
    F = linearization_matrix(lam, vec)
    b = random_hermitian(rng, 3)
    s = 1e-6
    fd = (phase(relative_eigenvalues(gt + s * b, chi)) - phase(relative_eigenvalues(gt - s * b, chi))) / (2 * s)
    assert abs(np.real(np.sum(F * b)) - fd) <= 1e-8


def test_concavity_example_values():
    assert second_derivative_form([1.0, 1.0], np.diag([1.0, -1.0])) == pytest.approx(-1.0)
    assert second_derivative_form([1.0, 1.0], np.zeros((2, 2))) == 0.0


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(2, 4),
    weights=st.lists(st.floats(0.05, 1.0), min_size=4, max_size=4),
    total=st.floats(1e-3, 1.0 - 1e-9),
)
def test_product_of_two_smallest_eigenvalues_at_least_one(n, weights, total):
    w = np.array(weights[:n]) / np.sum(weights[:n])
    gaps = w * total * (math.pi / 2)
    lam = np.sort(1.0 / np.tan(gaps))[::-1]
    assert phase(lam) >= (n - 1) * math.pi / 2 + 1e-9 or total > 1 - 1e-8
    for j in range(n - 1):
        assert lam[j] * lam[-1] >= 1.0 - 1e-12


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 4), seed=st.integers(0, 2 ** 32 - 1))
def test_concavity_on_hypercritical_lambdas(n, seed):
    rng = np.random.default_rng(seed)
    lam = hypercritical_lambdas(rng, n, 1)[0]
    for _ in range(20):
        assert second_derivative_form(lam, random_hermitian(rng, n)) <= 1e-12


def test_hat_theta_examples():
    spec = GridSpec(2, 8)
    S = build_structure("flat", {}, spec)
    zero = ScalarField.constant(spec, 0.0)
    assert float(hat_theta(zero, BackgroundForm.multiple_of_chi(S, 1.0), S)) == pytest.approx(math.pi / 2, abs=1e-14)
    res = hat_theta(zero, BackgroundForm.multiple_of_chi(S, math.tan(0.8)), S)
    assert res.principal == pytest.approx(1.6, abs=1e-14)
    assert res.unwrapped == pytest.approx(1.6, abs=1e-14)


def test_hat_theta_slabs_agree_with_single_pass():
    spec = GridSpec(2, 16)
    S = build_structure("twisted", {"epsilon": 0.25}, spec)
    g = BackgroundForm.multiple_of_chi(S, 2.0)
    u = ScalarField.from_function(spec, lambda *x: 0.1 * np.cos(x[0] + x[2]))
    a = hat_theta(u, g, S, max_points=spec.size)
    b = hat_theta(u, g, S, max_points=spec.size // 16)
    assert a.principal == pytest.approx(b.principal, abs=1e-14)
    assert a.unwrapped == pytest.approx(b.unwrapped, abs=1e-14)


def test_hat_theta_branch_reporting_n3():
    spec = GridSpec(3, 8)
    S = build_structure("flat", {}, spec)
    res = hat_theta(ScalarField.constant(spec, 0.0), BackgroundForm.multiple_of_chi(S, math.tan(1.2)), S)
    assert res.unwrapped == pytest.approx(3.6, abs=1e-13)
    assert res.principal == pytest.approx(3.6 - 2 * math.pi, abs=1e-13)


def test_hat_theta_degenerate_argument():
    # lambda = (1, 1) and (-1, -1) on alternating slabs: (1 + i)^2 = 2i and (1 - i)^2 = -2i cancel
    spec = GridSpec(2, 8)
    S = build_structure("flat", {}, spec)
    sign = np.where(np.arange(8) % 2 == 0, 1.0, -1.0)[:, None, None, None]
    gfield = np.zeros((8, 1, 1, 1, 2, 2), dtype=complex)
    gfield[..., 0, 0] = sign
    gfield[..., 1, 1] = sign
    with pytest.raises(DegenerateArgumentError):
        hat_theta(ScalarField.constant(spec, 0.0), BackgroundForm(gfield), S)
