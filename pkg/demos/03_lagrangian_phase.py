"""The Lagrangian phase sum(arctan lambda_i) and its derivatives.

lambda are the eigenvalues of omega_u relative to chi. Above the
hypercritical threshold (n-1)pi/2 every lambda_i is positive and the phase
is concave as a function of the matrix.
"""
# %%
import math

import numpy as np

from dhym import (
    BackgroundForm, GridSpec, ScalarField, build_structure, cone_membership, hat_theta,
    hessian_coeffs, linearization_coeffs, phase, phase_properties_check, relative_eigenvalues,
)
from dhym.monitors import random_hermitian
from dhym.phase import second_derivative_form

# %% Generalized eigenvalues of a Hermitian pencil
lam = relative_eigenvalues(np.array([[4.0, 1.0], [1.0, 1.0]]), np.diag([2.0, 1.0]))
print("lambda", lam, "phase", phase(lam))

# %% First and second derivatives
print("F'   at (3, 1):", linearization_coeffs([3.0, 1.0]))
print("F''  at (1, 1):", hessian_coeffs([1.0, 1.0]))

# %% Cones and the lemma checks
print(cone_membership([2.0, 2.0], 2.0))
print(phase_properties_check([2.0, 2.0])["pass"], phase_properties_check([5.0, -0.1])["hypercritical_positive"])

# %% Concavity on random directions at a hypercritical point
rng = np.random.default_rng(0)
lam = np.array([3.0, 1.5, 2.0])
values = [float(second_derivative_form(lam, random_hermitian(rng, 3))) for _ in range(1000)]
print("max quadratic form over 1000 directions:", max(values))

# %% The global angle theta-hat: flat background, omega = tan(0.8) chi
spec = GridSpec(2, 16)
S = build_structure("flat", {}, spec)
g = BackgroundForm.multiple_of_chi(S, math.tan(0.8))
print(hat_theta(ScalarField.constant(spec, 0.0), g, S))
print(hat_theta(ScalarField.from_function(spec, lambda *x: 0.3 * np.cos(x[0] + x[2])), g, S))
