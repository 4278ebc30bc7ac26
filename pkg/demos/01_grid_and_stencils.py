"""Periodic grids and finite-difference stencils.

Fields live on a uniform grid with N points per real axis of the
2n-torus. Derivatives are central differences with periodic wraparound,
so their error should drop by about 4x each time N doubles.
"""
# %%
import numpy as np

from dhym import GridSpec, ScalarField, diff, mean, mixed_diff, real_hessian_eigen_max

spec = GridSpec(n=1, points_per_axis=16)
print(spec, "spacing", spec.spacing, "points", spec.size)

# %% Second-order accuracy of the three stencils
for points in (16, 32, 64):
    spec = GridSpec(1, points)
    f = ScalarField.from_function(spec, lambda x1, x2: np.sin(x1) * np.sin(x2))
    x1, x2 = spec.coordinate(1), spec.coordinate(2)
    e1 = np.max(np.abs(diff(f, 1, 1).values - np.cos(x1) * np.sin(x2)))
    e2 = np.max(np.abs(diff(f, 1, 2).values + np.sin(x1) * np.sin(x2)))
    em = np.max(np.abs(mixed_diff(f, 1, 2).values - np.cos(x1) * np.cos(x2)))
    print(f"N={points:3d}  d1 {e1:.2e}  d2 {e2:.2e}  mixed {em:.2e}")

# %% Uniform-weight quadrature integrates resolved Fourier modes exactly
spec = GridSpec(1, 12)
print("mean sin^2 =", mean(ScalarField.from_function(spec, lambda x1, x2: np.sin(x1) ** 2)))

# %% Largest eigenvalue of the real Hessian: cos(x1) gives max(-cos x1, 0)
u = ScalarField.from_function(GridSpec(1, 16), lambda x1, x2: np.cos(x1))
print("mu1 at x1 = pi:", real_hessian_eigen_max(u).values[8, 0])
