"""Runtime monitors for the a priori estimate quantities.

A snapshot reports the C0 size, gradient and largest real Hessian
eigenvalue, together with the eigenvalue bounds lambda_j lambda_n >= 1 and
lambda_n >= tan(inf h - (n-1)pi/2) that hold on hypercritical states.
"""
# %%
import math

from dhym import (
    AnalyticPotential, BackgroundForm, GridSpec, ScalarField, build_structure, check_concavity_at_state,
    check_eigenvalue_inequalities, manufacture_exact, snapshot, solve,
)

spec = GridSpec(2, 16)
S = build_structure("twisted", {"epsilon": 0.25}, spec)
g = BackgroundForm.multiple_of_chi(S, 2.0)
h = manufacture_exact(AnalyticPotential("0.05*cos(x1) + 0.03*sin(x2 + x4)", 2), g, S)
u, c, _ = solve(h, ScalarField.constant(spec, 0.0), 0.0, g, S)

# %%
snap = snapshot(u, ScalarField.constant(spec, 0.0), h, g, S)
for key, value in snap.as_dict().items():
    print(f"{key:20s} {value}")

# %%
print(check_eigenvalue_inequalities(snap, h.values + c))
print({k: v for k, v in check_concavity_at_state(u, g, S, trials=100, seed=0).items() if k != "failures"})

# %% Constant data: lambda = tan(1), product tan(1)^2
flat = build_structure("flat", {}, spec)
g1 = BackgroundForm.multiple_of_chi(flat, math.tan(1.0))
s0 = snapshot(ScalarField.constant(spec, 0.0), None, 2.0, g1, flat)
print(s0.lambda_min, s0.lambda_product_min)
