"""Newton solve of the dHYM equation with a manufactured right-hand side.

h is built from the exact derivatives of u*, so the discrete solution
differs from u* by the truncation error, which should shrink 4x per grid
doubling. The bordered Newton system also returns the constant c.
"""
# %%
from dhym import AnalyticPotential, BackgroundForm, GridSpec, ScalarField, build_structure, manufacture_exact, solve

pot = AnalyticPotential("0.05*cos(x1) + 0.03*sin(x2 + x4)", n=2)

# %%
for preset in ("flat", "twisted"):
    errors = []
    for points in (8, 16):
        spec = GridSpec(2, points)
        S = build_structure(preset, {"epsilon": 0.25} if preset == "twisted" else {}, spec)
        g = BackgroundForm.multiple_of_chi(S, 2.0)
        h = manufacture_exact(pot, g, S)
        u, c, report = solve(h, ScalarField.constant(spec, 0.0), 0.0, g, S)
        errors.append((u - pot.field(spec).mean_zero()).max_norm())
        residuals = [f"{row['residual']:.1e}" for row in report.history]
        print(f"{preset:7s} N={points:2d} c={c:+.2e} error={errors[-1]:.2e} residuals={residuals}")
    print(f"{preset} ratio {errors[0] / errors[1]:.2f}")
