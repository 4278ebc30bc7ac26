"""C-subsolutions, supersolutions and the dichotomy.

The pointwise criterion for a C-subsolution is compared with a sampling
oracle that looks for unbounded pieces of the constrained level set.
"""
# %%
import math

import numpy as np

from dhym import (
    AnalyticPotential, BackgroundForm, GridSpec, ScalarField, build_structure, check_c_subsolution,
    check_c_subsolution_bruteforce, check_dichotomy, check_supersolution, largest_dichotomy_theta,
    manufacture_exact, solve,
)
from dhym.subsolution import subsolution_margins

spec = GridSpec(2, 8)
S = build_structure("flat", {}, spec)
zero = ScalarField.constant(spec, 0.0)

# %% lambda(u_sub) = (2, 2) passes at h = 3pi/4; (1, 1) sits exactly on the boundary
for a in (2.0, 1.0):
    rep = check_c_subsolution(zero, 3 * math.pi / 4, BackgroundForm.multiple_of_chi(S, a), S)
    print(f"a={a}: subsolution={rep.is_subsolution} margin={rep.worst_margin:.4f}")

# %% Agreement with the sampling oracle on random diagonal instances
rng = np.random.default_rng(1)
agree = 0
for k in range(50):
    n = int(rng.integers(2, 4))
    lam = rng.uniform(0.1, 5.0, n)
    h = rng.uniform((n - 1) * math.pi / 2, n * math.pi / 2)
    agree += (np.min(subsolution_margins(np.sort(lam)[::-1], h)) > 0) == check_c_subsolution_bruteforce(lam, h, seed=k)
print("agreement", agree, "/ 50")

# %% Supersolution: theta0 = 1.8 against h = 2.0 and h = 1.7
g = BackgroundForm.multiple_of_chi(S, math.tan(0.9))
for h in (2.0, 1.7):
    rep = check_supersolution(zero, h, g, S)
    print(f"h={h}: supersolution={rep.is_supersolution} slack={rep.min_slack:+.3f}")

# %% Dichotomy on a manufactured twisted solution
T = build_structure("twisted", {"epsilon": 0.25}, spec)
g = BackgroundForm.multiple_of_chi(T, 2.0)
h = manufacture_exact(AnalyticPotential("0.05*cos(x1) + 0.03*sin(x2 + x4)", 2), g, T)
u, c, _ = solve(h, zero, 0.0, g, T)
theta = largest_dichotomy_theta(zero, u, h + c, g, T)
print("largest theta:", theta, check_dichotomy(zero, u, theta, h + c, g, T).neither_points)
