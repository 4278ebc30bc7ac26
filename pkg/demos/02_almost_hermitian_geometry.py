"""Almost Hermitian structures given by a (1,0)-frame.

The flat preset is Kahler: the bracket [e_i, conj(e_j)] has no (0,1) part.
The twisted preset mixes e_1 into e_2 with weight eps*sin(x1), which
makes the structure non-integrable and adds a first-order correction to
the complex Hessian.
"""
# %%
import math

import numpy as np

from dhym import BackgroundForm, GridSpec, ScalarField, build_structure, complex_hessian, omega_u, validate_structure

spec = GridSpec(2, 16)
flat = build_structure("flat", {}, spec)
twisted = build_structure("twisted", {"epsilon": 0.25}, spec)

# %% Bracket coefficients: zero for flat, eps*cos(x1)/sqrt(2) for the (1, 2bar, 1bar) entry when twisted
print("flat |bracket01|    =", np.max(np.abs(flat.bracket01)))
b = twisted.expanded("bracket01")[..., 0, 1, 0]
print("twisted beta_12^1 vs eps cos(x1)/sqrt2:", np.max(np.abs(b - 0.25 * np.cos(spec.coordinate(1)) / math.sqrt(2))))

# %% Validation report
for S in (flat, twisted):
    rep = validate_structure(S)
    print(S.preset_id, "pass" if rep["pass"] else "FAIL", {k: v["pass"] for k, v in rep["checks"].items()})

# %% Complex Hessian of cos(x1): the twisted frame mixes it into the (2, 2bar) entry
u = ScalarField.from_function(spec, lambda *x: np.cos(x[0]))
for S in (flat, twisted):
    H = complex_hessian(u, S).values
    print(S.preset_id, "max |H[0,0]|", np.abs(H[..., 0, 0]).max(), "max |H[1,1]|", np.abs(H[..., 1, 1]).max())

# %% omega_u = g + complex Hessian
g = BackgroundForm.multiple_of_chi(flat, math.tan(1.0))
print(omega_u(g, ScalarField.constant(spec, 0.0), flat).values[0, 0, 0, 0])
