"""Continuity path from a supersolution to a constant target.

With omega = tan(0.9) chi and u_hat = 0 the start phase is 1.8; moving the
target to 2.2 is absorbed entirely by the constant, c_t = -0.4 t. States
are written to disk as checkpoints with a manifest.
"""
# %%
import math
import tempfile
from pathlib import Path

from dhym import (
    BackgroundForm, GridSpec, ScalarField, build_structure, continuity_path, read_checkpoints,
    track_path, write_checkpoint,
)
from dhym.subsolution import check_supersolution

spec = GridSpec(2, 8)
S = build_structure("flat", {}, spec)
g = BackgroundForm.multiple_of_chi(S, math.tan(0.9))
zero = ScalarField.constant(spec, 0.0)

# %%
out = Path(tempfile.mkdtemp())
states = continuity_path(2.2, zero, zero, g, S, on_state=lambda i, st: write_checkpoint(out, i, st))
for st in states:
    print(f"t={st.t:.4f} c_t={st.c:+.6f} newton={st.newton_iters} flags ok={st.ok}")

# %% The monitor series is what the CLI writes as CSV
theta0 = check_supersolution(zero, 2.2, g, S).theta0
report = track_path(states, 2.2, theta0, g, S)
print("bounds hold:", report["pass"], "rows:", len(report["series"]))
print("reloaded from manifest:", [round(s.t, 4) for s in read_checkpoints(out / "manifest.json")])
