"""Driving runs from YAML configs through the dhym command.

Equivalent shell usage:

    dhym solve demos/configs/constant.yaml --output-dir out/constant
    dhym path demos/configs/path.yaml --output-dir out/path
    dhym check demos/configs/check.yaml --subsolution
    dhym manufacture demos/configs/manufactured.yaml --output-dir out/h
"""
# %%
import tempfile
from pathlib import Path

from dhym.cli import main
from dhym.fileformat import read_record, read_series

here = Path(__file__).parent / "configs"
out = Path(tempfile.mkdtemp())

# %%
print("solve exit", main(["solve", str(here / "constant.yaml"), "--output-dir", str(out / "c")]))
print("c =", read_record(out / "c" / "result.json")["c"])

# %%
print("path exit", main(["path", str(here / "path.yaml"), "--output-dir", str(out / "p")]))
for row in read_series(out / "p" / "series.csv"):
    print(f"t={row['t']:.4f} c_t={row['c_t']:+.6f} lambda_min={row['lambda_min']:.4f}")

# %%
print("check exit", main(["check", str(here / "check.yaml"), "--subsolution"]))
