import math

import numpy as np
import pytest

from dhym import BackgroundForm, GridSpec, build_structure


@pytest.fixture
def flat16():
    spec = GridSpec(2, 16)
    return spec, build_structure("flat", {}, spec)


@pytest.fixture
def twisted16():
    spec = GridSpec(2, 16)
    return spec, build_structure("twisted", {"epsilon": 0.25}, spec)


def constant_problem(a, points=8, n=2, preset="flat", epsilon=0.25):
    """Grid, structure and ``omega = a * chi``."""
    spec = GridSpec(n, points)
    params = {"epsilon": epsilon} if preset == "twisted" else {}
    S = build_structure(preset, params, spec)
    return spec, S, BackgroundForm.multiple_of_chi(S, a)


def smooth_random_field(spec, rng, modes=3, amplitude=0.05):
    """Random trigonometric polynomial with low frequencies."""
    x = spec.coordinates()
    out = np.zeros(spec.shape)
    for _ in range(modes):
        k = rng.integers(-1, 2, size=spec.ndim)
        if not np.any(k):
            k[0] = 1
        arg = sum(int(kk) * xx for kk, xx in zip(k, x))
        out = out + amplitude * rng.uniform(-1, 1) * np.cos(arg + rng.uniform(0, 2 * math.pi))
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
