import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spec(case: str, rng: np.random.Generator):
    """Random valid spec for a case, kept away from degenerate corners."""
    from selfaffine.core import SystemSpec

    if case == "positive_real":
        lam = rng.uniform(0.15, 0.82)
        mu = lam + rng.uniform(0.03, 0.9 - lam)
        return SystemSpec.positive_real(lam, mu)
    if case == "mixed_real":
        return SystemSpec.mixed_real(rng.uniform(0.15, 0.9), rng.uniform(0.15, 0.9))
    if case == "jordan":
        return SystemSpec.jordan(rng.uniform(0.2, 0.9))
    if case == "complex":
        r = rng.uniform(0.25, 0.88)
        theta = rng.uniform(0.15, np.pi - 0.15)
        return SystemSpec.complex_pair(r * np.cos(theta), r * np.sin(theta))
    raise ValueError(case)


ALL_CASES = ("positive_real", "mixed_real", "jordan", "complex")
