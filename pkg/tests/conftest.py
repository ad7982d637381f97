import numpy as np
import pytest

from ebcm_mzi import RunConfig


class SequenceRng:
    """Deterministic stand-in for a Generator: yields preset uniforms."""

    def __init__(self, values):
        self.values = list(values)
        self.calls = 0

    def random(self, n=None):
        if n is not None:
            return np.array([self.random() for _ in range(n)])
        self.calls += 1
        return self.values.pop(0)


@pytest.fixture
def small_cfg():
    return RunConfig(alpha=0.99, master_seed=77, phi0_points=8,
                     photons_per_set=200, sets_per_protocol=2)
