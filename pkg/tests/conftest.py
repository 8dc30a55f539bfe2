import numpy as np
import pytest

from hurriloss import build_design, generate_synthetic


@pytest.fixture(scope="session")
def small_bundle():
    return generate_synthetic(42, 120, 8, 0.3)


@pytest.fixture(scope="session")
def small_design(small_bundle):
    return build_design(small_bundle)


@pytest.fixture(scope="session")
def benchmark_bundle():
    """The 2000-ZCTA, noise 0.3, seed 42 benchmark."""
    return generate_synthetic(42, 2000, 50, 0.3)


@pytest.fixture(scope="session")
def benchmark_design(benchmark_bundle):
    return build_design(benchmark_bundle)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
