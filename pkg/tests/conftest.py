import pytest

from adabloom.scores import gen_synthetic


@pytest.fixture(scope="session")
def synth_small():
    """10k/10k default-shape dataset for module-level checks."""
    return gen_synthetic(10_000, 10_000, seed=11)


@pytest.fixture(scope="session")
def synth_bench():
    """The 50k/50k dataset the acceptance comparisons run on."""
    return gen_synthetic(50_000, 50_000, seed=7)
