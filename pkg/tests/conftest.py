import numpy as np
import pytest

from sobolab import bump, model

# Canonical parameter triples in the strict range k in (d/p, 1.5 d/p);
# (3, 2, 2) matches the kernel-regression regime.
CANONICAL = {
    1: dict(k=1, p=1.25, d=1),
    2: dict(k=1, p=2.5, d=2),
    3: dict(k=2, p=2.0, d=3),
}


@pytest.fixture(scope="session")
def params_d1():
    return bump.SobolevParams(**CANONICAL[1])


@pytest.fixture(scope="session")
def params_d2():
    return bump.SobolevParams(**CANONICAL[2])


@pytest.fixture(scope="session")
def params_d3():
    return bump.SobolevParams(**CANONICAL[3])


@pytest.fixture(scope="session")
def moduli_d1(params_d1):
    return bump.reference_moduli(params_d1)


@pytest.fixture(scope="session")
def moduli_d2(params_d2):
    return bump.reference_moduli(params_d2)


@pytest.fixture(scope="session")
def moduli_d3(params_d3):
    # the heavy table (3D quadrature); built once per session
    return bump.reference_moduli(params_d3)


@pytest.fixture(scope="session")
def pure_noise_d1(params_d1):
    """Uniform unit interval domain, g = 0, sigma = 1."""
    return model.DistributionSpec(params=params_d1)


@pytest.fixture(scope="session")
def pure_noise_d3(params_d3):
    return model.DistributionSpec(params=params_d3)


def random_dataset(rng, n, d, box=1.0):
    """Distinct uniform points with standard normal labels."""
    from sobolab.geometry import Dataset

    pts = rng.uniform(-box, box, size=(n, d))
    return Dataset(points=pts, labels=rng.standard_normal(n))
