import numpy as np
import pytest

from vaporstore import GridSpec, MediumParams, TargetSpec

D_REF = 1e-3  # 10 cm^2/s
GAMMA_REF = 14000.0
TAUS_REF = np.array([2.0, 10.0, 20.0, 30.0]) * 1e-6


@pytest.fixture
def desk_grid():
    return GridSpec(512, 512, 10e-6)


@pytest.fixture
def medium():
    return MediumParams(D_REF, GAMMA_REF)


@pytest.fixture
def three_lines():
    return TargetSpec("lines", n_lines=3, thickness=340e-6, spacing=340e-6, length=2e-3)


def random_field_values(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def tau_for_sigma_px(sigma_px, pitch, D=D_REF):
    """Storage time giving a kernel of ``sigma_px`` pixels."""
    return (sigma_px * pitch) ** 2 / (2 * D)
