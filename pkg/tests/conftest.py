import numpy as np
import pytest

from mhdstab.thermo import IdealGas, ThermoState


@pytest.fixture(scope="session")
def gas():
    return IdealGas(R=1.0, c_v=1.5)


def random_state(rng, u_max=10.0, B_max=10.0) -> ThermoState:
    """Admissible state with rho, theta log-uniform in [1e-2, 1e2] and
    |u|, |B| uniform in [0, u_max] / [0, B_max]."""
    def vec(scale):
        v = rng.standard_normal(3)
        n = np.linalg.norm(v)
        return v / n * rng.uniform(0.0, scale) if n > 0 else np.zeros(3)

    return ThermoState(
        rho=10.0 ** rng.uniform(-2, 2),
        u=vec(u_max),
        theta=10.0 ** rng.uniform(-2, 2),
        B=vec(B_max),
    )


def random_xi(rng) -> np.ndarray:
    v = rng.standard_normal(3)
    v /= np.linalg.norm(v)
    return v * 10.0 ** rng.uniform(-1, 1)


def random_rotation(rng) -> np.ndarray:
    """Haar-ish random proper rotation via QR."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
