import numpy as np
import pytest

from biphoton.kernels import METHOD_ADAPTIVE, METHOD_TRAPEZOID, QuadratureSpec
from biphoton.params import coupling_15mw_params, coupling_30mw_params


@pytest.fixture(scope="session")
def params_15mw():
    return coupling_15mw_params()


@pytest.fixture(scope="session")
def params_30mw():
    return coupling_30mw_params()


@pytest.fixture(scope="session")
def trapezoid_oracle():
    """The brute-force oracle of record: 1e6 points over +-8 Doppler widths."""
    return QuadratureSpec(method=METHOD_TRAPEZOID, trapezoid_points=1_000_000,
                          support_halfwidth=8.0)


@pytest.fixture(scope="session")
def adaptive_oracle():
    return QuadratureSpec(method=METHOD_ADAPTIVE, panel_tolerance=1e-11)


def rel_err(approx, exact):
    exact = complex(exact)
    if exact == 0:
        return abs(complex(approx))
    return abs(complex(approx) - exact) / abs(exact)


@pytest.fixture(scope="session")
def random_valid_params():
    """Physically sensible randomized parameter sets (fixed seed)."""
    rng = np.random.default_rng(20240817)

    def draw(n):
        out = []
        for _ in range(n):
            out.append(dict(
                alpha=float(rng.uniform(100.0, 800.0)),
                b=float(rng.uniform(0.0, 0.6)),
                omega_c=float(rng.uniform(6.0, 20.0)),
                gamma_dec=float(np.exp(rng.uniform(np.log(0.005), np.log(0.05)))),
                gamma_doppler=float(rng.uniform(30.0, 80.0)),
                gamma_etalon=float(rng.uniform(4.0, 15.0)),
                delta_c_ghz=float(rng.uniform(0.0, 3.0)),
            ))
        return out

    return draw
