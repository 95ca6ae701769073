import numpy as np
import pytest

import epnls as ep


@pytest.fixture(scope="session", autouse=True)
def warm_stepper_kernel():
    """Compile the jit stepper once up front so timed tests measure steady state."""
    g = ep.build_grid(4, 2 * np.pi, 1.0, -1.0)
    u0 = ep.FourierState(np.full(8, 0.05 + 0.02j))
    for quad in (ep.gauss_legendre(3), ep.midpoint()):
        ep.evolve(ep.ep1(), g, 0.01, quad, ep.SolverConfig(), u0, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_state(g, rng, amp=0.1, decay=4.0):
    """Band-limited random state with smoothly decaying spectrum."""
    coeffs = (rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n))
    coeffs *= amp * np.exp(-np.abs(g.j) / decay)
    return ep.FourierState(coeffs=coeffs, t=0.0)
