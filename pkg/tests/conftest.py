import numpy as np
import pytest

from flatsat import PhysicalParams, solve_nominal


@pytest.fixture(scope="session")
def table1_params() -> PhysicalParams:
    """g=9.81, t_max=1.45g, eps_max=10 deg (the printed 0.1745 rad)."""
    return PhysicalParams(g=9.81, t_max=1.45 * 9.81, eps_max=float(np.radians(10.0)))


@pytest.fixture(scope="session")
def table2_params() -> PhysicalParams:
    return PhysicalParams(g=9.81, t_max=2 * 9.81, eps_max=0.698)


@pytest.fixture(scope="session")
def printed_q() -> np.ndarray:
    return np.block(
        [
            [2.3148 * np.eye(3), -1.3889 * np.eye(3)],
            [-1.3889 * np.eye(3), 1.6667 * np.eye(3)],
        ]
    )


@pytest.fixture(scope="session")
def printed_qw() -> np.ndarray:
    return np.block(
        [
            [np.diag([2.29, 2.29, 4.42]), -2.14 * np.eye(3)],
            [-2.14 * np.eye(3), 2.07 * np.eye(3)],
        ]
    )


@pytest.fixture(scope="session")
def table1_design(table1_params, printed_q):
    """Verified design built from the printed certificate."""
    return solve_nominal(table1_params, 1.2, q_matrix=printed_q, lmi_tol=1e-3)


@pytest.fixture(scope="session")
def synth_design(table1_params):
    """Synthesized design at the same decay rate."""
    return solve_nominal(table1_params, 1.2)


@pytest.fixture(scope="session")
def wind_e_matrix() -> np.ndarray:
    """Wind on the x/y axes: columns select the first two state rows."""
    e = np.zeros((6, 2))
    e[0, 0] = 1.0
    e[1, 1] = 1.0
    return e


SIGMA_INITIAL = np.array([1.05, 1.04, 0.85, -0.02, -1.39, -0.42])


@pytest.fixture(scope="session")
def study_initial_state() -> np.ndarray:
    return SIGMA_INITIAL.copy()
