import time

import numpy as np
import pytest

from pacingeq import PacingProfile, gen_arc_instance, gen_grid_instance, solve_equilibrium


@pytest.fixture(scope="session")
def arc_instance():
    return gen_arc_instance(2.0, 3.0, 320)


@pytest.fixture(scope="session")
def grid_instance():
    return gen_grid_instance()


@pytest.fixture(scope="session")
def arc_solution(arc_instance):
    start = time.perf_counter()
    report = solve_equilibrium(arc_instance)
    return report, time.perf_counter() - start


@pytest.fixture(scope="session")
def grid_solution(grid_instance):
    start = time.perf_counter()
    report = solve_equilibrium(grid_instance)
    return report, time.perf_counter() - start


@pytest.fixture(scope="session")
def arc_closed_form_profile(arc_instance):
    """Multipliers |w| - 1: every paced weight vector on the unit circle."""
    norms = np.linalg.norm(arc_instance.weight_matrix(), axis=1)
    return PacingProfile(norms - 1.0)


def tiny_instance(rng, buyers=3, items=2, d=2, n=2, reserves=False):
    """A random small instance as a raw description."""
    return {
        "n": n,
        "d": d,
        "items": [
            {
                "features": list(rng.uniform(0.1, 1.0, d)),
                "probability": 1.0 / items,
                "reserve": float(rng.uniform(0.0, 0.4)) if reserves else 0.0,
            }
            for _ in range(items)
        ],
        "buyers": [
            {"weights": list(rng.uniform(0.5, 2.0, d)), "budget": float(rng.uniform(0.05, 0.5)),
             "probability": 1.0 / buyers}
            for _ in range(buyers)
        ],
    }
