import numpy as np


def random_state(rng, params, scale=1.0):
    """Valid crane state with the lifting unit strictly inside the mast."""
    return np.array(
        [
            rng.uniform(-5, 5),
            scale * rng.uniform(-0.2, 0.2),
            rng.uniform(0.05 * params.L, 0.95 * params.L),
            scale * rng.uniform(-2, 2),
            scale * rng.uniform(-1, 1),
            scale * rng.uniform(-2, 2),
        ]
    )


def random_input(rng, params):
    return np.array([rng.uniform(-2000, 2000), params.m_h * params.g + rng.uniform(-500, 500)])
