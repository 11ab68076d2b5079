import numpy as np
import pytest

from teleopkit.hand_model import default_hand_model, load_hand_model

# Planar 2-DoF chain used by the grid-search oracle tests: both joints
# rotate about z, all frames in the z=0 plane.
PLANAR_2DOF = """
joint j1 palm l1 origin=0.05,0,0,0,0,1,0 axis=0,0,1 limits=-0.3,1.8
joint j2 l1 l2 origin=0.1,0,0,0,0,1,0 axis=0,0,1 limits=-0.3,1.8
frame palm palm offset=0,0,0,0,0,1,0
frame thumb_tip l1 offset=0.05,0,0,0,0,1,0
frame index_tip l2 offset=0.08,0,0,0,0,1,0
frame middle_tip l2 offset=0.12,0.02,0,0,0,1,0
"""

# Joints present but every task frame rides on the root: the TSV term is
# constant in q, isolating the smoothing term.
DETACHED_3DOF = """
joint j1 palm l1 origin=0.05,0,0,0,0,1,0 axis=0,0,1 limits=-1,1
joint j2 l1 l2 origin=0.04,0,0,0,0,1,0 axis=0,1,0 limits=-1,1
joint j3 l2 l3 origin=0.03,0,0,0,0,1,0 axis=1,0,0 limits=-1,1
frame palm palm offset=0,0,0,0,0,1,0
frame thumb_tip palm offset=0.01,0,0,0,0,1,0
frame index_tip palm offset=0,0.02,0,0,0,1,0
frame middle_tip palm offset=0,0,0.03,0,0,1,0
"""

ZERO_DOF = """
frame palm base offset=0,0,0,0,0,1,0
frame thumb_tip base offset=0.01,0,0,0,0,1,0
frame index_tip base offset=0,0.02,0,0,0,1,0
frame middle_tip base offset=0,0,0.03,0,0,1,0
"""


@pytest.fixture(scope="session")
def hand():
    return default_hand_model()


@pytest.fixture(scope="session")
def planar2():
    return load_hand_model(PLANAR_2DOF)


@pytest.fixture(scope="session")
def detached3():
    return load_hand_model(DETACHED_3DOF)


@pytest.fixture(scope="session")
def zero_dof():
    return load_hand_model(ZERO_DOF)


def random_config(model, rng):
    return rng.uniform(model.limits_lo, model.limits_hi)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def trained_mlp():
    """One seed-0 training run shared by the MLP and acceptance tests."""
    from teleopkit.tactile import ShadingParams, train_shading_mlp

    result = train_shading_mlp(ShadingParams(), 20000, seed=0)
    assert result.converged, f"training failed to converge: rmse={result.holdout_rmse}"
    return result
