import numpy as np
import pytest

from cmcalloc.energy import PowerConstants, SegmentSpec
from cmcalloc.scenario import ScenarioConfig, ScenarioRealization, realize


def make_realization(lr_gain, sr_worst_gain=None):
    lr = np.atleast_2d(np.asarray(lr_gain, dtype=float))
    if sr_worst_gain is None:
        sr = np.empty((0, lr.shape[1])) if lr.shape[0] < 2 else np.ones((lr.shape[0], lr.shape[1]))
    else:
        sr = np.atleast_2d(np.asarray(sr_worst_gain, dtype=float))
    return ScenarioRealization(lr_gain=lr, sr_worst_gain=sr)


def random_realization(seed, num_mts=3, num_subchannels=4):
    return realize(ScenarioConfig(num_mts=num_mts, num_subchannels=num_subchannels, seed=seed))


@pytest.fixture
def constants():
    return PowerConstants()


@pytest.fixture
def segment():
    return SegmentSpec()
