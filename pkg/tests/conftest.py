import math

import numpy as np
import pytest

from bskin import geom
from bskin import skeleton as sko
from bskin import synthetic as syn


@pytest.fixture
def straight2():
    """Two cylinder bones along +x, unit radius, length 4."""
    return syn.chain_skeleton(2, length=4.0, radii=1.0)


@pytest.fixture
def cones2():
    """Two tapered bones (cones) along +x."""
    return syn.chain_skeleton(2, length=4.0, radii=[1.4, 1.0, 0.7])


@pytest.fixture
def bent2():
    """Two cylinder bones with a 90-degree rest bend at the joint."""
    return syn.bent_chain([90.0], length=4.0, radii=1.0)


@pytest.fixture
def bent2_soft():
    """Two bones with a 40-degree rest bend (arc on the convex side)."""
    return syn.bent_chain([40.0], length=4.0, radii=1.0)


@pytest.fixture
def chain3():
    return syn.chain_skeleton(3, length=4.0, radii=1.0)


@pytest.fixture
def yjunction():
    return syn.y_skeleton(length=4.0, radius=1.0)


def bend_pose(joint, angle_rad, axis=(0.0, 0.0, 1.0)):
    return sko.Pose(bends=(sko.Bend(joint, np.asarray(axis, dtype=float), angle_rad),))


def twist_pose(bone, tau):
    return sko.Pose(twists={bone: tau})


@pytest.fixture
def ring_cloud():
    """Cloud factory: rings of points at given radius around the x axis."""

    def make(x_range, radius, n_stations=20, n_azim=24):
        xs = np.linspace(*x_range, n_stations)
        ph = np.linspace(0, 2 * math.pi, n_azim, endpoint=False)
        pts = np.array([[x, radius * math.cos(p), radius * math.sin(p)]
                        for x in xs for p in ph])
        return pts

    return make
