import math

import numpy as np
import pytest

from mmwbeam.channel import PathComponent
from mmwbeam.steering import AngleSpec, ArrayGeometry


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_paths(rng, num_paths, fov_deg=360.0):
    """Random path components with CN(0,1) gains and uniform azimuths."""
    half = math.radians(fov_deg) / 2.0
    center = math.pi if fov_deg >= 360.0 else math.pi / 2.0
    lo, hi = max(center - half, 0.0), min(center + half, 2.0 * math.pi - 1e-12)
    out = []
    for _ in range(num_paths):
        re, im = rng.standard_normal(2)
        out.append(
            PathComponent(
                gain=complex(re, im) / math.sqrt(2.0),
                aod=AngleSpec(float(rng.uniform(lo, hi))),
                aoa=AngleSpec(float(rng.uniform(lo, hi))),
            )
        )
    return out


def geometry_pair(nt=8, nr=4, spacing=0.5):
    return ArrayGeometry(nt, spacing), ArrayGeometry(nr, spacing)
