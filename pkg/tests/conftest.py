import math

import numpy as np
import pytest

from landau_order.potentials import (
    AxisCharge,
    AxisSegment,
    HollowTube,
    PeriodicChainSpec,
    PotentialSpec,
    SeparableHarmonic,
    SmearedCharge,
)
from landau_order.sector_operator import FieldConfig, Grid2D, assemble, assemble_bloch



COULOMB = PotentialSpec((AxisCharge(0.0, 1.0),))
FREE = PotentialSpec(())


def small_box(n_r=24, n_z=20, h=0.3):
    return Grid2D(n_r, n_z, h, h, n_r * h, z_max=n_z * h / 2)


def small_cell(n_r=24, a=2.0, n_z=10):
    return Grid2D(n_r, n_z, 0.3, a / n_z, n_r * 0.3, period=a, z_boundary="periodic")


def operator_corpus():
    """Small sector operators (dimension <= 2000) covering every term type and both paths."""
    ops = []
    box = small_box()
    specs = [
        FREE,
        COULOMB,
        PotentialSpec((SeparableHarmonic(0.75, 1.0),)),
        PotentialSpec((AxisCharge(0.0, 1.0), HollowTube(1.0, 2.0))),
        PotentialSpec((AxisCharge(0.0, 1.0), SmearedCharge(0.0, 2.0, 2.0))),
        PotentialSpec((AxisSegment(-1.0, 1.0, 0.5),)),
        PotentialSpec((AxisCharge(1.2, 1.0), AxisCharge(-0.4, 0.5))),
    ]
    for B in (0.5, 2.0):
        for spec in specs:
            for m in (0, 1, 3):
                ops.append(assemble(spec, FieldConfig(B), m, box))
    cell = small_cell()
    chain = PotentialSpec((PeriodicChainSpec(2.0, 1.0, 0.5, 1.0),))
    for alpha in (0.0, 1.0, math.pi, 2 * math.pi - 1.0):
        for m in (0, 2):
            ops.append(assemble_bloch(chain, FieldConfig(1.0), m, alpha, cell))
    return ops


@pytest.fixture(scope="session")
def corpus():
    return operator_corpus()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
