"""Shared builders for the test suite."""

import numpy as np
import pytest

from doublewell import config as configmod, energy, mesh as meshmod


def make_mesh_1d(n=64, length=1.0):
    return meshmod.build_mesh((length,), (n,), dim=1)


def make_mesh_2d(n=8, length=1.0):
    return meshmod.build_mesh((length, length), (n, n), dim=2)


def make_coeffs(mesh, a=1.0, b=1.0, C=1.0, D=-1.0):
    C = np.atleast_1d(np.asarray(C, float))
    D = np.atleast_1d(np.asarray(D, float))
    return energy.CoefficientSet(mesh, a, b, C, D)


def config_from(text):
    return configmod.parse_config_text(text)


@pytest.fixture
def mesh1d():
    return make_mesh_1d()


@pytest.fixture
def mesh2d():
    return make_mesh_2d()
