# tests/conftest.py
import pytest

import mesh_factory


@pytest.fixture
def unit_square():
    """Two triangles over the unit square, cut along the (0,0)-(1,1) diagonal."""
    return mesh_factory.square_grid(1)


@pytest.fixture
def flat_grid():
    return mesh_factory.square_grid(6)


@pytest.fixture
def hexagon_fan():
    return mesh_factory.fan(6)


@pytest.fixture
def bump():
    return mesh_factory.gaussian_bump(10)


@pytest.fixture
def peaks():
    return mesh_factory.multi_peak()


@pytest.fixture
def annulus():
    return mesh_factory.annulus()


@pytest.fixture
def tetrahedron():
    return mesh_factory.tetrahedron()


@pytest.fixture
def bowtie():
    return mesh_factory.bowtie()
