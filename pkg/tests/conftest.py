import numpy as np
import pytest

from helifil import (
    BodyMesh,
    FilamentSpec,
    HelixSection,
    RigidBodySolver,
    RobotSpec,
    build_filament_mesh,
    build_robot_mesh,
)


def single_helix_spec(lam=0.15, R=0.06, r=0.015, n_windings=8, handedness="right"):
    return RobotSpec([HelixSection(handedness, R, lam, r, n_windings)])


def sphere_mesh(radius=0.5, n_nodes=400):
    """Near-uniform node shell on a sphere (Fibonacci lattice), epsilon from
    nearest-neighbour spacing as for the other meshes."""
    i = np.arange(n_nodes)
    golden = (1.0 + np.sqrt(5.0)) / 2.0
    z = 1.0 - (2.0 * i + 1.0) / n_nodes
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = 2.0 * np.pi * i / golden
    nodes = radius * np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    from scipy.spatial import cKDTree

    d, _ = cKDTree(nodes).query(nodes, k=2)
    eps = float(d[:, 1].min())
    return BodyMesh(
        nodes=nodes,
        cross_section_index=np.zeros(n_nodes, dtype=np.int64),
        epsilon=eps,
        body_kind="robot",
        tube_radius=radius,
        sections=(),
    )


@pytest.fixture(scope="session")
def helix_mesh():
    return build_robot_mesh(single_helix_spec())


@pytest.fixture(scope="session")
def helix_solver(helix_mesh):
    return RigidBodySolver(helix_mesh)


@pytest.fixture(scope="session")
def filament_mesh():
    return build_filament_mesh(FilamentSpec())
