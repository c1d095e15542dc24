"""Elastic and contact forces of the passive filament.

The filament is a bead-spring network: Hookean springs of stiffness k between
the node pairs listed in its mesh.  Contact between filament and robot is a
truncated Lennard-Jones repulsion evaluated per node pair; both energy and
force are cut at 2^(1/6) sigma, where the force vanishes, so the force is
continuous and purely repulsive.  Forces handed to the fluid at a filament
node are elastic + steric, which is the node's force balance in inertialess
flow.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .geometry import BodyMesh
from .stokeslet import ForceSet

WCA_CUTOFF = 2.0 ** (1.0 / 6.0)


@dataclass
class StericParams:
    """sigma: contact distance; F_s: repulsion strength (|force| at r = sigma)."""

    sigma: float
    F_s: float = 10.0

    def __post_init__(self):
        if self.sigma <= 0 or self.F_s <= 0:
            raise ValueError("sigma and F_s must be positive")

    @property
    def cutoff(self):
        return WCA_CUTOFF * self.sigma


def default_steric_params(robot_tube_radius, filament_tube_radius, F_s=10.0):
    """Contact at nearest-node distance r + r_f."""
    return StericParams(sigma=robot_tube_radius + filament_tube_radius, F_s=F_s)


def steric_energy(r_s, params: StericParams):
    """Truncated Lennard-Jones pair energy for separation vector r_s."""
    r = float(np.linalg.norm(r_s))
    if r == 0.0:
        raise ValueError("zero separation in steric energy")
    if r >= params.cutoff:
        return 0.0
    q6 = (params.sigma / r) ** 6
    return params.sigma * params.F_s / 6.0 * (q6 * q6 - q6)


def steric_force(r_s, params: StericParams):
    """Force -grad E on the body at the +r_s side of the pair."""
    r_s = np.asarray(r_s, dtype=float)
    r = float(np.linalg.norm(r_s))
    if r == 0.0:
        raise ValueError("zero separation in steric force")
    if r >= params.cutoff:
        return np.zeros(3)
    q6 = (params.sigma / r) ** 6
    mag = params.F_s * params.sigma * (2.0 * q6 * q6 - q6) / r
    return (mag / r) * r_s


@njit(cache=True)
def _elastic_kernel(positions, si, sj, rest, k, out):
    for m in range(si.shape[0]):
        i = si[m]
        j = sj[m]
        dx = positions[j, 0] - positions[i, 0]
        dy = positions[j, 1] - positions[i, 1]
        dz = positions[j, 2] - positions[i, 2]
        d = np.sqrt(dx * dx + dy * dy + dz * dz)
        if d == 0.0:
            return m
        c = k * (d - rest[m]) / d
        out[i, 0] += c * dx
        out[i, 1] += c * dy
        out[i, 2] += c * dz
        out[j, 0] -= c * dx
        out[j, 1] -= c * dy
        out[j, 2] -= c * dz
    return -1


def elastic_forces(mesh: BodyMesh, positions, k):
    """Per-node spring forces at the given node positions."""
    positions = np.asarray(positions, dtype=float)
    if positions.shape != (mesh.n_nodes, 3):
        raise ValueError(f"positions must have shape ({mesh.n_nodes}, 3)")
    if mesh.spring_i is None:
        raise ValueError("mesh has no springs")
    out = np.zeros_like(positions)
    bad = _elastic_kernel(positions, mesh.spring_i, mesh.spring_j,
                          mesh.spring_rest, float(k), out)
    if bad >= 0:
        raise ValueError(f"spring {bad} has zero length")
    return out


def elastic_energy(mesh: BodyMesh, positions, k):
    d = np.linalg.norm(positions[mesh.spring_j] - positions[mesh.spring_i], axis=1)
    return 0.5 * float(k) * float(((d - mesh.spring_rest) ** 2).sum())


@njit(cache=True)
def _steric_kernel(pos_a, pos_b, sigma, fs, cutoff2, out_a, out_b):
    for i in range(pos_a.shape[0]):
        for j in range(pos_b.shape[0]):
            dx = pos_a[i, 0] - pos_b[j, 0]
            dy = pos_a[i, 1] - pos_b[j, 1]
            dz = pos_a[i, 2] - pos_b[j, 2]
            r2 = dx * dx + dy * dy + dz * dz
            if r2 >= cutoff2 or r2 == 0.0:
                continue
            r = np.sqrt(r2)
            q6 = (sigma / r) ** 6
            c = fs * sigma * (2.0 * q6 * q6 - q6) / r2
            out_a[i, 0] += c * dx
            out_a[i, 1] += c * dy
            out_a[i, 2] += c * dz
            out_b[j, 0] -= c * dx
            out_b[j, 1] -= c * dy
            out_b[j, 2] -= c * dz


def steric_forces(pos_a, pos_b, params: StericParams):
    """Pairwise repulsion between two node sets; returns (forces_on_a,
    forces_on_b), equal and opposite pair by pair."""
    pos_a = np.ascontiguousarray(pos_a, dtype=float)
    pos_b = np.ascontiguousarray(pos_b, dtype=float)
    out_a = np.zeros_like(pos_a)
    out_b = np.zeros_like(pos_b)
    _steric_kernel(pos_a, pos_b, params.sigma, params.F_s,
                   params.cutoff ** 2, out_a, out_b)
    return out_a, out_b


def steric_energy_total(pos_a, pos_b, params: StericParams):
    d = np.linalg.norm(pos_a[:, None, :] - pos_b[None, :, :], axis=2)
    mask = d < params.cutoff
    if not mask.any():
        return 0.0
    q6 = (params.sigma / d[mask]) ** 6
    return float(params.sigma * params.F_s / 6.0 * (q6 * q6 - q6).sum())


def filament_hydrodynamic_forces(mesh: BodyMesh, positions, elastic, steric) -> ForceSet:
    """Forces the filament hands to the fluid: elastic + steric per node."""
    return ForceSet(positions=positions, forces=elastic + steric, epsilon=mesh.epsilon)
