"""Flow-field analysis around a rotating helix.

Covers pathlines of tracer points in the unsteady flow of a helix spinning at
constant rate, the radial-confinement metric D, axial velocity profiles in the
lab or co-moving frame, and extraction of the reduced-model coefficients
(alpha, beta, A11..A22 per unit axial length) from two prescribed-motion
solves on a long helix.  Forces everywhere are exerted on the fluid.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .geometry import HelixSection, RobotSpec, build_robot_mesh
from .rigid import RigidBodySolver, RobotPose
from .stokeslet import ForceSet, assemble_mobility, velocity_at

TWO_PI = 2.0 * np.pi


@dataclass
class Pathline:
    """Tracer trajectory: times strictly increasing, points (n, 3)."""

    times: np.ndarray
    points: np.ndarray
    seed: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        if self.times.ndim != 1 or self.points.shape != (len(self.times), 3):
            raise ValueError("times (n,) and points (n, 3) must match")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


@dataclass
class VelocityProfile:
    """u_z samples along a line parallel to the axis at the given X offset."""

    x_offset: float
    z_values: np.ndarray
    u_z: np.ndarray
    valid: np.ndarray
    frame: str


def rotation_flow_sources(mesh, omega_z) -> ForceSet:
    """Node forces sustaining pure rotation (U = 0) about +Z of the meshed
    helix, packaged as flow sources at the design-frame positions."""
    solver = RigidBodySolver(mesh)
    f = solver.resistance_forces(np.zeros(3), np.array([0.0, 0.0, float(omega_z)]))
    return ForceSet(positions=mesh.nodes, forces=f, epsilon=mesh.epsilon)


def swimming_flow_sources(mesh, omega_z) -> tuple:
    """Force-free torque-driven swimming at the given axial rotation rate:
    returns (ForceSet, U, Omega) from a unit-torque mobility solve rescaled so
    Omega_z = omega_z."""
    solver = RigidBodySolver(mesh)
    res = solver.solve_mobility(RobotPose(center=mesh.nodes.mean(axis=0)),
                                net_torque=[0.0, 0.0, 1.0])
    scale = float(omega_z) / res.angular_velocity[2]
    fs = ForceSet(positions=mesh.nodes, forces=res.forces * scale,
                  epsilon=mesh.epsilon)
    return fs, res.velocity * scale, res.angular_velocity * scale


def _rot_z(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def trace_pathline(mesh, omega_z, seed=None, duration=None, dt=None) -> Pathline:
    """RK4 trajectory of a tracer in the unsteady flow of the helix rotating
    rigidly at omega_z about +Z.  The force distribution is solved once; at
    time t sources and forces are the t=0 solution rotated by omega_z*t.

    Default seed: on the axis, a quarter of the axial extent below the top.
    """
    if seed is None:
        z_top, z_bot = mesh.z_top, mesh.z_bottom
        seed = np.array([0.0, 0.0, z_top - 0.25 * (z_top - z_bot)])
    seed = np.asarray(seed, dtype=float).reshape(3)
    d = np.linalg.norm(mesh.nodes - seed, axis=1)
    if d.min() < mesh.tube_radius:
        raise ValueError("pathline seed lies inside the body tube")
    if duration is None:
        duration = 10.0 * TWO_PI / max(abs(omega_z), 1e-30)
    if omega_z == 0.0:
        times = np.array([0.0, duration])
        return Pathline(times=times, points=np.stack([seed, seed]), seed=seed)
    if dt is None:
        dt = (TWO_PI / abs(omega_z)) / 200.0
    fs0 = rotation_flow_sources(mesh, omega_z)
    n_steps = max(1, int(np.ceil(duration / dt - 1e-12)))
    dt = duration / n_steps

    def vel(x, t):
        Q = _rot_z(omega_z * t)
        fs = ForceSet(positions=fs0.positions @ Q.T, forces=fs0.forces @ Q.T,
                      epsilon=fs0.epsilon)
        return velocity_at(x, fs)

    pts = np.empty((n_steps + 1, 3))
    times = np.empty(n_steps + 1)
    x = seed.copy()
    pts[0], times[0] = x, 0.0
    for i in range(n_steps):
        t = i * dt
        k1 = vel(x, t)
        k2 = vel(x + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = vel(x + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = vel(x + dt * k3, t + dt)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        pts[i + 1], times[i + 1] = x, t + dt
    return Pathline(times=times, points=pts, seed=seed)


def confinement_D(pathline: Pathline, z_top_quarter, z_bottom_quarter):
    """Maximum distance to the Z axis between the first crossing of the top
    quarter plane and the first subsequent crossing of the bottom quarter
    plane.  NaN (with a warning) if the path never completes the descent."""
    z = pathline.points[:, 2]
    below_top = np.nonzero(z <= z_top_quarter)[0]
    if len(below_top) == 0:
        warnings.warn("pathline never reaches the top quarter plane; D undefined",
                      stacklevel=2)
        return float("nan")
    i0 = below_top[0]
    below_bot = np.nonzero(z[i0:] <= z_bottom_quarter)[0]
    if len(below_bot) == 0:
        warnings.warn("pathline never reaches the bottom quarter plane; D undefined",
                      stacklevel=2)
        return float("nan")
    i1 = i0 + below_bot[0]
    seg = pathline.points[i0:i1 + 1]
    return float(np.hypot(seg[:, 0], seg[:, 1]).max())


def sample_profile(fs: ForceSet, x_offset, z_range, n_samples, frame="lab",
                   robot_vz=0.0, exclusion_nodes=None, exclusion_radius=0.0):
    """u_z along the line (x_offset, 0, z), z in z_range.  frame='co-moving'
    subtracts robot_vz.  Samples inside a tube (closer than exclusion_radius
    to an exclusion node) are marked invalid and set to NaN."""
    if frame not in ("lab", "co-moving"):
        raise ValueError("frame must be 'lab' or 'co-moving'")
    z0, z1 = z_range
    zs = np.linspace(z0, z1, n_samples)
    pts = np.stack([np.full(n_samples, float(x_offset)),
                    np.zeros(n_samples), zs], axis=1)
    u = velocity_at(pts, fs)
    uz = u[:, 2].copy()
    if frame == "co-moving":
        uz -= robot_vz
    valid = np.ones(n_samples, dtype=bool)
    if exclusion_nodes is not None and exclusion_radius > 0:
        for i in range(n_samples):
            dmin = np.linalg.norm(exclusion_nodes - pts[i], axis=1).min()
            if dmin < exclusion_radius:
                valid[i] = False
                uz[i] = np.nan
    return VelocityProfile(x_offset=float(x_offset), z_values=zs, u_z=uz,
                           valid=valid, frame=frame)


def _prescribed_motion_solves(section: HelixSection):
    """Node forces for (U=e_z, Omega=0) and (U=0, Omega=e_z) on the meshed
    helix, sharing one factorization and keeping peak memory at one matrix."""
    mesh = build_robot_mesh(RobotSpec([section]))
    nodes = mesh.nodes
    n = mesh.n_nodes
    M = assemble_mobility(nodes, mesh.epsilon)
    # M is symmetric, so M.T is the same matrix as a Fortran-ordered view;
    # factorizing the view in place avoids LAPACK's layout copy, which would
    # double peak memory on the largest map cells
    c = cho_factor(M.T, lower=True, overwrite_a=True, check_finite=False)
    del M
    u_t = np.zeros((n, 3))
    u_t[:, 2] = 1.0
    f_t = cho_solve(c, u_t.ravel(), check_finite=False).reshape(n, 3)
    u_r = np.cross(np.array([0.0, 0.0, 1.0]), nodes)
    f_r = cho_solve(c, u_r.ravel(), check_finite=False).reshape(n, 3)
    return mesh, f_t, f_r


def _axis_plateau(mesh, forces, n_samples=101, central_fraction=0.5):
    """Mean and flatness of on-axis u_z over the central fraction of the
    axial extent."""
    z_top, z_bot = mesh.z_top, mesh.z_bottom
    zc = 0.5 * (z_top + z_bot)
    half = 0.5 * central_fraction * (z_top - z_bot)
    zs = np.linspace(zc - half, zc + half, n_samples)
    pts = np.stack([np.zeros(n_samples), np.zeros(n_samples), zs], axis=1)
    fs = ForceSet(positions=mesh.nodes, forces=forces, epsilon=mesh.epsilon)
    uz = velocity_at(pts, fs)[:, 2]
    mean = float(uz.mean())
    flatness = float(uz.std() / abs(mean)) if mean != 0 else float("inf")
    return mean, flatness


def _middle_loads_per_length(mesh, forces, central_fraction=0.5):
    """Axial force and axial torque per unit axial length, summed over nodes
    in the central fraction of the axial extent."""
    z = mesh.nodes[:, 2]
    z_top, z_bot = mesh.z_top, mesh.z_bottom
    zc = 0.5 * (z_top + z_bot)
    half = 0.5 * central_fraction * (z_top - z_bot)
    sel = (z >= zc - half) & (z <= zc + half)
    L = 2.0 * half
    Fz = float(forces[sel, 2].sum()) / L
    xy = mesh.nodes[sel]
    Tz = float((xy[:, 0] * forces[sel, 1] - xy[:, 1] * forces[sel, 0]).sum()) / L
    return Fz, Tz


def extract_alpha_beta(section: HelixSection, central_fraction=0.5,
                       flatness_warn=0.10):
    """alpha: on-axis plateau u_z for unit translation; beta: same for unit
    rotation.  Warns if the plateau is flatter than flatness_warn."""
    mesh, f_t, f_r = _prescribed_motion_solves(section)
    alpha, fa = _axis_plateau(mesh, f_t, central_fraction=central_fraction)
    beta, fb = _axis_plateau(mesh, f_r, central_fraction=central_fraction)
    for name, fl in (("alpha", fa), ("beta", fb)):
        if fl > flatness_warn:
            warnings.warn(f"{name} plateau flatness {fl:.3f} exceeds "
                          f"{flatness_warn}", stacklevel=2)
    return {"alpha": alpha, "beta": beta,
            "alpha_flatness": fa, "beta_flatness": fb}


def extract_resistance_per_length(section: HelixSection, central_fraction=0.5):
    """Axial resistance coefficients per unit axial length from the central
    region: A11 U + A12 Omega = F_z, A21 U + A22 Omega = T_z."""
    mesh, f_t, f_r = _prescribed_motion_solves(section)
    A11, A21 = _middle_loads_per_length(mesh, f_t, central_fraction)
    A12, A22 = _middle_loads_per_length(mesh, f_r, central_fraction)
    return {"A11": A11, "A12": A12, "A21": A21, "A22": A22}


def extract_cell(section: HelixSection, central_fraction=0.5):
    """alpha, beta and the A coefficients from one pair of solves (shared
    factorization), for map generation."""
    mesh, f_t, f_r = _prescribed_motion_solves(section)
    alpha, fa = _axis_plateau(mesh, f_t, central_fraction=central_fraction)
    beta, fb = _axis_plateau(mesh, f_r, central_fraction=central_fraction)
    A11, A21 = _middle_loads_per_length(mesh, f_t, central_fraction)
    A12, A22 = _middle_loads_per_length(mesh, f_r, central_fraction)
    return {"alpha": alpha, "beta": beta, "alpha_flatness": fa,
            "beta_flatness": fb, "A11": A11, "A12": A12, "A21": A21,
            "A22": A22, "n_nodes": mesh.n_nodes}
