"""Rigid-body hydrodynamics of the robot and its magnetic drive.

The robot is force- and torque-free apart from prescribed external loads
(magnetic torque, contact forces).  Unknown node forces f_i (exerted on the
fluid), rigid velocity U and angular velocity Omega satisfy

    (M f)_i - U + S(r_i) Omega = -u_ext(x_i)      (node rows)
    sum_i f_i                  = F_net            (force balance)
    sum_i r_i x f_i            = T_net            (torque balance)

with M the regularized-Stokeslet mobility, r_i node positions relative to the
body center and S(r) v = r x v.  The augmented matrix depends only on the
body-frame geometry, so it is LU-factorized once per mesh; each solve rotates
the right-hand side into the body frame and the solution back.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, get_lapack_funcs, lu_factor, lu_solve

from .geometry import BodyMesh, RobotSpec
from .rotation import quat_identity, quat_normalize, quat_to_matrix
from .stokeslet import SolveError, assemble_mobility

TWO_PI = 2.0 * np.pi


@dataclass
class RobotPose:
    """Position of the body center and scalar-first orientation quaternion."""

    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quaternion: np.ndarray = field(default_factory=quat_identity)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.quaternion = quat_normalize(np.asarray(self.quaternion, dtype=float))

    def rotation(self):
        return quat_to_matrix(self.quaternion)


@dataclass
class MagneticDrive:
    """Uniform magnetic field rotating in the XY plane at fixed frequency.

    B(t) = B0 (cos 2 pi f t, rotation_sign * sin 2 pi f t, 0).
    """

    B0: float = 1.0
    frequency: float = 4.0
    rotation_sign: int = 1

    def __post_init__(self):
        if self.B0 <= 0 or self.frequency <= 0:
            raise ValueError("B0 and frequency must be positive")
        if self.rotation_sign not in (1, -1):
            raise ValueError("rotation_sign must be +1 or -1")

    def field(self, t):
        ph = TWO_PI * self.frequency * t
        return self.B0 * np.array([np.cos(ph), self.rotation_sign * np.sin(ph), 0.0])


def magnetic_torque(t, pose: RobotPose, spec: RobotSpec, drive: MagneticDrive):
    """Torque m x B on the robot; |m| = tau_max / B0 so the peak available
    torque equals spec.tau_max."""
    m_lab = pose.rotation() @ (spec.magnetic_moment_direction * (spec.tau_max / drive.B0))
    return np.cross(m_lab, drive.field(t))


def step_out_check(avg_rotation_rate, drive: MagneticDrive, rel_tol=0.05):
    """True if the body rotation rate has fallen out of sync with the field.

    avg_rotation_rate: rotation rate about +Z averaged over one or more full
    field periods (signed, rad per unit time).
    """
    target = drive.rotation_sign * TWO_PI * drive.frequency
    return abs(avg_rotation_rate - target) > rel_tol * abs(target)


@dataclass
class RigidSolveResult:
    """Forces are exerted on the fluid; net_force / net_torque echo the
    prescribed external load balanced by the node forces."""

    velocity: np.ndarray
    angular_velocity: np.ndarray
    forces: np.ndarray
    net_force: np.ndarray
    net_torque: np.ndarray


def _cross_matrix(r):
    return np.array([[0.0, -r[2], r[1]],
                     [r[2], 0.0, -r[0]],
                     [-r[1], r[0], 0.0]])


class RigidBodySolver:
    """Prefactorized mobility/resistance solver for one rigid mesh.

    Factorizations live in the body frame (design-frame nodes centered on
    their centroid), so a single LU serves every pose and time step.
    """

    def __init__(self, mesh: BodyMesh):
        if mesh.n_nodes < 3:
            raise ValueError("mesh too small for a rigid solve")
        self.mesh = mesh
        self.centroid = mesh.nodes.mean(axis=0)
        self.body_nodes = mesh.nodes - self.centroid
        self.n = mesh.n_nodes
        self._mob = None
        self._aug = None
        self._chol = None

    # -- lazy factorizations -------------------------------------------------

    def _mobility(self):
        if self._mob is None:
            self._mob = assemble_mobility(self.body_nodes, self.mesh.epsilon)
        return self._mob

    def _aug_lu(self):
        if self._aug is None:
            n3 = 3 * self.n
            A = np.zeros((n3 + 6, n3 + 6))
            A[:n3, :n3] = self._mobility()
            eye = np.eye(3)
            for i in range(self.n):
                S = _cross_matrix(self.body_nodes[i])
                A[3 * i:3 * i + 3, n3:n3 + 3] = -eye
                A[3 * i:3 * i + 3, n3 + 3:] = S
                A[n3:n3 + 3, 3 * i:3 * i + 3] = eye
                A[n3 + 3:, 3 * i:3 * i + 3] = S
            anorm = np.linalg.norm(A, 1)
            lu, piv = lu_factor(A)
            gecon = get_lapack_funcs("gecon", (lu,))
            rcond, info = gecon(lu, anorm)
            if info != 0 or rcond < 100.0 * np.finfo(float).eps:
                raise SolveError("augmented rigid system is ill-conditioned", rcond=rcond)
            self._aug = (lu, piv)
        return self._aug

    def _cholesky(self):
        if self._chol is None:
            self._chol = cho_factor(self._mobility(), lower=True)
        return self._chol

    # -- public solves -------------------------------------------------------

    def lab_nodes(self, pose: RobotPose):
        return pose.center + self.body_nodes @ pose.rotation().T

    def solve_mobility(self, pose: RobotPose, net_force=None, net_torque=None,
                       u_ext=None) -> RigidSolveResult:
        """Rigid velocities and node forces for prescribed net external load
        and optional ambient velocity sampled at the (lab-frame) nodes."""
        F = np.zeros(3) if net_force is None else np.asarray(net_force, dtype=float)
        T = np.zeros(3) if net_torque is None else np.asarray(net_torque, dtype=float)
        Q = pose.rotation()
        rhs = np.empty(3 * self.n + 6)
        if u_ext is None:
            rhs[:3 * self.n] = 0.0
        else:
            u_ext = np.asarray(u_ext, dtype=float)
            if u_ext.shape != (self.n, 3):
                raise ValueError(f"u_ext must have shape ({self.n}, 3)")
            rhs[:3 * self.n] = -(u_ext @ Q).ravel()
        rhs[3 * self.n:3 * self.n + 3] = Q.T @ F
        rhs[3 * self.n + 3:] = Q.T @ T
        x = lu_solve(self._aug_lu(), rhs)
        forces = x[:3 * self.n].reshape(self.n, 3) @ Q.T
        U = Q @ x[3 * self.n:3 * self.n + 3]
        Om = Q @ x[3 * self.n + 3:]
        return RigidSolveResult(velocity=U, angular_velocity=Om, forces=forces,
                                net_force=F.copy(), net_torque=T.copy())

    def resistance_forces(self, velocity, angular_velocity, pose: RobotPose = None):
        """Node forces (on the fluid, lab frame) sustaining a prescribed rigid
        motion in otherwise quiescent fluid."""
        U = np.asarray(velocity, dtype=float)
        Om = np.asarray(angular_velocity, dtype=float)
        if pose is None:
            pose = RobotPose()
        Q = pose.rotation()
        Ub, Ob = Q.T @ U, Q.T @ Om
        u_nodes = Ub + np.cross(Ob, self.body_nodes)
        f = cho_solve(self._cholesky(), u_nodes.ravel()).reshape(self.n, 3)
        return f @ Q.T

    def grand_resistance(self):
        """Body-frame 6x6 matrix mapping (U, Omega) to (net force, net torque)
        exerted on the fluid."""
        R = np.empty((6, 6))
        for col in range(6):
            U = np.zeros(3)
            Om = np.zeros(3)
            if col < 3:
                U[col] = 1.0
            else:
                Om[col - 3] = 1.0
            f = self.resistance_forces(U, Om)
            R[:3, col] = f.sum(axis=0)
            R[3:, col] = np.cross(self.body_nodes, f).sum(axis=0)
        return R
