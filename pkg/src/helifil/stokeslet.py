"""Regularized-Stokeslet kernel and the dense linear algebra built on it.

The blob is phi_eps(r) = 15 eps^4 / (8 pi (r^2 + eps^2)^(7/2)).  The induced
velocity of a set of regularized point forces is

    u(x) = (1/8 pi) sum_i [ (r_i^2 + 2 eps_i^2) f_i
                            + (f_i . (x - x_i)) (x - x_i) ] / (r_i^2 + eps_i^2)^(3/2)

with r_i = |x - x_i|.  Viscosity is 1 in the nondimensional system.  The
regularization parameter is carried per source point, so interactions between
bodies with different node spacings use the source body's blob width.
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla
from numba import njit


@dataclass
class ForceSet:
    """Regularized point forces: positions (n,3), forces (n,3), epsilon (n,)."""

    positions: npt.NDArray[np.float64]
    forces: npt.NDArray[np.float64]
    epsilon: npt.NDArray[np.float64]

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.forces = np.atleast_2d(np.asarray(self.forces, dtype=float))
        eps = np.asarray(self.epsilon, dtype=float)
        if eps.ndim == 0:
            eps = np.full(len(self.positions), float(eps))
        self.epsilon = eps
        if not (len(self.positions) == len(self.forces) == len(self.epsilon)):
            raise ValueError("positions, forces and epsilon must have equal length")
        if np.any(self.epsilon <= 0):
            raise ValueError("epsilon must be positive")

    def __len__(self):
        return len(self.positions)


class SolveError(RuntimeError):
    """Dense solve failed; carries a reciprocal-condition estimate."""

    def __init__(self, message, rcond=None):
        if rcond is not None:
            message = f"{message} (rcond ~ {rcond:.3e})"
        super().__init__(message)
        self.rcond = rcond


def blob(r, epsilon):
    """Blob density phi_eps at distance r (scalar or array)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    e2 = epsilon * epsilon
    return 15.0 * e2 * e2 / (8.0 * np.pi * (r * r + e2) ** 3.5)


@njit(cache=True)
def _velocity_sum(targets, src, forces, eps, out):
    m = targets.shape[0]
    n = src.shape[0]
    for a in range(m):
        ux = 0.0
        uy = 0.0
        uz = 0.0
        tx = targets[a, 0]
        ty = targets[a, 1]
        tz = targets[a, 2]
        for i in range(n):
            dx = tx - src[i, 0]
            dy = ty - src[i, 1]
            dz = tz - src[i, 2]
            e2 = eps[i] * eps[i]
            r2 = dx * dx + dy * dy + dz * dz
            w = r2 + e2
            denom = w * np.sqrt(w)
            fx = forces[i, 0]
            fy = forces[i, 1]
            fz = forces[i, 2]
            fdotx = fx * dx + fy * dy + fz * dz
            c1 = (r2 + 2.0 * e2) / denom
            c2 = fdotx / denom
            ux += c1 * fx + c2 * dx
            uy += c1 * fy + c2 * dy
            uz += c1 * fz + c2 * dz
        out[a, 0] = ux / (8.0 * np.pi)
        out[a, 1] = uy / (8.0 * np.pi)
        out[a, 2] = uz / (8.0 * np.pi)


def velocity_at(x, fs: ForceSet):
    """Velocity induced by a ForceSet at point(s) x; x is (3,) or (m, 3)."""
    if len(fs) == 0:
        raise ValueError("empty ForceSet")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    targets = np.ascontiguousarray(np.atleast_2d(x))
    out = np.empty_like(targets)
    _velocity_sum(targets,
                  np.ascontiguousarray(fs.positions),
                  np.ascontiguousarray(fs.forces),
                  np.ascontiguousarray(fs.epsilon), out)
    return out[0] if single else out


def assemble_mobility(positions, epsilon, out=None, chunk=256):
    """Dense 3N x 3N mobility: stacked velocities = M @ stacked forces.

    epsilon may be a scalar (one body) or per-node array (source-based blobs,
    in which case M is not symmetric).  Assembly is chunked over target rows
    to bound temporaries for large N.
    """
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    eps = np.asarray(epsilon, dtype=float)
    if eps.ndim == 0:
        eps = np.full(n, float(eps))
    if np.any(eps <= 0):
        raise ValueError("epsilon must be positive")
    if out is None:
        out = np.empty((3 * n, 3 * n))
    e2 = eps * eps
    pref = 1.0 / (8.0 * np.pi)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        dx = positions[start:stop, None, :] - positions[None, :, :]
        r2 = np.einsum("abk,abk->ab", dx, dx)
        w = r2 + e2[None, :]
        inv_denom = pref / (w * np.sqrt(w))
        c1 = (r2 + 2.0 * e2[None, :]) * inv_denom
        for a in range(3):
            for b in range(3):
                blk = inv_denom * dx[:, :, a] * dx[:, :, b]
                if a == b:
                    blk = blk + c1
                out[3 * start + a:3 * stop + a:3, b::3] = blk
    return out


def solve_dense(M, rhs, assume_spd=False):
    """Solve M x = rhs with a direct factorization.

    Raises SolveError (with a reciprocal-condition estimate when available)
    for singular or numerically unusable systems.
    """
    M = np.asarray(M, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if assume_spd:
        try:
            c, low = sla.cho_factor(M, lower=True, check_finite=False)
        except sla.LinAlgError as exc:
            raise SolveError(f"Cholesky factorization failed: {exc}") from exc
        return sla.cho_solve((c, low), rhs, check_finite=False)
    anorm = np.linalg.norm(M, 1)
    lu, piv = sla.lu_factor(M, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag == 0.0):
        raise SolveError("singular matrix", rcond=0.0)
    gecon = sla.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm)
    if info != 0 or not np.isfinite(rcond) or rcond < 1e2 * np.finfo(float).eps:
        raise SolveError("matrix numerically singular", rcond=float(rcond))
    return sla.lu_solve((lu, piv), rhs, check_finite=False)


@njit(cache=True)
def _velocity_sum_two(targets, src_a, f_a, eps_a, src_b, f_b, eps_b, out):
    """Velocity at targets from two uniform-epsilon source sets."""
    m = targets.shape[0]
    ea2 = eps_a * eps_a
    eb2 = eps_b * eps_b
    for a in range(m):
        ux = 0.0
        uy = 0.0
        uz = 0.0
        tx = targets[a, 0]
        ty = targets[a, 1]
        tz = targets[a, 2]
        for i in range(src_a.shape[0]):
            dx = tx - src_a[i, 0]
            dy = ty - src_a[i, 1]
            dz = tz - src_a[i, 2]
            r2 = dx * dx + dy * dy + dz * dz
            w = r2 + ea2
            denom = w * np.sqrt(w)
            fdotx = f_a[i, 0] * dx + f_a[i, 1] * dy + f_a[i, 2] * dz
            c1 = (r2 + 2.0 * ea2) / denom
            c2 = fdotx / denom
            ux += c1 * f_a[i, 0] + c2 * dx
            uy += c1 * f_a[i, 1] + c2 * dy
            uz += c1 * f_a[i, 2] + c2 * dz
        for i in range(src_b.shape[0]):
            dx = tx - src_b[i, 0]
            dy = ty - src_b[i, 1]
            dz = tz - src_b[i, 2]
            r2 = dx * dx + dy * dy + dz * dz
            w = r2 + eb2
            denom = w * np.sqrt(w)
            fdotx = f_b[i, 0] * dx + f_b[i, 1] * dy + f_b[i, 2] * dz
            c1 = (r2 + 2.0 * eb2) / denom
            c2 = fdotx / denom
            ux += c1 * f_b[i, 0] + c2 * dx
            uy += c1 * f_b[i, 1] + c2 * dy
            uz += c1 * f_b[i, 2] + c2 * dz
        out[a, 0] = ux / (8.0 * np.pi)
        out[a, 1] = uy / (8.0 * np.pi)
        out[a, 2] = uz / (8.0 * np.pi)


def velocity_from_two_sets(targets, pos_a, f_a, eps_a, pos_b, f_b, eps_b):
    """Fast path for the coupled solver: flow at targets from two bodies."""
    targets = np.ascontiguousarray(targets)
    out = np.empty_like(targets)
    _velocity_sum_two(targets,
                      np.ascontiguousarray(pos_a), np.ascontiguousarray(f_a), float(eps_a),
                      np.ascontiguousarray(pos_b), np.ascontiguousarray(f_b), float(eps_b),
                      out)
    return out
