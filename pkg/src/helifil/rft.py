"""Reduced analytical model of robot-filament coupling.

The robot is a chain of pulling/pushing helical sections characterized by
axial resistance coefficients per unit length (A11, A12) and by the advection
coefficients of the flow it generates on its axis (alpha, beta).  With eta the
pushing fraction of the robot length L and a filament of length L_f nested
from the robot's front end:

    U   = -(A12/A11) Omega (1 - 2 eta)
    U_f = alpha U + beta Omega (1 - 2 eta L / L_f)

eta* is the pushing fraction at which U = U_f, the fully coupled state.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class RftCoefficients:
    """Measured coefficients of one helix geometry.  A11, A12 are per unit
    axial length.  The filament-side and rotational coefficients (B, C rows,
    Omega_f) are carried for completeness but never solved; the model reduces
    them to alpha = C11/B11, beta = C12/B11."""

    A11: float
    A12: float
    alpha: float
    beta: float
    r_over_R: float | None = None
    lambda_over_R: float | None = None
    A21: float | None = None
    A22: float | None = None
    B11: float | None = None
    B12: float | None = None
    B21: float | None = None
    B22: float | None = None
    C11: float | None = None
    C12: float | None = None
    C21: float | None = None
    C22: float | None = None
    Omega_f: float | None = None

    def __post_init__(self):
        if self.A11 == 0:
            raise ValueError("A11 must be nonzero")


@dataclass
class DesignPoint:
    """eta: pushing fraction of robot length; L_over_Lf = L/L_f; Omega:
    rotation rate."""

    eta: float
    L_over_Lf: float
    Omega: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.L_over_Lf < 1.0:
            raise ValueError("L_over_Lf must be >= 1 (filament nests inside)")


def robot_velocity(c: RftCoefficients, d: DesignPoint):
    """U = -(A12/A11) Omega (1 - 2 eta)."""
    return -(c.A12 / c.A11) * d.Omega * (1.0 - 2.0 * d.eta)


def filament_velocity(c: RftCoefficients, d: DesignPoint):
    """U_f = alpha U + beta Omega (1 - 2 eta L/L_f); requires the filament to
    span the whole pushing section (eta L <= L_f)."""
    if d.eta * d.L_over_Lf > 1.0 + 1e-12:
        raise ValueError("eta * L/L_f > 1: filament shorter than the pushing "
                         "section, model invalid")
    U = robot_velocity(c, d)
    return c.alpha * U + c.beta * d.Omega * (1.0 - 2.0 * d.eta * d.L_over_Lf)


def eta_star(c: RftCoefficients, L_over_Lf):
    """Pushing fraction at which robot and filament velocities match:
    eta* = (1/2) [1 - (L/L_f - 1) beta / ((A12/A11)(1 - alpha) + beta L/L_f)].
    """
    ratio = c.A12 / c.A11
    denom = ratio * (1.0 - c.alpha) + c.beta * L_over_Lf
    if abs(denom) < 1e-12:
        raise ValueError("eta* denominator vanishes for these coefficients")
    return 0.5 * (1.0 - (L_over_Lf - 1.0) * c.beta / denom)


def coupling_stability_sign(c: RftCoefficients, d: DesignPoint, delta_z_sign,
                            delta_frac=0.05):
    """Sign of d(delta_z)/dt under a filament shift of sign delta_z_sign.

    Shifting the filament deeper into the robot (delta_z > 0) increases its
    overlap with the pushing section by the shift, so
    d(delta_z)/dt = (U - U_f) + 2 beta Omega delta_z / L_f.
    Returns -1, 0 or +1; a value opposing delta_z_sign means restoring.
    """
    if delta_z_sign not in (-1, 0, 1):
        raise ValueError("delta_z_sign must be -1, 0 or +1")
    base = robot_velocity(c, d) - filament_velocity(c, d)
    slope = 2.0 * c.beta * d.Omega
    rel = base + slope * delta_z_sign * delta_frac
    scale = abs(robot_velocity(c, d)) + abs(slope) * delta_frac
    if abs(rel) <= 1e-12 * max(scale, 1.0):
        return 0
    return int(np.sign(rel))


def eta_star_map(r_over_R_values, lambda_over_R_values, R=0.1, n_windings=20,
                 L_over_Lf=2.0, central_fraction=0.5, progress=None):
    """Coefficient extraction and eta* over a (r/R, lambda/R) grid.

    Cells whose pitch does not clear the tube (lambda <= 4r) or whose
    extraction fails are marked invalid (NaN fields, note set).  Returns a
    list of row dicts ordered r/R-major.
    """
    from .flow import extract_cell
    from .geometry import HelixSection

    rows = []
    for rr in r_over_R_values:
        for lr in lambda_over_R_values:
            row = {"r_over_R": float(rr), "lambda_over_R": float(lr),
                   "A12_over_A11": float("nan"), "alpha": float("nan"),
                   "beta": float("nan"), "eta_star": float("nan"), "note": ""}
            r = rr * R
            lam = lr * R
            if lam <= 4.0 * r:
                row["note"] = "invalid: pitch <= 4 r"
            else:
                try:
                    cell = extract_cell(HelixSection("right", R, lam, r,
                                                     n_windings),
                                        central_fraction=central_fraction)
                    c = RftCoefficients(A11=cell["A11"], A12=cell["A12"],
                                        alpha=cell["alpha"], beta=cell["beta"],
                                        A21=cell["A21"], A22=cell["A22"],
                                        r_over_R=float(rr),
                                        lambda_over_R=float(lr))
                    row["A12_over_A11"] = c.A12 / c.A11
                    row["alpha"] = c.alpha
                    row["beta"] = c.beta
                    row["eta_star"] = eta_star(c, L_over_Lf)
                except (ValueError, MemoryError) as exc:
                    row["note"] = f"invalid: {exc}"
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows
