import numpy as np
import pytest
from scipy.optimize import brentq

from helifil import (
    DesignPoint,
    RftCoefficients,
    coupling_stability_sign,
    eta_star,
    eta_star_map,
    filament_velocity,
    robot_velocity,
)

# coefficients extracted from the R=0.1, lambda=0.4, r=0.03 reference helix
REF = RftCoefficients(A11=1.6254569435492985, A12=-0.023787763036726837,
                      alpha=0.984652776165405, beta=-0.009917163087534393)
TOY = RftCoefficients(A11=1.0, A12=-0.5, alpha=0.3, beta=-0.2)


def test_robot_velocity_cases():
    assert robot_velocity(TOY, DesignPoint(0.5, 2.0, 7.0)) == 0.0
    u = robot_velocity(TOY, DesignPoint(0.0, 2.0, 2.0 * np.pi * 4.0))
    assert abs(u - 4.0 * np.pi) < 1e-12
    assert abs(u - 12.566) < 1e-3
    lo = robot_velocity(TOY, DesignPoint(0.3, 2.0, 1.0))
    hi = robot_velocity(TOY, DesignPoint(0.7, 2.0, 1.0))
    assert lo > 0 > hi


def test_filament_velocity_cases():
    perfect = RftCoefficients(A11=1.0, A12=-0.5, alpha=1.0, beta=0.0)
    d = DesignPoint(0.2, 1.5, 3.0)
    assert filament_velocity(perfect, d) == robot_velocity(perfect, d)
    d2 = DesignPoint(0.3, 2.0, 1.0)
    assert abs(robot_velocity(TOY, d2) - 0.2) < 1e-15
    assert abs(filament_velocity(TOY, d2) - 0.10) < 1e-15
    # a single-handed robot always outruns its cargo
    d0 = DesignPoint(0.0, 2.0, 1.0)
    assert filament_velocity(TOY, d0) < robot_velocity(TOY, d0)
    assert filament_velocity(REF, d0) < robot_velocity(REF, d0)


def test_filament_velocity_nesting_precondition():
    with pytest.raises(ValueError):
        filament_velocity(TOY, DesignPoint(0.6, 2.0, 1.0))


def test_eta_star_worked_values():
    assert eta_star(TOY, 1.0) == 0.5
    assert abs(eta_star(TOY, 2.0) - 0.5 * (1.0 - (-0.2) / (-0.75))) < 1e-15
    assert abs(eta_star(TOY, 2.0) - 0.3667) < 1e-4


def test_eta_star_matches_velocity_crossing():
    for c, ll in ((TOY, 2.0), (REF, 2.0), (REF, 1.5)):
        e = eta_star(c, ll)

        def gap(eta):
            d = DesignPoint(eta, ll, 1.0)
            return robot_velocity(c, d) - filament_velocity(c, d)

        root = brentq(gap, 1e-6, 1.0 / ll - 1e-6, xtol=1e-14)
        assert abs(root - e) < 1e-10
        d = DesignPoint(e, ll, 1.0)
        assert abs(robot_velocity(c, d) - filament_velocity(c, d)) < 1e-14


def test_eta_star_random_coefficients_consistent():
    rng = np.random.default_rng(7)
    for _ in range(50):
        c = RftCoefficients(A11=rng.uniform(0.5, 3.0),
                            A12=-rng.uniform(0.01, 1.0),
                            alpha=rng.uniform(0.05, 0.95),
                            beta=-rng.uniform(0.01, 0.5))
        ll = rng.uniform(1.0, 2.0)
        e = eta_star(c, ll)
        assert 0.0 < e <= 0.5
        d = DesignPoint(e, ll, rng.uniform(0.5, 30.0))
        assert abs(robot_velocity(c, d) - filament_velocity(c, d)) < 1e-12


def test_eta_star_decreases_with_length_ratio():
    vals = [eta_star(REF, ll) for ll in np.linspace(1.0, 3.0, 9)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_speed_at_eta_star_increases_with_length():
    speeds = []
    for ll in np.linspace(1.0, 3.0, 9):
        e = eta_star(REF, ll)
        speeds.append(robot_velocity(REF, DesignPoint(e, ll, 1.0)))
    assert all(b > a for a, b in zip(speeds, speeds[1:]))


def test_validation_errors():
    with pytest.raises(ValueError):
        RftCoefficients(A11=0.0, A12=-0.5, alpha=0.3, beta=-0.2)
    with pytest.raises(ValueError):
        DesignPoint(-0.1, 2.0, 1.0)
    with pytest.raises(ValueError):
        DesignPoint(0.3, 0.9, 1.0)
    degenerate = RftCoefficients(A11=1.0, A12=-0.5, alpha=1.0, beta=0.0)
    with pytest.raises(ValueError):
        eta_star(degenerate, 2.0)


def test_coupling_stability_restoring_at_eta_star():
    for c in (TOY, REF):
        e = eta_star(c, 2.0)
        d = DesignPoint(e, 2.0, 1.0)
        assert coupling_stability_sign(c, d, 1) == -1
        assert coupling_stability_sign(c, d, -1) == 1
        assert coupling_stability_sign(c, d, 0) == 0
    with pytest.raises(ValueError):
        coupling_stability_sign(TOY, DesignPoint(0.25, 2.0, 1.0), 2)


def test_eta_star_map_tiny_grid():
    seen = []
    rows = eta_star_map([0.3], [0.1, 2.0], n_windings=3,
                        progress=seen.append)
    assert len(rows) == 2 and len(seen) == 2
    bad, good = rows
    assert bad["note"].startswith("invalid")
    assert np.isnan(bad["eta_star"])
    assert good["note"] == ""
    assert np.isfinite(good["eta_star"])
    assert good["alpha"] < 1.0 and good["beta"] < 0.0
    assert good["A12_over_A11"] < 0.0
    assert set(rows[0]) == {"r_over_R", "lambda_over_R", "A12_over_A11",
                            "alpha", "beta", "eta_star", "note"}
