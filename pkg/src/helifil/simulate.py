"""Coupled time integration of the driven robot and the passive filament.

Each right-hand-side evaluation: (1) filament elastic + contact forces;
(2) robot mobility solve under the magnetic torque and the contact reaction,
with the filament's force set contributing ambient flow at the robot nodes;
(3) filament node velocities from the union of robot and filament force sets.
State = (robot pose, filament node positions), advanced with classical RK4;
robot nodes are always regenerated from the pose, never integrated.

Relative axial displacement delta_z = (topmost robot node Z) - (topmost
filament node Z); transport scenarios start with the tops aligned, capture
scenarios with the filament fully ahead of the robot by a configurable gap.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .filament import StericParams, default_steric_params, elastic_forces, steric_forces
from .geometry import FilamentSpec, RobotSpec, build_filament_mesh, build_robot_mesh
from .rigid import MagneticDrive, RigidBodySolver, RobotPose, magnetic_torque, step_out_check
from .rotation import quat_derivative
from .stokeslet import ForceSet, velocity_at, velocity_from_two_sets

TWO_PI = 2.0 * np.pi
RK4_REAL_AXIS_BOUND = 2.785

OUTCOME_CAPTURED = "captured+coupled"
OUTCOME_PUSHED = "pushed_away"
OUTCOME_PASSED = "passed_by"


@dataclass
class Scenario:
    """Complete description of one coupled run."""

    robot: RobotSpec | None
    filament: FilamentSpec | None
    drive: MagneticDrive = field(default_factory=MagneticDrive)
    steric: StericParams | None = None
    placement: str = "aligned_tops"
    gap: float = 0.1
    filament_z_offset: float = 0.0
    filament_radial_offset: float = 0.0
    t_end: float = 4.8
    dt: float | None = None
    dt_safety: float = 0.75
    output_dt: float = 0.01

    def __post_init__(self):
        if self.robot is None and self.filament is None:
            raise ValueError("scenario needs a robot or a filament")
        if self.placement not in ("aligned_tops", "ahead"):
            raise ValueError("placement must be 'aligned_tops' or 'ahead'")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.dt is not None and not 0 < self.dt <= self.t_end:
            raise ValueError("dt must satisfy 0 < dt <= t_end")
        if self.output_dt <= 0:
            raise ValueError("output_dt must be positive")
        if self.steric is None and self.robot is not None and self.filament is not None:
            self.steric = default_steric_params(self.robot.r, self.filament.r_f)


@dataclass
class SimState:
    """Instantaneous coupled state; robot nodes derive from the pose."""

    t: float
    pose: RobotPose | None
    filament_positions: np.ndarray | None


@dataclass
class Rates:
    velocity: np.ndarray | None
    angular_velocity: np.ndarray | None
    filament_velocities: np.ndarray | None
    robot_forces: np.ndarray | None


class CoupledSystem:
    """Meshes, prefactorized solver and initial state for one scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.robot_mesh = None
        self.solver = None
        if scenario.robot is not None:
            self.robot_mesh = build_robot_mesh(scenario.robot)
            self.solver = RigidBodySolver(self.robot_mesh)
        self.filament_mesh = None
        if scenario.filament is not None:
            self.filament_mesh = build_filament_mesh(scenario.filament)

    def initial_state(self) -> SimState:
        pose = None
        if self.robot_mesh is not None:
            pose = RobotPose(center=self.robot_mesh.nodes.mean(axis=0))
        fil = None
        if self.filament_mesh is not None:
            fil = self.filament_mesh.nodes.copy()
            sc = self.scenario
            if self.robot_mesh is not None:
                if sc.placement == "aligned_tops":
                    dz = self.robot_mesh.z_top - self.filament_mesh.z_top
                else:
                    dz = self.robot_mesh.z_top + sc.gap - self.filament_mesh.z_bottom
            else:
                dz = 0.0
            fil[:, 2] += dz + sc.filament_z_offset
            fil[:, 0] += sc.filament_radial_offset
        return SimState(t=0.0, pose=pose, filament_positions=fil)

    def robot_nodes(self, state: SimState):
        return self.solver.lab_nodes(state.pose)

    def rates(self, state: SimState) -> Rates:
        sc = self.scenario
        fil_fs = None
        steric_on_robot = None
        robot_nodes = None
        if self.solver is not None:
            robot_nodes = self.robot_nodes(state)
        if self.filament_mesh is not None:
            f_el = elastic_forces(self.filament_mesh, state.filament_positions,
                                  sc.filament.k)
            f_st_fil = 0.0
            if robot_nodes is not None:
                f_st_fil, steric_on_robot = steric_forces(
                    state.filament_positions, robot_nodes, sc.steric)
            fil_fs = ForceSet(positions=state.filament_positions,
                              forces=f_el + f_st_fil,
                              epsilon=self.filament_mesh.epsilon)
        U = Om = robot_forces = None
        if self.solver is not None:
            tau = magnetic_torque(state.t, state.pose, sc.robot, sc.drive)
            F_net = np.zeros(3)
            T_net = tau
            if steric_on_robot is not None:
                F_net = steric_on_robot.sum(axis=0)
                T_net = tau + np.cross(robot_nodes - state.pose.center,
                                       steric_on_robot).sum(axis=0)
            u_ext = None
            if fil_fs is not None:
                u_ext = velocity_at(robot_nodes, fil_fs)
            res = self.solver.solve_mobility(state.pose, F_net, T_net, u_ext)
            U, Om, robot_forces = res.velocity, res.angular_velocity, res.forces
        fil_vel = None
        if fil_fs is not None:
            if robot_forces is not None:
                fil_vel = velocity_from_two_sets(
                    state.filament_positions,
                    robot_nodes, robot_forces, self.robot_mesh.epsilon,
                    state.filament_positions, fil_fs.forces,
                    self.filament_mesh.epsilon)
            else:
                fil_vel = velocity_at(state.filament_positions, fil_fs)
        return Rates(velocity=U, angular_velocity=Om,
                     filament_velocities=fil_vel, robot_forces=robot_forces)

    def advance(self, state: SimState, dt, k1: Rates = None) -> SimState:
        """One classical RK4 step; quaternion rates are evaluated at the stage
        quaternions so the full state vector sees a consistent RK4."""
        has_robot = state.pose is not None
        has_fil = state.filament_positions is not None
        c0 = state.pose.center if has_robot else None
        q0 = state.pose.quaternion if has_robot else None
        f0 = state.filament_positions

        def deriv(t, c, q, fil, k=None):
            pose = RobotPose(center=c, quaternion=q) if has_robot else None
            if k is None:
                k = self.rates(SimState(t=t, pose=pose, filament_positions=fil))
            # the derivative acts on the raw stage quaternion; normalizing it
            # first (pose does, for the hydrodynamics) would cost an order of
            # accuracy in the RK4 combination
            dq = quat_derivative(q, k.angular_velocity) if has_robot else None
            return k, dq

        def at(h, k, dq):
            c = c0 + h * k.velocity if has_robot else None
            q = q0 + h * dq if has_robot else None
            fil = f0 + h * k.filament_velocities if has_fil else None
            return c, q, fil

        t0 = state.t
        k1, dq1 = deriv(t0, c0, q0, f0, k1)
        k2, dq2 = deriv(t0 + 0.5 * dt, *at(0.5 * dt, k1, dq1))
        k3, dq3 = deriv(t0 + 0.5 * dt, *at(0.5 * dt, k2, dq2))
        k4, dq4 = deriv(t0 + dt, *at(dt, k3, dq3))

        pose = None
        if has_robot:
            center = c0 + dt / 6.0 * (k1.velocity + 2 * k2.velocity
                                      + 2 * k3.velocity + k4.velocity)
            qn = q0 + dt / 6.0 * (dq1 + 2 * dq2 + 2 * dq3 + dq4)
            pose = RobotPose(center=center, quaternion=qn)
        fil = None
        if has_fil:
            fil = f0 + dt / 6.0 * (k1.filament_velocities + 2 * k2.filament_velocities
                                   + 2 * k3.filament_velocities + k4.filament_velocities)
        return SimState(t=t0 + dt, pose=pose, filament_positions=fil)

    # -- diagnostics ---------------------------------------------------------

    def robot_z_top(self, state):
        if self.solver is None:
            return np.nan
        return float(self.robot_nodes(state)[:, 2].max())

    def robot_z_bottom(self, state):
        if self.solver is None:
            return np.nan
        return float(self.robot_nodes(state)[:, 2].min())

    def filament_z_top(self, state):
        if state.filament_positions is None:
            return np.nan
        return float(state.filament_positions[:, 2].max())

    def filament_z_bottom(self, state):
        if state.filament_positions is None:
            return np.nan
        return float(state.filament_positions[:, 2].min())

    def delta_z(self, state):
        return self.robot_z_top(state) - self.filament_z_top(state)

    def estimate_stable_dt(self):
        """Largest stable RK4 step for the filament's elastic relaxation,
        from power iteration on v -> M (dF_elastic/dx) v."""
        sc = self.scenario
        dt_rot = 1.0 / (200.0 * sc.drive.frequency)
        if self.filament_mesh is None:
            return dt_rot
        mesh = self.filament_mesh
        pos = mesh.nodes
        rng = np.random.default_rng(0)
        v = rng.standard_normal(pos.shape)
        v /= np.linalg.norm(v)
        h = 1e-7
        lam = 0.0
        for _ in range(40):
            jv = (elastic_forces(mesh, pos + h * v, sc.filament.k)
                  - elastic_forces(mesh, pos - h * v, sc.filament.k)) / (2.0 * h)
            fs = ForceSet(positions=pos, forces=jv, epsilon=mesh.epsilon)
            w = velocity_at(pos, fs)
            lam = np.linalg.norm(w)
            v = w / lam
        return min(dt_rot, sc.dt_safety * RK4_REAL_AXIS_BOUND / lam)


def _system(scenario: Scenario) -> CoupledSystem:
    sys = getattr(scenario, "_sys", None)
    if sys is None:
        sys = CoupledSystem(scenario)
        scenario._sys = sys
    return sys


def instantaneous_rates(state: SimState, scenario: Scenario) -> Rates:
    return _system(scenario).rates(state)


def rk4_step(state: SimState, scenario: Scenario, dt) -> SimState:
    return _system(scenario).advance(state, dt)


@dataclass
class TransportResult:
    """Diagnostics time series plus final state and classification."""

    series: dict
    final_state: SimState
    scenario: Scenario
    stepped_out: bool = False
    outcome: str | None = None
    snapshots: list = field(default_factory=list)

    def series_rows(self):
        cols = ["t", "robot_z_top", "filament_z_top", "delta_z",
                "robot_vz", "filament_vz_mean"]
        s = self.series
        return cols, list(zip(*[s[c] for c in cols]))


def _check_finite(state: SimState, rates: Rates):
    if state.filament_positions is not None:
        if not np.isfinite(state.filament_positions).all():
            raise RuntimeError("filament positions diverged (non-finite)")
        v = rates.filament_velocities
        if v is not None:
            vmax = float(np.abs(v).max())
            if not np.isfinite(vmax) or vmax > 1e4:
                raise RuntimeError(
                    f"filament velocities diverged (max |v| = {vmax:.3g}); "
                    "reduce dt or soften contact")
    if state.pose is not None and not np.isfinite(state.pose.center).all():
        raise RuntimeError("robot position diverged (non-finite)")


def run_transport(scenario: Scenario, snapshots_dt=None) -> TransportResult:
    """Integrate to t_end, recording diagnostics at the output cadence and,
    if snapshots_dt is given, node-position snapshots at that cadence."""
    sys = _system(scenario)
    dt0 = scenario.dt if scenario.dt is not None else sys.estimate_stable_dt()
    n_steps = max(1, int(np.ceil(scenario.t_end / dt0 - 1e-12)))
    dt = scenario.t_end / n_steps
    every = max(1, round(scenario.output_dt / dt))
    snap_every = None
    if snapshots_dt is not None:
        snap_every = max(1, round(snapshots_dt / dt))

    state = sys.initial_state()
    cols = ("t", "robot_z_top", "filament_z_top", "delta_z", "robot_vz",
            "filament_vz_mean", "omega_z", "gap")
    series = {c: [] for c in cols}
    snapshots = []

    def snap(s):
        robot = sys.robot_nodes(s) if sys.solver is not None else None
        fil = (s.filament_positions.copy()
               if s.filament_positions is not None else None)
        snapshots.append((s.t, robot, fil))

    def record(s, k):
        series["t"].append(s.t)
        series["robot_z_top"].append(sys.robot_z_top(s))
        series["filament_z_top"].append(sys.filament_z_top(s))
        series["delta_z"].append(sys.delta_z(s))
        series["robot_vz"].append(
            float(k.velocity[2]) if k.velocity is not None else np.nan)
        series["filament_vz_mean"].append(
            float(k.filament_velocities[:, 2].mean())
            if k.filament_velocities is not None else np.nan)
        series["omega_z"].append(
            float(k.angular_velocity[2]) if k.angular_velocity is not None else np.nan)
        series["gap"].append(sys.filament_z_bottom(s) - sys.robot_z_top(s))

    stepped_out = False
    for i in range(n_steps):
        k1 = sys.rates(state)
        _check_finite(state, k1)
        if i % every == 0:
            record(state, k1)
        if snap_every is not None and i % snap_every == 0:
            snap(state)
        state = sys.advance(state, dt, k1)
    state.t = scenario.t_end  # clear accumulated rounding for exact export
    k1 = sys.rates(state)
    record(state, k1)
    if snap_every is not None:
        snap(state)
    series = {c: np.array(v) for c, v in series.items()}

    if scenario.robot is not None:
        om = series["omega_z"]
        t = series["t"]
        period = 1.0 / scenario.drive.frequency
        if t[-1] >= period:
            tail = t >= t[-1] - period
            avg = float(np.trapezoid(om[tail], t[tail]) / (t[tail][-1] - t[tail][0]))
            stepped_out = step_out_check(avg, scenario.drive)
            if stepped_out:
                warnings.warn("robot rotation fell out of sync with the drive "
                              f"(avg rate {avg:.3g})", stacklevel=2)
    return TransportResult(series=series, final_state=state, scenario=scenario,
                           stepped_out=stepped_out, snapshots=snapshots)


def classify_outcome(result: TransportResult) -> str:
    """Capture-run classification.

    captured+coupled: filament ends inside the robot's axial span and the
    relative displacement has stopped drifting.  pushed_away: the axial gap to
    the filament ahead ends larger than it started.  passed_by: the robot
    overtakes the filament instead.
    """
    sys = _system(result.scenario)
    s = result.final_state
    L_f = result.scenario.filament.L_f
    fil_top, fil_bot = sys.filament_z_top(s), sys.filament_z_bottom(s)
    rob_top, rob_bot = sys.robot_z_top(s), sys.robot_z_bottom(s)
    tol = 0.05 * L_f
    inside = fil_top <= rob_top + tol and fil_bot >= rob_bot - tol
    t = result.series["t"]
    dz = result.series["delta_z"]
    window = t >= t[-1] - max(0.5, 2.0 / result.scenario.drive.frequency)
    if window.sum() < 2:
        window[-2:] = True
    drift = abs(dz[window][-1] - dz[window][0]) / (t[window][-1] - t[window][0])
    vz = np.nanmedian(np.abs(result.series["robot_vz"]))
    steady = drift < max(0.2 * vz, 1e-3)
    if inside and steady:
        return OUTCOME_CAPTURED
    gap = result.series["gap"]
    if gap[-1] > gap[0] + 0.02 and gap[-1] > 0:
        return OUTCOME_PUSHED
    return OUTCOME_PASSED


def run_capture(scenario: Scenario) -> TransportResult:
    """Transport run starting with the filament ahead; attaches the outcome."""
    if scenario.placement != "ahead":
        raise ValueError("capture runs need placement='ahead'")
    result = run_transport(scenario)
    result.outcome = classify_outcome(result)
    return result


def linear_fit(x, y):
    """Least-squares line y = slope x + intercept with R^2 and zero crossing."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    ss_res = float(((y - fit) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    crossing = -coef[1] / coef[0] if coef[0] != 0 else float("nan")
    return {"slope": float(coef[0]), "intercept": float(coef[1]),
            "r_squared": r2, "zero_crossing": float(crossing)}


def sweep_xi(base: Scenario, xi_values, scenario_builder=None) -> dict:
    """Run one transport per xi_design; report the linear fit and the
    interpolated zero crossing of delta_z(t_end).

    By default each scenario rebuilds the base three-section robot with the
    new pushing fraction; a custom scenario_builder(xi) may override this.
    """
    if scenario_builder is None:
        from .geometry import three_section_spec
        secs = base.robot.sections
        if len(secs) != 3:
            raise ValueError("sweep_xi needs a three-section base robot")
        L_total = base.robot.total_length
        fpm = secs[0].axial_length + secs[1].axial_length

        def scenario_builder(xi):
            spec = three_section_spec(
                L_total, fpm, xi, base.robot.R, secs[0].lam, base.robot.r,
                moment_direction=base.robot.magnetic_moment_direction,
                tau_max=base.robot.tau_max)
            return replace(base, robot=spec)

    xi_values = np.asarray(list(xi_values), dtype=float)
    dz = np.empty_like(xi_values)
    for i, xi in enumerate(xi_values):
        res = run_transport(scenario_builder(xi))
        dz[i] = res.series["delta_z"][-1]
    out = linear_fit(xi_values, dz)
    out.update({"xi": xi_values, "delta_z": dz})
    return out
