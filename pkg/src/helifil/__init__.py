"""Simulation and analysis of torque-driven helical micro-robots transporting
passive elastic filaments in viscous (inertialess) flow."""

__version__ = "0.1.0"

from .rotation import (quat_derivative, quat_from_axis_angle, quat_identity,
                       quat_multiply, quat_normalize, quat_to_matrix,
                       rotate_vectors)
from .geometry import (BodyMesh, FilamentSpec, HelixSection, RobotSpec,
                       build_filament_mesh, build_robot_mesh, design_ratios,
                       export_mesh_csv, helix_centerline, section_axial_ranges,
                       three_section_spec)
from .stokeslet import (ForceSet, SolveError, assemble_mobility, blob,
                        solve_dense, velocity_at, velocity_from_two_sets)
from .rigid import (MagneticDrive, RigidBodySolver, RigidSolveResult,
                    RobotPose, magnetic_torque, step_out_check)
from .filament import (StericParams, default_steric_params, elastic_energy,
                       elastic_forces, filament_hydrodynamic_forces,
                       steric_energy, steric_energy_total, steric_force,
                       steric_forces)
from .simulate import (CoupledSystem, Rates, Scenario, SimState,
                       TransportResult, classify_outcome, instantaneous_rates,
                       linear_fit, rk4_step, run_capture, run_transport,
                       sweep_xi)
from .flow import (Pathline, VelocityProfile, confinement_D,
                   extract_alpha_beta, extract_cell,
                   extract_resistance_per_length, rotation_flow_sources,
                   sample_profile, swimming_flow_sources, trace_pathline)
from .rft import (DesignPoint, RftCoefficients, coupling_stability_sign,
                  eta_star, eta_star_map, filament_velocity, robot_velocity)
from .config import (ConfigError, apply_sweep_value, bundled_scenario,
                     bundled_scenario_names, config_hash, default_config,
                     load_config, robot_spec_from_config, scenario_from_config,
                     serialize_config, validate_config)

__all__ = [
    "quat_derivative", "quat_from_axis_angle", "quat_identity",
    "quat_multiply", "quat_normalize", "quat_to_matrix", "rotate_vectors",
    "BodyMesh", "FilamentSpec", "HelixSection", "RobotSpec",
    "build_filament_mesh", "build_robot_mesh", "design_ratios",
    "export_mesh_csv", "helix_centerline", "section_axial_ranges",
    "three_section_spec",
    "ForceSet", "SolveError", "assemble_mobility", "blob", "solve_dense",
    "velocity_at", "velocity_from_two_sets",
    "MagneticDrive", "RigidBodySolver", "RigidSolveResult", "RobotPose",
    "magnetic_torque", "step_out_check",
    "StericParams", "default_steric_params", "elastic_energy",
    "elastic_forces", "filament_hydrodynamic_forces", "steric_energy",
    "steric_energy_total", "steric_force", "steric_forces",
    "CoupledSystem", "Rates", "Scenario", "SimState", "TransportResult",
    "classify_outcome", "instantaneous_rates", "linear_fit", "rk4_step",
    "run_capture", "run_transport", "sweep_xi",
    "Pathline", "VelocityProfile", "confinement_D", "extract_alpha_beta",
    "extract_cell", "extract_resistance_per_length", "rotation_flow_sources",
    "sample_profile", "swimming_flow_sources", "trace_pathline",
    "DesignPoint", "RftCoefficients", "coupling_stability_sign", "eta_star",
    "eta_star_map", "filament_velocity", "robot_velocity",
    "ConfigError", "apply_sweep_value", "bundled_scenario",
    "bundled_scenario_names", "config_hash", "default_config", "load_config",
    "robot_spec_from_config", "scenario_from_config", "serialize_config",
    "validate_config",
]
