"""Run configuration: JSON schema, defaults, bundled scenarios.

All quantities are nondimensional (length scale 50 um, viscosity 1e-3 Pa s,
torque scale 6e-12 N m; the physical_scale block only annotates outputs).
Validation reports every problem at once: missing required fields, unknown
keys (with dotted paths) and type errors.
"""

import copy
import hashlib
import json

import numpy as np

from .filament import StericParams
from .geometry import FilamentSpec, HelixSection, RobotSpec, three_section_spec
from .rigid import MagneticDrive
from .simulate import Scenario


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


# leaf spec: (type_tag, default); required leaves use REQUIRED as default
REQUIRED = object()

_SECTION_SCHEMA = {
    "handedness": ("string", REQUIRED),
    "R": ("number", REQUIRED),
    "lambda": ("number", REQUIRED),
    "r": ("number", REQUIRED),
    "n_windings": ("number", REQUIRED),
}

_THREE_SECTION_SCHEMA = {
    "L_total": ("number", REQUIRED),
    "front_plus_middle": ("number", REQUIRED),
    "xi_design": ("number", REQUIRED),
    "R": ("number", REQUIRED),
    "lambda": ("number", REQUIRED),
    "r": ("number", REQUIRED),
}

SCHEMA = {
    "robot": {
        "sections": ("section_list", None),
        "three_section": ("three_section", None),
        "moment_direction": ("number_list", [1.0, 0.0, 0.0]),
        "tau_max": ("number", 50.0),
    },
    "filament": {
        "L_f": ("number", 1.0),
        "r_f": ("number", 0.014),
        "k": ("number", 1000.0),
    },
    "drive": {
        "B0": ("number", 1.0),
        "frequency": ("number", 4.0),
        "rotation_sign": ("int", 1),
    },
    "steric": {
        "sigma": ("number_or_null", None),
        "F_s": ("number", 10.0),
    },
    "placement": {
        "mode": ("string", "aligned_tops"),
        "gap": ("number", 0.1),
        "z_offset": ("number", 0.0),
        "radial_offset": ("number", 0.0),
    },
    "numerics": {
        "t_end": ("number", 4.8),
        "dt": ("number_or_null", None),
        "dt_safety": ("number", 0.75),
        "output_dt": ("number", 0.01),
    },
    "output": {
        "directory": ("string", "out"),
        "plots": ("bool", True),
        "snapshots_dt": ("number_or_null", None),
    },
    "sweep": {
        "parameter": ("string", None),
        "values": ("number_list", None),
    },
    "pathline": {
        "omega": ("number_or_null", None),
        "duration": ("number_or_null", None),
        "dt": ("number_or_null", None),
        "seed": ("number_list_or_null", None),
    },
    "flowfield": {
        "x_offsets": ("number_list", [0.0, 0.02, 0.04, 0.1]),
        "z_margin": ("number", 0.3),
        "n_samples": ("int", 201),
    },
    "coeffs": {
        "R": ("number", 0.1),
        "lambda": ("number", 0.4),
        "r": ("number", 0.03),
        "n_windings": ("number", 20.0),
        "central_fraction": ("number", 0.5),
    },
    "etamap": {
        "R": ("number", 0.1),
        "n_windings": ("number", 20.0),
        "L_over_Lf": ("number", 2.0),
        "r_over_R": ("number_list", [0.04, 0.1, 0.2, 0.3, 0.5, 0.71]),
        "lambda_over_R": ("number_list_or_null", None),
        "n_lambda": ("int", 8),
        "central_fraction": ("number", 0.5),
    },
    "physical_scale": {
        "length_m": ("number", 50e-6),
        "viscosity_Pa_s": ("number", 1e-3),
        "torque_N_m": ("number", 6e-12),
    },
}

# blocks that may be absent (filled with defaults) or explicitly null
_NULLABLE_BLOCKS = {"filament", "sweep"}
_REQUIRED_BLOCKS = {"robot"}


def _check_leaf(tag, value, path, errors):
    def is_num(v):
        return isinstance(v, (int, float)) and not isinstance(v, bool)

    if tag == "number":
        if not is_num(value):
            errors.append(f"{path}: expected number, got {value!r}")
            return None
        return float(value)
    if tag == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            errors.append(f"{path}: expected integer, got {value!r}")
            return None
        return value
    if tag == "bool":
        if not isinstance(value, bool):
            errors.append(f"{path}: expected boolean, got {value!r}")
            return None
        return value
    if tag == "string":
        if not isinstance(value, str):
            errors.append(f"{path}: expected string, got {value!r}")
            return None
        return value
    if tag == "number_or_null":
        if value is None:
            return None
        return _check_leaf("number", value, path, errors)
    if tag in ("number_list", "number_list_or_null"):
        if value is None and tag.endswith("or_null"):
            return None
        if not isinstance(value, list) or not all(is_num(v) for v in value):
            errors.append(f"{path}: expected list of numbers, got {value!r}")
            return None
        return [float(v) for v in value]
    if tag == "section_list":
        if value is None:
            # merged configs carry the unused robot shape as null
            return None
        if not isinstance(value, list) or len(value) == 0:
            errors.append(f"{path}: expected nonempty list of section objects")
            return None
        out = []
        for i, sec in enumerate(value):
            out.append(_check_block(sec, _SECTION_SCHEMA, f"{path}[{i}]", errors))
        return out
    if tag == "three_section":
        if value is None:
            return None
        return _check_block(value, _THREE_SECTION_SCHEMA, path, errors)
    raise AssertionError(f"unhandled schema tag {tag}")


def _check_block(raw, schema, path, errors):
    if not isinstance(raw, dict):
        errors.append(f"{path}: expected object, got {raw!r}")
        return {}
    out = {}
    for key in sorted(raw):
        if key not in schema:
            errors.append(f"unknown field: {path}.{key}")
    for key, (tag, default) in schema.items():
        if key in raw:
            out[key] = _check_leaf(tag, raw[key], f"{path}.{key}", errors)
        elif default is REQUIRED:
            errors.append(f"missing required field: {path}.{key}")
        else:
            out[key] = copy.deepcopy(default)
    return out


def validate_config(raw):
    """Full validation; returns the config with defaults merged in, or raises
    ConfigError listing every problem."""
    if not isinstance(raw, dict):
        raise ConfigError([f"top level must be an object, got {type(raw).__name__}"])
    errors = []
    out = {}
    for key in sorted(raw):
        if key not in SCHEMA:
            errors.append(f"unknown field: {key}")
    for block, schema in SCHEMA.items():
        if block in raw:
            if raw[block] is None:
                if block in _NULLABLE_BLOCKS:
                    out[block] = None
                    continue
                errors.append(f"{block}: must not be null")
                continue
            out[block] = _check_block(raw[block], schema, block, errors)
        elif block in _REQUIRED_BLOCKS:
            errors.append(f"missing required field: {block}")
        elif block == "sweep":
            out[block] = None
        else:
            out[block] = _check_block({}, schema, block, errors)
    if "robot" in out and out.get("robot") is not None:
        rob = out["robot"]
        has_secs = rob.get("sections") is not None
        has_three = rob.get("three_section") is not None
        if has_secs == has_three:
            errors.append("robot: exactly one of 'sections' or 'three_section' "
                          "must be given")
    sw = out.get("sweep")
    if sw is not None:
        if sw.get("parameter") not in ("xi_design", "r", "lambda"):
            errors.append("sweep.parameter: must be one of 'xi_design', 'r', "
                          "'lambda'")
        if not sw.get("values"):
            errors.append("sweep.values: must be a nonempty list of numbers")
    if errors:
        raise ConfigError(errors)
    return out


def load_config(path):
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"JSON parse error at line {exc.lineno}, "
                           f"column {exc.colno}: {exc.msg}"]) from exc
    return validate_config(raw)


def serialize_config(cfg):
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def default_config():
    """Complete documented default configuration (single-helix transport
    baseline for the required robot block)."""
    raw = {"robot": {"sections": [
        {"handedness": "right", "R": 0.06, "lambda": 0.2, "r": 0.015,
         "n_windings": 6.0}]}}
    return validate_config(raw)


# -- conversion to domain objects -------------------------------------------


def robot_spec_from_config(cfg):
    rob = cfg["robot"]
    md = np.array(rob["moment_direction"], dtype=float)
    if rob.get("three_section") is not None:
        ts = rob["three_section"]
        return three_section_spec(ts["L_total"], ts["front_plus_middle"],
                                  ts["xi_design"], ts["R"], ts["lambda"],
                                  ts["r"], moment_direction=md,
                                  tau_max=rob["tau_max"])
    sections = [HelixSection(s["handedness"], s["R"], s["lambda"], s["r"],
                             s["n_windings"]) for s in rob["sections"]]
    return RobotSpec(sections, magnetic_moment_direction=md,
                     tau_max=rob["tau_max"])


def scenario_from_config(cfg) -> Scenario:
    robot = robot_spec_from_config(cfg)
    filament = None
    if cfg.get("filament") is not None:
        f = cfg["filament"]
        filament = FilamentSpec(L_f=f["L_f"], r_f=f["r_f"], k=f["k"])
    d = cfg["drive"]
    drive = MagneticDrive(B0=d["B0"], frequency=d["frequency"],
                          rotation_sign=d["rotation_sign"])
    steric = None
    if filament is not None and cfg["steric"]["sigma"] is not None:
        steric = StericParams(sigma=cfg["steric"]["sigma"],
                              F_s=cfg["steric"]["F_s"])
    elif filament is not None:
        steric = StericParams(sigma=robot.r + filament.r_f,
                              F_s=cfg["steric"]["F_s"])
    p = cfg["placement"]
    n = cfg["numerics"]
    return Scenario(robot=robot, filament=filament, drive=drive, steric=steric,
                    placement=p["mode"], gap=p["gap"],
                    filament_z_offset=p["z_offset"],
                    filament_radial_offset=p["radial_offset"],
                    t_end=n["t_end"], dt=n["dt"], dt_safety=n["dt_safety"],
                    output_dt=n["output_dt"])


def apply_sweep_value(cfg, parameter, value):
    """New config with the swept parameter set; 'lambda' preserves each
    section's axial length by rescaling winding counts."""
    new = copy.deepcopy(cfg)
    rob = new["robot"]
    if parameter == "xi_design":
        if rob.get("three_section") is None:
            raise ConfigError(["sweep over xi_design needs robot.three_section"])
        rob["three_section"]["xi_design"] = float(value)
    elif parameter == "r":
        if rob.get("three_section") is not None:
            rob["three_section"]["r"] = float(value)
        else:
            for s in rob["sections"]:
                s["r"] = float(value)
    elif parameter == "lambda":
        if rob.get("three_section") is not None:
            rob["three_section"]["lambda"] = float(value)
        else:
            for s in rob["sections"]:
                L_axial = s["lambda"] * s["n_windings"]
                s["lambda"] = float(value)
                s["n_windings"] = L_axial / float(value)
    else:
        raise ConfigError([f"unknown sweep parameter {parameter!r}"])
    new["sweep"] = None
    return new


# -- bundled scenarios -------------------------------------------------------

_BUNDLES = {
    "fig3-velocity": {
        "robot": {"sections": [
            {"handedness": "right", "R": 0.06, "lambda": 0.15, "r": 0.015,
             "n_windings": 8.0}]},
        "filament": None,
        "numerics": {"t_end": 0.5, "dt": 0.00125, "output_dt": 0.0025},
    },
    "sec5-baseline": {
        "robot": {"sections": [
            {"handedness": "right", "R": 0.06, "lambda": 0.2, "r": 0.015,
             "n_windings": 6.0}]},
        "numerics": {"t_end": 4.8},
    },
    "sec5-radius-sweep": {
        "robot": {"sections": [
            {"handedness": "right", "R": 0.06, "lambda": 0.2, "r": 0.015,
             "n_windings": 6.0}]},
        "numerics": {"t_end": 4.8},
        "sweep": {"parameter": "r", "values": [0.015, 0.012, 0.0096, 0.0078]},
    },
    "fig10-xi-sweep": {
        "robot": {"three_section": {
            "L_total": 2.5, "front_plus_middle": 1.125, "xi_design": 0.52,
            "R": 0.06, "lambda": 0.2, "r": 0.015}},
        "numerics": {"t_end": 4.8},
        "sweep": {"parameter": "xi_design",
                  "values": [0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6]},
    },
    "fig11-capture": {
        "robot": {"three_section": {
            "L_total": 2.5, "front_plus_middle": 1.125, "xi_design": 0.52,
            "R": 0.06, "lambda": 0.2, "r": 0.015}},
        "placement": {"mode": "ahead", "gap": 0.1},
        "numerics": {"t_end": 20.0, "dt_safety": 0.5},
    },
    "fig13-etamap": {
        "robot": {"sections": [
            {"handedness": "right", "R": 0.1, "lambda": 0.4, "r": 0.03,
             "n_windings": 20.0}]},
        "filament": None,
        "etamap": {},
    },
}


def bundled_scenario_names():
    return sorted(_BUNDLES)


def bundled_scenario(name):
    if name not in _BUNDLES:
        raise ConfigError([f"unknown scenario {name!r}; available: "
                           + ", ".join(bundled_scenario_names())])
    return validate_config(copy.deepcopy(_BUNDLES[name]))
