"""Mesh construction for helical robots and bead-spring filaments.

A helix section's centerline is x(s) = (R cos s, +-R sin s, b s) with
b = lambda / (2 pi) and 0 <= s <= s_max = 2 pi n_windings; + for right-handed,
- for left-handed.  Robot surfaces carry 3 nodes per cross-section, filaments
4.  Cross-section spacing along the centerline matches the node spacing within
a cross-section, and each body's regularization parameter equals its minimum
inter-node distance.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

TWO_PI = 2.0 * np.pi

_HANDEDNESS_SIGN = {"right": 1, "left": -1}


@dataclass
class HelixSection:
    """One helical section: handedness, radius R, pitch lambda, tube radius r,
    winding count (0 windings = empty section, a degenerate design limit)."""

    handedness: str
    R: float
    lam: float
    r: float
    n_windings: float

    def __post_init__(self):
        if self.handedness not in _HANDEDNESS_SIGN:
            raise ValueError(f"handedness must be 'right' or 'left', got {self.handedness!r}")
        if self.R <= 0 or self.r <= 0 or self.lam <= 0:
            raise ValueError("R, r and lambda must be positive")
        if self.r >= self.R:
            raise ValueError("tube radius r must be smaller than helix radius R")
        if self.n_windings < 0:
            raise ValueError("n_windings must be nonnegative")
        if self.lam <= 4.0 * self.r:
            warnings.warn(
                f"pitch {self.lam} <= 4 r = {4 * self.r}: successive turns are close",
                stacklevel=2,
            )

    @property
    def sign(self):
        return _HANDEDNESS_SIGN[self.handedness]

    @property
    def b(self):
        return self.lam / TWO_PI

    @property
    def s_max(self):
        return TWO_PI * self.n_windings

    @property
    def axial_length(self):
        return self.lam * self.n_windings

    def mirrored(self):
        other = "left" if self.handedness == "right" else "right"
        return HelixSection(other, self.R, self.lam, self.r, self.n_windings)


@dataclass
class RobotSpec:
    """Multi-section robot, sections ordered front (+Z) to back."""

    sections: list
    magnetic_moment_direction: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    tau_max: float = 50.0

    def __post_init__(self):
        if not self.sections:
            raise ValueError("robot needs at least one section")
        R0, r0 = self.sections[0].R, self.sections[0].r
        for sec in self.sections[1:]:
            if sec.R != R0 or sec.r != r0:
                raise ValueError("all sections must share R and r")
        if self.tau_max <= 0:
            raise ValueError("tau_max must be positive")
        m = np.asarray(self.magnetic_moment_direction, dtype=float)
        n = np.sqrt(m @ m)
        if n == 0:
            raise ValueError("magnetic moment direction must be nonzero")
        self.magnetic_moment_direction = m / n

    @property
    def R(self):
        return self.sections[0].R

    @property
    def r(self):
        return self.sections[0].r

    @property
    def total_length(self):
        return sum(sec.axial_length for sec in self.sections)

    def mirrored(self):
        return RobotSpec([sec.mirrored() for sec in self.sections],
                         self.magnetic_moment_direction.copy(), self.tau_max)


@dataclass
class FilamentSpec:
    """Passive filament: length, tube radius, Hookean spring constant."""

    L_f: float = 1.0
    r_f: float = 0.014
    k: float = 1000.0

    def __post_init__(self):
        if self.L_f <= 0 or self.r_f <= 0 or self.k <= 0:
            raise ValueError("L_f, r_f and k must be positive")


@dataclass
class BodyMesh:
    """Surface node set of one body, plus springs for filaments.

    nodes are initial (design-frame) positions; epsilon is the body's
    regularization parameter = minimum inter-node distance.
    """

    nodes: np.ndarray
    cross_section_index: np.ndarray
    epsilon: float
    body_kind: str
    tube_radius: float
    spring_i: np.ndarray | None = None
    spring_j: np.ndarray | None = None
    spring_rest: np.ndarray | None = None
    sections: list | None = None

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_cross_sections(self):
        return int(self.cross_section_index.max()) + 1

    @property
    def springs(self):
        if self.spring_i is None:
            return []
        return list(zip(self.spring_i.tolist(), self.spring_j.tolist(),
                        self.spring_rest.tolist()))

    @property
    def z_top(self):
        return float(self.nodes[:, 2].max())

    @property
    def z_bottom(self):
        return float(self.nodes[:, 2].min())


def helix_centerline(section: HelixSection, s):
    """Centerline point(s) of an isolated section at arc parameter s."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s > section.s_max + 1e-12):
        raise ValueError(f"s out of range [0, {section.s_max}]")
    sgn = section.sign
    pts = np.stack([section.R * np.cos(s),
                    sgn * section.R * np.sin(s),
                    section.b * s], axis=-1)
    return pts


def _min_node_distance(nodes):
    tree = cKDTree(nodes)
    d, _ = tree.query(nodes, k=2)
    return float(d[:, 1].min())


def _section_cross_sections(sec: HelixSection, z_top_section, phase, skip_top):
    """Cross-section centers and node frames for one section.

    Cross-sections are built perpendicular to the local centerline tangent,
    ordered top (front) to bottom.  Azimuth psi(s) = sign * s + phase; the
    section spans z in [z_top - axial_length, z_top] with s = 0 at the bottom.
    Returns (centers, node_offsets) with 3 nodes per cross-section, and the
    azimuth at the section bottom (junction phase for the next section).
    """
    h = sec.sign
    sp = np.hypot(sec.R, sec.b)
    chord = 2.0 * sec.r * np.sin(np.pi / 3.0)
    nseg = max(1, round(sec.s_max * sp / chord))
    svals = np.linspace(sec.s_max, 0.0, nseg + 1)  # top to bottom
    if skip_top:
        svals = svals[1:]
    psi = h * svals + phase
    cos_p, sin_p = np.cos(psi), np.sin(psi)
    centers = np.stack([sec.R * cos_p,
                        sec.R * sin_p,
                        z_top_section - sec.axial_length + sec.b * svals], axis=1)
    # orthonormal cross-section frame: u outward radial, v = tangent x u
    u = np.stack([cos_p, sin_p, np.zeros_like(psi)], axis=1)
    v = np.stack([-sec.b * sin_p / sp, sec.b * cos_p / sp,
                  np.full_like(psi, -h * sec.R / sp)], axis=1)
    ang = h * np.arange(3) * TWO_PI / 3.0
    offsets = (np.cos(ang)[None, :, None] * u[:, None, :]
               + np.sin(ang)[None, :, None] * v[:, None, :]) * sec.r
    return centers, offsets, float(phase)


def build_robot_mesh(spec: RobotSpec) -> BodyMesh:
    """Surface mesh of the (possibly multi-section) robot.

    Sections are stacked front-to-back downward from z = +L_total/2 with a
    positionally continuous centerline; abutting sections share the junction
    cross-section (the front section's nodes are kept).  The robot top sits at
    azimuth 0 for deterministic meshes.
    """
    live = [sec for sec in spec.sections if sec.n_windings > 0]
    if not live:
        raise ValueError("robot has no nonempty sections")
    L_tot = spec.total_length
    z_top = 0.5 * L_tot
    all_nodes = []
    cs_index = []
    cs_counter = 0
    phase = -live[0].sign * live[0].s_max  # top azimuth = 0
    for j, sec in enumerate(live):
        centers, offsets, _ = _section_cross_sections(sec, z_top, phase, skip_top=(j > 0))
        nodes = (centers[:, None, :] + offsets).reshape(-1, 3)
        all_nodes.append(nodes)
        ncs = len(centers)
        cs_index.append(np.repeat(np.arange(cs_counter, cs_counter + ncs), 3))
        cs_counter += ncs
        z_top -= sec.axial_length
        # this section's bottom azimuth is psi(0) = phase; the next section's
        # top azimuth (at its s_max) must match it
        if j + 1 < len(live):
            nxt = live[j + 1]
            phase = phase - nxt.sign * nxt.s_max
    nodes = np.concatenate(all_nodes)
    cs_index = np.concatenate(cs_index)
    if len(live) > 1:
        # opposite-handed sections mirror about the junction plane, so a node
        # just above it can land on top of one just below; keep one of each
        # such pair so the min-distance blob width stays at the mesh scale
        nodes, cs_index = _merge_close_nodes(nodes, cs_index,
                                             0.5 * spec.r * np.sqrt(3.0))
    eps = _min_node_distance(nodes)
    return BodyMesh(nodes=nodes, cross_section_index=cs_index, epsilon=eps,
                    body_kind="robot", tube_radius=spec.r, sections=list(spec.sections))


def _merge_close_nodes(nodes, cs_index, cutoff):
    pairs = cKDTree(nodes).query_pairs(cutoff, output_type="ndarray")
    if len(pairs) == 0:
        return nodes, cs_index
    drop = np.zeros(len(nodes), dtype=bool)
    for i, j in pairs:
        if not drop[i] and not drop[j]:
            drop[max(i, j)] = True
    keep = ~drop
    return nodes[keep], cs_index[keep]


def build_filament_mesh(spec: FilamentSpec) -> BodyMesh:
    """Straight filament along Z, centered on the origin, 4 nodes per
    cross-section, springs over all intra-section pairs and all 16 pairs
    between adjacent cross-sections."""
    chord = np.sqrt(2.0) * spec.r_f
    nseg = max(1, round(spec.L_f / chord))
    ncs = nseg + 1
    zs = np.linspace(-0.5 * spec.L_f, 0.5 * spec.L_f, ncs)
    ang = np.arange(4) * TWO_PI / 4.0
    ring = spec.r_f * np.stack([np.cos(ang), np.sin(ang), np.zeros(4)], axis=1)
    nodes = (np.stack([np.zeros_like(zs), np.zeros_like(zs), zs], axis=1)[:, None, :]
             + ring[None, :, :]).reshape(-1, 3)
    cs_index = np.repeat(np.arange(ncs), 4)
    si, sj = [], []
    for c in range(ncs):
        base = 4 * c
        for a in range(4):
            for b in range(a + 1, 4):
                si.append(base + a)
                sj.append(base + b)
        if c + 1 < ncs:
            for a in range(4):
                for b in range(4):
                    si.append(base + a)
                    sj.append(base + 4 + b)
    si = np.array(si, dtype=np.int64)
    sj = np.array(sj, dtype=np.int64)
    rest = np.linalg.norm(nodes[si] - nodes[sj], axis=1)
    eps = _min_node_distance(nodes)
    return BodyMesh(nodes=nodes, cross_section_index=cs_index, epsilon=eps,
                    body_kind="filament", tube_radius=spec.r_f,
                    spring_i=si, spring_j=sj, spring_rest=rest)


def section_axial_ranges(spec: RobotSpec):
    """Initial-frame (z_top, z_bottom, handedness sign) of each nonempty section."""
    z = 0.5 * spec.total_length
    out = []
    for sec in spec.sections:
        if sec.n_windings > 0:
            out.append((z, z - sec.axial_length, sec.sign))
        z -= sec.axial_length
    return out


def design_ratios(spec: RobotSpec, filament: FilamentSpec | None = None):
    """Length ratios of a three-section robot: xi_design = L_mid/(L_front+L_mid),
    eta = L_mid/L_total."""
    if len(spec.sections) != 3:
        raise ValueError("design ratios are defined for three-section robots")
    L_front, L_mid, _ = (sec.axial_length for sec in spec.sections)
    L_tot = spec.total_length
    fm = L_front + L_mid
    if fm == 0:
        raise ValueError("front+middle length is zero")
    # eta as xi*(fm/L_tot) rather than L_mid/L_tot: same ratio, one fewer
    # rounding of the small operand, exact for round designs like 0.52*1.125/2.5
    xi = L_mid / fm
    return {"xi_design": xi, "eta": xi * (fm / L_tot)}


def three_section_spec(L_total, front_plus_middle, xi_design, R, lam, r,
                       moment_direction=None, tau_max=50.0):
    """Pulling/pushing/pulling robot with the middle (pushing) length set by
    xi_design = L_mid/(L_front+L_mid).  Section winding counts are fractional
    so lengths match exactly."""
    if not 0.0 <= xi_design <= 1.0:
        raise ValueError("xi_design must lie in [0, 1]")
    if front_plus_middle > L_total:
        raise ValueError("front+middle exceeds total length")
    L_mid = xi_design * front_plus_middle
    L_front = front_plus_middle - L_mid
    L_back = L_total - front_plus_middle
    sections = [
        HelixSection("right", R, lam, r, L_front / lam),
        HelixSection("left", R, lam, r, L_mid / lam),
        HelixSection("right", R, lam, r, L_back / lam),
    ]
    kwargs = {"tau_max": tau_max}
    if moment_direction is not None:
        kwargs["magnetic_moment_direction"] = moment_direction
    return RobotSpec(sections, **kwargs)


def export_mesh_csv(mesh: BodyMesh, path, body_id=0):
    from .output import write_csv
    rows = [(body_id, i, int(mesh.cross_section_index[i]),
             mesh.nodes[i, 0], mesh.nodes[i, 1], mesh.nodes[i, 2])
            for i in range(mesh.n_nodes)]
    write_csv(path, ["body_id", "node_id", "cross_section", "x", "y", "z"], rows)
