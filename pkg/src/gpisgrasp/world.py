"""Deterministic stand-in for a physics scene.

Provides the pieces the exploration loop needs from its environment: a
pinhole depth camera rendering partial point clouds, a simplified
three-finger hand whose fingertips are quasi-static spherical probes, a
finger-closure simulation by ray marching against the true mesh, and a
ground-truth grasp oracle that replaces physical lifting tests.

Hand model: the wrist frame comes from three Euler angles; the wrist origin
sits behind the thumb/first-finger midpoint along the approach axis; the
last fingertip lives on a 2D plane at a fixed offset in front of the wrist
(mimicking a coupled-joint finger).  Closure is a straight march of each
fingertip towards the current centre-of-mass estimate, stopping at first
contact or after the travel budget, which lands exactly on the commanded
target when nothing is hit.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from . import meshes
from .errors import EmptyViewError, InfeasiblePlanError
from .meshes import TriMesh
from .quality import Contact, grasp_wrenches, epsilon_quality


@dataclass(frozen=True)
class CameraSpec:
    """Pinhole depth camera: position + ZYX Euler orientation, symmetric fov."""

    position: np.ndarray
    euler_zyx: np.ndarray
    fov: float = np.deg2rad(60.0)
    resolution: int = 64
    depth_noise_sigma: float = 0.002

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "euler_zyx", np.asarray(self.euler_zyx, dtype=float).reshape(3))
        if self.resolution < 16:
            raise ValueError("resolution must be >= 16")
        if not 0.0 < self.fov < np.pi:
            raise ValueError("fov must be in (0, pi)")

    @property
    def rotation(self) -> np.ndarray:
        return Rotation.from_euler("ZYX", self.euler_zyx).as_matrix()

    @property
    def forward(self) -> np.ndarray:
        """Optical axis (camera +z) in world coordinates."""
        return self.rotation @ np.array([0.0, 0.0, 1.0])


def look_at(position, target, fov=np.deg2rad(60.0), resolution=64, depth_noise_sigma=0.002):
    """Camera at `position` with its optical axis through `target`."""
    position = np.asarray(position, dtype=float)
    target = np.asarray(target, dtype=float)
    fwd = target - position
    norm = np.linalg.norm(fwd)
    if norm < 1e-12:
        raise ValueError("camera position and target coincide")
    fwd = fwd / norm
    up = np.array([0.0, 0.0, 1.0])
    if abs(fwd @ up) > 0.999:
        up = np.array([0.0, 1.0, 0.0])
    right = np.cross(fwd, up)
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    rot = np.stack([right, down, fwd], axis=1)
    euler = Rotation.from_matrix(rot).as_euler("ZYX")
    return CameraSpec(
        position=position,
        euler_zyx=euler,
        fov=fov,
        resolution=resolution,
        depth_noise_sigma=depth_noise_sigma,
    )


def render_pointcloud(mesh: TriMesh, cam: CameraSpec, seed=0) -> np.ndarray:
    """One ray per pixel; nearest hits perturbed along the ray by depth noise.

    Misses are dropped; raises EmptyViewError when nothing is hit.
    """
    if meshes.contains(mesh, cam.position):
        raise ValueError("camera is inside the mesh")
    rng = np.random.default_rng([int(seed), 0xCA3])
    n = cam.resolution
    half = np.tan(cam.fov / 2.0)
    px = np.linspace(-half, half, n)
    u, v = np.meshgrid(px, px, indexing="xy")
    dirs_cam = np.stack([u.ravel(), v.ravel(), np.ones(n * n)], axis=1)
    dirs = dirs_cam @ cam.rotation.T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    points = []
    for d in dirs:
        hit = meshes.first_hit(mesh, cam.position, d)
        if hit is None:
            continue
        t, _ = hit
        t_noisy = t + rng.normal(0.0, cam.depth_noise_sigma) if cam.depth_noise_sigma > 0 else t
        points.append(cam.position + t_noisy * d)
    if not points:
        raise EmptyViewError("no mesh hits in the camera view")
    return np.array(points)


@dataclass(frozen=True)
class VirtualHand:
    """Simplified three-finger hand geometry (meters)."""

    reach_radius: float = 0.25
    finger_travel: float = 0.15
    knuckle_offset: float = 0.05
    tip_radius: float = 0.01
    standoff: float = 0.02

    def __post_init__(self):
        for name in ("reach_radius", "finger_travel", "knuckle_offset", "tip_radius", "standoff"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def uv_half_extent(self) -> float:
        """Half-size of the square the coupled fingertip can reach on its plane."""
        return 0.6 * self.reach_radius


@dataclass(frozen=True)
class HandPlan:
    """Feasible placement: wrist frame, fingertip targets, closure rays."""

    wrist_origin: np.ndarray
    wrist_euler: np.ndarray
    rotation: np.ndarray
    tip_targets: np.ndarray    # (3, 3): thumb, finger1, finger2
    starts: np.ndarray         # (3, 3) march origins
    directions: np.ndarray     # (3, 3) unit march directions

    @property
    def wrist_pose(self) -> np.ndarray:
        """6-dof pose: origin followed by ZYX Euler angles."""
        return np.concatenate([self.wrist_origin, self.wrist_euler])


def solve_hand(query, hand: VirtualHand, gpis_com) -> HandPlan:
    """Geometric hand solve for a de-normalized grasp query.

    The wrist frame comes from the query's Euler angles; the origin is the
    thumb/finger1 midpoint pushed back along the approach axis by standoff
    plus the query's offset; the last fingertip target is the query's 2D
    plane point mapped through the knuckle plane.  Feasibility: every tip
    within reach of the wrist and pairwise tip separation of at least one
    tip diameter.  Raises InfeasiblePlanError('reach' | 'self-collision').
    """
    gpis_com = np.asarray(gpis_com, dtype=float).reshape(3)
    rot = Rotation.from_euler("ZYX", query.wrist_euler).as_matrix()
    approach = rot @ np.array([0.0, 0.0, 1.0])
    thumb = np.asarray(query.thumb, dtype=float)
    finger1 = np.asarray(query.finger1, dtype=float)
    origin = 0.5 * (thumb + finger1) - (hand.standoff + query.approach_offset) * approach
    uv = np.asarray(query.finger2_uv, dtype=float)
    finger2 = origin + rot @ np.array([uv[0], uv[1], hand.knuckle_offset])
    targets = np.stack([thumb, finger1, finger2])

    reach = np.linalg.norm(targets - origin, axis=1)
    if np.any(reach > hand.reach_radius):
        raise InfeasiblePlanError("reach", f"tip {int(np.argmax(reach))} at {reach.max():.3f} m "
                                           f"exceeds reach {hand.reach_radius} m")
    for i in range(3):
        for j in range(i + 1, 3):
            if np.linalg.norm(targets[i] - targets[j]) < 2.0 * hand.tip_radius:
                raise InfeasiblePlanError("self-collision", f"tips {i} and {j} overlap")

    dirs = np.empty((3, 3))
    starts = np.empty((3, 3))
    for i, tgt in enumerate(targets):
        away = tgt - gpis_com
        norm = np.linalg.norm(away)
        away = away / norm if norm > 1e-12 else approach
        starts[i] = tgt + hand.finger_travel * away
        dirs[i] = -away
    return HandPlan(
        wrist_origin=origin,
        wrist_euler=np.asarray(query.wrist_euler, dtype=float),
        rotation=rot,
        tip_targets=targets,
        starts=starts,
        directions=dirs,
    )


@dataclass(frozen=True)
class ContactResult:
    """Per-finger contact (point, outward normal) or None, plus achieved tips.

    Achieved tips are the sensed contact points for fingers that touched and
    the full-travel endpoint (the commanded target) for fingers that missed.
    """

    contacts: tuple            # 3 entries: (point, normal) or None
    achieved_tips: np.ndarray  # (3, 3)

    @property
    def all_contact(self) -> bool:
        return all(c is not None for c in self.contacts)

    @property
    def flags(self):
        return tuple(c is not None for c in self.contacts)


def _rotate_by_angle(n, angle, rng):
    raw = rng.normal(size=3)
    axis = raw - (raw @ n) * n
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        return n
    axis /= norm
    out = np.cos(angle) * n + np.sin(angle) * np.cross(axis, n)
    return out / np.linalg.norm(out)


def close_fingers(mesh: TriMesh, plan: HandPlan, noise=(0.001, 0.01), seed=0) -> ContactResult:
    """March each fingertip along its closure ray up to the travel budget.

    First mesh intersection is the contact; the sensed contact point is the
    hit plus Gaussian position noise re-projected to the surface, and the
    sensed normal is the face normal (outward) rotated by Gaussian angular
    noise.  A miss reports the full-travel endpoint as the achieved tip.
    """
    sigma_c, sigma_n = noise
    travel = np.linalg.norm(plan.starts[0] - plan.tip_targets[0])
    contacts = []
    tips = np.empty((3, 3))
    for i in range(3):
        rng = np.random.default_rng([int(seed), 0xF1, i])
        hit = meshes.first_hit(mesh, plan.starts[i], plan.directions[i], max_t=travel)
        if hit is None:
            contacts.append(None)
            tips[i] = plan.starts[i] + travel * plan.directions[i]
            continue
        t, face = hit
        point = plan.starts[i] + t * plan.directions[i]
        normal = mesh.face_normals[face]
        if sigma_c > 0:
            point, face2 = meshes.closest_point(mesh, point + rng.normal(0.0, sigma_c, size=3))
            normal = mesh.face_normals[face2]
        if sigma_n > 0:
            normal = _rotate_by_angle(normal, rng.normal(0.0, sigma_n), rng)
        contacts.append((point, normal))
        tips[i] = point
    return ContactResult(contacts=tuple(contacts), achieved_tips=tips)


def oracle_grasp_check(mesh: TriMesh, tips, mu_true, delta=0.01, m=8, max_gap=0.02):
    """Ground-truth force-closure check replacing physical lift tests.

    Re-derives exact contacts by projecting the reported fingertip positions
    onto the true mesh (a tip farther than `max_gap` from the surface means
    the grasp cannot be replayed and fails).  Quality is evaluated with the
    true centre of mass and friction `mu_true`, with no sensing noise.

    Returns (force_closure, epsilon_true).
    """
    tips = np.atleast_2d(np.asarray(tips, dtype=float))
    com = meshes.mesh_centroid(mesh)
    contacts = []
    for tip in tips:
        point, face = meshes.closest_point(mesh, tip)
        if np.linalg.norm(point - tip) > max_gap:
            return False, 0.0
        contacts.append(Contact(c=point, n=-mesh.face_normals[face], mu=mu_true))
    eps = epsilon_quality(grasp_wrenches(contacts, com, m))
    return bool(eps > delta), float(eps)


@dataclass(frozen=True)
class World:
    """Ground-truth scene handed to the exploration loop."""

    mesh: TriMesh
    hand: VirtualHand
    contact_pos_noise: float = 0.001
    contact_normal_noise: float = 0.01
