"""Probabilistic implicit-surface model of a partially observed object.

A thin-plate GP over 3D space is trained on labeled points: surface points
from vision and touch carry 0, anchors outside the scene carry +1, and the
cloud centroid carries -1, so the zero level set of the posterior mean is
the estimated surface and stays closed and bounded inside the domain box.
Different sources carry different noise floors (touch is trusted more than
vision, anchors are near-hard constraints).

The model value is immutable: updates return a new GpisModel, queries are
pure, and grid evaluations chunk internally so memory stays bounded.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree
from skimage import measure

from . import gp
from .errors import (
    DegenerateShapeError,
    EmptySurfaceError,
    OutOfDomainError,
)
from .meshes import TriMesh

LABEL_SURFACE = 0.0
LABEL_OUTSIDE = 1.0
LABEL_INSIDE = -1.0

SOURCE_VISION = "vision"
SOURCE_TACTILE = "tactile"
SOURCE_BOUNDARY = "boundary"
SOURCE_CENTROID = "centroid"

DEFAULT_VISION_NOISE = 1e-4
DEFAULT_TACTILE_NOISE = 1e-5
DEFAULT_ANCHOR_NOISE = 1e-6
DEFAULT_MAX_CLOUD_POINTS = 800

# Points closer than this fraction of the domain diagonal to an existing
# stored point are dropped on update; repeated touches at one spot would
# otherwise drive the covariance towards singularity without adding shape
# information.
DEDUP_DIAG_FRACTION = 1.0 / 400.0

_LABELS = {
    SOURCE_VISION: LABEL_SURFACE,
    SOURCE_TACTILE: LABEL_SURFACE,
    SOURCE_BOUNDARY: LABEL_OUTSIDE,
    SOURCE_CENTROID: LABEL_INSIDE,
}


@dataclass(frozen=True)
class LabeledPoint:
    """One training point of the implicit surface."""

    position: np.ndarray
    label: float
    source: str
    noise_var: float

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        if self.source not in _LABELS:
            raise ValueError(f"unknown source {self.source!r}")
        if self.label != _LABELS[self.source]:
            raise ValueError(f"source {self.source!r} must carry label {_LABELS[self.source]}")
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")


def surface_point(position, source=SOURCE_TACTILE, noise_var=DEFAULT_TACTILE_NOISE):
    return LabeledPoint(position=position, label=LABEL_SURFACE, source=source, noise_var=noise_var)


@dataclass(frozen=True)
class Box:
    """Axis-aligned bounding domain."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float).reshape(3))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float).reshape(3))
        if np.any(self.hi <= self.lo):
            raise ValueError("degenerate domain: hi must exceed lo on every axis")

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, points, tol=1e-9) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return ((pts >= self.lo - tol) & (pts <= self.hi + tol)).all(axis=1)

    def clip(self, points) -> np.ndarray:
        return np.clip(np.asarray(points, dtype=float), self.lo, self.hi)

    def corners(self) -> np.ndarray:
        lo, hi = self.lo, self.hi
        return np.array(
            [[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])]
        )

    def face_centers(self) -> np.ndarray:
        c = self.center
        out = np.tile(c, (6, 1))
        for axis in range(3):
            out[2 * axis, axis] = self.lo[axis]
            out[2 * axis + 1, axis] = self.hi[axis]
        return out


def bounding_domain(cloud, inflate=0.2, mirror_along=None, mirror_slack=0.2,
                    floor_z=None) -> Box:
    """Domain box around a point cloud.

    `mirror_along` takes the camera viewing direction (camera forward,
    pointing into the scene): the cloud is then reflected through the plane
    of its deepest visible slice along that axis, so the box also covers the
    occluded side of the object under a front/back symmetry assumption.
    The reflection plane is pushed `mirror_slack` of the visible depth
    beyond the deepest sample because grazing silhouette points are never
    rendered exactly.  Every axis extent is inflated by `inflate` on each
    side afterwards (a minimum extent keeps flat clouds three-dimensional).

    `floor_z` encodes tabletop knowledge: the object cannot extend below the
    support plane, so the box bottom is clamped there (never above the
    lowest cloud point).
    """
    pts = np.atleast_2d(np.asarray(cloud, dtype=float))
    raw = pts
    if mirror_along is not None:
        d = np.asarray(mirror_along, dtype=float)
        d = d / np.linalg.norm(d)
        depth = pts @ d
        plane = depth.max() + mirror_slack * max(depth.max() - depth.min(), 1e-9)
        mirrored = pts + 2.0 * (plane - depth)[:, None] * d[None, :]
        pts = np.vstack([pts, mirrored])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    extent = np.maximum(hi - lo, 0.05 * max((hi - lo).max(), 1e-6))
    lo = lo - inflate * extent
    hi = hi + inflate * extent
    if floor_z is not None:
        lo[2] = min(max(lo[2], floor_z), raw[:, 2].min() - 1e-9)
    return Box(lo=lo, hi=hi)


@dataclass(frozen=True)
class GpisModel:
    """Implicit-surface GP plus its domain and labeled training points."""

    gp_model: gp.GpModel
    domain: Box
    points: tuple            # tuple of LabeledPoint
    dedup_radius: float

    @property
    def n_points(self) -> int:
        return len(self.points)

    def vision_points(self) -> np.ndarray:
        pts = [p.position for p in self.points if p.source == SOURCE_VISION]
        return np.array(pts) if pts else np.zeros((0, 3))

    def cloud_centroid(self) -> np.ndarray:
        for p in self.points:
            if p.source == SOURCE_CENTROID:
                return p.position
        raise ValueError("model has no centroid anchor")


@dataclass(frozen=True)
class MassEstimate:
    """Centre-of-mass estimate with an isotropic standard deviation."""

    p_com: np.ndarray
    sigma_com: float

    def __post_init__(self):
        object.__setattr__(self, "p_com", np.asarray(self.p_com, dtype=float).reshape(3))
        if self.sigma_com < 0:
            raise ValueError("sigma_com must be >= 0")


@dataclass(frozen=True)
class SurfaceEstimate:
    """Zero level set extracted on a regular grid, plus the field grids."""

    mesh: TriMesh
    grid_resolution: int
    mean_field: np.ndarray
    variance_field: np.ndarray


def _fit_from_points(points, domain: Box) -> gp.GpModel:
    x = np.array([p.position for p in points])
    y = np.array([p.label for p in points])
    noise = np.array([p.noise_var for p in points])
    kernel = gp.thin_plate_kernel(max_range=domain.diagonal)
    return gp.gp_fit(x, y, noise, kernel)


def voxel_downsample(points: np.ndarray, max_points: int) -> np.ndarray:
    """Thin a cloud to at most max_points by keeping one point per voxel,
    growing the voxel until the budget is met."""
    pts = np.asarray(points, dtype=float)
    if len(pts) <= max_points:
        return pts
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    extent = max((hi - lo).max(), 1e-9)
    # clouds are surface samples: start near the full resolution and grow the
    # voxel until the budget is met, so survivors stay as dense as allowed
    cell = extent / 128.0
    for _ in range(80):
        keys = np.floor((pts - lo) / cell).astype(np.int64)
        _, first = np.unique(keys, axis=0, return_index=True)
        if len(first) <= max_points:
            return pts[np.sort(first)]
        cell *= 1.3
    return pts[np.sort(first)][:max_points]


def gpis_init(
    cloud,
    domain: Box,
    vision_noise=DEFAULT_VISION_NOISE,
    anchor_noise=DEFAULT_ANCHOR_NOISE,
    max_cloud_points=DEFAULT_MAX_CLOUD_POINTS,
) -> GpisModel:
    """Build the initial model from a vision cloud.

    Adds the (decimated) cloud as surface points, 8 corner + 6 face-center
    anchors labeled outside, and the cloud centroid labeled inside.  The
    thin-plate range is the domain diagonal, so every in-domain pair is
    admissible.
    """
    cloud = np.atleast_2d(np.asarray(cloud, dtype=float))
    if cloud.shape[0] < 10:
        raise ValueError(f"need at least 10 cloud points, got {cloud.shape[0]}")
    if not domain.contains(cloud).all():
        raise OutOfDomainError("cloud extends outside the domain box")
    cloud = voxel_downsample(cloud, max_cloud_points)

    points = [
        LabeledPoint(p, LABEL_SURFACE, SOURCE_VISION, vision_noise) for p in cloud
    ]
    for corner in domain.corners():
        points.append(LabeledPoint(corner, LABEL_OUTSIDE, SOURCE_BOUNDARY, anchor_noise))
    for fc in domain.face_centers():
        points.append(LabeledPoint(fc, LABEL_OUTSIDE, SOURCE_BOUNDARY, anchor_noise))
    points.append(LabeledPoint(cloud.mean(axis=0), LABEL_INSIDE, SOURCE_CENTROID, anchor_noise))

    points = tuple(points)
    return GpisModel(
        gp_model=_fit_from_points(points, domain),
        domain=domain,
        points=points,
        dedup_radius=domain.diagonal * DEDUP_DIAG_FRACTION,
    )


def gpis_add_observations(model: GpisModel, new_points) -> GpisModel:
    """Condition the model on additional labeled points.

    Points outside the domain raise; points within `dedup_radius` of an
    existing stored point are silently dropped (an essentially repeated
    touch adds no shape information but can make the covariance singular).
    Returns the unchanged model when nothing survives the filter.
    """
    if not new_points:
        return model
    positions = np.array([np.asarray(p.position, dtype=float) for p in new_points])
    inside = model.domain.contains(positions)
    if not inside.all():
        bad = positions[~inside][0]
        raise OutOfDomainError(f"observation at {bad} is outside the domain")

    existing = np.array([p.position for p in model.points])
    tree = cKDTree(existing)
    kept = []
    for p in new_points:
        d, _ = tree.query(np.asarray(p.position, dtype=float))
        if d > model.dedup_radius and all(
            np.linalg.norm(q.position - p.position) > model.dedup_radius for q in kept
        ):
            kept.append(p)
    if not kept:
        return model
    points = model.points + tuple(kept)
    return replace(model, gp_model=_fit_from_points(points, model.domain), points=points)


def gpis_query(model: GpisModel, x) -> gp.Prediction:
    """Posterior mean and variance of the implicit function at one point."""
    x = np.asarray(x, dtype=float).reshape(3)
    if not model.domain.contains(x[None, :])[0]:
        raise OutOfDomainError(f"query {x} outside domain")
    return gp.gp_predict(model.gp_model, x)


def gpis_query_many(model: GpisModel, xq, chunk=4096):
    """Vectorized posterior at many in-domain points."""
    xq = np.atleast_2d(np.asarray(xq, dtype=float))
    if not model.domain.contains(xq).all():
        raise OutOfDomainError("some query points are outside the domain")
    means = np.empty(len(xq))
    variances = np.empty(len(xq))
    for i in range(0, len(xq), chunk):
        m, v = gp.gp_predict_many(model.gp_model, xq[i : i + chunk])
        means[i : i + chunk] = m
        variances[i : i + chunk] = v
    return means, variances


def _grid_nodes(domain: Box, resolution: int):
    axes = [np.linspace(domain.lo[i], domain.hi[i], resolution) for i in range(3)]
    grid = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grid], axis=1)
    spacing = (domain.hi - domain.lo) / (resolution - 1)
    return pts, spacing


def _grid_means(model: GpisModel, pts, chunk=16384):
    """Mean field only; skips the variance solve for speed."""
    out = np.empty(len(pts))
    for i in range(0, len(pts), chunk):
        block = pts[i : i + chunk]
        ks = gp._kernel_matrix(model.gp_model.kernel, model.gp_model.x, block)
        out[i : i + chunk] = ks.T @ model.gp_model.alpha
    return out


def estimate_com(model: GpisModel, grid_resolution=32, var_cell_cap=None) -> MassEstimate:
    """Centre of mass from the sign of the posterior mean on a grid.

    The estimate is the centroid of grid cells whose mean is negative
    (inside), with standard deviation the RMS predictive uncertainty over
    those cells, floored at one grid spacing.  `var_cell_cap` bounds how
    many interior cells enter the variance average (evenly strided subset)
    to keep per-iteration updates cheap; None averages all of them.
    """
    if grid_resolution < 8:
        raise ValueError("grid_resolution must be >= 8")
    pts, spacing = _grid_nodes(model.domain, grid_resolution)
    means = _grid_means(model, pts)
    interior = pts[means < 0.0]
    if len(interior) == 0:
        raise DegenerateShapeError("no interior cells: the model has no negative region")
    p_com = interior.mean(axis=0)
    sel = interior
    if var_cell_cap is not None and len(sel) > var_cell_cap:
        stride = int(np.ceil(len(sel) / var_cell_cap))
        sel = sel[::stride]
    _, variances = gp.gp_predict_many(model.gp_model, sel)
    sigma = float(np.sqrt(variances.mean()))
    return MassEstimate(p_com=p_com, sigma_com=max(sigma, float(spacing.max())))


def mean_variance(model: GpisModel, grid_resolution=32) -> float:
    """Mean predictive variance over the full domain grid."""
    if grid_resolution < 16:
        raise ValueError("grid_resolution must be >= 16")
    pts, _ = _grid_nodes(model.domain, grid_resolution)
    _, variances = gpis_query_many(model, pts)
    return float(variances.mean())


def extract_surface(model: GpisModel, grid_resolution=48, compute_variance=True) -> SurfaceEstimate:
    """Marching-cubes mesh of the zero level set over the domain grid.

    Also returns the mean field and (optionally) the variance field on the
    same grid.  Raises EmptySurfaceError when the mean never changes sign.
    """
    if grid_resolution < 16:
        raise ValueError("grid_resolution must be >= 16")
    pts, spacing = _grid_nodes(model.domain, grid_resolution)
    means = _grid_means(model, pts)
    shape = (grid_resolution,) * 3
    mean_field = means.reshape(shape)
    if means.min() >= 0.0 or means.max() <= 0.0:
        raise EmptySurfaceError("implicit field has no zero crossing in the domain")
    verts, faces, _, _ = measure.marching_cubes(mean_field, level=0.0, spacing=tuple(spacing))
    mesh = TriMesh(verts + model.domain.lo, faces)
    if compute_variance:
        _, variances = gpis_query_many(model, pts)
        variance_field = variances.reshape(shape)
    else:
        variance_field = np.full(shape, np.nan)
    return SurfaceEstimate(
        mesh=mesh,
        grid_resolution=grid_resolution,
        mean_field=mean_field,
        variance_field=variance_field,
    )


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two surface point samples."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("hausdorff needs non-empty samples")
    d_ab = cKDTree(b).query(a)[0].max()
    d_ba = cKDTree(a).query(b)[0].max()
    return float(max(d_ab, d_ba))


def read_xyz(path) -> np.ndarray:
    """Read an ASCII point cloud, one 'x y z' triple per line."""
    pts = np.loadtxt(path, ndmin=2)
    if pts.shape[1] < 3:
        raise ValueError(f"{path}: expected 3 columns")
    return pts[:, :3]


def write_xyz(points, path):
    np.savetxt(path, np.atleast_2d(points), fmt="%.9g")
