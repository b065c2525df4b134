"""Triangle meshes: OBJ files, builtin test objects, and geometric queries.

Ground-truth objects must be watertight with consistent outward winding;
`load_mesh` enforces both and flips inward-wound meshes automatically via
the signed volume.  Queries (ray casting, closest point, containment) are
vectorized over triangles, which is plenty for the few-thousand-triangle
meshes used here.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError


@dataclass
class TriMesh:
    """Indexed triangle mesh with precomputed outward face normals."""

    vertices: np.ndarray          # (V, 3)
    faces: np.ndarray             # (F, 3) int
    face_normals: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.faces = np.asarray(self.faces, dtype=np.int64)
        if self.face_normals is None:
            self.face_normals = _face_normals(self.vertices, self.faces)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def translated(self, offset):
        return TriMesh(self.vertices + np.asarray(offset, float), self.faces.copy())


def _face_normals(vertices, faces):
    a, b, c = (vertices[faces[:, i]] for i in range(3))
    n = np.cross(b - a, c - a)
    lens = np.linalg.norm(n, axis=1, keepdims=True)
    lens[lens == 0] = 1.0
    return n / lens


def mesh_volume(mesh: TriMesh) -> float:
    """Signed volume via the divergence theorem (positive for outward winding)."""
    a, b, c = (mesh.vertices[mesh.faces[:, i]] for i in range(3))
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def mesh_centroid(mesh: TriMesh) -> np.ndarray:
    """Volume centroid assuming uniform density."""
    a, b, c = (mesh.vertices[mesh.faces[:, i]] for i in range(3))
    det = np.einsum("ij,ij->i", a, np.cross(b, c))
    centers = (a + b + c) / 4.0          # tetrahedron (0, a, b, c) centroid
    vol = det.sum() / 6.0
    if abs(vol) < 1e-15:
        raise MeshError("mesh has zero volume")
    return (det[:, None] * centers).sum(axis=0) / (6.0 * vol)


def check_watertight(mesh: TriMesh):
    """Every undirected edge must appear in exactly two faces, once per direction."""
    edges = {}
    for tri in mesh.faces:
        for i in range(3):
            e = (int(tri[i]), int(tri[(i + 1) % 3]))
            key = (min(e), max(e))
            edges.setdefault(key, []).append(e[0] < e[1])
    for key, dirs in edges.items():
        if len(dirs) != 2:
            raise MeshError(f"edge {key} appears in {len(dirs)} faces; mesh is not watertight")
        if dirs[0] == dirs[1]:
            raise MeshError(f"edge {key} wound twice in the same direction; inconsistent winding")


def load_mesh(path) -> TriMesh:
    """Read an ASCII OBJ, validate watertightness, orient normals outward.

    Faces with more than three vertices are fan-triangulated.  Raises
    MeshError on parse problems, open meshes, or zero volume.
    """
    vertices, faces = [], []
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append([float(p) for p in parts[1:4]])
                except ValueError as exc:
                    raise MeshError(f"{path}:{lineno}: bad vertex {line!r}") from exc
            elif parts[0] == "f":
                try:
                    idx = [int(p.split("/")[0]) for p in parts[1:]]
                except ValueError as exc:
                    raise MeshError(f"{path}:{lineno}: bad face {line!r}") from exc
                if len(idx) < 3:
                    raise MeshError(f"{path}:{lineno}: face needs >= 3 vertices")
                idx = [i - 1 if i > 0 else len(vertices) + i for i in idx]
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
    if not vertices or not faces:
        raise MeshError(f"{path}: no geometry found")
    mesh = TriMesh(np.array(vertices), np.array(faces))
    if np.any(mesh.faces < 0) or np.any(mesh.faces >= mesh.n_vertices):
        raise MeshError(f"{path}: face index out of range")
    check_watertight(mesh)
    vol = mesh_volume(mesh)
    if abs(vol) < 1e-12:
        raise MeshError(f"{path}: mesh volume is zero")
    if vol < 0:
        mesh = TriMesh(mesh.vertices, mesh.faces[:, ::-1])
    return mesh


def save_mesh(mesh: TriMesh, path):
    """Write vertices and faces as ASCII OBJ (v/f records, 1-based)."""
    with open(path, "w") as f:
        for v in mesh.vertices:
            f.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for tri in mesh.faces:
            f.write(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}\n")


# ---------------------------------------------------------------------------
# Builtin objects (desk-scale stand-ins for household benchmark items)
# ---------------------------------------------------------------------------

def make_box(sx, sy, sz) -> TriMesh:
    hx, hy, hz = sx / 2.0, sy / 2.0, sz / 2.0
    v = np.array(
        [
            [-hx, -hy, -hz], [hx, -hy, -hz], [hx, hy, -hz], [-hx, hy, -hz],
            [-hx, -hy, hz], [hx, -hy, hz], [hx, hy, hz], [-hx, hy, hz],
        ]
    )
    f = np.array(
        [
            [0, 2, 1], [0, 3, 2],      # bottom (-z)
            [4, 5, 6], [4, 6, 7],      # top (+z)
            [0, 1, 5], [0, 5, 4],      # -y
            [2, 3, 7], [2, 7, 6],      # +y
            [1, 2, 6], [1, 6, 5],      # +x
            [3, 0, 4], [3, 4, 7],      # -x
        ]
    )
    return TriMesh(v, f)


def make_icosphere(radius=0.1, subdivisions=3) -> TriMesh:
    """Unit icosahedron subdivided `subdivisions` times, scaled to radius."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    verts = [tuple(p) for p in v]
    for _ in range(subdivisions):
        cache = {}
        new_f = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                p = np.array(verts[i]) + np.array(verts[j])
                p /= np.linalg.norm(p)
                verts.append(tuple(p))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_f += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = new_f
    return TriMesh(radius * np.array(verts), np.array(f))


def make_cylinder(radius=0.05, height=0.22, segments=48) -> TriMesh:
    ang = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    bottom = np.hstack([ring, np.full((segments, 1), -height / 2.0)])
    top = np.hstack([ring, np.full((segments, 1), height / 2.0)])
    centers = np.array([[0.0, 0.0, -height / 2.0], [0.0, 0.0, height / 2.0]])
    v = np.vstack([bottom, top, centers])
    cb, ct = 2 * segments, 2 * segments + 1
    f = []
    for i in range(segments):
        j = (i + 1) % segments
        f += [[i, j, segments + j], [i, segments + j, segments + i]]   # side
        f += [[cb, j, i], [ct, segments + i, segments + j]]            # caps
    return TriMesh(v, np.array(f))


def make_lshape(leg=0.14, width=0.06, thickness=0.05) -> TriMesh:
    """L-shaped prism: an L-polygon extruded along z, centroid at the origin."""
    outline = np.array(
        [
            [0.0, 0.0], [leg, 0.0], [leg, width],
            [width, width], [width, leg], [0.0, leg],
        ]
    )
    n = len(outline)
    hz = thickness / 2.0
    v = np.vstack(
        [np.hstack([outline, np.full((n, 1), -hz)]), np.hstack([outline, np.full((n, 1), hz)])]
    )
    # caps triangulated by ear-clipping the (convex-enough) L by fan from vertex 3
    cap = [[0, 1, 2], [0, 2, 3], [0, 3, 5], [3, 4, 5]]
    f = [[a, c, b] for a, b, c in cap]                      # bottom, wound -z
    f += [[a + n, b + n, c + n] for a, b, c in cap]         # top, wound +z
    for i in range(n):
        j = (i + 1) % n
        f += [[i, j, n + j], [i, n + j, n + i]]
    mesh = TriMesh(v, np.array(f))
    if mesh_volume(mesh) < 0:
        mesh = TriMesh(mesh.vertices, mesh.faces[:, ::-1])
    return mesh.translated(-mesh_centroid(mesh))


BUILTIN_OBJECTS = ("sphere", "box", "thinbox", "cylinder", "lshape")


def builtin_mesh(name: str, scale: float = 1.0) -> TriMesh:
    """Desk-scale test objects: sphere r=0.10, box, book-like thin box,
    chips-can-like cylinder, and an L-shaped compound."""
    if name == "sphere":
        mesh = make_icosphere(radius=0.10, subdivisions=3)
    elif name == "box":
        mesh = make_box(0.18, 0.13, 0.11)
    elif name == "thinbox":
        mesh = make_box(0.22, 0.16, 0.05)
    elif name == "cylinder":
        mesh = make_cylinder(radius=0.055, height=0.24)
    elif name == "lshape":
        mesh = make_lshape()
    else:
        raise ValueError(f"unknown builtin object {name!r}; choose from {BUILTIN_OBJECTS}")
    if scale != 1.0:
        mesh = TriMesh(mesh.vertices * scale, mesh.faces)
    return mesh


# ---------------------------------------------------------------------------
# Geometric queries
# ---------------------------------------------------------------------------

_RAY_EPS = 1e-12


def ray_hits(mesh: TriMesh, origin, direction):
    """Parametric distances of all ray/triangle intersections (Moller-Trumbore).

    Returns (t, face_index) arrays sorted by t, with t >= 0 only.
    """
    origin = np.asarray(origin, float)
    d = np.asarray(direction, float)
    a = mesh.vertices[mesh.faces[:, 0]]
    e1 = mesh.vertices[mesh.faces[:, 1]] - a
    e2 = mesh.vertices[mesh.faces[:, 2]] - a
    pvec = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > _RAY_EPS
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origin - a
    u = np.einsum("ij,ij->i", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    v = (qvec @ d) * inv
    t = np.einsum("ij,ij->i", e2, qvec) * inv
    hit = ok & (u >= -1e-12) & (v >= -1e-12) & (u + v <= 1 + 1e-12) & (t >= 1e-9)
    ts = t[hit]
    faces = np.nonzero(hit)[0]
    order = np.argsort(ts)
    return ts[order], faces[order]


def first_hit(mesh: TriMesh, origin, direction, max_t=np.inf):
    """Nearest intersection along the ray, or None."""
    ts, faces = ray_hits(mesh, origin, direction)
    if ts.size == 0 or ts[0] > max_t:
        return None
    return float(ts[0]), int(faces[0])


def contains(mesh: TriMesh, point) -> bool:
    """Point-in-mesh by ray-crossing parity (watertight meshes only)."""
    ts, _ = ray_hits(mesh, point, np.array([0.577350269, 0.577350269, 0.577350269]))
    return len(ts) % 2 == 1


def closest_point(mesh: TriMesh, point):
    """Closest point on the mesh surface and its face index."""
    p = np.asarray(point, float)
    a = mesh.vertices[mesh.faces[:, 0]]
    b = mesh.vertices[mesh.faces[:, 1]]
    c = mesh.vertices[mesh.faces[:, 2]]
    proj = _closest_on_triangles(p, a, b, c)
    d2 = np.einsum("ij,ij->i", proj - p, proj - p)
    i = int(np.argmin(d2))
    return proj[i], i


def _closest_on_triangles(p, a, b, c):
    """Closest point to p on each triangle (a, b, c); vectorized textbook case split."""
    ab = b - a
    ac = c - a
    ap = p[None, :] - a
    bp = p[None, :] - b
    cp = p[None, :] - c
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    out = np.empty_like(a)
    done = np.zeros(len(a), dtype=bool)

    # vertex regions
    m = (d1 <= 0) & (d2 <= 0)
    out[m] = a[m]
    done |= m
    m = (~done) & (d3 >= 0) & (d4 <= d3)
    out[m] = b[m]
    done |= m
    m = (~done) & (d6 >= 0) & (d5 <= d6)
    out[m] = c[m]
    done |= m

    # edge regions
    vc = d1 * d4 - d3 * d2
    m = (~done) & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    t = np.where(np.abs(d1 - d3) > 1e-300, d1 / np.where(d1 - d3 == 0, 1, d1 - d3), 0.0)
    out[m] = a[m] + t[m, None] * ab[m]
    done |= m
    vb = d5 * d2 - d1 * d6
    m = (~done) & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    t = np.where(np.abs(d2 - d6) > 1e-300, d2 / np.where(d2 - d6 == 0, 1, d2 - d6), 0.0)
    out[m] = a[m] + t[m, None] * ac[m]
    done |= m
    va = d3 * d6 - d5 * d4
    m = (~done) & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    denom = (d4 - d3) + (d5 - d6)
    t = np.where(np.abs(denom) > 1e-300, (d4 - d3) / np.where(denom == 0, 1, denom), 0.0)
    out[m] = b[m] + t[m, None] * (c[m] - b[m])
    done |= m

    # interior
    m = ~done
    denom = va + vb + vc
    denom = np.where(denom == 0, 1.0, denom)
    v = vb / denom
    w = vc / denom
    out[m] = a[m] + v[m, None] * ab[m] + w[m, None] * ac[m]
    return out


def sample_surface(mesh: TriMesh, n: int, rng) -> np.ndarray:
    """n points drawn uniformly by area over the surface."""
    a = mesh.vertices[mesh.faces[:, 0]]
    b = mesh.vertices[mesh.faces[:, 1]]
    c = mesh.vertices[mesh.faces[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    probs = areas / areas.sum()
    idx = rng.choice(len(areas), size=n, p=probs)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    return a[idx] + u[:, None] * (b[idx] - a[idx]) + v[:, None] * (c[idx] - a[idx])
