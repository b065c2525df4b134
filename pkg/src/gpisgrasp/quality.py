"""Grasp stability: friction cones, wrench space, and probabilistic force closure.

The deterministic metric is the classic smallest-wrench-to-break measure:
the radius of the largest origin-centered ball inside the convex hull of
the contact wrench set, with torques scaled by the inverse of the largest
lever arm so the value is invariant to object size.  The probabilistic
wrapper re-evaluates that metric under joint Gaussian perturbations of
contact normals, contact positions, friction, and centre of mass, and
reports the fraction of samples that stay above a threshold.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import NumericalError

DEFAULT_CONE_EDGES = 8
DEFAULT_DELTA = 0.01

_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Contact:
    """Hard point contact: position, unit inward normal, friction coefficient."""

    c: np.ndarray
    n: np.ndarray
    mu: float

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(3)
        n = np.asarray(self.n, dtype=float).reshape(3)
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise ValueError("contact normal must be nonzero")
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"contact normal has norm {norm:.6g}, expected 1")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "n", n / norm)
        if self.mu < 0:
            raise ValueError("friction coefficient must be >= 0")


@dataclass(frozen=True)
class UncertaintyModel:
    """Gaussian uncertainty of the four grasp parameters plus sampling knobs.

    sigma_n2 : variance of the normal's angular deviation (rad^2)
    sigma_c2 : per-axis variance of the contact position (m^2)
    sigma_mu2 : variance of the friction coefficient
    mu_hat : mean friction coefficient
    n_samples : joint Monte-Carlo draws per evaluation
    delta : force-closure threshold on the wrench-space metric
    cone_edges : friction-cone discretization
    """

    sigma_n2: float = np.pi / 8.0
    sigma_c2: float = 0.0025
    sigma_mu2: float = 0.1250
    mu_hat: float = 1.5
    n_samples: int = 10
    delta: float = DEFAULT_DELTA
    cone_edges: int = DEFAULT_CONE_EDGES

    def __post_init__(self):
        if min(self.sigma_n2, self.sigma_c2, self.sigma_mu2) < 0:
            raise ValueError("variances must be >= 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.cone_edges < 3:
            raise ValueError("cone_edges must be >= 3")


@dataclass(frozen=True)
class WrenchSet:
    """Unit-force contact wrenches [f; torque_scale * (c - com) x f]."""

    wrenches: np.ndarray   # (k, 6)
    torque_scale: float    # 1 / max lever arm


def _cross3(a, b):
    """Cross product for (..., 3) arrays without np.cross dispatch overhead."""
    out = np.empty(np.broadcast(a, b).shape)
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def _tangent_basis(n: np.ndarray, ref=None):
    """Orthonormal pair spanning the plane orthogonal to n.

    When `ref` is given and not parallel to n, the first tangent is ref's
    projection into that plane; otherwise a deterministic component-based
    choice is used.
    """
    if ref is not None:
        t1 = ref - (ref @ n) * n
        norm = np.linalg.norm(t1)
        if norm > 1e-9 * max(np.linalg.norm(ref), 1e-30):
            t1 = t1 / norm
            return t1, _cross3(n, t1)
    axis = np.zeros(3)
    axis[np.argmin(np.abs(n))] = 1.0
    t1 = _cross3(n, axis)
    t1 /= np.linalg.norm(t1)
    return t1, _cross3(n, t1)


def cone_edges(contact: Contact, m: int = DEFAULT_CONE_EDGES, ref=None) -> np.ndarray:
    """Unit force directions spanning the friction cone of half-angle atan(mu).

    Returns an (m, 3) array of directions at equal azimuths around the
    contact normal, with the azimuth origin anchored at `ref` when given.
    With mu = 0 the cone collapses and every edge is the normal itself.
    """
    if m < 3:
        raise ValueError("need at least 3 cone edges")
    n = contact.n
    half = np.arctan(contact.mu)
    t1, t2 = _tangent_basis(n, ref)
    az = 2.0 * np.pi * np.arange(m) / m
    edges = (
        np.cos(half) * n[None, :]
        + np.sin(half) * (np.cos(az)[:, None] * t1[None, :] + np.sin(az)[:, None] * t2[None, :])
    )
    return edges / np.linalg.norm(edges, axis=1, keepdims=True)


def _azimuth_anchor(i, contacts, p_com):
    """Scene-derived azimuth reference for contact i.

    Built from index-weighted directions to the other contacts (falling back
    to the centre of mass), so a joint rotation of contacts, normals, and
    p_com rotates every discretized cone rigidly with the scene and the
    wrench-space metric is exactly rotation-invariant even at small m.
    """
    ci = contacts[i].c
    ref = np.zeros(3)
    for j, ct in enumerate(contacts):
        if j != i:
            ref += (2.0**j) * (ct.c - ci)
    if np.linalg.norm(ref) < 1e-12:
        ref = p_com - ci
    return ref if np.linalg.norm(ref) > 1e-12 else None


def _edges_raw(n, mu, m, ref):
    half = np.arctan(mu)
    t1, t2 = _tangent_basis(n, ref)
    az = 2.0 * np.pi * np.arange(m) / m
    edges = (
        np.cos(half) * n[None, :]
        + np.sin(half) * (np.cos(az)[:, None] * t1[None, :] + np.sin(az)[:, None] * t2[None, :])
    )
    return edges / np.linalg.norm(edges, axis=1, keepdims=True)


def _anchor_raw(i, positions, p_com):
    ci = positions[i]
    ref = np.zeros(3)
    for j in range(len(positions)):
        if j != i:
            ref += (2.0**j) * (positions[j] - ci)
    if np.linalg.norm(ref) < 1e-12:
        ref = p_com - ci
    return ref if np.linalg.norm(ref) > 1e-12 else None


def _wrenches_raw(positions, normals, mu, p_com, m) -> WrenchSet:
    """Wrench set from bare arrays; the validated Contact path wraps this."""
    arms = np.linalg.norm(positions - p_com, axis=1)
    rho_max = arms.max()
    scale = 1.0 / rho_max if rho_max > 0 else 1.0
    rows = []
    for i in range(len(positions)):
        f = _edges_raw(normals[i], mu[i], m, _anchor_raw(i, positions, p_com))
        tau = scale * _cross3((positions[i] - p_com)[None, :], f)
        rows.append(np.hstack([f, tau]))
    return WrenchSet(wrenches=np.vstack(rows), torque_scale=scale)


def grasp_wrenches(contacts, p_com, m: int = DEFAULT_CONE_EDGES) -> WrenchSet:
    """Wrench set of all cone edges of all contacts about the centre of mass."""
    if len(contacts) == 0:
        raise ValueError("need at least one contact")
    p_com = np.asarray(p_com, dtype=float).reshape(3)
    positions = np.array([ct.c for ct in contacts])
    normals = np.array([ct.n for ct in contacts])
    mus = np.array([ct.mu for ct in contacts])
    return _wrenches_raw(positions, normals, mus, p_com, m)


def epsilon_quality(ws: WrenchSet) -> float:
    """Radius of the largest origin-centered ball inside the wrench-set hull.

    Returns 0 whenever the origin is not strictly interior, including every
    degenerate case: fewer than 7 wrenches, a wrench set that does not span
    6 dimensions, or a hull the origin sits on or outside of.
    """
    w = np.asarray(ws.wrenches, dtype=float)
    if not np.isfinite(w).all():
        raise NumericalError("wrench set contains non-finite entries")
    if w.shape[0] < 7:
        return 0.0
    if np.linalg.matrix_rank(w - w[0], tol=1e-9) < 6:
        return 0.0
    try:
        hull = ConvexHull(w)
    except QhullError:
        try:
            hull = ConvexHull(w, qhull_options="QJ")
        except QhullError:
            return 0.0
    # qhull facets: normal . x + offset <= 0 inside, normals unit length
    offsets = hull.equations[:, -1]
    eps = -offsets.max()
    return float(eps) if eps > 0.0 else 0.0


def _perturb_normal(n: np.ndarray, sigma_n: float, rng) -> np.ndarray:
    """Rotate n by an angle ~ N(0, sigma_n^2) about a random orthogonal axis."""
    if sigma_n == 0.0:
        return n
    angle = rng.normal(0.0, sigma_n)
    raw = rng.normal(size=3)
    axis = raw - (raw @ n) * n
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        t1, _ = _tangent_basis(n)
        axis = t1
    else:
        axis = axis / norm
    # Rodrigues rotation of n about axis (axis orthogonal to n)
    out = np.cos(angle) * n + np.sin(angle) * _cross3(axis, n)
    return out / np.linalg.norm(out)


def _sample_friction(mu_hat: float, sigma_mu: float, rng) -> float:
    """Truncated-at-zero Gaussian via rejection, with a clamped fallback."""
    if sigma_mu == 0.0:
        return max(mu_hat, 0.0)
    for _ in range(100):
        mu = rng.normal(mu_hat, sigma_mu)
        if mu >= 0.0:
            return mu
    return 0.0


def pfc(contacts_hat, unc: UncertaintyModel, com, seed) -> float:
    """Probability of force closure under the four-way uncertainty model.

    Parameters
    ----------
    contacts_hat : sequence of Contact
        Mean contact estimates (positions and inward normals); the friction
        of each sample is drawn from the uncertainty model, not taken from
        the contacts.
    unc : UncertaintyModel
    com : object with `p_com` (3,) and `sigma_com` (scalar std, meters)
    seed : int
        Sample i uses an RNG stream keyed by (seed, i), so evaluations are
        reproducible and order-independent.

    Returns
    -------
    float in [0, 1]: fraction of joint samples whose wrench-space quality
    exceeds `unc.delta`.  An empty contact list returns 0 (callers encode
    no-contact grasps upstream, but 0 is also the only consistent value).
    """
    if len(contacts_hat) == 0:
        return 0.0
    p_hat = np.asarray(com.p_com, dtype=float).reshape(3)
    sigma_com = float(com.sigma_com)
    sigma_n = np.sqrt(unc.sigma_n2)
    sigma_c = np.sqrt(unc.sigma_c2)
    sigma_mu = np.sqrt(unc.sigma_mu2)

    c_hat = np.array([ct.c for ct in contacts_hat])
    n_hat = np.array([ct.n for ct in contacts_hat])
    k = len(contacts_hat)
    hits = 0
    for i in range(unc.n_samples):
        rng = np.random.default_rng([int(seed), i])
        normals = np.array([_perturb_normal(n_hat[j], sigma_n, rng) for j in range(k)])
        positions = c_hat + rng.normal(0.0, sigma_c, size=(k, 3))
        mu = _sample_friction(unc.mu_hat, sigma_mu, rng)
        p_com = p_hat + rng.normal(0.0, sigma_com, size=3)
        ws = _wrenches_raw(positions, normals, np.full(k, mu), p_com, unc.cone_edges)
        if epsilon_quality(ws) > unc.delta:
            hits += 1
    return hits / unc.n_samples


def contacts_to_text(contacts) -> str:
    """One 'cx cy cz nx ny nz mu' line per contact (debug dumps)."""
    lines = []
    for ct in contacts:
        vals = np.concatenate([ct.c, ct.n, [ct.mu]])
        lines.append(" ".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def contacts_from_text(text: str):
    contacts = []
    for line in text.strip().splitlines():
        vals = [float(tok) for tok in line.split()]
        if len(vals) != 7:
            raise ValueError(f"expected 7 fields per contact line, got {len(vals)}")
        contacts.append(Contact(c=np.array(vals[:3]), n=np.array(vals[3:6]), mu=vals[6]))
    return contacts
