"""Tactile exploration loop: surrogate-guided grasp search over a 12D query space.

Each iteration proposes a grasp query (two free fingertip positions, a 2D
plane position for the coupled fingertip, three wrist angles, one approach
offset), executes it in the virtual world, scores the outcome as

    y = lambda * p_fc - sum_i mean_is(tip_i)^2

(reward stable grasps, penalize fingertips far from the estimated surface),
then conditions both the shape model (on new contacts) and the surrogate
(on the achieved-tip query and y).  A misses-anything iteration scores
p_fc = 0 with tips from the forward model, exactly as an unstable grasp.

The whole loop is a pure function of (world, initial model, config): every
random draw comes from streams keyed on (config.seed, iteration, purpose),
so identical configurations reproduce identical logs.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.transform import Rotation
from scipy.special import ndtr

from . import gp, gpis as gpis_mod, meshes, quality, world as world_mod
from .errors import InfeasiblePlanError, PriorConstructionError
from .gpis import GpisModel, MassEstimate
from .quality import UncertaintyModel

QUERY_DIM = 12

# rng stream tags
_TAG_SUGGEST = 3
_TAG_CONTACT = 1
_TAG_PFC = 2
_TAG_BASELINE = 4
_TAG_PRIOR = 5
_TAG_METRICS = 6


def _subseed(*parts) -> int:
    entropy = [int(p) & 0xFFFFFFFF for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


@dataclass(frozen=True)
class GraspQuery:
    """One point of the 12-dimensional decision space (world units)."""

    thumb: np.ndarray          # (3,)
    finger1: np.ndarray        # (3,)
    finger2_uv: np.ndarray     # (2,) knuckle-plane coordinates
    wrist_euler: np.ndarray    # (3,) ZYX angles
    approach_offset: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.thumb, self.finger1, self.finger2_uv, self.wrist_euler, [self.approach_offset]]
        )

    @staticmethod
    def from_vector(v) -> "GraspQuery":
        v = np.asarray(v, dtype=float).reshape(QUERY_DIM)
        return GraspQuery(
            thumb=v[0:3], finger1=v[3:6], finger2_uv=v[6:8], wrist_euler=v[8:11],
            approach_offset=float(v[11]),
        )


@dataclass(frozen=True)
class QuerySpace:
    """Axis-aligned query domain and its map to the unit hypercube.

    Fingertip coordinates range over the shape model's domain box, the
    coupled fingertip over its reachable plane square, wrist angles over
    (-pi, pi], and the approach offset over `offset_range`.
    """

    tip_box: gpis_mod.Box
    uv_half: float
    offset_range: tuple = (-0.05, 0.05)

    def _bounds(self):
        lo = np.concatenate(
            [
                self.tip_box.lo, self.tip_box.lo,
                [-self.uv_half, -self.uv_half],
                [-np.pi, -np.pi, -np.pi],
                [self.offset_range[0]],
            ]
        )
        hi = np.concatenate(
            [
                self.tip_box.hi, self.tip_box.hi,
                [self.uv_half, self.uv_half],
                [np.pi, np.pi, np.pi],
                [self.offset_range[1]],
            ]
        )
        return lo, hi

    def normalize(self, query: GraspQuery) -> np.ndarray:
        lo, hi = self._bounds()
        return np.clip((query.as_vector() - lo) / (hi - lo), 0.0, 1.0)

    def denormalize(self, u) -> GraspQuery:
        lo, hi = self._bounds()
        u = np.clip(np.asarray(u, dtype=float).reshape(QUERY_DIM), 0.0, 1.0)
        return GraspQuery.from_vector(lo + u * (hi - lo))

    def uniform(self, rng, n: int) -> np.ndarray:
        return rng.random((n, QUERY_DIM))


@dataclass(frozen=True)
class Observation:
    """Everything recorded about one executed grasp query."""

    iteration: int
    query: GraspQuery
    achieved_tips: np.ndarray       # (3, 3) sensed contacts or forward-model tips
    contact_flags: tuple            # 3 bools
    feasible: bool
    pfc: float
    y: float
    surface_penalty: float          # sum of squared surface means at the tips
    wrist_pose: np.ndarray          # (6,) origin + ZYX angles
    hand_config: np.ndarray         # (9,) achieved tips, flattened
    surrogate_input: np.ndarray     # (12,) normalized vector fed to the surrogate

    @property
    def all_contact(self) -> bool:
        return all(self.contact_flags)


@dataclass(frozen=True)
class Grasp:
    """A stable grasp returned by the loop."""

    wrist_pose: np.ndarray
    hand_config: np.ndarray
    pfc: float
    iteration: int


@dataclass(frozen=True)
class ExplorationConfig:
    """Knobs of the exploration loop; defaults reproduce the reference setup."""

    lambda_: float = 1.0
    n_stop: int = 60
    unc: UncertaintyModel = field(default_factory=UncertaintyModel)
    prior_min_grasps: int = 5
    prior_pfc_min: float = 0.4
    prior_attempt_cap: int = 200
    stable_pfc_min: float = 0.5
    seed: int = 0
    acq_budget: int = 2000
    sigma_thumb: float = 0.05
    prior_sigma: float = 0.015
    prior_squeeze: float = 0.035
    surrogate_sigma_se: float = 0.001
    surrogate_length_scale: float = 0.2
    surrogate_noise: float = 1e-7
    surrogate_input: str = "commanded"      # or "commanded"
    offset_range: tuple = (-0.05, 0.05)
    com_grid: int = 32
    com_var_cells: int = 256
    metrics_every: int = 0                 # 0 disables shape metrics entirely
    metrics_grid: int = 32
    surface_grid: int = 48
    hausdorff_samples: int = 10000
    stop_grasp_count: int = 0              # 0 disables early stopping
    stop_grasp_pfc: float = 0.8

    def __post_init__(self):
        if self.n_stop < 1:
            raise ValueError("n_stop must be >= 1")
        if not 0.0 < self.stable_pfc_min < 1.0:
            raise ValueError("stable_pfc_min must be in (0, 1)")
        if self.lambda_ <= 0:
            raise ValueError("lambda_ must be > 0")
        if self.surrogate_input not in ("achieved", "commanded"):
            raise ValueError("surrogate_input must be 'achieved' or 'commanded'")


@dataclass
class ExplorationResult:
    """Per-iteration log, stable grasps, and shape metrics of one run."""

    log: list                          # Observations, loop iterations only
    priors: list                       # Observations executed before the loop
    grasps: list                       # Grasp records, pfc descending
    best_pfc_curve: np.ndarray         # (len(log),)
    shape_metrics: list                # (iteration, hausdorff, mean_variance)
    gpis_final: GpisModel
    com_final: MassEstimate


# ---------------------------------------------------------------------------
# target function and acquisition
# ---------------------------------------------------------------------------

def target_value(gpis_model: GpisModel, tips, pfc_value: float, lambda_: float) -> float:
    """Exploration score: lambda * pfc minus squared surface-mean penalties."""
    tips = np.atleast_2d(np.asarray(tips, dtype=float))
    means, _ = gpis_mod.gpis_query_many(gpis_model, tips)
    return float(lambda_ * pfc_value - np.sum(means**2))


def _norm_pdf(z):
    return np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)


def _ei_vec(mean, var, y_best):
    s = np.sqrt(np.maximum(var, 0.0))
    improve = mean - y_best
    ei = np.where(improve > 0.0, improve, 0.0)
    ok = s >= 1e-12
    z = np.where(ok, improve / np.where(ok, s, 1.0), 0.0)
    ei_smooth = improve * ndtr(z) + s * _norm_pdf(z)
    return np.where(ok, ei_smooth, ei)


def _acquisition_scores(mean, var, y_best):
    """EI with its underflow limit as tie-break.

    With a small-amplitude surrogate the EI of most candidates underflows to
    exactly zero once the incumbent is positive; ranking those candidates by
    z = (mean - y_best) / std reproduces the ordering EI itself induces in
    that limit, keeping the argmax well defined.  Returns (ei, score) where
    score is EI whenever any candidate has positive EI, otherwise z.
    """
    ei = _ei_vec(mean, var, y_best)
    if np.any(ei > 0.0):
        return ei, ei
    s = np.maximum(np.sqrt(np.maximum(var, 0.0)), 1e-12)
    z = (mean - y_best) / s
    return ei, z


def expected_improvement(pred: gp.Prediction, y_best: float) -> float:
    """Expected amount by which a candidate beats the incumbent best.

    Deterministic limit (predictive std below 1e-12) degrades to
    max(mean - y_best, 0).
    """
    return float(_ei_vec(np.array([pred.mean]), np.array([pred.variance]), y_best)[0])


def suggest_next(surrogate: gp.GpModel, space: QuerySpace, y_best: float,
                 budget: int, seed) -> GraspQuery:
    """Acquisition maximization by random search plus local refinement.

    Scores `budget` uniform candidates, then 10 Gaussian perturbations
    (std 0.05 per normalized axis) around each of the top 5, and returns the
    overall best.  Deterministic given the seed.
    """
    if surrogate.n < 1:
        raise ValueError("surrogate has no observations")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng([int(seed), 0x5E])
    cands = space.uniform(rng, budget)
    # refinement seeds: best of the uniform pool and of the already-observed
    # inputs, so local search concentrates around incumbents even when the
    # small-amplitude surrogate drives EI to zero almost everywhere
    pool = np.vstack([cands, surrogate.x])
    mean, var = gp.gp_predict_many(surrogate, pool)
    _, score = _acquisition_scores(mean, var, y_best)
    top = np.argsort(score)[-min(5, len(pool)):]
    local = pool[top][:, None, :] + rng.normal(0.0, 0.05, size=(len(top), 10, QUERY_DIM))
    local = np.clip(local.reshape(-1, QUERY_DIM), 0.0, 1.0)
    mean_l, var_l = gp.gp_predict_many(surrogate, local)
    all_c = np.vstack([cands, local])
    _, all_score = _acquisition_scores(
        np.concatenate([mean[:budget], mean_l]), np.concatenate([var[:budget], var_l]), y_best
    )
    return space.denormalize(all_c[int(np.argmax(all_score))])


# ---------------------------------------------------------------------------
# query execution
# ---------------------------------------------------------------------------

def _fallback_com(model: GpisModel, grid: int) -> MassEstimate:
    spacing = model.domain.diagonal / np.sqrt(3.0) / max(grid - 1, 1)
    return MassEstimate(p_com=model.cloud_centroid(), sigma_com=spacing)


def _estimate_com(model: GpisModel, config: ExplorationConfig) -> MassEstimate:
    try:
        return gpis_mod.estimate_com(model, config.com_grid, var_cell_cap=config.com_var_cells)
    except gpis_mod.DegenerateShapeError:
        return _fallback_com(model, config.com_grid)


def _execute(world, model: GpisModel, com_est: MassEstimate, query: GraspQuery,
             space: QuerySpace, config: ExplorationConfig, iteration: int):
    """Run one grasp attempt and score it; never raises on infeasibility."""
    unc = config.unc
    try:
        plan = world_mod.solve_hand(query, world.hand, com_est.p_com)
    except InfeasiblePlanError:
        plan = None

    if plan is None:
        # forward model of an unexecutable plan: the hand stays at its targets
        rot = Rotation.from_euler("ZYX", query.wrist_euler).as_matrix()
        approach = rot @ np.array([0.0, 0.0, 1.0])
        mid = 0.5 * (np.asarray(query.thumb) + np.asarray(query.finger1))
        origin = mid - (world.hand.standoff + query.approach_offset) * approach
        f2 = origin + rot @ np.array([query.finger2_uv[0], query.finger2_uv[1],
                                      world.hand.knuckle_offset])
        tips = np.stack([np.asarray(query.thumb, float), np.asarray(query.finger1, float), f2])
        flags = (False, False, False)
        feasible = False
        pfc_value = 0.0
        contacts_for_update = []
        wrist_pose = np.concatenate([origin, np.asarray(query.wrist_euler, float)])
    else:
        result = world_mod.close_fingers(
            world.mesh, plan,
            noise=(world.contact_pos_noise, world.contact_normal_noise),
            seed=_subseed(config.seed, iteration, _TAG_CONTACT),
        )
        tips = result.achieved_tips
        flags = result.flags
        feasible = True
        wrist_pose = plan.wrist_pose
        contacts_for_update = [c for c in result.contacts if c is not None]
        if result.all_contact:
            mean_contacts = [
                quality.Contact(c=point, n=-normal, mu=unc.mu_hat)
                for point, normal in result.contacts
            ]
            pfc_value = quality.pfc(
                mean_contacts, unc, com_est, seed=_subseed(config.seed, iteration, _TAG_PFC)
            )
        else:
            pfc_value = 0.0

    tips_clamped = space.tip_box.clip(tips)
    means, _ = gpis_mod.gpis_query_many(model, tips_clamped)
    penalty = float(np.sum(means**2))
    y = config.lambda_ * pfc_value - penalty

    if config.surrogate_input == "achieved":
        sq = _query_with_achieved_tips(query, tips_clamped, wrist_pose, world.hand)
    else:
        sq = query
    observation = Observation(
        iteration=iteration,
        query=query,
        achieved_tips=tips,
        contact_flags=tuple(flags),
        feasible=feasible,
        pfc=pfc_value,
        y=y,
        surface_penalty=penalty,
        wrist_pose=wrist_pose,
        hand_config=tips.ravel().copy(),
        surrogate_input=space.normalize(sq),
    )
    return observation, contacts_for_update


def _query_with_achieved_tips(query: GraspQuery, tips, wrist_pose, hand) -> GraspQuery:
    """Commanded query with its three tip coordinates replaced by achieved ones.

    The coupled fingertip's world position is mapped back into the knuckle
    plane of the commanded wrist frame so the substitution stays in query
    coordinates; wrist angles and offset remain commanded.
    """
    rot = Rotation.from_euler("ZYX", query.wrist_euler).as_matrix()
    origin = np.asarray(wrist_pose[:3], dtype=float)
    local = rot.T @ (np.asarray(tips[2], dtype=float) - origin)
    uv = np.clip(local[:2], -hand.uv_half_extent, hand.uv_half_extent)
    return replace(query, thumb=np.asarray(tips[0], float),
                   finger1=np.asarray(tips[1], float), finger2_uv=uv)


# ---------------------------------------------------------------------------
# scene initialization
# ---------------------------------------------------------------------------

def initialize_scene(mesh, camera, hand, seed=0,
                     vision_noise=gpis_mod.DEFAULT_VISION_NOISE,
                     anchor_noise=gpis_mod.DEFAULT_ANCHOR_NOISE,
                     max_cloud_points=gpis_mod.DEFAULT_MAX_CLOUD_POINTS,
                     domain_inflate=0.2, floor_z="auto",
                     contact_pos_noise=0.001, contact_normal_noise=0.01):
    """Pre-exploration phase: render a partial view and build the shape model.

    The domain box mirrors the cloud along the camera's viewing axis before
    inflating, so the occluded side of the object stays inside the model's
    domain and far-side contacts remain representable.  Scenes are tabletop:
    `floor_z` ("auto" = the mesh's lowest point, i.e. the object rests on
    the table) bounds the domain from below; pass None for free-floating
    objects.

    Returns (world, model, cloud).
    """
    cloud = world_mod.render_pointcloud(mesh, camera, seed=seed)
    if floor_z == "auto":
        floor_z = float(mesh.bounds()[0][2])
    domain = bounding_domain_for_view(cloud, camera, inflate=domain_inflate,
                                      floor_z=floor_z)
    model = gpis_mod.gpis_init(
        cloud, domain,
        vision_noise=vision_noise, anchor_noise=anchor_noise,
        max_cloud_points=max_cloud_points,
    )
    scene = world_mod.World(
        mesh=mesh, hand=hand,
        contact_pos_noise=contact_pos_noise, contact_normal_noise=contact_normal_noise,
    )
    return scene, model, cloud


def bounding_domain_for_view(cloud, camera, inflate=0.2, floor_z=None) -> gpis_mod.Box:
    return gpis_mod.bounding_domain(cloud, inflate=inflate, mirror_along=camera.forward,
                                    floor_z=floor_z)


# ---------------------------------------------------------------------------
# priors, exploration, baseline
# ---------------------------------------------------------------------------

def _approach_euler(direction, roll, jitter, rng):
    """ZYX angles of a wrist frame whose approach axis points along `direction`,
    rolled by `roll` about it and perturbed by Gaussian `jitter` per angle."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    ref = np.zeros(3)
    ref[np.argmin(np.abs(d))] = 1.0
    t1 = np.cross(d, ref)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(d, t1)
    x_axis = np.cos(roll) * t1 + np.sin(roll) * t2
    y_axis = np.cross(d, x_axis)
    euler = Rotation.from_matrix(np.stack([x_axis, y_axis, d], axis=1)).as_euler("ZYX")
    if jitter > 0:
        euler = euler + rng.normal(0.0, jitter, size=3)
    return np.clip(euler, -np.pi, np.pi)


def _draw_prior_query(cloud, space: QuerySpace, hand, sigma, squeeze, rng,
                      center=None) -> GraspQuery:
    """Pre-exploration grasp: fingertip targets Gaussian around cloud points.

    Targets are nudged `squeeze` metres inward (towards the cloud centroid)
    before jittering, the way a grasp controller commands tips slightly past
    the expected surface.  The first two anchors form an opposed pair (the
    second is the most opposite of a random subset, seen from the centroid),
    the wrist approaches along the line towards the centroid with a random
    roll, and the coupled fingertip aims at a third, well-separated anchor
    through its plane.
    """
    centroid = cloud.mean(axis=0) if center is None else np.asarray(center, dtype=float)

    def squeezed(anchor):
        inward = centroid - anchor
        norm = np.linalg.norm(inward)
        depth = min(squeeze, 0.5 * norm)
        target = anchor + (depth / norm) * inward if norm > 1e-9 else anchor
        return space.tip_box.clip(target + rng.normal(0.0, sigma, size=3))

    # favour anchors on the cloud's outer shell: wide grasps tolerate the
    # contact-position uncertainty far better than narrow pinches
    radii = np.linalg.norm(cloud - centroid, axis=1)
    shell = cloud[radii >= np.quantile(radii, 0.7)]
    a = shell[rng.integers(len(shell))]
    thumb = squeezed(a)
    if rng.random() < 0.7:
        # oppose the thumb with a target mirrored through the interior
        # reference point: the closure ray then enters from the occluded
        # side, giving an antipodal pair and a far-side glance in one attempt
        finger1 = squeezed(2.0 * centroid - a)
    else:
        # visible-pair variant: most opposite shell point as seen from the
        # reference, for objects whose far side the mirror guesses badly
        dir_a = a - centroid
        dir_a = dir_a / max(np.linalg.norm(dir_a), 1e-12)
        finger1 = squeezed(shell[int(np.argmin((shell - centroid) @ dir_a))])
    mid = 0.5 * (thumb + finger1)
    toward = centroid - mid
    if np.linalg.norm(toward) < 1e-9:
        toward = centroid - a
    euler = _approach_euler(toward, rng.uniform(0.0, 2.0 * np.pi), 0.15, rng)
    offset = rng.uniform(*space.offset_range)

    rot = Rotation.from_euler("ZYX", euler).as_matrix()
    approach = rot @ np.array([0.0, 0.0, 1.0])
    origin = mid - (hand.standoff + offset) * approach
    sub2 = cloud[rng.integers(len(cloud), size=min(48, len(cloud)))]
    spread = np.minimum(np.linalg.norm(sub2 - thumb, axis=1),
                        np.linalg.norm(sub2 - finger1, axis=1))
    desired = squeezed(sub2[int(np.argmax(spread))])
    local = rot.T @ (desired - origin)
    uv = np.clip(local[:2], -space.uv_half, space.uv_half)
    return GraspQuery(thumb=thumb, finger1=finger1, finger2_uv=uv,
                      wrist_euler=euler, approach_offset=float(offset))


def build_prior(world, model: GpisModel, config: ExplorationConfig):
    """Execute surface-anchored random grasps until enough succeed.

    Keeps drawing until `prior_min_grasps` observations exceed
    `prior_pfc_min`, capped at `prior_attempt_cap` attempts (raising
    PriorConstructionError at the cap).  Every executed attempt, including
    failures, is returned as surrogate seed data; contacts update the model.

    Returns (observations, updated model, updated com estimate).
    """
    cloud = model.vision_points()
    if len(cloud) == 0:
        raise ValueError("model has no vision points to anchor priors")
    space = QuerySpace(tip_box=model.domain, uv_half=world.hand.uv_half_extent,
                       offset_range=config.offset_range)
    com_est = _estimate_com(model, config)
    observations = []
    successes = 0
    good_inputs = []   # (normalized query, pfc), best first
    for attempt in range(config.prior_attempt_cap):
        rng = np.random.default_rng([config.seed, attempt, _TAG_PRIOR])
        if good_inputs and rng.random() < 0.6:
            # refine an earlier pre-exploration grasp: Gaussian samples
            # around its finger placement, in normalized query coordinates,
            # preferring the best grasp found so far
            pick = 0 if rng.random() < 0.5 else int(rng.integers(len(good_inputs)))
            seed_u = good_inputs[pick][0]
            query = space.denormalize(seed_u + rng.normal(0.0, 0.04, size=QUERY_DIM))
        else:
            query = _draw_prior_query(cloud, space, world.hand, config.prior_sigma,
                                      config.prior_squeeze, rng, center=com_est.p_com)
        obs, contacts = _execute(world, model, com_est, query, space, config,
                                 iteration=-(attempt + 1))
        observations.append(obs)
        if obs.pfc > config.prior_pfc_min:
            good_inputs.append((space.normalize(obs.query), obs.pfc))
            good_inputs.sort(key=lambda t: -t[1])
        if contacts:
            model = _add_contacts(model, contacts)
        if obs.pfc > config.prior_pfc_min:
            successes += 1
            com_est = _estimate_com(model, config)
            if successes >= config.prior_min_grasps:
                return observations, model, com_est
        elif contacts and (attempt + 1) % 25 == 0:
            com_est = _estimate_com(model, config)   # fold accumulated touches in
    raise PriorConstructionError(
        f"only {successes}/{config.prior_min_grasps} prior grasps above "
        f"pfc {config.prior_pfc_min} after {config.prior_attempt_cap} attempts"
    )


def _add_contacts(model: GpisModel, contacts):
    """Condition the model on contact points, skipping any that fall outside
    the domain box (the mirrored-view domain is a perception-time guess and
    need not cover every far-side contact; unrepresentable points are data
    for the grasp evaluation but not for the shape model)."""
    pts = [c[0] for c in contacts if model.domain.contains(np.asarray(c[0])[None, :])[0]]
    if not pts:
        return model
    return gpis_mod.gpis_add_observations(model, [gpis_mod.surface_point(p) for p in pts])


class Surrogate:
    """Grasp-score GP over the normalized query cube with standardized targets.

    Raw scores span several units while the kernel amplitude is 0.001;
    fitting them directly forces huge interpolation weights and an
    oscillating posterior mean.  Standardizing the targets to the kernel's
    own scale (an order-preserving affine map, so acquisition rankings are
    unchanged) keeps the surrogate well behaved; `y_best` must be queried
    through `transform` so incumbent and predictions share units.
    """

    def __init__(self, inputs, targets, config: ExplorationConfig):
        self._config = config
        self._x = [np.asarray(v, dtype=float) for v in inputs]
        self._y = [float(v) for v in targets]
        self._refit()

    def _refit(self):
        c = self._config
        y = np.array(self._y)
        self.y_mean = float(np.median(y))
        # robust scale: far misses carry large penalties, and letting those
        # outliers inflate the scale buries the incumbent and over-explores
        mad = float(np.median(np.abs(y - self.y_mean)))
        self.y_scale = float(max(1.4826 * mad, 0.25 * y.std(), 1e-9))
        scaled = (y - self.y_mean) / self.y_scale * c.surrogate_sigma_se
        kernel = gp.se_kernel(c.surrogate_sigma_se, c.surrogate_length_scale)
        self.model = gp.gp_fit(np.array(self._x), scaled, c.surrogate_noise, kernel)

    def transform(self, y_raw: float) -> float:
        return (y_raw - self.y_mean) / self.y_scale * self._config.surrogate_sigma_se

    def incumbent(self) -> float:
        """Best posterior mean over the observed inputs (standardized units).

        The raw best sample is an outlier-prone incumbent under Monte-Carlo
        score noise: one lucky draw would leave expected improvement
        unbeatable and push the search away from genuinely good regions.
        The plug-in value is the standard noisy-observation treatment.
        """
        mean, _ = gp.gp_predict_many(self.model, np.array(self._x))
        return float(mean.max())

    def append(self, x, y_raw: float):
        self._x.append(np.asarray(x, dtype=float))
        self._y.append(float(y_raw))
        self._refit()


def _fit_surrogate(observations, config: ExplorationConfig) -> Surrogate:
    return Surrogate(
        [o.surrogate_input for o in observations], [o.y for o in observations], config
    )


def _shape_metrics(model: GpisModel, ground_samples, config: ExplorationConfig, seed):
    est = gpis_mod.extract_surface(model, config.surface_grid, compute_variance=False)
    rng = np.random.default_rng([int(seed), _TAG_METRICS])
    surf_samples = meshes.sample_surface(est.mesh, config.hausdorff_samples, rng)
    h = gpis_mod.hausdorff(surf_samples, ground_samples)
    mv = gpis_mod.mean_variance(model, config.metrics_grid)
    return h, mv


def explore(world, model: GpisModel, config: ExplorationConfig, priors=None) -> ExplorationResult:
    """Run the full surrogate-guided exploration loop.

    Builds priors when none are given.  Each iteration: suggest a query by
    expected improvement, execute it, score it, update the shape model with
    any contacts, re-estimate the centre of mass, and append to the
    surrogate.  Returns the log plus every grasp above `stable_pfc_min`.
    """
    space = QuerySpace(tip_box=model.domain, uv_half=world.hand.uv_half_extent,
                       offset_range=config.offset_range)
    if priors is None:
        priors, model, com_est = build_prior(world, model, config)
    else:
        com_est = _estimate_com(model, config)
    if not priors:
        raise ValueError("explore needs at least one prior observation")
    surrogate = _fit_surrogate(priors, config)

    ground_samples = None
    metrics = []
    if config.metrics_every > 0:
        rng = np.random.default_rng([config.seed, _TAG_METRICS, 0])
        ground_samples = meshes.sample_surface(world.mesh, config.hausdorff_samples, rng)
        h, mv = _shape_metrics(model, ground_samples, config, config.seed)
        metrics.append((0, h, mv))

    log = []
    best_pfc = max(o.pfc for o in priors)
    best_curve = []
    stable_count = 0

    for it in range(1, config.n_stop + 1):
        query = suggest_next(surrogate.model, space, surrogate.incumbent(),
                             config.acq_budget, _subseed(config.seed, it, _TAG_SUGGEST))
        obs, contacts = _execute(world, model, com_est, query, space, config, it)
        log.append(obs)
        if contacts:
            model = _add_contacts(model, contacts)
        com_est = _estimate_com(model, config)
        surrogate.append(obs.surrogate_input, obs.y)
        best_pfc = max(best_pfc, obs.pfc)
        best_curve.append(best_pfc)
        if obs.pfc > config.stop_grasp_pfc:
            stable_count += 1
        due = config.metrics_every > 0 and (
            it % config.metrics_every == 0 or it == config.n_stop
        )
        if config.stop_grasp_count and stable_count >= config.stop_grasp_count:
            if config.metrics_every > 0:
                h, mv = _shape_metrics(model, ground_samples, config, config.seed + it)
                metrics.append((it, h, mv))
            break
        if due:
            h, mv = _shape_metrics(model, ground_samples, config, config.seed + it)
            metrics.append((it, h, mv))

    grasps = [
        Grasp(wrist_pose=o.wrist_pose, hand_config=o.hand_config, pfc=o.pfc,
              iteration=o.iteration)
        for o in log
        if o.pfc > config.stable_pfc_min
    ]
    grasps.sort(key=lambda g: -g.pfc)
    return ExplorationResult(
        log=log, priors=list(priors), grasps=grasps,
        best_pfc_curve=np.array(best_curve), shape_metrics=metrics,
        gpis_final=model, com_final=com_est,
    )


def baseline_explore(world, model: GpisModel, config: ExplorationConfig) -> ExplorationResult:
    """Surface-anchored random search with a frozen shape model.

    Mirrors the execution and scoring of `explore` exactly, but queries are
    sampled (thumb Gaussian around a random cloud point, the other nine
    coordinates uniform), no surrogate is fitted, and the shape model and
    centre of mass stay at their initial estimates.
    """
    cloud = model.vision_points()
    if len(cloud) == 0:
        raise ValueError("model has no vision points")
    space = QuerySpace(tip_box=model.domain, uv_half=world.hand.uv_half_extent,
                       offset_range=config.offset_range)
    com_est = _estimate_com(model, config)

    ground_samples = None
    metrics = []
    if config.metrics_every > 0:
        rng = np.random.default_rng([config.seed, _TAG_METRICS, 0])
        ground_samples = meshes.sample_surface(world.mesh, config.hausdorff_samples, rng)
        h, mv = _shape_metrics(model, ground_samples, config, config.seed)
        metrics.append((0, h, mv))

    log = []
    best_pfc = 0.0
    best_curve = []
    stable_count = 0
    for it in range(1, config.n_stop + 1):
        rng = np.random.default_rng([config.seed, it, _TAG_BASELINE])
        u = rng.random(QUERY_DIM)
        query = space.denormalize(u)
        anchor = cloud[rng.integers(len(cloud))]
        thumb = space.tip_box.clip(anchor + rng.normal(0.0, config.sigma_thumb, size=3))
        query = replace(query, thumb=thumb)
        obs, _contacts = _execute(world, model, com_est, query, space, config, it)
        log.append(obs)
        best_pfc = max(best_pfc, obs.pfc)
        best_curve.append(best_pfc)
        if obs.pfc > config.stop_grasp_pfc:
            stable_count += 1
            if config.stop_grasp_count and stable_count >= config.stop_grasp_count:
                break

    if config.metrics_every > 0:
        metrics.append((len(log), metrics[0][1], metrics[0][2]))   # model frozen

    grasps = [
        Grasp(wrist_pose=o.wrist_pose, hand_config=o.hand_config, pfc=o.pfc,
              iteration=o.iteration)
        for o in log
        if o.pfc > config.stable_pfc_min
    ]
    grasps.sort(key=lambda g: -g.pfc)
    return ExplorationResult(
        log=log, priors=[], grasps=grasps, best_pfc_curve=np.array(best_curve),
        shape_metrics=metrics, gpis_final=model, com_final=com_est,
    )
