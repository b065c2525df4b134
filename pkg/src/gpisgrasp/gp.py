"""Exact Gaussian process regression with a factorized covariance.

The same machinery backs two very different users: a smooth surrogate over a
normalized 12-dimensional grasp-query space (squared-exponential kernel) and
an implicit-surface model over 3D space (thin-plate kernel).  Both stay small
enough (at most a few thousand points) that an exact Cholesky fit, redone from
scratch on every append, is the simplest correct choice.

Models are immutable after construction: `gp_fit` / `gp_append` return new
values and predictions are pure, so concurrent reads are safe.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.spatial.distance import cdist

from .errors import (
    DimensionMismatchError,
    IndistinguishableInputsError,
    KernelDomainError,
    NumericalError,
)

SQUARED_EXPONENTIAL = "squared_exponential"
THIN_PLATE = "thin_plate"

# Predictive variance below the round-off tolerance is a logic bug.  The
# tolerance scales with the kernel's prior variance: the thin-plate
# function is only conditionally positive definite, so the textbook
# variance can dip slightly negative near dense data as intrinsic kernel
# leakage (the standard implicit-surface treatment clamps it), unlike the
# tiny-amplitude squared-exponential case where 1e-12 absolute suffices.
VAR_ROUNDOFF_TOL = 1e-12
VAR_ROUNDOFF_REL = 1e-2

# Relative slack on the thin-plate range check, so points on the far corners
# of the domain that define R do not trip it through float error.
_TP_RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    """Covariance function selector.

    kind : 'squared_exponential' or 'thin_plate'
    sigma_se : signal standard deviation (squared-exponential only)
    length_scale : length scale in input units (squared-exponential only)
    max_range : largest admissible pairwise distance R (thin-plate only)
    """

    kind: str
    sigma_se: float = 1.0
    length_scale: float = 1.0
    max_range: float = 1.0

    def __post_init__(self):
        if self.kind not in (SQUARED_EXPONENTIAL, THIN_PLATE):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == SQUARED_EXPONENTIAL:
            if self.sigma_se <= 0 or self.length_scale <= 0:
                raise ValueError("sigma_se and length_scale must be positive")
        elif self.max_range <= 0:
            raise ValueError("max_range must be positive")


def squared_exponential(spec: KernelSpec) -> KernelSpec:
    return spec


def se_kernel(sigma_se: float = 0.001, length_scale: float = 1.0) -> KernelSpec:
    """Squared-exponential spec; defaults match the grasp-search surrogate."""
    return KernelSpec(SQUARED_EXPONENTIAL, sigma_se=sigma_se, length_scale=length_scale)


def thin_plate_kernel(max_range: float) -> KernelSpec:
    """Thin-plate spec with admissible range R = `max_range`."""
    return KernelSpec(THIN_PLATE, max_range=max_range)


def _kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense cross-covariance k(a, b) for (n,d) and (m,d) point arrays."""
    r = cdist(a, b)
    if spec.kind == SQUARED_EXPONENTIAL:
        return spec.sigma_se**2 * np.exp(-(r**2) / (2.0 * spec.length_scale**2))
    R = spec.max_range
    if r.size and r.max() > R * (1.0 + _TP_RANGE_SLACK):
        raise KernelDomainError(
            f"thin-plate kernel evaluated at r={r.max():.6g} > R={R:.6g}; "
            "the bounding domain is too small for these inputs"
        )
    r = np.minimum(r, R)
    return 2.0 * r**3 - 3.0 * R * r**2 + R**3


def _kernel_diag(spec: KernelSpec, n: int) -> float:
    """k(x, x), identical for every x under both stationary kernels."""
    if spec.kind == SQUARED_EXPONENTIAL:
        return spec.sigma_se**2
    return spec.max_range**3


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    """Evaluate the covariance between two points.

    Raises DimensionMismatchError if the points differ in length and
    KernelDomainError for thin-plate evaluations beyond R.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape:
        raise DimensionMismatchError(f"points of dimension {x.shape} vs {x2.shape}")
    return float(_kernel_matrix(spec, x[None, :], x2[None, :])[0, 0])


@dataclass(frozen=True)
class Prediction:
    """Posterior mean and (non-negative) variance at one query point."""

    mean: float
    variance: float


@dataclass(frozen=True)
class GpModel:
    """Fitted zero-mean GP: training set plus the Cholesky factor of K + diag(noise).

    `noise` is per-observation variance, so heterogeneous data sources
    (vision, tactile, anchors) can carry different fidelities in one model.
    """

    x: np.ndarray          # (n, d) training inputs
    y: np.ndarray          # (n,) training targets
    noise: np.ndarray      # (n,) per-observation noise variance
    kernel: KernelSpec
    chol: np.ndarray = field(repr=False)   # (n, n) lower-triangular factor
    alpha: np.ndarray = field(repr=False)  # (n,) solve of (K + D) alpha = y

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


def empty_model(kernel: KernelSpec, dim: int) -> GpModel:
    """Prior-only model: zero mean everywhere, variance k(x, x)."""
    return GpModel(
        x=np.zeros((0, dim)),
        y=np.zeros(0),
        noise=np.zeros(0),
        kernel=kernel,
        chol=np.zeros((0, 0)),
        alpha=np.zeros(0),
    )


def gp_fit(x, y, noise, kernel: KernelSpec) -> GpModel:
    """Fit an exact GP.

    Parameters
    ----------
    x : (n, d) array of inputs
    y : (n,) array of scalar targets
    noise : scalar or (n,) per-observation noise variance, >= 0
    kernel : KernelSpec

    Raises
    ------
    IndistinguishableInputsError
        If K + diag(noise) is not positive definite, which in practice
        means duplicate inputs with (near-)zero noise.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if x.shape[0] == 0:
        raise ValueError("gp_fit needs at least one observation")
    noise = np.broadcast_to(np.asarray(noise, dtype=float).ravel(), y.shape).copy()
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"{x.shape[0]} inputs but {y.shape[0]} targets")
    if np.any(noise < 0):
        raise ValueError("noise variances must be >= 0")

    k = _kernel_matrix(kernel, x, x)
    k[np.diag_indices_from(k)] += noise
    try:
        chol = np.linalg.cholesky(k)
    except np.linalg.LinAlgError as exc:
        raise IndistinguishableInputsError(
            "covariance factorization failed; inputs are indistinguishable "
            "(duplicate points with zero noise?)"
        ) from exc
    alpha = cho_solve((chol, True), y, check_finite=False)
    return GpModel(x=x, y=y, noise=noise, kernel=kernel, chol=chol, alpha=alpha)


def gp_append(model: GpModel, x, y: float, noise: float) -> GpModel:
    """Return a new model with one observation added (refit from scratch).

    Equivalent to `gp_fit` on the concatenated data; n stays small enough
    that the O(n^3) refit is cheap and unconditionally correct.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if model.n and x.shape[0] != model.dim:
        raise DimensionMismatchError(f"append point of dim {x.shape[0]} to {model.dim}-d model")
    xs = np.vstack([model.x, x[None, :]]) if model.n else x[None, :]
    ys = np.append(model.y, float(y))
    ns = np.append(model.noise, float(noise))
    return gp_fit(xs, ys, ns, model.kernel)


def _clamp_variance(var: np.ndarray, prior_var: float) -> np.ndarray:
    worst = var.min() if var.size else 0.0
    tol = max(VAR_ROUNDOFF_TOL, VAR_ROUNDOFF_REL * prior_var)
    if worst < -tol:
        raise NumericalError(
            f"predictive variance {worst:.3e} below round-off tolerance {tol:.1e}"
        )
    return np.maximum(var, 0.0)


def gp_predict_many(model: GpModel, xq: np.ndarray):
    """Posterior mean and variance at many query points.

    Parameters
    ----------
    xq : (m, d) array of query points

    Returns
    -------
    mean : (m,) array
    var : (m,) array, clamped to >= 0
    """
    xq = np.atleast_2d(np.asarray(xq, dtype=float))
    prior_var = _kernel_diag(model.kernel, xq.shape[0])
    if model.n == 0:
        return np.zeros(xq.shape[0]), np.full(xq.shape[0], prior_var)
    if xq.shape[1] != model.dim:
        raise DimensionMismatchError(f"query dim {xq.shape[1]} vs model dim {model.dim}")
    ks = _kernel_matrix(model.kernel, model.x, xq)      # (n, m)
    mean = ks.T @ model.alpha
    v = solve_triangular(model.chol, ks, lower=True, check_finite=False)
    var = prior_var - np.einsum("ij,ij->j", v, v)
    return mean, _clamp_variance(var, prior_var)


def gp_predict(model: GpModel, xq) -> Prediction:
    """Posterior at a single query point."""
    mean, var = gp_predict_many(model, np.atleast_1d(np.asarray(xq, dtype=float))[None, :])
    return Prediction(mean=float(mean[0]), variance=float(var[0]))
