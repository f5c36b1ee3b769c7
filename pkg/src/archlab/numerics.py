"""Shared numerical utilities: PCA, simplex geometry, softmax, seeded RNG.

All arrays are dense float64 numpy arrays. Randomness always flows through
a ``numpy.random.Generator`` seeded with PCG64, so every stream is fully
determined by its 64-bit seed (Gaussian draws use numpy's ziggurat method,
Dirichlet draws are normalized gamma variates).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DimensionError, NumericalError, ParameterError


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array and reject non-finite entries."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"{name} contains non-finite entries")
    return m


def check_finite(x: np.ndarray, name: str = "result") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"{name} contains non-finite entries")
    return x


# ---------------------------------------------------------------------------
# RNG

def rng_create(seed: int) -> np.random.Generator:
    """Deterministic PCG64 generator; same seed gives bit-identical streams."""
    return np.random.Generator(np.random.PCG64(seed))


def rng_gaussian(rng: np.random.Generator, size=None) -> np.ndarray:
    """Standard normal draws."""
    return rng.standard_normal(size=size)


def rng_dirichlet(rng: np.random.Generator, alpha) -> np.ndarray:
    """One Dirichlet(alpha) draw via normalized gamma variates."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or alpha.size < 1:
        raise ParameterError("alpha must be a non-empty vector")
    if np.any(alpha <= 0):
        raise ParameterError("all Dirichlet concentrations must be > 0")
    g = rng.standard_gamma(alpha)
    total = g.sum()
    if total == 0.0:
        # extreme small-alpha underflow; fall back to a one-hot at the
        # coordinate a fresh gamma draw would favor
        g = np.zeros_like(alpha)
        g[int(rng.integers(alpha.size))] = 1.0
        total = 1.0
    return g / total


def rng_dirichlet_matrix(rng: np.random.Generator, alpha, n: int) -> np.ndarray:
    """n iid Dirichlet(alpha) rows (vectorized gamma normalization)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(alpha <= 0):
        raise ParameterError("all Dirichlet concentrations must be > 0")
    g = rng.standard_gamma(np.broadcast_to(alpha, (n, alpha.size)))
    totals = g.sum(axis=1, keepdims=True)
    dead = totals[:, 0] == 0.0
    if np.any(dead):
        g[dead] = 0.0
        g[dead, rng.integers(alpha.size, size=int(dead.sum()))] = 1.0
        totals = g.sum(axis=1, keepdims=True)
    return g / totals


# ---------------------------------------------------------------------------
# Softmax

def row_softmax(m) -> np.ndarray:
    """Row-wise softmax, stabilized by max subtraction."""
    m = np.asarray(m, dtype=np.float64)
    shifted = m - m.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# Simplex geometry

@dataclass(frozen=True)
class SimplexFrame:
    """k fixed archetype coordinates forming a regular (k-1)-simplex.

    Vertices have unit norm, their centroid is the origin and all pairwise
    distances are equal. ``vertices`` has shape (k, k-1).
    """

    k: int
    vertices: np.ndarray

    def __post_init__(self):
        if self.vertices.shape != (self.k, self.k - 1):
            raise DimensionError(
                f"simplex frame for k={self.k} needs shape {(self.k, self.k - 1)}, "
                f"got {self.vertices.shape}"
            )


def simplex_vertices(k: int) -> SimplexFrame:
    """Regular (k-1)-simplex with unit circumradius, centered at the origin.

    Construction: take the k corners of the standard simplex in R^k,
    center them, map them into the hyperplane orthogonal to the all-ones
    vector with a Helmert basis, and rescale to unit norm. Deterministic
    for every k.
    """
    if k < 2:
        raise DimensionError(f"need k >= 2 archetypes, got {k}")
    corners = np.eye(k) - 1.0 / k  # centered standard-simplex corners
    basis = _helmert_basis(k)  # (k-1, k) orthonormal rows, all orthogonal to 1
    vertices = corners @ basis.T
    vertices /= np.sqrt(1.0 - 1.0 / k)  # centered corner norm -> 1
    return SimplexFrame(k=k, vertices=vertices)


def _helmert_basis(k: int) -> np.ndarray:
    """Orthonormal basis of the hyperplane {x in R^k : sum(x) = 0}."""
    basis = np.zeros((k - 1, k))
    for i in range(1, k):
        basis[i - 1, :i] = 1.0
        basis[i - 1, i] = -float(i)
        basis[i - 1] /= np.sqrt(i * (i + 1.0))
    return basis


def barycentric_in_hull(frame: SimplexFrame, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """True per point iff it lies in the convex hull of the frame vertices.

    The frame vertices plus the constant-1 coordinate form an invertible
    system, so barycentric coordinates are exact.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    k = frame.k
    system = np.hstack([frame.vertices, np.ones((k, 1))])  # (k, k)
    rhs = np.hstack([points, np.ones((points.shape[0], 1))])  # (m, k)
    coords = np.linalg.solve(system.T, rhs.T).T
    return np.all(coords >= -tol, axis=1)


# ---------------------------------------------------------------------------
# PCA

@dataclass(frozen=True)
class PcaModel:
    """Column mean, top-q orthonormal principal directions and variances."""

    mean: np.ndarray
    components: np.ndarray  # (q, p), orthonormal rows
    explained_variance: np.ndarray  # (q,), non-increasing, >= 0


def pca_fit(x, q: int) -> PcaModel:
    """Top-q PCA of the rows of x via eigendecomposition of the sample
    covariance (n-1 convention).

    Component signs are fixed so the entry of largest magnitude in each
    component is positive, making the output deterministic.
    """
    x = as_matrix(x, "X")
    n, p = x.shape
    if n < 2:
        raise DimensionError(f"PCA needs at least 2 rows, got {n}")
    if not (1 <= q <= min(n, p)):
        raise DimensionError(f"q={q} out of range [1, {min(n, p)}]")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    if np.allclose(cov, 0.0):
        raise DegenerateError("X has zero variance in all columns")
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:q]
    variance = np.clip(eigvals[order], 0.0, None)
    components = eigvecs[:, order].T
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components, explained_variance=variance)


def match_rows(estimated, truth):
    """Assign estimated rows to truth rows one-to-one, minimizing the total
    mean absolute per-coordinate error (exhaustive over permutations).

    Returns (perm, errors) where estimated[perm[i]] is matched to truth[i]
    and errors[i] is the mean absolute coordinate error of that pair.
    """
    from itertools import permutations

    estimated = as_matrix(estimated, "estimated")
    truth = as_matrix(truth, "truth")
    if estimated.shape != truth.shape:
        raise DimensionError(
            f"shape mismatch {estimated.shape} vs {truth.shape}"
        )
    k = truth.shape[0]
    if k > 9:
        raise DimensionError("exhaustive matching supports at most 9 rows")
    cost = np.array([
        [np.mean(np.abs(estimated[i] - truth[j])) for i in range(k)]
        for j in range(k)
    ])
    best_perm, best_total = None, np.inf
    for perm in permutations(range(k)):
        total = sum(cost[j][perm[j]] for j in range(k))
        if total < best_total:
            best_total, best_perm = total, perm
    errors = np.array([cost[j][best_perm[j]] for j in range(k)])
    return list(best_perm), errors


def pca_project(model: PcaModel, x) -> np.ndarray:
    x = as_matrix(x, "X")
    return (x - model.mean) @ model.components.T


def pca_reconstruct(model: PcaModel, scores) -> np.ndarray:
    scores = as_matrix(scores, "scores")
    return scores @ model.components + model.mean
