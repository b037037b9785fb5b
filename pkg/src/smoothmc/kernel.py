"""Squared-exponential covariance and Gram-matrix algebra.

The kernel is k(x, x') = amplitude * exp(-sum_d ((x_d - x'_d) / lengthscale_d)^2)
with one lengthscale per input dimension and no factor 2 in the denominator,
so a 1-D unit-lengthscale kernel gives exactly exp(-1) at distance 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky

from .errors import InferenceError

__all__ = ["KernelConfig", "GramMatrix", "kernel_eval", "gram", "cross_gram"]

DEFAULT_JITTER_FACTOR = 1e-8
MAX_JITTER_FACTOR = 1e-2


@dataclass(frozen=True)
class KernelConfig:
    amplitude: float                      # sigma^2, the prior variance
    lengthscales: tuple[float, ...]
    jitter: float | None = None           # None -> amplitude * 1e-8

    def __post_init__(self):
        if not np.isfinite(self.amplitude) or self.amplitude <= 0:
            raise InferenceError(f"amplitude must be positive, got {self.amplitude!r}")
        if not self.lengthscales:
            raise InferenceError("at least one lengthscale is required")
        for ls in self.lengthscales:
            if not np.isfinite(ls) or ls <= 0:
                raise InferenceError(f"lengthscales must be positive, got {ls!r}")
        if self.jitter is not None and (not np.isfinite(self.jitter) or self.jitter <= 0):
            raise InferenceError(f"jitter must be positive, got {self.jitter!r}")

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    @property
    def jitter_value(self) -> float:
        return self.jitter if self.jitter is not None else self.amplitude * DEFAULT_JITTER_FACTOR


@dataclass(frozen=True)
class GramMatrix:
    matrix: np.ndarray        # jittered, symmetric positive definite
    chol_lower: np.ndarray
    jitter_used: float


def _as_points(X, dim: int, what: str) -> np.ndarray:
    pts = np.asarray(X, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise InferenceError(f"{what}: expected points of dimension {dim}, "
                             f"got array of shape {pts.shape}")
    return pts


def kernel_eval(cfg: KernelConfig, x, x_prime) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(x_prime, dtype=float).reshape(-1)
    if x.shape != (cfg.dim,) or y.shape != (cfg.dim,):
        raise InferenceError(f"kernel_eval: points must have dimension {cfg.dim}")
    z = (x - y) / np.asarray(cfg.lengthscales)
    return float(cfg.amplitude * np.exp(-np.dot(z, z)))


def _pairwise(cfg: KernelConfig, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    ls = np.asarray(cfg.lengthscales)
    diff = A[:, None, :] / ls - B[None, :, :] / ls
    return cfg.amplitude * np.exp(-np.einsum("ijk,ijk->ij", diff, diff))


def gram(cfg: KernelConfig, X) -> GramMatrix:
    """Gram matrix over training points with jittered diagonal and cached Cholesky.

    Jitter escalates by x10 from the configured value up to
    ``amplitude * 1e-2``; persistent failure signals duplicated points or a
    degenerate configuration.
    """
    pts = _as_points(X, cfg.dim, "gram")
    if len(pts) == 0:
        raise InferenceError("gram: need at least one point")
    K = _pairwise(cfg, pts, pts)
    K = 0.5 * (K + K.T)
    jitter = cfg.jitter_value
    max_jitter = cfg.amplitude * MAX_JITTER_FACTOR
    while True:
        try:
            jittered = K + jitter * np.eye(len(pts))
            L = cholesky(jittered, lower=True)
            return GramMatrix(jittered, L, jitter)
        except np.linalg.LinAlgError as err:
            last_err = err
        if jitter >= max_jitter:
            raise InferenceError(
                f"Cholesky failed even with jitter {jitter:g}; "
                "check for duplicate points or a degenerate kernel") from last_err
        jitter = min(jitter * 10.0, max_jitter)
        warnings.warn(f"Gram factorization needed jitter escalation to {jitter:g}")


def cross_gram(cfg: KernelConfig, X, Xstar) -> np.ndarray:
    """Covariances between new points (rows) and training points (columns), no jitter."""
    pts = _as_points(X, cfg.dim, "cross_gram")
    stars = _as_points(Xstar, cfg.dim, "cross_gram")
    return _pairwise(cfg, stars, pts)
