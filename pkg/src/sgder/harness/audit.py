"""Finite-difference audits of every analytic gradient in the package."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..landscapes import MlpObjective, MultiBasin, QuadraticSaddle, fd_gradient, generate_dataset, relative_error
from .config import LandscapeSpec


@dataclass
class AuditResult:
    name: str
    points: int
    max_rel_err: float


def audit_mlp(spec: LandscapeSpec, points: int = 100, seed: int = 0, batch: int = 16, h: float = 1e-5) -> AuditResult:
    """Backprop vs central differences at random (theta, mini-batch) pairs."""
    rng = np.random.default_rng(seed)
    data = generate_dataset(spec.n, spec.dim, spec.classes, spec.separation, spec.fractions, rng, spec.noise)
    obj = MlpObjective(data.features, data.labels, spec.hidden, data.n_classes)
    worst = 0.0
    for _ in range(points):
        theta = rng.standard_normal(obj.dim)
        idx = rng.choice(obj.X.shape[0], size=min(batch, obj.X.shape[0]), replace=False)
        _, g = obj.eval(theta, idx)
        g_fd = fd_gradient(lambda th: obj.loss(th, idx), theta, h)
        worst = max(worst, relative_error(g, g_fd))
    return AuditResult("mlp", points, worst)


def _audit_points(name, landscape, sampler, points, h) -> AuditResult:
    worst = 0.0
    for _ in range(points):
        theta = sampler()
        _, g = landscape.eval(theta)
        worst = max(worst, relative_error(g, fd_gradient(landscape, theta, h)))
    return AuditResult(name, points, worst)


def audit_all(spec: LandscapeSpec | None = None, points: int = 100, seed: int = 0) -> list[AuditResult]:
    spec = spec or LandscapeSpec()
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    saddle = QuadraticSaddle([2.0, 0.5, -0.3, -1.0], eigenvectors=q)
    basins = MultiBasin.default()
    return [
        audit_mlp(spec, points, seed),
        _audit_points("quadratic_saddle", saddle, lambda: rng.uniform(-2, 2, 4), points, 1e-5),
        _audit_points("multibasin", basins, lambda: rng.uniform(-2.5, 2.5, 2), points, 1e-5),
    ]
