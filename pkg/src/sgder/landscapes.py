"""Differentiable objectives small enough to run on a laptop.

* ``QuadraticSaddle``  f(θ) = ½ (θ-θ*)ᵀ H (θ-θ*) with at least one negative eigenvalue
* ``MultiBasin``       sum of negative Gaussian wells
* ``MlpObjective``     one-hidden-layer tanh network with softmax cross-entropy

All of them expose ``dim`` and ``eval(theta) -> (value, grad)``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)


class Landscape(Protocol):
    dim: int

    def eval(self, theta: np.ndarray) -> tuple[float, np.ndarray]: ...


def _as_vector(theta, dim: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (dim,):
        raise ValueError(f"expected a parameter vector of shape ({dim},), got {theta.shape}")
    return theta


# --------------------------------------------------------------------------
# quadratic strict saddle
# --------------------------------------------------------------------------


class QuadraticSaddle:
    """Exact quadratic around a strict saddle point ``center``.

    Args:
        eigenvalues: Hessian spectrum, must contain a strictly negative value.
        eigenvectors: Columns form an orthonormal basis; identity by default.
        center: Location of the saddle; origin by default.
    """

    def __init__(self, eigenvalues: Sequence[float], eigenvectors=None, center=None):
        lam = np.asarray(eigenvalues, dtype=np.float64)
        if lam.ndim != 1 or lam.size == 0:
            raise ConfigError("eigenvalues must be a non-empty vector")
        if not np.any(lam < 0):
            raise ConfigError("a strict saddle needs at least one negative eigenvalue")
        d = lam.size
        V = np.eye(d) if eigenvectors is None else np.asarray(eigenvectors, dtype=np.float64)
        if V.shape != (d, d) or not np.allclose(V.T @ V, np.eye(d), atol=1e-12):
            raise ConfigError("eigenvectors must form an orthonormal d x d matrix")
        self.dim = d
        self.eigenvalues = lam
        self.eigenvectors = V
        self.center = np.zeros(d) if center is None else _as_vector(center, d).copy()
        self.hessian = (V * lam) @ V.T

        idx = np.flatnonzero(lam == lam.min())
        if idx.size > 1:
            log.warning(
                "minimal eigenvalue %g is repeated %d times; using basis vector %d as v_minus",
                lam.min(), idx.size, idx[0],
            )
        self._unstable_index = int(idx[0])

    @property
    def gamma(self) -> float:
        return float(-self.eigenvalues.min())

    @property
    def v_minus(self) -> np.ndarray:
        return self.eigenvectors[:, self._unstable_index]

    @property
    def smoothness(self) -> float:
        """Lipschitz constant of the gradient, max |eigenvalue|."""
        return float(np.abs(self.eigenvalues).max())

    def eval(self, theta):
        u = _as_vector(theta, self.dim) - self.center
        g = self.hessian @ u
        return 0.5 * float(u @ g), g

    def project_unstable(self, theta) -> float:
        return float((_as_vector(theta, self.dim) - self.center) @ self.v_minus)


# --------------------------------------------------------------------------
# Gaussian wells
# --------------------------------------------------------------------------


class MultiBasin:
    """f(x) = Σ -depth_i * exp(-|x - c_i|² / (2 width_i²))."""

    def __init__(self, centers, depths, widths):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        self.depths = np.asarray(depths, dtype=np.float64).ravel()
        self.widths = np.asarray(widths, dtype=np.float64).ravel()
        n = self.centers.shape[0]
        if self.depths.size != n or self.widths.size != n:
            raise ConfigError("centers, depths and widths must have matching lengths")
        if np.any(self.widths <= 0):
            raise ConfigError("widths must be positive")
        self.dim = self.centers.shape[1]

    def eval(self, theta):
        x = _as_vector(theta, self.dim)
        diff = x - self.centers
        w2 = self.widths**2
        e = self.depths * np.exp(-np.sum(diff**2, axis=1) / (2 * w2))
        value = -float(e.sum())
        grad = ((e / w2)[:, None] * diff).sum(axis=0)
        return value, grad

    @classmethod
    def default(cls) -> "MultiBasin":
        """A narrow deep-ish well next to a wide, deeper one in 2-D."""
        return cls(
            centers=[[-1.0, 0.0], [1.5, 0.5], [0.0, -1.5]],
            depths=[1.0, 1.5, 0.7],
            widths=[0.3, 0.8, 0.5],
        )


# --------------------------------------------------------------------------
# synthetic classification data
# --------------------------------------------------------------------------

SPLITS = ("train", "val", "test")


@dataclass
class SyntheticDataset:
    features: np.ndarray
    labels: np.ndarray
    split: np.ndarray  # 0 train, 1 val, 2 test
    n_classes: int

    def subset(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        mask = self.split == SPLITS.index(name)
        return self.features[mask], self.labels[mask]

    def to_csv(self, path) -> None:
        path = Path(path)
        d = self.features.shape[1]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{j}" for j in range(d)] + ["label", "split"])
            for x, lab, s in zip(self.features, self.labels, self.split):
                w.writerow([repr(float(v)) for v in x] + [int(lab), SPLITS[s]])

    @classmethod
    def from_csv(cls, path, n_classes: int | None = None) -> "SyntheticDataset":
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if header[-2:] != ["label", "split"]:
            raise ConfigError(f"{path}: header must end with label,split")
        d = len(header) - 2
        X = np.array([[float(v) for v in r[:d]] for r in body], dtype=np.float64).reshape(len(body), d)
        y = np.array([int(r[d]) for r in body], dtype=np.int64)
        s = np.array([SPLITS.index(r[d + 1]) for r in body], dtype=np.int64)
        c = int(y.max()) + 1 if n_classes is None else n_classes
        return cls(X, y, s, c)


def split_sizes(n: int, fractions: Sequence[float]) -> tuple[int, int, int]:
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1) > 1e-9:
        raise ConfigError(f"split fractions must be three non-negative numbers summing to 1, got {fractions}")
    n_train = int(round(n * fractions[0]))
    n_val = int(round(n * fractions[1]))
    return n_train, n_val, n - n_train - n_val


def class_centers(n_classes: int, dim: int, separation: float) -> np.ndarray:
    """Equally spaced centers on a circle of radius ``separation`` (a line in 1-D)."""
    centers = np.zeros((n_classes, dim))
    if dim == 1:
        centers[:, 0] = separation * (np.arange(n_classes) - (n_classes - 1) / 2)
    else:
        ang = 2 * np.pi * np.arange(n_classes) / n_classes
        centers[:, 0] = separation * np.cos(ang)
        centers[:, 1] = separation * np.sin(ang)
    return centers


def generate_dataset(
    n: int,
    dim: int,
    n_classes: int,
    separation: float = 3.0,
    fractions: Sequence[float] = (0.7, 0.15, 0.15),
    seed: int | np.random.Generator = 0,
    noise: float = 1.0,
) -> SyntheticDataset:
    """Isotropic Gaussian blobs with balanced classes and a random split."""
    if n_classes < 2 or dim < 1:
        raise ConfigError("need at least 2 classes and 1 feature")
    if n < n_classes:
        raise ConfigError(f"n={n} is smaller than the number of classes {n_classes}")
    sizes = split_sizes(n, fractions)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    labels = rng.permutation(np.arange(n) % n_classes)
    X = class_centers(n_classes, dim, separation)[labels] + noise * rng.standard_normal((n, dim))
    split = np.empty(n, dtype=np.int64)
    order = rng.permutation(n)
    split[order[: sizes[0]]] = 0
    split[order[sizes[0] : sizes[0] + sizes[1]]] = 1
    split[order[sizes[0] + sizes[1] :]] = 2
    return SyntheticDataset(X, labels.astype(np.int64), split, n_classes)


# --------------------------------------------------------------------------
# two-layer MLP
# --------------------------------------------------------------------------


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


class MlpObjective:
    """Mean softmax cross-entropy of a d_in -> hidden (tanh) -> classes network.

    Parameters are packed as ``[W1 (d_in x h), b1 (h), W2 (h x c), b2 (c)]``.
    """

    def __init__(self, features, labels, hidden: int, n_classes: int):
        self.X = np.asarray(features, dtype=np.float64)
        self.y = np.asarray(labels, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("features must be (n, d) with one label per row")
        self.d_in = self.X.shape[1]
        self.hidden = hidden
        self.n_classes = n_classes
        self.shapes = [(self.d_in, hidden), (hidden,), (hidden, n_classes), (n_classes,)]
        self.dim = sum(int(np.prod(s)) for s in self.shapes)

    def unpack(self, theta):
        theta = _as_vector(theta, self.dim)
        out, i = [], 0
        for s in self.shapes:
            size = int(np.prod(s))
            out.append(theta[i : i + size].reshape(s))
            i += size
        return out

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        W1 = rng.standard_normal((self.d_in, self.hidden)) / np.sqrt(self.d_in)
        W2 = rng.standard_normal((self.hidden, self.n_classes)) / np.sqrt(self.hidden)
        return np.concatenate([W1.ravel(), np.zeros(self.hidden), W2.ravel(), np.zeros(self.n_classes)])

    def logits(self, theta, X=None) -> np.ndarray:
        W1, b1, W2, b2 = self.unpack(theta)
        X = self.X if X is None else X
        return np.tanh(X @ W1 + b1) @ W2 + b2

    def eval(self, theta, idx=None):
        W1, b1, W2, b2 = self.unpack(theta)
        X, y = (self.X, self.y) if idx is None else (self.X[idx], self.y[idx])
        n = X.shape[0]
        a1 = np.tanh(X @ W1 + b1)
        logp = log_softmax(a1 @ W2 + b2)
        loss = -float(logp[np.arange(n), y].mean())

        dz2 = np.exp(logp)
        dz2[np.arange(n), y] -= 1.0
        dz2 /= n
        dz1 = (dz2 @ W2.T) * (1.0 - a1**2)
        grad = np.concatenate([(X.T @ dz1).ravel(), dz1.sum(0), (a1.T @ dz2).ravel(), dz2.sum(0)])
        return loss, grad

    def loss(self, theta, idx=None) -> float:
        W1, b1, W2, b2 = self.unpack(theta)
        X, y = (self.X, self.y) if idx is None else (self.X[idx], self.y[idx])
        logp = log_softmax(np.tanh(X @ W1 + b1) @ W2 + b2)
        return -float(logp[np.arange(X.shape[0]), y].mean())

    def accuracy(self, theta) -> float:
        return float(np.mean(self.logits(theta).argmax(axis=1) == self.y))


# --------------------------------------------------------------------------
# finite differences
# --------------------------------------------------------------------------


def fd_gradient(f: Landscape | Callable[[np.ndarray], float], theta, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of ``f`` at ``theta``, one coordinate at a time."""
    if not h > 0:
        raise ValueError("step h must be positive")
    fn = (lambda x: f.eval(x)[0]) if hasattr(f, "eval") else f
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.empty_like(theta)
    x = theta.copy()
    for i in range(theta.size):
        x[i] = theta[i] + h
        up = fn(x)
        x[i] = theta[i] - h
        down = fn(x)
        x[i] = theta[i]
        grad[i] = (up - down) / (2 * h)
    return grad


def relative_error(a, b) -> float:
    """|a - b| / max(|a|, |b|) in the Euclidean norm; 0 when both vanish."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale)
