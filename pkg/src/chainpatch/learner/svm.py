"""Soft-margin kernel SVM trained with sequential minimal optimization.

The dual is solved in the form

    min_a  f(a) = 1/2 a'Qa - e'a,   Q_ij = y_i y_j K(x_i, x_j)
    s.t.   0 <= a_i <= C_i,  y'a = 0

Each step picks the maximal violating pair (i, j), i.e. the largest
-y_i grad_i over the "up" set and the smallest over the "low" set, and solves
the two-variable subproblem analytically. The gap between those two values is
the KKT violation; training stops once it falls below ``tol``. Every step
strictly decreases f, so the dual objective -f never decreases.

Decision values are sum_k coef_k K(sv_k, z) + bias on standardized inputs z;
positive means NEGATE.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

FORMAT_VERSION = 1
KERNELS = ("rbf", "linear")
TAU = 1e-12  # curvature floor for non-positive-definite pairs


@dataclass(frozen=True)
class SvmConfig:
    kernel: str = "rbf"
    C: float = 1.0
    gamma: Optional[float] = None  # None: 1 / (d * Var(standardized features))
    tol: float = 1e-3
    max_iter: int = 200_000
    seed: int = 42
    balanced: bool = True  # per-class C inversely proportional to class size

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; choose from {KERNELS}")
        if self.C <= 0:
            raise ValueError("C must be positive")


def kernel_matrix(kind: str, gamma: float, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if kind == "linear":
        return A @ B.T
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    iterations: int
    gap: float
    converged: bool
    objective: list = field(default_factory=list)  # dual objective per step, when recorded


def _violation(y, G, alpha, Cvec):
    myG = -y * G
    up = ((y > 0) & (alpha < Cvec)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < Cvec))
    i = int(np.flatnonzero(up)[np.argmax(myG[up])]) if up.any() else -1
    j = int(np.flatnonzero(low)[np.argmin(myG[low])]) if low.any() else -1
    m = myG[i] if i >= 0 else -np.inf
    M = myG[j] if j >= 0 else np.inf
    return i, j, m, M


def smo_solve(K: np.ndarray, y: np.ndarray, Cvec: np.ndarray, tol: float = 1e-3,
              max_iter: int = 200_000, record: bool = False) -> SmoResult:
    n = len(y)
    y = np.asarray(y, dtype=float)
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    G = -np.ones(n)
    history = []
    it, gap = 0, np.inf
    while it < max_iter:
        i, j, m, M = _violation(y, G, alpha, Cvec)
        gap = m - M
        if i < 0 or j < 0 or gap < tol:
            break
        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if a <= 0:
            a = TAU
        t = gap / a
        t = min(t, Cvec[i] - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else Cvec[j] - alpha[j])
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        # snap to the box to keep set membership exact
        for k in (i, j):
            if alpha[k] < 1e-15:
                alpha[k] = 0.0
            elif alpha[k] > Cvec[k] - 1e-15:
                alpha[k] = Cvec[k]
        G += t * (y[i] * Q[:, i] - y[j] * Q[:, j])
        it += 1
        if record:
            history.append(float(alpha.sum() - 0.5 * alpha @ (Q @ alpha)))
    converged = gap < tol
    myG = -y * G
    free = (alpha > 0) & (alpha < Cvec)
    if free.any():
        bias = float(myG[free].mean())
    else:
        _, _, m, M = _violation(y, G, alpha, Cvec)
        lo, hi = (M, m) if np.isfinite(M) and np.isfinite(m) else (0.0, 0.0)
        bias = float((lo + hi) / 2.0)
    return SmoResult(alpha, bias, it, float(gap), bool(converged), history)


@dataclass(frozen=True)
class ClassifierModel:
    """Immutable trained decision model for one predicate."""

    kernel: str
    gamma: float
    C: float
    mean: tuple
    scale: tuple
    support_vectors: tuple  # standardized, tuple of tuples
    coef: tuple  # alpha_k * y_k
    bias: float
    seed: int
    constant: Optional[bool] = None  # True: always NEGATE, False: never, None: kernel model

    @classmethod
    def constant_model(cls, negate: bool, n_features: int = 0, seed: int = 0) -> "ClassifierModel":
        return cls("rbf", 0.0, 0.0, (0.0,) * n_features, (1.0,) * n_features, (), (), 0.0,
                   seed, bool(negate))

    @property
    def n_features(self) -> int:
        return len(self.mean)

    def _arrays(self):
        # cached numpy views; the dataclass stays frozen
        cache = self.__dict__.get("_np")
        if cache is None:
            sv = np.array(self.support_vectors, dtype=float).reshape(len(self.support_vectors),
                                                                     len(self.mean))
            cache = (np.array(self.mean, dtype=float), np.array(self.scale, dtype=float), sv,
                     np.array(self.coef, dtype=float))
            object.__setattr__(self, "_np", cache)
        return cache

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.constant is not None:
            return np.full(X.shape[0], 1.0 if self.constant else -1.0)
        mean, scale, sv, coef = self._arrays()
        Z = (X - mean) / scale
        return kernel_matrix(self.kernel, self.gamma, Z, sv) @ coef + self.bias

    def predict(self, x) -> bool:
        """True means NEGATE."""
        if self.constant is not None:
            return self.constant
        return bool(self.decision_function(x)[0] > 0)

    def predict_many(self, X) -> np.ndarray:
        return self.decision_function(X) > 0

    def to_json(self) -> dict:
        r = repr
        return {
            "format_version": FORMAT_VERSION,
            "kind": "constant" if self.constant is not None else "kernel-svm",
            "constant": None if self.constant is None else ("NEGATE" if self.constant else "DONT_NEGATE"),
            "kernel": self.kernel,
            "gamma": r(float(self.gamma)),
            "C": r(float(self.C)),
            "seed": self.seed,
            "mean": [r(float(v)) for v in self.mean],
            "scale": [r(float(v)) for v in self.scale],
            "support_vectors": [[r(float(v)) for v in sv] for sv in self.support_vectors],
            "coef": [r(float(v)) for v in self.coef],
            "bias": r(float(self.bias)),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ClassifierModel":
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {doc.get('format_version')!r}")
        f = float
        const = doc.get("constant")
        return cls(
            kernel=doc["kernel"],
            gamma=f(doc["gamma"]),
            C=f(doc["C"]),
            mean=tuple(f(v) for v in doc["mean"]),
            scale=tuple(f(v) for v in doc["scale"]),
            support_vectors=tuple(tuple(f(v) for v in sv) for sv in doc["support_vectors"]),
            coef=tuple(f(v) for v in doc["coef"]),
            bias=f(doc["bias"]),
            seed=int(doc["seed"]),
            constant=None if const is None else const == "NEGATE",
        )


def standardize(X: np.ndarray) -> tuple:
    """Per-column mean and scale; constant columns get scale 1."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    return mean, scale


def fit_svm(X, y, config: SvmConfig = SvmConfig(), record: bool = False) -> tuple:
    """Train on rows X with labels y in {+1 (NEGATE), -1}; returns (model, SmoResult)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    pos, neg = int((y > 0).sum()), int((y < 0).sum())
    if pos == 0 or neg == 0 or d == 0:
        negate = pos > neg
        return ClassifierModel.constant_model(negate, d, config.seed), None

    order = np.random.default_rng(config.seed).permutation(n)
    X, y = X[order], y[order]
    mean, scale = standardize(X)
    Z = (X - mean) / scale
    if config.gamma is not None:
        gamma = float(config.gamma)
    else:
        var = float(Z.var())
        gamma = 1.0 / (d * var) if var > 0 else 1.0 / d
    K = kernel_matrix(config.kernel, gamma, Z, Z)
    if config.balanced:
        w = np.where(y > 0, n / (2.0 * pos), n / (2.0 * neg))
    else:
        w = np.ones(n)
    Cvec = config.C * w
    res = smo_solve(K, y, Cvec, config.tol, config.max_iter, record)
    sv = res.alpha > 0
    model = ClassifierModel(
        kernel=config.kernel,
        gamma=gamma,
        C=float(config.C),
        mean=tuple(float(v) for v in mean),
        scale=tuple(float(v) for v in scale),
        support_vectors=tuple(tuple(float(v) for v in row) for row in Z[sv]),
        coef=tuple(float(v) for v in (res.alpha * y)[sv]),
        bias=res.bias,
        seed=config.seed,
    )
    return model, res
