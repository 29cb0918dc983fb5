"""Feature-based transferability scores.

Every score is a scalar where higher means more transferable; sign
conventions are normalized at construction (distances are negated by
the drift module, entropies are already <= 0 here).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import (
    DegenerateLabels,
    DimensionMismatch,
    EmptyInput,
    LengthMismatch,
    NotAProbability,
    SingularCovariance,
)


class MetricId(str, Enum):
    LOGME = "logme"
    LEEP = "leep"
    NCE = "nce"
    ENERGY = "energy"
    LDASEP = "ldasep"
    WASSERSTEIN_DRIFT = "wassersteindrift"
    L1_DRIFT = "l1drift"
    L2_DRIFT = "l2drift"

    def __str__(self):
        return self.value

    @property
    def is_drift(self) -> bool:
        return self in (
            MetricId.WASSERSTEIN_DRIFT,
            MetricId.L1_DRIFT,
            MetricId.L2_DRIFT,
        )

    @property
    def needs_labels(self) -> bool:
        return not self.is_drift and self != MetricId.ENERGY


DRIFT_METRICS = (MetricId.WASSERSTEIN_DRIFT, MetricId.L1_DRIFT, MetricId.L2_DRIFT)


@dataclass(frozen=True)
class ScoreValue:
    metric: MetricId
    value: float
    model_id: str
    target_dataset: str
    strategy: str

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"non-finite score {self.value} for {self.model_id}")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def logme(features, labels, max_iter: int = 100, tol: float = 1e-6) -> float:
    """Mean over classes of the per-sample maximized log-evidence of the
    one-vs-rest Bayesian linear model, via fixed-point updates of the
    prior/noise precisions (alpha, beta)."""
    f = np.asarray(features, dtype=np.float64)
    y_all = np.asarray(labels)
    if f.ndim != 2:
        raise DimensionMismatch("features must be 2-d")
    n, d = f.shape
    if y_all.shape != (n,):
        raise DimensionMismatch(f"labels shape {y_all.shape} vs N={n}")
    classes = np.unique(y_all)
    if classes.size < 2:
        raise DegenerateLabels("need at least 2 distinct labels")
    sigma, v = np.linalg.eigh(f.T @ f)
    sigma = np.maximum(sigma, 0.0)
    evidences = []
    for c in classes:
        y = (y_all == c).astype(np.float64)
        z = v.T @ (f.T @ y)
        yty = float(y @ y)
        alpha, beta = 1.0, 1.0
        for _ in range(max_iter):
            denom = alpha + beta * sigma
            m_coef = beta * z / denom
            m2 = float(m_coef @ m_coef)
            res2 = max(yty - 2.0 * float(m_coef @ z) + float(sigma @ m_coef**2), 0.0)
            gamma = float(np.sum(beta * sigma / denom))
            alpha_new = gamma / (m2 + 1e-12)
            beta_new = (n - gamma) / (res2 + 1e-12)
            if (
                abs(alpha_new - alpha) / alpha < tol
                and abs(beta_new - beta) / beta < tol
            ):
                alpha, beta = alpha_new, beta_new
                break
            alpha, beta = alpha_new, beta_new
        denom = alpha + beta * sigma
        m_coef = beta * z / denom
        m2 = float(m_coef @ m_coef)
        res2 = max(yty - 2.0 * float(m_coef @ z) + float(sigma @ m_coef**2), 0.0)
        ev = 0.5 * (
            d * np.log(alpha)
            + n * np.log(beta)
            - beta * res2
            - alpha * m2
            - float(np.sum(np.log(denom)))
            - n * np.log(2.0 * np.pi)
        )
        evidences.append(ev / n)
    return float(np.mean(evidences))


def leep(source_probs, labels) -> float:
    """Log expected empirical prediction of target labels through the
    source-head probability simplex. Always <= 0."""
    p = np.asarray(source_probs, dtype=np.float64)
    y = np.asarray(labels)
    if p.ndim != 2 or p.shape[0] == 0:
        raise EmptyInput("source_probs must be non-empty [N x C_s]")
    n, _ = p.shape
    if y.shape != (n,):
        raise DimensionMismatch(f"labels shape {y.shape} vs N={n}")
    if np.any(p < -1e-12) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-5):
        raise NotAProbability("rows must be non-negative and sum to 1")
    n_target = int(y.max()) + 1
    joint = np.zeros((n_target, p.shape[1]))
    np.add.at(joint, y, p)
    joint /= n
    marg_z = joint.sum(axis=0)
    cond = np.divide(
        joint, marg_z, out=np.zeros_like(joint), where=marg_z > 0
    )  # P(y | z)
    eep = np.sum(cond[y] * p, axis=1)
    return float(np.mean(np.log(eep)))


def nce(pseudo_source_labels, labels) -> float:
    """Negative conditional entropy -H(Y | Z); 0 iff Z determines Y."""
    z = np.asarray(pseudo_source_labels)
    y = np.asarray(labels)
    if z.shape != y.shape or z.ndim != 1:
        raise LengthMismatch(f"shapes {z.shape} vs {y.shape}")
    if z.size == 0:
        raise EmptyInput("empty label vectors")
    n = z.size
    _, zi = np.unique(z, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    joint = np.zeros((yi.max() + 1, zi.max() + 1))
    np.add.at(joint, (yi, zi), 1.0)
    joint /= n
    pz = joint.sum(axis=0)
    mask = joint > 0
    pz_full = np.broadcast_to(pz, joint.shape)
    return float(np.sum(joint[mask] * np.log(joint[mask] / pz_full[mask])))


def energy_score(logits) -> float:
    """Mean log-sum-exp of the source logits; higher means more
    in-distribution for the pre-trained model."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] == 0:
        raise EmptyInput("logits must be non-empty [N x C]")
    if z.shape[1] < 2:
        raise DimensionMismatch("need at least 2 classes")
    return float(np.mean(logsumexp(z, axis=1)))


def lda_separability(features, labels, shrinkage: float = 0.1) -> float:
    """Mean log-posterior of the true labels under a shared-covariance
    Gaussian class model with shrinkage-regularized pooled covariance."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DimensionMismatch("features [N x D] and labels [N] required")
    if not 0.0 <= shrinkage <= 1.0:
        raise ValueError(f"shrinkage {shrinkage} outside [0, 1]")
    n, d = x.shape
    classes, counts = np.unique(y, return_counts=True)
    k = classes.size
    if k < 2 or np.any(counts < 1):
        raise DegenerateLabels("need >= 2 classes, each with >= 1 sample")
    if n <= k:
        raise DegenerateLabels(f"N={n} must exceed class count {k}")
    means = np.stack([x[y == c].mean(axis=0) for c in classes])
    priors = counts / n
    pooled = np.zeros((d, d))
    for c, mu in zip(classes, means):
        diff = x[y == c] - mu
        pooled += diff.T @ diff
    pooled /= n - k
    cov = (1.0 - shrinkage) * pooled + shrinkage * (np.trace(pooled) / d) * np.eye(d)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise SingularCovariance(
            f"pooled covariance singular at shrinkage={shrinkage}"
        ) from None
    # log p(c | x) up to the shared Gaussian normalizer, which cancels
    diffs = x[:, None, :] - means[None, :, :]  # [N, K, D]
    flat = diffs.reshape(-1, d).T
    white = solve_triangular(chol, flat, lower=True).T.reshape(n, k, d)
    disc = np.log(priors)[None, :] - 0.5 * np.sum(white**2, axis=2)
    logpost = disc - logsumexp(disc, axis=1, keepdims=True)
    idx = np.searchsorted(classes, y)
    return float(np.mean(logpost[np.arange(n), idx]))
