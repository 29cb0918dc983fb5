"""Label-free weight-drift transferability: pseudo-label the target set,
briefly fine-tune a linear probe, and score the negated distance between
the before/after parameter snapshots.

The probe is a desk-scale proxy for full-network fine-tuning: head-only
training mirrors the head-training strategy; the full strategy adds an
identity-initialized D x D adapter whose drift from identity stands in
for backbone adaptation. Externally produced before/after snapshots can
be scored directly via drift_score.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    DimensionMismatch,
    EmptyDistribution,
    EmptyInput,
    NonFiniteLoss,
    ShapeMismatch,
    StructureMismatch,
)
from .metrics import MetricId, ScoreValue
from .tensor_io import FeatureSet, WeightSnapshot

HEAD_ONLY = "head"
ADAPTER_FULL = "full"


def mix_seed(experiment_seed: int, *parts: str) -> int:
    """Derive a per-cell 64-bit seed from the experiment seed and string
    identifiers (model id, target dataset), stable across platforms."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(experiment_seed).to_bytes(8, "little", signed=False))
    for part in parts:
        h.update(len(part).to_bytes(4, "little"))
        h.update(part.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed))


@dataclass
class TrainConfig:
    lr: float = 0.01
    epochs: int = 2
    batch_size: int = 64
    seed: int = 0
    strategy: str = HEAD_ONLY
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.strategy not in (HEAD_ONLY, ADAPTER_FULL):
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass
class ProbeParams:
    strategy: str
    head_w: np.ndarray  # [C_s x D] float32
    head_b: np.ndarray  # [C_s] float32
    adapter: np.ndarray | None = None  # [D x D] float32, AdapterFull only

    def __post_init__(self):
        if self.strategy == ADAPTER_FULL and self.adapter is None:
            raise ShapeMismatch("full strategy requires an adapter matrix")

    def flatten(self) -> WeightSnapshot:
        segments = []
        if self.adapter is not None:
            segments.append(("adapter", self.adapter.ravel().copy()))
        segments.append(("head_w", self.head_w.ravel().copy()))
        segments.append(("head_b", self.head_b.ravel().copy()))
        return WeightSnapshot(segments)


@dataclass
class PseudoLabels:
    values: np.ndarray  # i64 [N]


def pseudo_labels(logits) -> PseudoLabels:
    """Per-row argmax of the source-head logits; ties go to the lowest
    class index."""
    z = np.asarray(logits)
    if z.ndim != 2 or z.shape[0] == 0:
        raise EmptyInput("logits must be non-empty [N x C]")
    return PseudoLabels(np.argmax(z, axis=1).astype(np.int64))


def init_probe(
    head_w,
    head_b,
    strategy: str,
    dim: int,
    n_classes: int,
    seed: int = 0,
) -> ProbeParams:
    """Head initialized from the supplied classifier weights when present,
    else zeros; the full-strategy adapter starts at identity."""
    if head_w is not None:
        head_w = np.asarray(head_w, dtype=np.float32)
        if head_w.shape != (n_classes, dim):
            raise ShapeMismatch(
                f"head weights {head_w.shape} vs expected ({n_classes}, {dim})"
            )
        head_w = head_w.copy()
    else:
        head_w = np.zeros((n_classes, dim), dtype=np.float32)
    if head_b is not None:
        head_b = np.asarray(head_b, dtype=np.float32)
        if head_b.shape != (n_classes,):
            raise ShapeMismatch(f"head bias {head_b.shape} vs ({n_classes},)")
        head_b = head_b.copy()
    else:
        head_b = np.zeros(n_classes, dtype=np.float32)
    adapter = None
    if strategy == ADAPTER_FULL:
        adapter = np.eye(dim, dtype=np.float32)
    return ProbeParams(strategy=strategy, head_w=head_w, head_b=head_b, adapter=adapter)


def finetune_probe(
    features,
    pseudo: PseudoLabels,
    probe0: ProbeParams,
    cfg: TrainConfig,
) -> tuple[WeightSnapshot, WeightSnapshot, list[float]]:
    """Minibatch SGD on mean cross-entropy against the pseudo-labels.

    Returns the flattened parameters before and after training plus the
    mean loss per epoch. Fully deterministic given inputs and config;
    shuffling is driven solely by cfg.seed.
    """
    x = np.ascontiguousarray(features, dtype=np.float32)
    y = np.ascontiguousarray(pseudo.values, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DimensionMismatch(
            f"features {x.shape} vs pseudo-labels {y.shape}"
        )
    n, dim = x.shape
    n_classes = probe0.head_w.shape[0]
    if probe0.head_w.shape != (n_classes, dim):
        raise DimensionMismatch("probe head does not match feature dim")
    if y.max() >= n_classes:
        raise DimensionMismatch("pseudo-label outside head class range")
    theta0 = probe0.flatten()
    w = probe0.head_w.copy()
    b = probe0.head_b.copy()
    rng = make_rng(cfg.seed)
    order = np.empty((cfg.epochs, n), dtype=np.int64)
    for e in range(cfg.epochs):
        order[e] = rng.permutation(n) if cfg.shuffle else np.arange(n)
    if probe0.strategy == ADAPTER_FULL:
        a = probe0.adapter.copy()
        losses = kernels.sgd_adapter_epochs(
            x, y, a, w, b, order, cfg.batch_size, cfg.lr
        )
        probe1 = ProbeParams(ADAPTER_FULL, w, b, a)
    else:
        losses = kernels.sgd_head_epochs(x, y, w, b, order, cfg.batch_size, cfg.lr)
        probe1 = ProbeParams(HEAD_ONLY, w, b)
    loss_trace = [float(v) for v in losses]
    theta1 = probe1.flatten()
    if not all(np.isfinite(v) for v in loss_trace) or not np.isfinite(
        theta1.flat()
    ).all():
        raise NonFiniteLoss(
            f"training diverged (lr={cfg.lr}); lower the learning rate"
        )
    return theta0, theta1, loss_trace


def wasserstein_1d(p, q) -> float:
    """Exact 1-Wasserstein distance between two empirical measures on the
    line, via the merged-breakpoint quantile integral."""
    u = np.sort(np.asarray(p, dtype=np.float64).ravel())
    v = np.sort(np.asarray(q, dtype=np.float64).ravel())
    if u.size == 0 or v.size == 0:
        raise EmptyDistribution("empty weight multiset")
    if u.size == v.size:
        return float(np.mean(np.abs(u - v)))
    allv = np.concatenate([u, v])
    allv.sort(kind="mergesort")
    deltas = np.diff(allv)
    cdf_u = np.searchsorted(u, allv[:-1], side="right") / u.size
    cdf_v = np.searchsorted(v, allv[:-1], side="right") / v.size
    return float(np.sum(np.abs(cdf_u - cdf_v) * deltas))


def elementwise_distance(a: WeightSnapshot, b: WeightSnapshot, order: str) -> float:
    """L1 = mean absolute difference; L2 = root mean squared difference."""
    if not a.same_structure(b):
        raise StructureMismatch("snapshots have different segment structure")
    da = a.flat().astype(np.float64)
    db = b.flat().astype(np.float64)
    diff = da - db
    if order == "l1":
        return float(np.mean(np.abs(diff)))
    if order == "l2":
        return float(np.sqrt(np.mean(diff**2)))
    raise ValueError(f"unknown order {order!r}")


def drift_score(
    theta0: WeightSnapshot, theta1: WeightSnapshot, metric: MetricId
) -> float:
    """Negated distance between snapshots: 0 is maximal (no drift)."""
    if not theta0.same_structure(theta1):
        raise StructureMismatch("snapshots have different segment structure")
    if metric == MetricId.WASSERSTEIN_DRIFT:
        return -wasserstein_1d(theta0.flat(), theta1.flat())
    if metric == MetricId.L1_DRIFT:
        return -elementwise_distance(theta0, theta1, "l1")
    if metric == MetricId.L2_DRIFT:
        return -elementwise_distance(theta0, theta1, "l2")
    raise ValueError(f"{metric} is not a drift metric")


def transferability_wasserstein(
    fs: FeatureSet,
    head_w,
    head_b,
    cfg: TrainConfig,
    metric: MetricId = MetricId.WASSERSTEIN_DRIFT,
    model_id: str = "",
    target_dataset: str = "",
) -> ScoreValue:
    """Pseudo-label, train the probe, score negated drift. Never reads
    fs.labels; the label-free contract holds by construction."""
    fs = fs.without_labels()
    pl = pseudo_labels(fs.logits.array())
    probe0 = init_probe(
        head_w, head_b, cfg.strategy, fs.dim, fs.n_source_classes, cfg.seed
    )
    theta0, theta1, _ = finetune_probe(fs.features.array(), pl, probe0, cfg)
    return ScoreValue(
        metric=metric,
        value=drift_score(theta0, theta1, metric),
        model_id=model_id,
        target_dataset=target_dataset,
        strategy=cfg.strategy,
    )
