"""Synthetic model hubs with controllable feature quality and
Monte-Carlo ground truth, for desk-scale end-to-end validation.

Each synthetic model lives in a Gaussian mixture world: class means sit
on a regular simplex with pairwise distance s (the separability knob),
features are means plus unit noise, and the exported logits come from
the Bayes-optimal linear head corrupted by head_noise. Ground truth is
the Monte-Carlo accuracy of the *unperturbed* Bayes head, so it measures
representation quality, not head noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .drift import make_rng, mix_seed
from .errors import BadSpec
from .tensor_io import (
    FeatureSet,
    GroundTruthTable,
    TensorBlob,
    write_ground_truth,
    write_tensor,
)

MC_SAMPLES = 100_000
SOURCE_ID = "synthsrc"
TARGET_ID = "synthtgt"


@dataclass
class SynthModelSpec:
    model_id: str
    separability: float
    dim: int
    n_classes: int
    n_samples: int
    head_noise: float
    param_count: int
    seed: int

    def __post_init__(self):
        if self.n_classes < 2:
            raise BadSpec("need at least 2 classes")
        if self.dim < self.n_classes - 1:
            raise BadSpec("dim must be >= n_classes - 1 to hold the simplex")
        if self.n_samples < 10 * self.n_classes:
            raise BadSpec("need at least 10 samples per class")
        if self.separability < 0 or self.head_noise < 0:
            raise BadSpec("separability and head_noise must be >= 0")
        if self.param_count <= 0:
            raise BadSpec("param_count must be positive")


def simplex_means(n_classes: int, dim: int, separation: float) -> np.ndarray:
    """C points in R^dim with all pairwise distances equal to separation."""
    c = n_classes
    frame = (separation / np.sqrt(2.0)) * (np.eye(c) - np.ones((c, c)) / c)
    u, s, _ = np.linalg.svd(frame, full_matrices=False)
    coords = (u * s)[:, : c - 1]
    means = np.zeros((c, dim))
    means[:, : c - 1] = coords
    return means


def bayes_head(means: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Optimal linear head for unit-covariance Gaussians with equal priors."""
    w = means.copy()
    b = -0.5 * np.sum(means**2, axis=1)
    return w, b


def gen_synthetic_model(
    spec: SynthModelSpec, labels: np.ndarray | None = None
) -> tuple[FeatureSet, tuple[np.ndarray, np.ndarray], float]:
    """Sample one model's feature set, its (perturbed) head, and the
    Monte-Carlo ground-truth accuracy of the clean Bayes head."""
    rng = make_rng(spec.seed)
    means = simplex_means(spec.n_classes, spec.dim, spec.separability)
    if labels is None:
        labels = balanced_labels(spec.n_samples, spec.n_classes, spec.seed)
    else:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (spec.n_samples,) or labels.max() >= spec.n_classes:
            raise BadSpec("supplied labels do not match the model spec")
    x = means[labels] + rng.standard_normal((spec.n_samples, spec.dim))
    w, b = bayes_head(means)
    w_noisy = w + spec.head_noise * rng.standard_normal(w.shape)
    b_noisy = b + spec.head_noise * rng.standard_normal(b.shape)
    logits = x @ w_noisy.T + b_noisy

    mc_rng = make_rng(mix_seed(spec.seed, "ground-truth"))
    y_mc = np.arange(MC_SAMPLES, dtype=np.int64) % spec.n_classes
    x_mc = means[y_mc] + mc_rng.standard_normal((MC_SAMPLES, spec.dim))
    pred = np.argmax(x_mc @ w.T + b, axis=1)
    accuracy = float(np.mean(pred == y_mc))

    fs = FeatureSet(
        features=TensorBlob.from_array(x.astype(np.float32)),
        logits=TensorBlob.from_array(logits.astype(np.float32)),
        labels=TensorBlob.from_array(labels),
    )
    return fs, (w_noisy.astype(np.float32), b_noisy.astype(np.float32)), accuracy


def balanced_labels(n: int, n_classes: int, seed: int) -> np.ndarray:
    rng = make_rng(mix_seed(seed, "labels"))
    return rng.permutation(np.arange(n, dtype=np.int64) % n_classes)


def gen_hub(
    out_dir,
    seed: int = 42,
    n_models: int = 10,
    s_range: tuple[float, float] = (0.5, 5.0),
    n_classes: int = 4,
    dim: int = 16,
    n_samples: int = 1000,
    head_noise_scale: float = 0.5,
    head_noise_const: float = 0.0,
) -> tuple[Path, GroundTruthTable]:
    """Materialize a hub directory: tensors, manifest.json, gt.csv.

    Separabilities are evenly spaced over s_range; head noise grows as
    separability shrinks (worse representations also get worse heads).
    head_noise_const adds a uniform nuisance term to every model's head,
    decorrelating logits from features without touching ground truth.
    Reproducible: the same seed yields byte-identical files.
    """
    low, high = s_range
    if n_models < 2:
        raise BadSpec("need at least 2 models")
    if not low < high:
        raise BadSpec(f"s_range low {low} must be < high {high}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seps = np.linspace(low, high, n_models)
    counts = make_rng(mix_seed(seed, "param-counts")).permutation(n_models)
    labels = balanced_labels(n_samples, n_classes, mix_seed(seed, TARGET_ID))
    write_tensor(TensorBlob.from_array(labels), out / "labels.npy")
    models = []
    gt_entries = {}
    for i, s in enumerate(seps):
        model_id = f"synth{i:02d}"
        spec = SynthModelSpec(
            model_id=model_id,
            separability=float(s),
            dim=dim,
            n_classes=n_classes,
            n_samples=n_samples,
            head_noise=head_noise_scale * float(high - s) / (high - low)
            + head_noise_const,
            param_count=int(counts[i] + 1) * 1_000_000,
            seed=mix_seed(seed, model_id),
        )
        fs, (w, b), accuracy = gen_synthetic_model(spec, labels=labels)
        feat_name = f"{model_id}_features.npy"
        logit_name = f"{model_id}_logits.npy"
        head_name = f"{model_id}_head.npy"
        write_tensor(fs.features, out / feat_name)
        write_tensor(fs.logits, out / logit_name)
        head = np.concatenate([w, b[:, None]], axis=1)
        write_tensor(TensorBlob.from_array(head), out / head_name)
        models.append(
            {
                "model_id": model_id,
                "source_dataset": SOURCE_ID,
                "param_count": spec.param_count,
                "features": {TARGET_ID: feat_name},
                "logits": {TARGET_ID: logit_name},
                "head_weights": head_name,
            }
        )
        for strategy in ("head", "full"):
            gt_entries[(model_id, TARGET_ID, strategy)] = accuracy
    manifest = {
        "version": 1,
        "datasets": [TARGET_ID],
        "labels": {TARGET_ID: "labels.npy"},
        "models": models,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    table = GroundTruthTable(gt_entries)
    write_ground_truth(table, out / "gt.csv")
    return manifest_path, table
