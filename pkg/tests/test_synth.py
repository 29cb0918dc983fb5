import hashlib
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import norm

from xferbench.errors import BadSpec
from xferbench.synth import (
    SynthModelSpec,
    bayes_head,
    gen_hub,
    gen_synthetic_model,
    simplex_means,
)
from xferbench.tensor_io import load_hub


def spec(**kw):
    base = dict(
        model_id="m",
        separability=2.0,
        dim=4,
        n_classes=2,
        n_samples=100,
        head_noise=0.0,
        param_count=1,
        seed=3,
    )
    base.update(kw)
    return SynthModelSpec(**base)


def test_simplex_means_pairwise_distance():
    for c, d, s in [(2, 4, 3.0), (4, 16, 1.5), (5, 8, 0.7)]:
        means = simplex_means(c, d, s)
        for i in range(c):
            for j in range(i + 1, c):
                assert np.linalg.norm(means[i] - means[j]) == pytest.approx(s)


def test_zero_separation_is_chance_level():
    _, _, acc = gen_synthetic_model(spec(separability=0.0))
    assert 0.49 <= acc <= 0.51


def test_binary_accuracy_matches_closed_form():
    # two unit-noise Gaussians at distance s: Bayes accuracy = Phi(s/2)
    _, _, acc = gen_synthetic_model(spec(separability=4.0, dim=2))
    assert acc == pytest.approx(norm.cdf(2.0), abs=0.005)


def test_seed_changes_bits_not_distribution():
    fs1, _, acc1 = gen_synthetic_model(spec(seed=1, separability=3.0))
    fs2, _, acc2 = gen_synthetic_model(spec(seed=2, separability=3.0))
    assert fs1.features.data.tobytes() != fs2.features.data.tobytes()
    assert abs(acc1 - acc2) < 0.01


def test_bad_spec_rejected():
    with pytest.raises(BadSpec):
        spec(n_classes=1)
    with pytest.raises(BadSpec):
        spec(n_samples=5)
    with pytest.raises(BadSpec):
        spec(dim=1, n_classes=4)


def test_bayes_head_is_optimal_boundary():
    means = simplex_means(3, 4, 2.0)
    w, b = bayes_head(means)
    # each class mean is classified as its own class
    assert np.argmax(means @ w.T + b, axis=1).tolist() == [0, 1, 2]


def _dir_hash(d: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(d.rglob("*")):
        if p.is_file():
            h.update(p.name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_gen_hub_monotone_ground_truth(tmp_path):
    _, table = gen_hub(tmp_path, seed=42, n_models=10)
    accs = [table.entries[(f"synth{i:02d}", "synthtgt", "head")] for i in range(10)]
    assert all(a < b for a, b in zip(accs, accs[1:]))


def test_gen_hub_entry_count(tmp_path):
    _, table = gen_hub(tmp_path, seed=1, n_models=2)
    assert len(table.entries) == 2 * 2  # 2 models x {head, full}


def test_gen_hub_deterministic(tmp_path):
    gen_hub(tmp_path / "a", seed=7, n_models=3, n_samples=200)
    gen_hub(tmp_path / "b", seed=7, n_models=3, n_samples=200)
    assert _dir_hash(tmp_path / "a") == _dir_hash(tmp_path / "b")


def test_gen_hub_validates(tmp_path):
    manifest_path, _ = gen_hub(tmp_path, seed=5, n_models=3, n_samples=200)
    hub = load_hub(manifest_path)
    assert len(hub.feature_sets) == 3
    assert all(fs.labels is not None for fs in hub.feature_sets.values())


def test_gen_hub_bad_range(tmp_path):
    with pytest.raises(BadSpec):
        gen_hub(tmp_path, s_range=(5.0, 1.0))
