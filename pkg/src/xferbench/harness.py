"""Evaluation harness: rank correlations against ground truth and the
three experiment axes (source dataset, complexity subset, fine-tuning
strategy) over a loaded hub."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, metrics
from .drift import TrainConfig, drift_score, mix_seed, transferability_wasserstein
from .errors import (
    BadLevel,
    BadSpec,
    InputError,
    MissingGroundTruth,
    TooFewModels,
    UnknownStrategy,
    WindowTooLarge,
)
from .metrics import MetricId, ScoreValue
from .tensor_io import (
    STRATEGIES,
    GroundTruthTable,
    HubManifest,
    LoadedHub,
    ModelRecord,
)


@dataclass
class RankingPair:
    ground: np.ndarray
    scores: np.ndarray
    model_ids: list[str]

    def __post_init__(self):
        self.ground = np.asarray(self.ground, dtype=np.float64)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if (
            self.ground.ndim != 1
            or self.ground.shape != self.scores.shape
            or len(self.model_ids) != self.ground.size
        ):
            raise TooFewModels("ground, scores, model_ids must align")
        if self.ground.size < 2:
            raise TooFewModels(f"need >= 2 models, got {self.ground.size}")
        if not (np.isfinite(self.ground).all() and np.isfinite(self.scores).all()):
            raise TooFewModels("NaN/Inf in ranking pair")


def kendall_tau(rp: RankingPair) -> float:
    """Plain tau-a: concordant minus discordant over all pairs; ties in
    either vector contribute zero."""
    m = rp.ground.size
    w = np.full(m, 0.5)
    num, den = kernels.weighted_pair_sums(rp.ground, rp.scores, w)
    return num / den


def _rank_weights(ground: np.ndarray) -> np.ndarray:
    """Hyperbolic weights 1/(1+rank) from ground-truth ranks, rank 0 being
    the best model; ties take the mean weight of their tied positions."""
    m = ground.size
    order = np.argsort(-ground, kind="stable")
    pos_w = 1.0 / (1.0 + np.arange(m))
    sorted_g = ground[order]
    w = np.empty(m)
    i = 0
    while i < m:
        j = i
        while j < m and sorted_g[j] == sorted_g[i]:
            j += 1
        w[order[i:j]] = pos_w[i:j].mean()
        i = j
    return w


def weighted_kendall_tau(rp: RankingPair) -> float:
    """Additively weighted tau emphasizing the top of the ground-truth
    ranking: pair weight w_i + w_j with w = 1/(1+rank)."""
    w = _rank_weights(rp.ground)
    num, den = kernels.weighted_pair_sums(rp.ground, rp.scores, w)
    return num / den


@dataclass
class ComplexityAxis:
    levels: int
    window: int

    def __post_init__(self):
        if self.levels < 1:
            raise BadSpec("complexity levels must be >= 1")
        if self.window < 2:
            raise BadSpec("complexity window must be >= 2")


def complexity_subset(
    hub: HubManifest, level: int, l_total: int, k: int
) -> list[ModelRecord]:
    """Contiguous window of size k over the hub sorted by ascending
    parameter count; level 1 starts at the lightest models, level
    l_total at the heaviest."""
    models = sorted(hub.models, key=lambda m: (m.param_count, m.model_id))
    m = len(models)
    if k > m:
        raise WindowTooLarge(f"window {k} exceeds hub size {m}")
    if not 1 <= level <= l_total:
        raise BadLevel(f"level {level} outside [1, {l_total}]")
    if l_total == 1:
        offset = 0
    else:
        offset = int((level - 1) * (m - k) / (l_total - 1) + 0.5)
    return models[offset : offset + k]


@dataclass
class ExperimentSpec:
    sources: list[str]
    targets: list[str]
    metrics: list[MetricId]
    strategies: list[str] = field(default_factory=lambda: ["head"])
    complexity: ComplexityAxis | None = None
    seed: int = 42
    metric_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.sources and self.targets and self.metrics):
            raise BadSpec("sources, targets, and metrics must be non-empty")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise UnknownStrategy(f"strategy {s!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        if not isinstance(doc, dict):
            raise BadSpec("experiment spec must be a JSON object")
        try:
            metric_ids = [MetricId(m) for m in doc.get("metrics", [])]
        except ValueError as exc:
            raise BadSpec(f"unknown metric: {exc}") from None
        complexity = None
        if doc.get("complexity"):
            c = doc["complexity"]
            complexity = ComplexityAxis(
                levels=int(c.get("levels", 5)), window=int(c.get("window", 7))
            )
        return cls(
            sources=list(doc.get("sources", [])),
            targets=list(doc.get("targets", [])),
            metrics=metric_ids,
            strategies=list(doc.get("strategies", ["head"])),
            complexity=complexity,
            seed=int(doc.get("seed", 42)),
            metric_params=dict(doc.get("metric_params", {})),
        )


@dataclass(frozen=True)
class Cell:
    source: str
    target: str
    metric: MetricId
    strategy: str
    level: int | None
    tau_w: float
    tau: float
    n_models: int


@dataclass(frozen=True)
class AggregateRow:
    source: str
    metric: MetricId
    strategy: str
    mean_tau_w: float
    n_cells: int


@dataclass
class ResultTable:
    cells: list[Cell]
    aggregates: list[AggregateRow] = field(default_factory=list)
    subset_sigma: dict[MetricId, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    scores: list[ScoreValue] = field(default_factory=list)


def compute_score(
    hub: LoadedHub,
    model_id: str,
    target: str,
    metric: MetricId,
    strategy: str,
    experiment_seed: int,
    metric_params: dict | None = None,
) -> ScoreValue:
    """Score one (model, target) pair with one metric. Drift metrics use
    the per-cell mixed seed; feature metrics are deterministic."""
    params = metric_params or {}
    fs = hub.feature_sets.get((model_id, target))
    if fs is None:
        raise InputError(f"no features for ({model_id}, {target})")
    if metric.is_drift:
        pre = hub.snapshots.get((model_id, target))
        if pre is not None:
            value = drift_score(pre[0], pre[1], metric)
        else:
            cfg = TrainConfig(
                lr=float(params.get("lr", 0.01)),
                epochs=int(params.get("epochs", 2)),
                batch_size=int(params.get("batch_size", 64)),
                seed=mix_seed(experiment_seed, model_id, target),
                strategy=strategy,
            )
            head = hub.head_weights.get(model_id, (None, None))
            return transferability_wasserstein(
                fs,
                head[0],
                head[1],
                cfg,
                metric,
                model_id=model_id,
                target_dataset=target,
            )
        return ScoreValue(metric, value, model_id, target, strategy)
    if metric.needs_labels and fs.labels is None:
        raise InputError(
            f"metric {metric} needs target labels; none for ({model_id}, {target})"
        )
    feats = fs.features.array()
    logits = fs.logits.array()
    labels = fs.labels.array() if fs.labels is not None else None
    if metric == MetricId.LOGME:
        value = metrics.logme(
            feats,
            labels,
            max_iter=int(params.get("max_iter", 100)),
            tol=float(params.get("tol", 1e-6)),
        )
    elif metric == MetricId.LEEP:
        value = metrics.leep(metrics.softmax(logits), labels)
    elif metric == MetricId.NCE:
        value = metrics.nce(np.argmax(logits, axis=1).astype(np.int64), labels)
    elif metric == MetricId.ENERGY:
        value = metrics.energy_score(logits)
    elif metric == MetricId.LDASEP:
        value = metrics.lda_separability(
            feats, labels, shrinkage=float(params.get("lambda", 0.1))
        )
    else:  # pragma: no cover
        raise InputError(f"unhandled metric {metric}")
    return ScoreValue(metric, value, model_id, target, strategy)


def _score_key(model_id: str, target: str, metric: MetricId, strategy: str):
    # feature metrics are strategy-independent; drift probes depend on it
    return (model_id, target, metric, strategy if metric.is_drift else "")


def run_experiment(
    spec: ExperimentSpec,
    hub: LoadedHub,
    ground_truth: GroundTruthTable,
    jobs: int = 1,
) -> ResultTable:
    """Evaluate every (source, target, metric, strategy, level) cell.

    Cells with fewer than 2 models after filtering are recorded as
    warnings, not errors. Output is independent of evaluation order and
    job count.
    """
    manifest = hub.manifest
    levels = (
        list(range(1, spec.complexity.levels + 1)) if spec.complexity else [None]
    )
    # enumerate the score computations each cell needs, deduplicated
    tasks: dict[tuple, tuple] = {}
    cell_plans = []
    for source in spec.sources:
        source_models = [m for m in manifest.models if m.source_dataset == source]
        for level in levels:
            if level is None:
                pool = source_models
            else:
                window = complexity_subset(
                    manifest, level, spec.complexity.levels, spec.complexity.window
                )
                allowed = {m.model_id for m in window}
                pool = [m for m in source_models if m.model_id in allowed]
            for target in spec.targets:
                if target == source:
                    continue  # blank diagonal
                eligible = [
                    m for m in pool if (m.model_id, target) in hub.feature_sets
                ]
                for metric in spec.metrics:
                    for strategy in spec.strategies:
                        key = (source, target, metric, strategy, level)
                        if len(eligible) < 2:
                            cell_plans.append((key, None))
                            continue
                        for m in eligible:
                            tasks[_score_key(m.model_id, target, metric, strategy)] = (
                                m.model_id,
                                target,
                                metric,
                                strategy,
                            )
                        cell_plans.append((key, [m.model_id for m in eligible]))

    def run_task(args):
        model_id, target, metric, strategy = args
        return compute_score(
            hub, model_id, target, metric, strategy, spec.seed, spec.metric_params
        )

    ordered = sorted(tasks.items())
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_task, [a for _, a in ordered]))
    else:
        results = [run_task(a) for _, a in ordered]
    score_map = {k: sv for (k, _), sv in zip(ordered, results)}

    cells = []
    warnings = []
    all_scores = []
    seen_scores = set()
    for (source, target, metric, strategy, level), model_ids in cell_plans:
        tag = f"source={source} target={target} metric={metric} strategy={strategy}" + (
            f" level={level}" if level is not None else ""
        )
        if model_ids is None:
            warnings.append(f"cell absent (fewer than 2 models): {tag}")
            continue
        ground = []
        scores = []
        for mid in model_ids:
            g = ground_truth.get(mid, target, strategy)
            if g is None:
                raise MissingGroundTruth(
                    f"no ground truth for ({mid}, {target}, {strategy})"
                )
            sv = score_map[_score_key(mid, target, metric, strategy)]
            ground.append(g)
            scores.append(sv.value)
            sk = (mid, target, metric, strategy)
            if sk not in seen_scores:
                seen_scores.add(sk)
                all_scores.append(
                    ScoreValue(metric, sv.value, mid, target, strategy)
                )
        rp = RankingPair(np.array(ground), np.array(scores), list(model_ids))
        cells.append(
            Cell(
                source=source,
                target=target,
                metric=metric,
                strategy=strategy,
                level=level,
                tau_w=weighted_kendall_tau(rp),
                tau=kendall_tau(rp),
                n_models=len(model_ids),
            )
        )
    cells.sort(key=lambda c: (c.source, c.target, str(c.metric), c.strategy, c.level or 0))
    all_scores.sort(key=lambda s: (s.model_id, s.target_dataset, str(s.metric), s.strategy))
    return ResultTable(cells=cells, warnings=sorted(warnings), scores=all_scores)


def aggregate(rt: ResultTable) -> ResultTable:
    """Fill per-(source, metric, strategy) mean rows, overall means across
    sources, and the per-metric standard deviation of tau_w across
    complexity levels (population sigma)."""
    groups: dict[tuple, list[float]] = {}
    for c in rt.cells:
        groups.setdefault((c.source, c.metric, c.strategy), []).append(c.tau_w)
    aggregates = [
        AggregateRow(source=s, metric=m, strategy=st, mean_tau_w=float(np.mean(v)), n_cells=len(v))
        for (s, m, st), v in sorted(groups.items(), key=lambda kv: (kv[0][0], str(kv[0][1]), kv[0][2]))
    ]
    overall: dict[tuple, list[float]] = {}
    for row in aggregates:
        overall.setdefault((row.metric, row.strategy), []).append(row.mean_tau_w)
    for (m, st), v in sorted(overall.items(), key=lambda kv: (str(kv[0][0]), kv[0][1])):
        aggregates.append(
            AggregateRow(
                source="(all)",
                metric=m,
                strategy=st,
                mean_tau_w=float(np.mean(v)),
                n_cells=len(v),
            )
        )
    sigma: dict[MetricId, float] = {}
    by_metric_level: dict[MetricId, dict[int, list[float]]] = {}
    for c in rt.cells:
        if c.level is not None:
            by_metric_level.setdefault(c.metric, {}).setdefault(c.level, []).append(
                c.tau_w
            )
    for m, per_level in by_metric_level.items():
        level_means = [np.mean(v) for _, v in sorted(per_level.items())]
        sigma[m] = float(np.std(level_means))
    return ResultTable(
        cells=rt.cells,
        aggregates=aggregates,
        subset_sigma=sigma,
        warnings=rt.warnings,
        scores=rt.scores,
    )
