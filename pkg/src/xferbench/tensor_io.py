"""Interchange tensor container, hub manifest, and ground-truth loading.

Tensor files use the "\\x93NUMPY" v1.0 byte layout restricted to
little-endian '<f4' / '<i8', C order, header padded so that header
plus preamble is a multiple of 64 bytes. The reader is strict: any
deviation maps to one of the errors in :mod:`xferbench.errors`.
"""

from __future__ import annotations

import ast
import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadHeader,
    BadMagic,
    CrossValidation,
    DuplicateModel,
    ManifestParse,
    MissingFile,
    NonFinite,
    ParseError,
    RangeError,
    ShapeMismatch,
    UnknownStrategy,
    UnsupportedDtype,
)

_MAGIC = b"\x93NUMPY"
_DESCR = {"f32": "<f4", "i64": "<i8"}
_DTYPE = {"f32": np.dtype("<f4"), "i64": np.dtype("<i8")}
_DESCR_INV = {v: k for k, v in _DESCR.items()}

STRATEGIES = ("head", "full")


class TensorBlob:
    """Validated dtype/shape/data container. Data is flat, row-major."""

    __slots__ = ("dtype", "shape", "data")

    def __init__(self, dtype: str, shape, data):
        if dtype not in _DESCR:
            raise UnsupportedDtype(f"dtype {dtype!r} not in {sorted(_DESCR)}")
        shape = tuple(int(s) for s in shape)
        if any(s < 0 for s in shape):
            raise ShapeMismatch(f"negative dimension in shape {shape}")
        data = np.ascontiguousarray(data, dtype=_DTYPE[dtype]).reshape(-1)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if data.size != n:
            raise ShapeMismatch(
                f"shape {shape} implies {n} elements, data has {data.size}"
            )
        if dtype == "f32" and not np.isfinite(data).all():
            raise NonFinite("tensor contains NaN or Inf")
        self.dtype = dtype
        self.shape = shape
        self.data = data

    @classmethod
    def from_array(cls, arr) -> "TensorBlob":
        arr = np.asarray(arr)
        if arr.dtype.kind == "f":
            return cls("f32", arr.shape, arr.astype("<f4").ravel())
        if arr.dtype.kind in "iu":
            return cls("i64", arr.shape, arr.astype("<i8").ravel())
        raise UnsupportedDtype(f"cannot map dtype {arr.dtype} to f32/i64")

    def array(self) -> np.ndarray:
        return self.data.reshape(self.shape)

    def __eq__(self, other):
        return (
            isinstance(other, TensorBlob)
            and self.dtype == other.dtype
            and self.shape == other.shape
            and self.data.tobytes() == other.data.tobytes()
        )

    def __repr__(self):
        return f"TensorBlob(dtype={self.dtype!r}, shape={self.shape})"


def write_tensor(blob: TensorBlob, path) -> None:
    header = "{'descr': '%s', 'fortran_order': False, 'shape': %r, }" % (
        _DESCR[blob.dtype],
        blob.shape,
    )
    preamble = len(_MAGIC) + 2 + 2  # magic + version + u16 length field
    pad = (-(preamble + len(header) + 1)) % 64
    header_bytes = (header + " " * pad + "\n").encode("ascii")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(bytes((1, 0)))
        f.write(struct.pack("<H", len(header_bytes)))
        f.write(header_bytes)
        f.write(blob.data.tobytes())


def read_tensor(path) -> TensorBlob:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    raw = path.read_bytes()
    if raw[:6] != _MAGIC:
        raise BadMagic(f"{path}: bad magic bytes")
    if raw[6:8] != bytes((1, 0)):
        raise BadHeader(f"{path}: unsupported container version {raw[6:8]!r}")
    if len(raw) < 10:
        raise BadHeader(f"{path}: truncated header")
    (hlen,) = struct.unpack("<H", raw[8:10])
    header_bytes = raw[10 : 10 + hlen]
    if len(header_bytes) != hlen or not header_bytes.endswith(b"\n"):
        raise BadHeader(f"{path}: truncated or unterminated header")
    try:
        header = ast.literal_eval(header_bytes.decode("ascii"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise BadHeader(f"{path}: unparseable header: {exc}") from None
    if not isinstance(header, dict) or set(header) != {
        "descr",
        "fortran_order",
        "shape",
    }:
        raise BadHeader(f"{path}: unexpected header keys")
    if header["fortran_order"] is not False:
        raise BadHeader(f"{path}: fortran_order not supported")
    descr = header["descr"]
    if descr not in _DESCR_INV:
        raise UnsupportedDtype(f"{path}: descr {descr!r}")
    dtype = _DESCR_INV[descr]
    shape = header["shape"]
    if not isinstance(shape, tuple) or not all(
        isinstance(s, int) and s >= 0 for s in shape
    ):
        raise BadHeader(f"{path}: bad shape {shape!r}")
    payload = raw[10 + hlen :]
    n = int(np.prod(shape, dtype=np.int64)) if shape else 1
    expected = n * _DTYPE[dtype].itemsize
    if len(payload) != expected:
        raise ShapeMismatch(
            f"{path}: payload is {len(payload)} bytes, shape {shape} needs {expected}"
        )
    data = np.frombuffer(payload, dtype=_DTYPE[dtype])
    if dtype == "f32" and not np.isfinite(data).all():
        raise NonFinite(f"{path}: payload contains NaN or Inf")
    return TensorBlob(dtype, shape, data)


@dataclass
class FeatureSet:
    """Per-(model, dataset) bundle of features, source-head logits, labels."""

    features: TensorBlob
    logits: TensorBlob
    labels: TensorBlob | None = None

    def __post_init__(self):
        f, l = self.features, self.logits
        if f.dtype != "f32" or len(f.shape) != 2:
            raise CrossValidation("features must be f32 [N x D]")
        if l.dtype != "f32" or len(l.shape) != 2:
            raise CrossValidation("logits must be f32 [N x C]")
        n, d = f.shape
        if n < 1 or d < 1:
            raise CrossValidation("features need N >= 1 and D >= 1")
        if l.shape[0] != n:
            raise CrossValidation(
                f"features have N={n} rows but logits have {l.shape[0]}"
            )
        if l.shape[1] < 2:
            raise CrossValidation("logits need at least 2 source classes")
        if self.labels is not None:
            y = self.labels
            if y.dtype != "i64" or len(y.shape) != 1:
                raise CrossValidation("labels must be i64 [N]")
            if y.shape[0] != n:
                raise CrossValidation(
                    f"labels length {y.shape[0]} != feature rows {n}"
                )
            if y.data.size and y.data.min() < 0:
                raise CrossValidation("negative label value")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_source_classes(self) -> int:
        return self.logits.shape[1]

    def without_labels(self) -> "FeatureSet":
        return FeatureSet(self.features, self.logits, None)


@dataclass
class WeightSnapshot:
    """Flattened trainable-parameter vector with named segments."""

    segments: list[tuple[str, np.ndarray]]

    def __post_init__(self):
        names = [n for n, _ in self.segments]
        if len(set(names)) != len(names):
            raise CrossValidation(f"duplicate segment names in {names}")
        segs = []
        for name, vals in self.segments:
            vals = np.ascontiguousarray(vals, dtype=np.float32).reshape(-1)
            segs.append((name, vals))
        self.segments = segs
        if self.total_len < 1:
            raise CrossValidation("empty weight snapshot")

    @property
    def total_len(self) -> int:
        return sum(v.size for _, v in self.segments)

    def flat(self) -> np.ndarray:
        return np.concatenate([v for _, v in self.segments])

    def same_structure(self, other: "WeightSnapshot") -> bool:
        return [(n, v.size) for n, v in self.segments] == [
            (n, v.size) for n, v in other.segments
        ]


@dataclass
class ModelRecord:
    model_id: str
    source_dataset: str
    param_count: int
    feature_paths: dict[str, str]
    logit_paths: dict[str, str]
    head_weight_path: str | None = None
    snapshot_paths: dict[str, tuple[str, str]] = field(default_factory=dict)


@dataclass
class HubManifest:
    models: list[ModelRecord]
    datasets: list[str]
    version: int
    label_paths: dict[str, str] = field(default_factory=dict)

    def record(self, model_id: str) -> ModelRecord:
        for m in self.models:
            if m.model_id == model_id:
                return m
        raise MissingFile(f"model {model_id!r} not in manifest")


@dataclass
class LoadedHub:
    """Manifest plus all referenced tensors, cross-validated."""

    manifest: HubManifest
    feature_sets: dict[tuple[str, str], FeatureSet]
    head_weights: dict[str, tuple[np.ndarray, np.ndarray]]
    snapshots: dict[tuple[str, str], tuple[WeightSnapshot, WeightSnapshot]]
    root: Path


def _require(obj: dict, key: str, ctx: str):
    if key not in obj:
        raise ManifestParse(f"{ctx}: missing required key {key!r}")
    return obj[key]


def parse_manifest(manifest_path) -> HubManifest:
    path = Path(manifest_path)
    if not path.is_file():
        raise MissingFile(str(path))
    try:
        doc = json.loads(path.read_text("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestParse(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ManifestParse(f"{path}: top level must be an object")
    version = _require(doc, "version", str(path))
    datasets = _require(doc, "datasets", str(path))
    models_raw = _require(doc, "models", str(path))
    if not isinstance(models_raw, list):
        raise ManifestParse(f"{path}: 'models' must be an array")
    models = []
    seen = set()
    for entry in models_raw:
        ctx = f"{path} model entry"
        mid = _require(entry, "model_id", ctx)
        if mid in seen:
            raise DuplicateModel(f"model_id {mid!r} appears twice")
        seen.add(mid)
        pc = _require(entry, "param_count", ctx)
        if not isinstance(pc, int) or pc <= 0:
            raise ManifestParse(f"{ctx} {mid!r}: param_count must be positive")
        snaps = {}
        for ds, pair in (entry.get("snapshots") or {}).items():
            if isinstance(pair, dict):
                before, after = pair.get("before"), pair.get("after")
            else:
                before, after = pair
            if before is None or after is None:
                raise ManifestParse(
                    f"{ctx} {mid!r}: snapshots need before/after paths"
                )
            snaps[ds] = (before, after)
        models.append(
            ModelRecord(
                model_id=mid,
                source_dataset=_require(entry, "source_dataset", ctx),
                param_count=pc,
                feature_paths=dict(_require(entry, "features", ctx)),
                logit_paths=dict(_require(entry, "logits", ctx)),
                head_weight_path=entry.get("head_weights"),
                snapshot_paths=snaps,
            )
        )
    labels = doc.get("labels") or {}
    return HubManifest(
        models=models,
        datasets=list(datasets),
        version=int(version),
        label_paths=dict(labels),
    )


def load_hub(manifest_path) -> LoadedHub:
    """Parse the manifest and load every referenced tensor, cross-validated."""
    path = Path(manifest_path)
    manifest = parse_manifest(path)
    root = path.parent
    label_blobs = {
        ds: read_tensor(root / p) for ds, p in manifest.label_paths.items()
    }
    feature_sets = {}
    head_weights = {}
    snapshots = {}
    for rec in manifest.models:
        for ds, fpath in rec.feature_paths.items():
            if ds not in rec.logit_paths:
                raise CrossValidation(
                    f"{rec.model_id}: features for {ds!r} but no logits"
                )
            feats = read_tensor(root / fpath)
            logits = read_tensor(root / rec.logit_paths[ds])
            try:
                fs = FeatureSet(feats, logits, label_blobs.get(ds))
            except CrossValidation as exc:
                raise CrossValidation(f"{rec.model_id}/{ds}: {exc}") from None
            feature_sets[(rec.model_id, ds)] = fs
        if rec.head_weight_path is not None:
            blob = read_tensor(root / rec.head_weight_path)
            if blob.dtype != "f32" or len(blob.shape) != 2 or blob.shape[1] < 2:
                raise CrossValidation(
                    f"{rec.model_id}: head weights must be f32 [C x (D+1)]"
                )
            arr = blob.array()
            head_weights[rec.model_id] = (arr[:, :-1].copy(), arr[:, -1].copy())
        for ds, (before, after) in rec.snapshot_paths.items():
            b = read_tensor(root / before)
            a = read_tensor(root / after)
            if b.dtype != "f32" or a.dtype != "f32":
                raise CrossValidation(
                    f"{rec.model_id}/{ds}: snapshots must be f32"
                )
            if b.data.size != a.data.size:
                raise CrossValidation(
                    f"{rec.model_id}/{ds}: before/after snapshot length mismatch"
                )
            snapshots[(rec.model_id, ds)] = (
                WeightSnapshot([("all", b.data)]),
                WeightSnapshot([("all", a.data)]),
            )
    return LoadedHub(manifest, feature_sets, head_weights, snapshots, root)


@dataclass
class GroundTruthTable:
    entries: dict[tuple[str, str, str], float]

    def get(self, model_id: str, target: str, strategy: str) -> float | None:
        return self.entries.get((model_id, target, strategy))


GROUND_TRUTH_HEADER = ["model_id", "target", "strategy", "accuracy"]


def load_ground_truth(path) -> GroundTruthTable:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    entries = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if header != GROUND_TRUTH_HEADER:
            raise ParseError(f"{path}: bad header {header}")
        for i, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ParseError(f"{path}:{i}: expected 4 columns, got {len(row)}")
            model_id, target, strategy, acc_str = row
            if strategy not in STRATEGIES:
                raise UnknownStrategy(f"{path}:{i}: strategy {strategy!r}")
            try:
                acc = float(acc_str)
            except ValueError:
                raise ParseError(f"{path}:{i}: bad accuracy {acc_str!r}") from None
            if not 0.0 <= acc <= 1.0:
                raise RangeError(f"{path}:{i}: accuracy {acc} outside [0, 1]")
            entries[(model_id, target, strategy)] = acc
    return GroundTruthTable(entries)


def write_ground_truth(table: GroundTruthTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(GROUND_TRUTH_HEADER)
        for key in sorted(table.entries):
            writer.writerow([*key, f"{table.entries[key]:.6f}"])
