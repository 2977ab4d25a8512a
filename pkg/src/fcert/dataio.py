"""Feature datasets in JSON Lines, the synthetic cluster generator, and report files."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DataError, InputError
from .prng import SplitMix64

__all__ = [
    "FeatureDataset",
    "DatasetError",
    "load_dataset",
    "parse_dataset",
    "save_dataset",
    "dump_dataset",
    "synth_gaussian",
    "save_report",
    "report_csv",
    "report_json",
    "CSV_HEADER",
]

CSV_HEADER = ["method", "attack_model", "T", "certified_accuracy", "empirical_accuracy"]


class DatasetError(DataError):
    pass


@dataclass
class FeatureDataset:
    features: np.ndarray  # (N, D) float64
    labels: np.ndarray  # (N,) contiguous class ids
    label_names: list[str]
    ids: list[str]

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.label_names)

    def class_indices(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.num_classes)]

    @classmethod
    def from_records(cls, ids, labels, features) -> "FeatureDataset":
        names: dict[str, int] = {}
        codes = [names.setdefault(str(lab), len(names)) for lab in labels]
        return cls(
            np.asarray(features, dtype=np.float64).reshape(len(ids), -1),
            np.asarray(codes, dtype=np.int64),
            list(names),
            [str(i) for i in ids],
        )


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def parse_dataset(lines, source: str = "<input>") -> FeatureDataset:
    ids, labels, feats = [], [], []
    dim = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{source}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise DatasetError(f"{source}:{lineno}: expected a JSON object")
        if "_meta" in rec:
            meta = rec["_meta"]
            if ids or not isinstance(meta, dict):
                raise DatasetError(f"{source}:{lineno}: _meta header must be the first record")
            d = meta.get("dim")
            if d is not None and (not isinstance(d, int) or isinstance(d, bool) or d < 1):
                raise DatasetError(f"{source}:{lineno}: _meta.dim must be a positive integer")
            dim = d
            continue
        rid, label, vec = rec.get("id"), rec.get("label"), rec.get("features")
        if not isinstance(rid, str):
            raise DatasetError(f"{source}:{lineno}: missing or non-string 'id'")
        if not isinstance(label, str) or not label:
            raise DatasetError(f"{source}:{lineno}: record {rid!r} needs a non-empty string 'label'")
        if not isinstance(vec, list) or not vec or not all(_is_number(v) for v in vec):
            raise DatasetError(f"{source}:{lineno}: record {rid!r} needs a non-empty numeric 'features' list")
        if not all(math.isfinite(v) for v in vec):
            raise DatasetError(f"{source}:{lineno}: record {rid!r} has a non-finite feature value")
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise DatasetError(
                f"{source}:{lineno}: record {rid!r} has dimension {len(vec)}, expected {dim}"
            )
        ids.append(rid)
        labels.append(label)
        feats.append([float(v) for v in vec])
    if not ids:
        raise DatasetError(f"{source}: no samples")
    return FeatureDataset.from_records(ids, labels, feats)


def load_dataset(path) -> FeatureDataset:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            return parse_dataset(fh, str(path))
    except OSError as exc:
        raise DatasetError(f"{path}: cannot read ({exc.strerror})") from None
    except UnicodeDecodeError:
        raise DatasetError(f"{path}: not UTF-8 text") from None


def dump_dataset(ds: FeatureDataset) -> str:
    out = [json.dumps({"_meta": {"dim": ds.dim}})]
    for rid, lab, vec in zip(ds.ids, ds.labels, ds.features):
        out.append(json.dumps({"id": rid, "label": ds.label_names[lab], "features": vec.tolist()}))
    return "\n".join(out) + "\n"


def save_dataset(ds: FeatureDataset, path) -> None:
    Path(path).write_text(dump_dataset(ds), encoding="utf-8")


def synth_gaussian(classes: int, per_class: int, dim: int, separation: float, sigma: float,
                   seed: int, max_attempts: int = 1000) -> FeatureDataset:
    """Gaussian clusters around well-spread class means.

    Means are ``separation`` times random unit vectors, each redrawn until its
    dot product with every earlier mean is below 0.5.
    """
    if min(classes, per_class, dim) < 1 or separation <= 0 or sigma < 0:
        raise InputError("classes, per_class, dim and separation must be positive; sigma >= 0")
    rng = SplitMix64(seed)
    means: list[np.ndarray] = []
    for c in range(classes):
        for _ in range(max_attempts):
            v = np.array(rng.normals(dim))
            norm = np.linalg.norm(v)
            if norm == 0.0:
                continue
            v /= norm
            if all(float(v @ m) < 0.5 for m in means):
                means.append(v)
                break
        else:
            raise InputError(
                f"could not place class {c} mean after {max_attempts} attempts "
                f"(dim={dim} too small for {classes} classes?)"
            )
    ids, labels, feats = [], [], []
    for c, m in enumerate(means):
        for i in range(per_class):
            noise = np.array(rng.normals(dim))
            feats.append(separation * m + sigma * noise)
            ids.append(f"c{c}-{i}")
            labels.append(f"class_{c}")
    return FeatureDataset.from_records(ids, labels, feats)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def report_csv(report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in report.rows():
        writer.writerow([row["method"], row["attack_model"], row["T"],
                         _fmt(row["certified_accuracy"]), _fmt(row["empirical_accuracy"])])
    return buf.getvalue()


def report_json(report) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def save_report(report, path, fmt: str = "csv") -> None:
    if fmt not in ("csv", "json"):
        raise InputError(f"unknown report format {fmt!r} (csv|json)")
    text = report_csv(report) if fmt == "csv" else report_json(report)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot write report ({exc.strerror})") from None
