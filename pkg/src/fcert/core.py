"""Domain types, distance metrics and the three few-shot predictors.

Episode class indices are 0-based throughout: class ``c`` of an episode is
``episode.support[c]`` and maps back to a dataset label via
``episode.class_map[c]``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InputError",
    "DataError",
    "Metric",
    "FewShotConfig",
    "Episode",
    "compute_distance",
    "distances_to",
    "class_distances",
    "sorted_class_distances",
    "robust_score",
    "window_mean",
    "fcert_predict",
    "fcert_predict_weighted",
    "protonet_predict",
    "knn_predict",
    "WEIGHT_FLOOR",
]

# Floor for the cosine weights of the weighted variant, applied after
# negative similarities are clamped to zero.
WEIGHT_FLOOR = 1e-6


class InputError(ValueError):
    """Invalid argument or configuration."""


class DataError(InputError):
    """Malformed or insufficient input data (files, datasets)."""


class Metric(str, enum.Enum):
    SQ_L2 = "sq-l2"
    L2 = "l2"
    COSINE = "cosine"

    @classmethod
    def parse(cls, value: "str | Metric") -> "Metric":
        if isinstance(value, Metric):
            return value
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise InputError(f"unknown metric {value!r} (choose from {choices})") from None


def default_kprime(shots: int) -> int:
    return (shots - 1) // 2


@dataclass(frozen=True)
class FewShotConfig:
    """C-way K-shot task with trimming parameter ``kprime`` (K')."""

    ways: int = 5
    shots: int = 5
    kprime: int | None = None
    metric: Metric = Metric.SQ_L2

    def __post_init__(self):
        if self.kprime is None:
            object.__setattr__(self, "kprime", default_kprime(self.shots))
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        if self.ways < 2:
            raise InputError(f"ways must be >= 2, got {self.ways}")
        if self.shots < 1:
            raise InputError(f"shots must be >= 1, got {self.shots}")
        limit = default_kprime(self.shots)
        if not 0 <= self.kprime <= limit:
            raise InputError(
                f"kprime must satisfy 0 <= K' <= floor((K-1)/2) = {limit} "
                f"for K={self.shots}, got {self.kprime}"
            )

    @property
    def window(self) -> int:
        """Number of distances kept after trimming, K - 2K'."""
        return self.shots - 2 * self.kprime


@dataclass
class Episode:
    """One few-shot task.

    ``support`` has shape (C, K, D); ``queries`` (Q, D); ``query_labels`` holds
    episode-class indices in ``range(C)``.
    """

    support: np.ndarray
    queries: np.ndarray
    query_labels: np.ndarray
    class_map: list = field(default_factory=list)

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=np.float64)
        if self.support.ndim != 3:
            raise InputError(f"support must have shape (C, K, D), got {self.support.shape}")
        self.queries = np.asarray(self.queries, dtype=np.float64)
        if self.queries.size % self.dim:
            raise InputError(f"query dimension does not match support dimension {self.dim}")
        self.queries = self.queries.reshape(-1, self.dim)
        self.query_labels = np.asarray(self.query_labels, dtype=np.int64).reshape(-1)
        if len(self.queries) != len(self.query_labels):
            raise InputError("queries and query_labels differ in length")
        ways = self.support.shape[0]
        if len(self.query_labels) and (self.query_labels.min() < 0 or self.query_labels.max() >= ways):
            raise InputError(f"query labels must lie in [0, {ways})")
        if not self.class_map:
            self.class_map = list(range(ways))
        if len(self.class_map) != ways:
            raise InputError("class_map length must equal the number of classes")
        if not (np.all(np.isfinite(self.support)) and np.all(np.isfinite(self.queries))):
            raise InputError("episode features must be finite")

    @property
    def ways(self) -> int:
        return self.support.shape[0]

    @property
    def shots(self) -> int:
        return self.support.shape[1]

    @property
    def dim(self) -> int:
        return self.support.shape[2]

    def copy(self) -> "Episode":
        return Episode(
            self.support.copy(), self.queries.copy(), self.query_labels.copy(), list(self.class_map)
        )

    def check(self, cfg: FewShotConfig) -> None:
        if (self.ways, self.shots) != (cfg.ways, cfg.shots):
            raise InputError(
                f"episode is {self.ways}-way {self.shots}-shot but config is "
                f"{cfg.ways}-way {cfg.shots}-shot"
            )


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InputError(f"feature vector must be 1-D and non-empty, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError("feature vector contains non-finite values")
    return v


def compute_distance(a, b, metric: Metric | str = Metric.SQ_L2) -> float:
    a = _as_vector(a)
    b = _as_vector(b)
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(distances_to(a, b[None, :], metric)[0])


def distances_to(query: np.ndarray, points: np.ndarray, metric: Metric | str = Metric.SQ_L2) -> np.ndarray:
    """Distances from one query to each row of ``points`` (any leading shape)."""
    metric = Metric.parse(metric)
    query = np.asarray(query, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    if points.shape[-1] != query.shape[-1]:
        raise InputError(f"dimension mismatch: {query.shape[-1]} vs {points.shape[-1]}")
    if metric is Metric.COSINE:
        qn = np.linalg.norm(query)
        pn = np.linalg.norm(points, axis=-1)
        if qn == 0.0 or np.any(pn == 0.0):
            raise InputError("cosine distance is undefined for zero vectors")
        sim = (points @ query) / (pn * qn)
        return np.clip(1.0 - sim, 0.0, 2.0)
    diff = points - query
    sq = np.einsum("...d,...d->...", diff, diff)
    return np.sqrt(sq) if metric is Metric.L2 else sq


def class_distances(episode: Episode, query, cfg: FewShotConfig) -> np.ndarray:
    """(C, K) array of per-class query distances, each row sorted ascending."""
    return sorted_class_distances(episode, query, cfg)[0]


def sorted_class_distances(episode: Episode, query, cfg: FewShotConfig):
    """Sorted distances plus the support index that produced each entry.

    Ties are ordered by within-class support index (stable sort).
    """
    episode.check(cfg)
    q = _as_vector(query)
    raw = distances_to(q, episode.support, cfg.metric)
    order = np.argsort(raw, axis=1, kind="stable")
    return np.take_along_axis(raw, order, axis=1), order


def window_mean(values, lo: int, hi: int) -> float:
    """Mean of ``values[lo:hi]`` summed strictly left to right.

    Every bound and score in the package goes through this so that equal
    windows give bit-identical results.
    """
    acc = 0.0
    for i in range(lo, hi):
        acc += float(values[i])
    return acc / (hi - lo)


def robust_score(dists: np.ndarray, kprime: int) -> np.ndarray:
    """Trimmed mean of each sorted row after dropping K' from each end."""
    d = np.atleast_2d(np.asarray(dists, dtype=np.float64))
    k = d.shape[1]
    if not 0 <= kprime <= (k - 1) // 2:
        raise InputError(f"kprime={kprime} out of range for K={k}")
    return np.array([window_mean(row, kprime, k - kprime) for row in d])


def _argmin_first(scores) -> int:
    # np.argmin returns the first minimum: lowest class index wins ties
    return int(np.argmin(np.asarray(scores)))


def fcert_predict(episode: Episode, query, cfg: FewShotConfig) -> int:
    return _argmin_first(robust_score(class_distances(episode, query, cfg), cfg.kprime))


def fcert_predict_weighted(episode: Episode, query, cfg: FewShotConfig) -> int:
    """Variant scoring each class by a cosine-weighted mean of the kept window."""
    d, order = sorted_class_distances(episode, query, cfg)
    q = _as_vector(query)
    sims = 1.0 - distances_to(q, episode.support, Metric.COSINE)
    weights = np.maximum(np.maximum(sims, 0.0), WEIGHT_FLOOR)
    weights = np.take_along_axis(weights, order, axis=1)
    lo, hi = cfg.kprime, cfg.shots - cfg.kprime
    w = weights[:, lo:hi]
    scores = (w * d[:, lo:hi]).sum(axis=1) / w.sum(axis=1)
    if hi - lo == 1:
        scores = d[:, lo].copy()
    return _argmin_first(scores)


def protonet_predict(episode: Episode, query, cfg: FewShotConfig) -> int:
    episode.check(cfg)
    q = _as_vector(query)
    prototypes = episode.support.mean(axis=1)
    return _argmin_first(distances_to(q, prototypes, cfg.metric))


def knn_predict(episode: Episode, query, k: int, cfg: FewShotConfig) -> int:
    episode.check(cfg)
    total = cfg.ways * cfg.shots
    if not 1 <= k <= total:
        raise InputError(f"k must lie in [1, {total}], got {k}")
    q = _as_vector(query)
    flat = distances_to(q, episode.support, cfg.metric).reshape(-1)
    # flattened index is (class, within-class index) order, so a stable sort
    # breaks distance ties exactly as required
    nearest = np.argsort(flat, kind="stable")[:k]
    votes = np.bincount(nearest // cfg.shots, minlength=cfg.ways)
    return int(np.argmax(votes))
