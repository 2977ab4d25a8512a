"""Feature-space poisoning attacks and the bound-achieving tightness attack.

Poisoned samples are written directly as feature vectors. With no penalty on
staying close to the original input, the feature-collision objective is
minimised exactly by copying the query's feature, so that is what the
collision step does.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .certify import AttackModel, lower_bound, upper_bound
from .core import (
    Episode,
    FewShotConfig,
    InputError,
    Metric,
    class_distances,
    distances_to,
    fcert_predict,
    robust_score,
)
from .prng import SplitMix64

__all__ = [
    "Strategy",
    "AttackSpec",
    "attack_individual",
    "attack_group",
    "attack_episode",
    "far_point",
    "point_cloud_diameter",
    "attack_tightness",
    "tightness_flip",
    "empirical_flip_check",
    "FAR_SCALE",
]

FAR_SCALE = 1e3


class Strategy(str, enum.Enum):
    """What happens to the query's own class under an Individual attack."""

    COLLISION = "collision"  # left untouched; only rival classes collide
    CROSS_CLASS = "cross-class"  # overwritten with another class's features
    FAR_POINT = "far-point"  # overwritten with a point far from the query

    @classmethod
    def parse(cls, value: "str | Strategy") -> "Strategy":
        if isinstance(value, Strategy):
            return value
        try:
            return cls(value)
        except ValueError:
            choices = "|".join(s.value for s in cls)
            raise InputError(f"unknown strategy {value!r} ({choices})") from None


@dataclass(frozen=True)
class AttackSpec:
    model: AttackModel = AttackModel.INDIVIDUAL
    budget: int = 0
    strategy: Strategy = Strategy.FAR_POINT
    rng_seed: int = 0
    far_scale: float = FAR_SCALE
    # Euclidean diameter of the data; computed from the episode when None
    diameter: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", AttackModel.parse(self.model))
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        if self.budget < 0:
            raise InputError(f"attack budget must be non-negative, got {self.budget}")


def _check_budget(episode: Episode, budget: int) -> None:
    if budget > episode.shots:
        raise InputError(f"attack budget T={budget} exceeds K={episode.shots}")


def point_cloud_diameter(points) -> float:
    """Largest Euclidean distance between any two rows."""
    x = np.asarray(points, dtype=np.float64).reshape(-1, np.shape(points)[-1])
    sq = np.einsum("ij,ij->i", x, x)
    chunk = max(1, (1 << 22) // max(len(x), 1))
    best = 0.0
    for start in range(0, len(x), chunk):
        block = x[start:start + chunk]
        d2 = sq[start:start + chunk, None] + sq[None, :] - 2.0 * block @ x.T
        best = max(best, float(d2.max()))
    return float(np.sqrt(max(best, 0.0)))


def far_point(query, diameter: float, far_scale: float = FAR_SCALE) -> np.ndarray:
    """``query + M u`` with ``u`` the first basis direction made orthogonal to the query."""
    q = np.asarray(query, dtype=np.float64)
    qn = np.linalg.norm(q)
    u = None
    for j in range(q.size):
        e = np.zeros_like(q)
        e[j] = 1.0
        if qn > 0:
            e -= (q[j] / qn) * (q / qn)
        norm = np.linalg.norm(e)
        if norm > 1e-8:
            u = e / norm
            break
    if u is None:  # 1-D nonzero query: no orthogonal direction, push along it
        u = q / qn
    scale = far_scale * (diameter if diameter > 0 else 1.0)
    return q + scale * u


def attack_individual(episode: Episode, query, true_label: int, spec: AttackSpec) -> Episode:
    """Poison ``spec.budget`` supports in every class.

    Rival classes get exact query collisions; the true class is handled by
    ``spec.strategy``. Sample choices are uniform without replacement.
    """
    _check_budget(episode, spec.budget)
    out = episode.copy()
    t = spec.budget
    if t == 0:
        return out
    rng = SplitMix64(spec.rng_seed)
    q = np.asarray(query, dtype=np.float64)
    for c in range(episode.ways):
        if c != true_label:
            out.support[c, rng.sample(episode.shots, t)] = q
    victims = rng.sample(episode.shots, t)
    if spec.strategy is Strategy.CROSS_CLASS:
        rivals = [c for c in range(episode.ways) if c != true_label]
        src = rivals[rng.randbelow(len(rivals))]
        out.support[true_label, victims] = episode.support[src, rng.sample(episode.shots, t)]
    elif spec.strategy is Strategy.FAR_POINT:
        diameter = spec.diameter
        if diameter is None:
            diameter = point_cloud_diameter(np.concatenate([episode.support.reshape(-1, episode.dim),
                                                            episode.queries]))
        out.support[true_label, victims] = far_point(q, diameter, spec.far_scale)
    return out


def attack_group(episode: Episode, query, true_label: int, spec: AttackSpec,
                 metric: Metric | str = Metric.SQ_L2) -> Episode:
    """Spend the whole budget colliding with the rival class whose prototype is nearest."""
    _check_budget(episode, spec.budget)
    out = episode.copy()
    if spec.budget == 0:
        return out
    q = np.asarray(query, dtype=np.float64)
    dist = distances_to(q, episode.support.mean(axis=1), metric)
    dist[true_label] = np.inf
    target = int(np.argmin(dist))
    rng = SplitMix64(spec.rng_seed)
    out.support[target, rng.sample(episode.shots, spec.budget)] = q
    return out


def attack_episode(episode: Episode, query, true_label: int, spec: AttackSpec,
                   metric: Metric | str = Metric.SQ_L2) -> Episode:
    if spec.model is AttackModel.INDIVIDUAL:
        return attack_individual(episode, query, true_label, spec)
    return attack_group(episode, query, true_label, spec, metric)


def attack_tightness(d_all, predicted: int, target: int, budgets: tuple[int, int],
                     cfg: FewShotConfig) -> np.ndarray:
    """Distance-level attack that meets both analytic bounds exactly.

    In the predicted class the entries just above the trimmed low end are
    raised to the class maximum; in ``target`` the largest entries drop to the
    class minimum. Rows are re-sorted.
    """
    d = np.array(d_all, dtype=np.float64)
    own, rival = budgets
    if target == predicted:
        raise InputError("target class must differ from the predicted class")
    for t in budgets:
        if not 0 <= t <= cfg.kprime:
            raise InputError(f"tightness budget {t} outside [0, K'={cfg.kprime}]")
    kp, k = cfg.kprime, d.shape[1]
    d[predicted, kp:kp + own] = d[predicted, k - 1]
    if rival:
        d[target, k - rival:] = d[target, 0]
    d.sort(axis=1)
    return d


def _flipped(d: np.ndarray, predicted: int, kprime: int) -> bool:
    scores = robust_score(d, kprime)
    others = np.delete(scores, predicted)
    return bool(np.any(others <= scores[predicted]))


def tightness_flip(d_all, predicted: int, cfg: FewShotConfig, model: AttackModel | str,
                   budget: int) -> bool:
    """Apply the strongest bound-achieving attack of size ``budget``; True on flip or tie."""
    model = AttackModel.parse(model)
    d_all = np.asarray(d_all, dtype=np.float64)
    if not 0 <= budget <= cfg.kprime:
        raise InputError(f"budget must lie in [0, K'={cfg.kprime}], got {budget}")
    rivals = [c for c in range(len(d_all)) if c != predicted]
    if model is AttackModel.INDIVIDUAL:
        lows = [lower_bound(d_all[c], budget, cfg.kprime) for c in rivals]
        target = rivals[int(np.argmin(lows))]
        split = (budget, budget)
    else:
        best = None
        for c in rivals:
            for own in range(budget + 1):
                gap = lower_bound(d_all[c], budget - own, cfg.kprime) - upper_bound(
                    d_all[predicted], own, cfg.kprime)
                if best is None or gap < best[0]:
                    best = (gap, c, own)
        _, target, own = best
        split = (own, budget - own)
    return _flipped(attack_tightness(d_all, predicted, target, split, cfg), predicted, cfg.kprime)


def empirical_flip_check(episode: Episode, query, cfg: FewShotConfig, model: AttackModel | str,
                         budget: int) -> bool:
    predicted = fcert_predict(episode, query, cfg)
    return tightness_flip(class_distances(episode, query, cfg), predicted, cfg, model, budget)
