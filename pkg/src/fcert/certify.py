"""Worst-case robust-distance bounds and certified poisoning sizes.

An attacker who may replace ``T`` support samples of a class can move at most
``T`` of its sorted distances. For ``T <= K'`` the largest reachable trimmed
mean slides the kept window ``T`` places up the sorted sequence, and the
smallest slides it ``T`` places down. A prediction survives budget ``T`` when
the predicted class's upper bound stays strictly below every other class's
lower bound.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import Episode, FewShotConfig, InputError, class_distances, fcert_predict, window_mean

__all__ = [
    "AttackModel",
    "CertResult",
    "upper_bound",
    "lower_bound",
    "certify",
    "certify_individual",
    "certify_group",
    "certify_individual_linear",
    "certify_group_linear",
    "certification_curve",
    "certify_many",
]


class AttackModel(str, enum.Enum):
    INDIVIDUAL = "individual"  # budget T per class
    GROUP = "group"  # budget T in total

    @classmethod
    def parse(cls, value: "str | AttackModel") -> "AttackModel":
        if isinstance(value, AttackModel):
            return value
        try:
            return cls(value)
        except ValueError:
            raise InputError(f"unknown attack model {value!r} (individual|group)") from None


@dataclass
class CertResult:
    predicted: int
    certified_size: int
    model: AttackModel
    # Individual: trace[T] = (upper bound of predicted class, min lower bound of others).
    # Group: trace[T] = (class, budget on predicted class) of the first failing
    # split, or None when every split at T holds.
    trace: list = field(default_factory=list)
    tie: bool = False


def _check_budget(d: np.ndarray, budget: int, kprime: int) -> None:
    k = len(d)
    if not 0 <= kprime <= (k - 1) // 2:
        raise InputError(f"kprime={kprime} out of range for K={k}")
    if budget < 0:
        raise InputError(f"budget must be non-negative, got {budget}")
    if budget > kprime:
        raise InputError(
            f"budget T={budget} exceeds K'={kprime}: the bound is unbounded beyond K'"
        )


def upper_bound(d, budget: int, kprime: int) -> float:
    """Largest trimmed mean reachable by changing ``budget`` of the sorted distances."""
    d = np.asarray(d, dtype=np.float64)
    _check_budget(d, budget, kprime)
    k = len(d)
    return window_mean(d, kprime + budget, k - kprime + budget)


def lower_bound(d, budget: int, kprime: int) -> float:
    """Smallest trimmed mean reachable by changing ``budget`` of the sorted distances."""
    d = np.asarray(d, dtype=np.float64)
    _check_budget(d, budget, kprime)
    k = len(d)
    return window_mean(d, kprime - budget, k - kprime - budget)


def _others(d_all: np.ndarray, predicted: int):
    return [c for c in range(len(d_all)) if c != predicted]


def _individual_holds(d_all, predicted, budget, kprime):
    up = upper_bound(d_all[predicted], budget, kprime)
    low = min(lower_bound(d_all[c], budget, kprime) for c in _others(d_all, predicted))
    return up < low, (up, low)


def _group_holds(d_all, predicted, budget, kprime):
    for c in _others(d_all, predicted):
        for own in range(budget + 1):
            up = upper_bound(d_all[predicted], own, kprime)
            if not up < lower_bound(d_all[c], budget - own, kprime):
                return False, (c, own)
    return True, None


def _prepare(d_all, predicted, cfg: FewShotConfig) -> np.ndarray:
    d_all = np.asarray(d_all, dtype=np.float64)
    if d_all.ndim != 2 or d_all.shape[0] < 2:
        raise InputError("class distances must have shape (C, K) with C >= 2")
    if d_all.shape[1] != cfg.shots:
        raise InputError(f"expected K={cfg.shots} distances per class, got {d_all.shape[1]}")
    if not 0 <= predicted < d_all.shape[0]:
        raise InputError(f"predicted class {predicted} out of range")
    return d_all


def _search(d_all, predicted, kprime, holds, model) -> CertResult:
    trace: list = [None] * (kprime + 1)
    ok0, trace[0] = holds(d_all, predicted, 0, kprime)
    if not ok0:
        return CertResult(predicted, 0, model, trace, tie=True)
    # binary search with mid = ceil((low + high) / 2); the predicate is monotone in T
    low, high = 0, kprime
    while low != high:
        mid = (low + high + 1) // 2
        ok, trace[mid] = holds(d_all, predicted, mid, kprime)
        if ok:
            low = mid
        else:
            high = mid - 1
    return CertResult(predicted, low, model, trace)


def certify_individual(d_all, predicted: int, cfg: FewShotConfig) -> CertResult:
    """Certified size when the attacker may poison T samples in every class."""
    d_all = _prepare(d_all, predicted, cfg)
    return _search(d_all, predicted, cfg.kprime, _individual_holds, AttackModel.INDIVIDUAL)


def certify_group(d_all, predicted: int, cfg: FewShotConfig) -> CertResult:
    """Certified size when the attacker may poison T samples in total.

    Every split of the budget between the predicted class and each rival is
    checked, since the best attack only touches those two classes.
    """
    d_all = _prepare(d_all, predicted, cfg)
    return _search(d_all, predicted, cfg.kprime, _group_holds, AttackModel.GROUP)


def _linear(d_all, predicted, kprime, holds, model) -> CertResult:
    trace = []
    best = 0
    for t in range(kprime + 1):
        ok, info = holds(d_all, predicted, t, kprime)
        trace.append(info)
        if not ok:
            return CertResult(predicted, best, model, trace, tie=(t == 0))
        best = t
    return CertResult(predicted, best, model, trace)


def certify_individual_linear(d_all, predicted: int, cfg: FewShotConfig) -> CertResult:
    """Linear-scan twin of :func:`certify_individual` (full trace)."""
    d_all = _prepare(d_all, predicted, cfg)
    return _linear(d_all, predicted, cfg.kprime, _individual_holds, AttackModel.INDIVIDUAL)


def certify_group_linear(d_all, predicted: int, cfg: FewShotConfig) -> CertResult:
    d_all = _prepare(d_all, predicted, cfg)
    return _linear(d_all, predicted, cfg.kprime, _group_holds, AttackModel.GROUP)


def certify(d_all, predicted: int, cfg: FewShotConfig, model: AttackModel | str) -> CertResult:
    model = AttackModel.parse(model)
    if model is AttackModel.INDIVIDUAL:
        return certify_individual(d_all, predicted, cfg)
    return certify_group(d_all, predicted, cfg)


def certify_many(dists, predicted, cfg: FewShotConfig, model: AttackModel | str) -> np.ndarray:
    """Certified sizes for a stack of (C, K) distance tables, via the fast kernel."""
    model = AttackModel.parse(model)
    dists = np.asarray(dists, dtype=np.float64)
    if dists.ndim != 3:
        raise InputError("expected an (N, C, K) stack of sorted distances")
    if len(dists) == 0:
        return np.zeros(0, dtype=np.int64)
    return kernels.certify_batch(dists, np.asarray(predicted, dtype=np.int64), cfg.kprime,
                                 model is AttackModel.GROUP)


def certification_curve(episode: Episode, cfg: FewShotConfig, model: AttackModel | str):
    """Per query ``(correct, certified_size)`` in query order."""
    model = AttackModel.parse(model)
    out = []
    for query, label in zip(episode.queries, episode.query_labels):
        pred = fcert_predict(episode, query, cfg)
        res = certify(class_distances(episode, query, cfg), pred, cfg, model)
        out.append((pred == int(label), res.certified_size))
    return out
