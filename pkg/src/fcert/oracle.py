"""Exhaustive search over poisoning attacks, independent of the closed-form bounds.

Replacement values are drawn from ``{0} | {d_i} | {d_K + 1}``: both extremes
plus every existing distance as a pivot. Classes are attacked independently
(a class's trimmed mean depends only on its own samples), so the joint search
factorises into per-class reachable extrema combined over every budget
allocation the attack model allows.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import kernels
from .certify import AttackModel
from .core import FewShotConfig, InputError

__all__ = [
    "OracleConfig",
    "candidate_values",
    "grid_values",
    "oracle_bound_extrema",
    "oracle_extrema_table",
    "oracle_certified_size",
    "oracle_flips",
    "random_instance",
    "AgreementStats",
    "agreement_check",
]


@dataclass(frozen=True)
class OracleConfig:
    max_K: int = 8
    max_C: int = 4
    tolerance: float = 1e-9

    def __post_init__(self):
        if not 1 <= self.max_K <= 8:
            raise InputError(f"oracle max_K must lie in [1, 8], got {self.max_K}")


def candidate_values(d) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    return np.concatenate(([0.0], d, [d[-1] + 1.0]))


def grid_values(d, points: int = 21) -> np.ndarray:
    """Evenly spaced replacement values over ``[0, d_K + 1]``."""
    d = np.asarray(d, dtype=np.float64)
    return np.linspace(0.0, d[-1] + 1.0, points)


def _sorted_checked(d, cfg: OracleConfig) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise InputError("expected a 1-D distance tuple")
    if d.size > cfg.max_K:
        raise InputError(f"oracle refuses K={d.size} > max_K={cfg.max_K} (combinatorial blow-up)")
    if np.any(np.diff(d) < 0):
        raise InputError("distances must be sorted ascending")
    return d


def oracle_extrema_table(d, budget: int, cfg: OracleConfig = OracleConfig(), candidates=None):
    """Reachable (max, min) trimmed means for every K' at once, NaN where K' < budget."""
    d = _sorted_checked(d, cfg)
    cand = candidate_values(d) if candidates is None else np.asarray(candidates, dtype=np.float64)
    return kernels.extrema(d, budget, cand)


def oracle_bound_extrema(d, budget: int, kprime: int, cfg: OracleConfig = OracleConfig(),
                         candidates=None) -> tuple[float, float]:
    """Exact (max, min) trimmed mean over every change of at most ``budget`` distances."""
    d = _sorted_checked(d, cfg)
    if not 0 <= kprime <= (d.size - 1) // 2:
        raise InputError(f"kprime={kprime} out of range for K={d.size}")
    if not 0 <= budget <= kprime:
        raise InputError(f"budget must lie in [0, K'={kprime}], got {budget}")
    hi, lo = oracle_extrema_table(d, budget, cfg, candidates)
    return float(hi[kprime]), float(lo[kprime])


def _allocations(model: AttackModel, ways: int, budget: int):
    if model is AttackModel.INDIVIDUAL:
        yield (budget,) * ways
        return
    for alloc in itertools.product(range(budget + 1), repeat=ways):
        if sum(alloc) <= budget:
            yield alloc


def oracle_flips(d_all, predicted: int, kprime: int, model: AttackModel | str, budget: int,
                 cfg: OracleConfig = OracleConfig(), tables=None) -> bool:
    """True when some enumerated attack within ``budget`` makes another class
    score at or below the predicted class."""
    model = AttackModel.parse(model)
    d_all = np.asarray(d_all, dtype=np.float64)
    ways = len(d_all)
    if tables is None:
        tables = _tables(d_all, kprime, budget, cfg)
    for alloc in _allocations(model, ways, budget):
        worst_pred = tables[predicted][alloc[predicted]][0]
        for c in range(ways):
            if c != predicted and tables[c][alloc[c]][1] <= worst_pred:
                return True
    return False


def _tables(d_all, kprime, max_budget, cfg):
    # tables[c][t] = (max, min) reachable trimmed mean of class c with t changes
    out = []
    for row in d_all:
        row = _sorted_checked(row, cfg)
        per_t = []
        for t in range(max_budget + 1):
            hi, lo = kernels.extrema(row, t, candidate_values(row))
            per_t.append((float(hi[kprime]), float(lo[kprime])))
        out.append(per_t)
    return out


def oracle_certified_size(d_all, predicted: int, fcfg: FewShotConfig, model: AttackModel | str,
                          cfg: OracleConfig = OracleConfig()) -> int:
    """Smallest flipping budget minus one, clamped to ``[0, K']``."""
    model = AttackModel.parse(model)
    d_all = np.asarray(d_all, dtype=np.float64)
    if d_all.ndim != 2 or d_all.shape[1] != fcfg.shots:
        raise InputError(f"expected (C, {fcfg.shots}) class distances")
    if len(d_all) > cfg.max_C:
        raise InputError(f"oracle refuses C={len(d_all)} > max_C={cfg.max_C}")
    kprime = fcfg.kprime
    tables = _tables(d_all, kprime, kprime, cfg)
    for budget in range(kprime + 1):
        if oracle_flips(d_all, predicted, kprime, model, budget, cfg, tables):
            return max(budget - 1, 0)
    return kprime


def random_instance(rng, ways: int, shots: int, quantize: bool = False) -> np.ndarray:
    """Sorted (C, K) distance table with per-class offsets so certified sizes vary."""
    rows = []
    for _ in range(ways):
        base = 3.0 * rng.uniform()
        row = [base + rng.uniform() for _ in range(shots)]
        if quantize:  # coarse grid forces ties
            row = [round(v * 4) / 4 for v in row]
        rows.append(sorted(row))
    return np.array(rows)


@dataclass
class AgreementStats:
    instances: int = 0
    bound_checks: int = 0
    certificate_checks: int = 0
    tightness_checks: int = 0
    disagreements: list = None

    def __post_init__(self):
        if self.disagreements is None:
            self.disagreements = []

    def summary(self) -> str:
        return (f"{self.instances} instances, {self.bound_checks} bound checks, "
                f"{self.certificate_checks} certificate checks, {self.tightness_checks} tightness checks, "
                f"{len(self.disagreements)} disagreements")


def agreement_check(instances: int, max_k: int, seed: int, max_c: int = 4) -> AgreementStats:
    """Compare closed-form bounds, certificates and the tightness attack with the oracle."""
    from .attack import tightness_flip
    from .certify import certify_group, certify_individual, lower_bound, upper_bound
    from .core import robust_score
    from .prng import SplitMix64

    cfg = OracleConfig(max_K=max_k, max_C=max_c)
    if max_k < 3:
        raise InputError("max-k must be at least 3")
    rng = SplitMix64(seed)
    stats = AgreementStats()
    for n in range(instances):
        k = 3 + rng.randbelow(max_k - 2)
        ways = 2 + rng.randbelow(max_c - 1)
        d_all = random_instance(rng, ways, k, quantize=rng.randbelow(4) == 0)
        kmax = (k - 1) // 2
        for t in range(kmax + 1):
            hi, lo = oracle_extrema_table(d_all[0], t, cfg)
            for kp in range(t, kmax + 1):
                stats.bound_checks += 1
                up, low = upper_bound(d_all[0], t, kp), lower_bound(d_all[0], t, kp)
                if abs(hi[kp] - up) > cfg.tolerance or abs(lo[kp] - low) > cfg.tolerance:
                    stats.disagreements.append(("bound", n, kp, t, (up, low), (hi[kp], lo[kp])))
        kp = 1 + rng.randbelow(kmax)
        fcfg = FewShotConfig(ways, k, kp)
        pred = int(np.argmin(robust_score(d_all, kp)))
        for model, fn in ((AttackModel.INDIVIDUAL, certify_individual), (AttackModel.GROUP, certify_group)):
            stats.certificate_checks += 1
            got = fn(d_all, pred, fcfg).certified_size
            want = oracle_certified_size(d_all, pred, fcfg, model, cfg)
            if got != want:
                stats.disagreements.append(("certificate", n, model.value, got, want))
            if got + 1 <= kp:
                stats.tightness_checks += 1
                if not tightness_flip(d_all, pred, fcfg, model, got + 1):
                    stats.disagreements.append(("tightness", n, model.value, got))
        stats.instances += 1
    return stats
