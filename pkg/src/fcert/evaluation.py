"""Episode sampling, certified/empirical accuracy, and benchmark reports."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .attack import AttackSpec, Strategy, attack_episode, point_cloud_diameter
from .certify import AttackModel, certify_many
from .core import (
    DataError,
    Episode,
    FewShotConfig,
    InputError,
    Metric,
    default_kprime,
    fcert_predict,
    fcert_predict_weighted,
    knn_predict,
    protonet_predict,
    sorted_class_distances,
)
from .prng import derive_seed, stream

__all__ = [
    "METHODS",
    "EvalConfig",
    "EvalReport",
    "sample_episodes",
    "certified_accuracy",
    "evaluate_episode",
    "assemble_report",
    "run_benchmark",
    "predict",
]

METHODS = ("fcert", "fcert-weighted", "protonet", "knn")
MODELS = ("individual", "group")


def predict(method: str, episode: Episode, query, cfg: FewShotConfig, knn_k: int | None = None) -> int:
    if method == "fcert":
        return fcert_predict(episode, query, cfg)
    if method == "fcert-weighted":
        return fcert_predict_weighted(episode, query, cfg)
    if method == "protonet":
        return protonet_predict(episode, query, cfg)
    if method == "knn":
        return knn_predict(episode, query, knn_k or cfg.shots, cfg)
    raise InputError(f"unknown method {method!r} (choose from {', '.join(METHODS)})")


@dataclass
class EvalConfig:
    batches: int = 20
    ways: int = 5
    shots: int = 5
    queries_per_class: int = 1
    kprime: int | None = None
    metric: str = Metric.SQ_L2.value
    seed: int = 0
    methods: tuple = METHODS
    models: tuple = MODELS
    strategy: str = Strategy.FAR_POINT.value
    knn_k: int | None = None

    def __post_init__(self):
        if self.kprime is None:
            self.kprime = default_kprime(self.shots)
        self.metric = Metric.parse(self.metric).value
        self.strategy = Strategy.parse(self.strategy).value
        self.methods = tuple(self.methods)
        self.models = tuple(AttackModel.parse(m).value for m in self.models)
        for m in self.methods:
            if m not in METHODS:
                raise InputError(f"unknown method {m!r} (choose from {', '.join(METHODS)})")
        if not self.methods:
            raise InputError("at least one method is required")
        if self.batches < 1 or self.queries_per_class < 1:
            raise InputError("batches and queries_per_class must be positive")
        self.fewshot()  # validates ways/shots/kprime

    def fewshot(self) -> FewShotConfig:
        return FewShotConfig(self.ways, self.shots, self.kprime, Metric(self.metric))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        d["models"] = list(self.models)
        return d


def sample_episodes(dataset, cfg: EvalConfig) -> list[Episode]:
    """``cfg.batches`` episodes: C classes, then K supports and the queries per class,
    all uniform without replacement and fully determined by ``cfg.seed``."""
    need = cfg.shots + cfg.queries_per_class
    pools = dataset.class_indices()
    eligible = [c for c, pool in enumerate(pools) if len(pool) >= need]
    if len(eligible) < cfg.ways:
        short = [f"{dataset.label_names[c]!r} ({len(pools[c])})"
                 for c in range(dataset.num_classes) if len(pools[c]) < need]
        raise DataError(
            f"need {cfg.ways} classes with >= {need} samples each, found {len(eligible)}; "
            f"deficient classes: {', '.join(short) or 'none (too few classes)'}"
        )
    rng = stream(cfg.seed, "episodes")
    episodes = []
    for _ in range(cfg.batches):
        chosen = [eligible[i] for i in rng.sample(len(eligible), cfg.ways)]
        support, queries, qlabels = [], [], []
        for c_ep, c in enumerate(chosen):
            picks = pools[c][rng.sample(len(pools[c]), need)]
            support.append(dataset.features[picks[:cfg.shots]])
            queries.extend(dataset.features[picks[cfg.shots:]])
            qlabels.extend([c_ep] * cfg.queries_per_class)
        episodes.append(Episode(np.stack(support), np.array(queries), np.array(qlabels),
                                [dataset.label_names[c] for c in chosen]))
    return episodes


def certified_accuracy(records, budget: int) -> float:
    """Fraction of ``(correct, certified_size)`` records correct and certified at ``budget``."""
    records = list(records)
    if not records:
        raise InputError("certified accuracy of an empty record set is undefined")
    return sum(1 for ok, size in records if ok and size >= budget) / len(records)


def evaluate_episode(index: int, episode: Episode, cfg: EvalConfig, diameter: float | None = None) -> list[dict]:
    """Raw per-query records for one episode."""
    fcfg = cfg.fewshot()
    budgets = range(cfg.kprime + 1)
    stack, preds, records = [], [], []
    for qi, (query, label) in enumerate(zip(episode.queries, episode.query_labels)):
        label = int(label)
        d, _ = sorted_class_distances(episode, query, fcfg)
        stack.append(d)
        clean = {m: predict(m, episode, query, fcfg, cfg.knn_k) for m in cfg.methods}
        fc = clean["fcert"] if "fcert" in clean else fcert_predict(episode, query, fcfg)
        preds.append(fc)
        empirical = {}
        for model in cfg.models:
            per_method = {m: [] for m in cfg.methods}
            for t in budgets:
                spec = AttackSpec(model, t, cfg.strategy, derive_seed(cfg.seed, "attack", model, index, qi, t),
                                  diameter=diameter)
                poisoned = attack_episode(episode, query, label, spec, fcfg.metric)
                for m in cfg.methods:
                    per_method[m].append(predict(m, poisoned, query, fcfg, cfg.knn_k) == label)
            empirical[model] = per_method
        records.append({
            "episode": index,
            "query": qi,
            "label": label,
            "class_name": str(episode.class_map[label]),
            "predictions": clean,
            "fcert_prediction": fc,
            "fcert_correct": fc == label,
            "empirical_correct": empirical,
        })
    stack = np.array(stack)
    for model in MODELS:
        sizes = certify_many(stack, preds, fcfg, model)
        for rec, size in zip(records, sizes):
            rec.setdefault("certified_size", {})[model] = int(size)
    return records


@dataclass
class EvalReport:
    config: dict
    seed: int
    summary: list = field(default_factory=list)
    records: list = field(default_factory=list)

    def rows(self) -> list[dict]:
        return self.summary

    def to_dict(self) -> dict:
        return {"config": self.config, "seed": self.seed, "summary": self.summary, "records": self.records}

    def curve(self, method: str, model: str, key: str) -> list:
        return [r[key] for r in self.summary if r["method"] == method and r["attack_model"] == model]


def assemble_report(records: list[dict], cfg: EvalConfig) -> EvalReport:
    """Order-independent reduction keyed by (episode, query)."""
    records = sorted(records, key=lambda r: (r["episode"], r["query"]))
    if not records:
        raise InputError("no records to aggregate")
    summary = []
    n = len(records)
    for method in cfg.methods:
        for model in cfg.models:
            for t in range(cfg.kprime + 1):
                cert = None
                if method == "fcert":
                    cert = certified_accuracy(
                        ((r["fcert_correct"], r["certified_size"][model]) for r in records), t)
                emp = sum(r["empirical_correct"][model][method][t] for r in records) / n
                summary.append({"method": method, "attack_model": model, "T": t,
                                "certified_accuracy": cert, "empirical_accuracy": emp})
    return EvalReport(cfg.to_dict(), cfg.seed, summary, records)


def run_benchmark(dataset, cfg: EvalConfig) -> EvalReport:
    episodes = sample_episodes(dataset, cfg)
    diameter = None
    if cfg.strategy == Strategy.FAR_POINT.value:
        diameter = point_cloud_diameter(dataset.features)
    records = []
    for i, ep in enumerate(episodes):
        records.extend(evaluate_episode(i, ep, cfg, diameter))
    return assemble_report(records, cfg)
