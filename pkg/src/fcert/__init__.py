"""Certified few-shot classification under data poisoning.

A query is classified by the class whose trimmed mean of support distances is
smallest; closed-form worst-case bounds on that trimmed mean give a certified
number of poisoned supports the prediction provably survives.
"""
from .attack import AttackSpec, Strategy, attack_group, attack_individual, attack_tightness, empirical_flip_check
from .certify import (
    AttackModel,
    CertResult,
    certification_curve,
    certify_group,
    certify_individual,
    lower_bound,
    upper_bound,
)
from .core import (
    DataError,
    Episode,
    FewShotConfig,
    InputError,
    Metric,
    class_distances,
    compute_distance,
    fcert_predict,
    fcert_predict_weighted,
    knn_predict,
    protonet_predict,
    robust_score,
)
from .dataio import FeatureDataset, load_dataset, save_report, synth_gaussian
from .evaluation import EvalConfig, EvalReport, certified_accuracy, run_benchmark, sample_episodes
from .kernels import BACKEND
from .oracle import OracleConfig, oracle_bound_extrema, oracle_certified_size
from .prng import SplitMix64

__version__ = "0.1.0"
