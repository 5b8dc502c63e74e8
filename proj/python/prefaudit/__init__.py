"""Audit pairwise preference datasets used for reward modeling.

Thin Python layer over the C++ core. Structured results (curves, reports,
sweeps) are returned as plain dicts with the same layout as the CLI's JSON.
"""

import json

from ._core import (
    Dataset,
    EmbeddingTable,
    PrefauditError,
    RewardModel,
    TrainConfig,
    __version__,
    cosine_similarity,
    count_flips,
    evaluate,
    flip_labels,
    hash_featurize,
    high_info_subset,
    ingest,
    ingest_text,
    length_filter,
    linear_model,
    load_embeddings,
    load_model,
    loss_and_gradient,
    make_synthetic,
    sigmoid,
    split,
    subsample,
    win_probability,
    z_split,
    zero_model,
)
from . import _core

__all__ = [
    "Dataset",
    "EmbeddingTable",
    "PrefauditError",
    "RewardModel",
    "TrainConfig",
    "__version__",
    "calibration_vs_noise",
    "cosine_similarity",
    "count_flips",
    "doubling_gain",
    "ece",
    "evaluate",
    "flip_labels",
    "hash_featurize",
    "high_info_subset",
    "info_compare",
    "ingest",
    "ingest_text",
    "length_filter",
    "linear_model",
    "load_embeddings",
    "load_model",
    "loss_and_gradient",
    "make_synthetic",
    "noise_sweep",
    "run_audit",
    "saturation",
    "scaling_sweep",
    "sigmoid",
    "similarity_report",
    "split",
    "subsample",
    "train",
    "win_probability",
    "z_split",
    "zero_model",
]

DEFAULT_NOISE_RATES = [0.0, 0.1, 0.2, 0.3, 0.4]
DEFAULT_FRACTIONS = [0.0156, 0.03125, 0.0625, 0.125, 0.25, 0.5, 1.0]


def _config(config):
    return TrainConfig() if config is None else config


def train(data, embeddings, config=None, eval=None):
    """Train a linear Bradley-Terry model. Returns (model, history)."""
    model, history = _core._train(data, embeddings, _config(config), eval)
    return model, json.loads(history)


def similarity_report(data, embeddings, threshold=0.8, bins=50, per_example=False):
    return json.loads(_core._similarity_report(data, embeddings, threshold, bins, per_example))


def ece(probs, labels, bins=10):
    return json.loads(_core._ece(list(probs), list(labels), bins))


def noise_sweep(train, eval, embeddings, rates=None, config=None, seed=0, threads=1):
    rates = DEFAULT_NOISE_RATES if rates is None else list(rates)
    return json.loads(
        _core._noise_sweep(train, eval, embeddings, rates, _config(config), seed, threads)
    )


def calibration_vs_noise(train, eval, embeddings, rates=None, config=None, bins=10, seed=0,
                         threads=1):
    rates = DEFAULT_NOISE_RATES if rates is None else list(rates)
    return json.loads(
        _core._calibration_vs_noise(train, eval, embeddings, rates, _config(config), bins, seed,
                                    threads)
    )


def scaling_sweep(train, eval, embeddings, fractions=None, config=None, seed=0, threads=1):
    fractions = DEFAULT_FRACTIONS if fractions is None else list(fractions)
    return json.loads(
        _core._scaling_sweep(train, eval, embeddings, fractions, _config(config), seed, threads)
    )


def saturation(curve, target=0.95):
    return json.loads(_core._saturation(json.dumps(curve), target))


def doubling_gain(curve):
    return _core._doubling_gain(json.dumps(curve))


def info_compare(train, eval, embeddings, threshold, size, config=None, seeds=(0, 1, 2, 3, 4),
                 threads=1):
    return json.loads(
        _core._info_compare(train, eval, embeddings, threshold, size, _config(config),
                            list(seeds), threads)
    )


def run_audit(settings, write=True):
    """Run the full audit.

    `settings` uses the config-file keys, e.g. {"data": "pairs.jsonl",
    "out_dir": "out", "train": {"epochs": 50}}. Returns the report dict;
    artifacts are written under out_dir unless write is False.
    """
    return json.loads(_core._run_audit(dict(settings), write))
