"""Diagonal-covariance GMM scene models and clip-level classification.

One mixture is trained per scene on the pooled frames of that scene's
clips. A clip is assigned to the scene maximizing the sum of per-frame
log-likelihoods (the log of the product of frame likelihoods).
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend
from .errors import ContractError, TrainingError
from .features import FeatureSequence

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
MONOTONE_TOL = 1e-8
REL_VAR_FLOOR = 1e-6
# keeps constant feature dimensions from producing zero variances
ABS_VAR_FLOOR = 1e-10


@dataclass
class SceneMixture:
    weights: np.ndarray  # (M,)
    means: np.ndarray  # (M, K)
    variances: np.ndarray  # (M, K)

    def log_const(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights) - 0.5 * np.sum(LOG_2PI + np.log(self.variances), axis=1)

    def frame_loglik(self, x: np.ndarray, kernel=None) -> np.ndarray:
        logpdf = kernel or _backend.diag_gmm_logpdf
        _, total = logpdf(x, self.means, 1.0 / self.variances, self.log_const())
        return total


@dataclass
class GmmModel:
    scenes: list[str]
    mixtures: list[SceneMixture]
    feature_kind: str
    order: int
    training_config: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenes": list(self.scenes),
            "weights": [m.weights.tolist() for m in self.mixtures],
            "means": [m.means.tolist() for m in self.mixtures],
            "variances": [m.variances.tolist() for m in self.mixtures],
            "feature_kind": self.feature_kind,
            "K": self.order,
            "training_config": self.training_config,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GmmModel":
        mixtures = [
            SceneMixture(np.array(w, dtype=float), np.array(mu, dtype=float), np.array(v, dtype=float))
            for w, mu, v in zip(d["weights"], d["means"], d["variances"])
        ]
        return cls(list(d["scenes"]), mixtures, d["feature_kind"], int(d["K"]), d.get("training_config", {}))

    def save(self, path) -> None:
        from .tensor_io import save_json

        save_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "GmmModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def kmeans_pp(x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding; returns the indices of the chosen centers."""
    t = x.shape[0]
    chosen = [int(rng.integers(t))]
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for _ in range(1, m):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(t, p=d2 / total))
        else:
            idx = int(rng.integers(t))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return np.array(chosen)


def _m_step(x, resp, floor, previous: SceneMixture | None) -> SceneMixture:
    t = x.shape[0]
    nk = resp.sum(axis=0)
    weights = nk / t
    m, k = resp.shape[1], x.shape[1]
    means = np.empty((m, k))
    variances = np.empty((m, k))
    for j in range(m):
        if nk[j] <= 1e-10 * t and previous is not None:
            means[j] = previous.means[j]
            variances[j] = previous.variances[j]
            continue
        r = resp[:, j]
        means[j] = r @ x / nk[j]
        variances[j] = r @ (x - means[j]) ** 2 / nk[j]
    return SceneMixture(weights / weights.sum(), means, np.maximum(variances, floor))


def fit_mixture(x, m: int, rng: np.random.Generator, max_iter=200, rel_tol=1e-6, kernel=None):
    """EM for one diagonal GMM. Returns ``(mixture, loglik_history)``.

    The history holds the mean per-frame log-likelihood after each E-step;
    it is checked to be non-decreasing up to round-off.
    """
    x = np.asarray(x, dtype=np.float64)
    t, k = x.shape
    if t == 0:
        raise TrainingError("no frames to train on")
    if t < m:
        raise TrainingError(f"{t} frames cannot support {m} mixture components")
    data_var = x.var(axis=0)
    floor = np.maximum(REL_VAR_FLOOR * data_var, ABS_VAR_FLOOR)

    centers = x[kmeans_pp(x, m, rng)]
    nearest = np.argmin(((x[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1)
    resp = np.zeros((t, m))
    resp[np.arange(t), nearest] = 1.0
    mix = _m_step(x, resp, floor, SceneMixture(np.full(m, 1.0 / m), centers, np.tile(data_var + floor, (m, 1))))

    logpdf = kernel or _backend.diag_gmm_logpdf
    history: list[float] = []
    for _ in range(max_iter):
        comp, total = logpdf(x, mix.means, 1.0 / mix.variances, mix.log_const())
        ll = float(np.mean(total))
        if history:
            if ll < history[-1] - MONOTONE_TOL * max(1.0, abs(history[-1])):
                log.warning("EM log-likelihood decreased: %.12g -> %.12g", history[-1], ll)
            if abs(ll - history[-1]) <= rel_tol * max(abs(history[-1]), 1e-12):
                history.append(ll)
                break
        history.append(ll)
        resp = np.exp(comp - total[:, None])
        mix = _m_step(x, resp, floor, mix)
    return mix, history


def train_gmm(labeled, m: int = 8, seed: int = 0, max_iter: int = 200, kernel=None) -> GmmModel:
    """Train one mixture per scene.

    ``labeled`` is an iterable of ``(FeatureSequence, scene_label)``.
    Scenes are ordered by first appearance.
    """
    pools: dict[str, list[np.ndarray]] = {}
    kinds, orders = set(), set()
    for seq, label in labeled:
        pools.setdefault(label, []).append(seq.values)
        kinds.add(seq.kind)
        orders.add(seq.order)
    if not pools:
        raise TrainingError("no training data")
    if len(kinds) != 1 or len(orders) != 1:
        raise ContractError(f"mixed feature kinds/orders in training data: {kinds}, {orders}")
    kind, order = kinds.pop(), orders.pop()

    scenes, mixtures, history = [], [], {}
    for idx, (label, chunks) in enumerate(pools.items()):
        x = np.vstack(chunks) if chunks else np.empty((0, order))
        if x.shape[0] == 0:
            raise TrainingError(f"scene {label!r} has no frames")
        if x.shape[0] < m * order:
            warnings.warn(f"scene {label!r}: {x.shape[0]} frames < m*K = {m * order}", stacklevel=2)
        rng = np.random.default_rng([seed, idx])
        mix, hist = fit_mixture(x, m, rng, max_iter=max_iter, kernel=kernel)
        scenes.append(label)
        mixtures.append(mix)
        history[label] = hist
    config = {"m": m, "seed": seed, "max_iter": max_iter, "covariance": "diag"}
    return GmmModel(scenes, mixtures, kind, order, config, history)


def scene_logliks(model: GmmModel, features: FeatureSequence, kernel=None) -> np.ndarray:
    if features.kind != model.feature_kind or features.order != model.order:
        raise ContractError(
            f"features are {features.kind}/K={features.order}, "
            f"model expects {model.feature_kind}/K={model.order}"
        )
    if features.n_frames == 0:
        raise ContractError("cannot classify an empty feature sequence")
    return np.array([mix.frame_loglik(features.values, kernel).sum() for mix in model.mixtures])


def classify_clip(model: GmmModel, features: FeatureSequence, kernel=None):
    """Return ``(scene_label, per_scene_loglik)``; ties go to the lower scene index."""
    ll = scene_logliks(model, features, kernel)
    return model.scenes[int(np.argmax(ll))], ll


@dataclass
class Evaluation:
    accuracy: float
    confusion: np.ndarray  # rows: true scene, cols: predicted
    labels: list[str]
    predictions: list[str]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "labels": self.labels,
            "confusion": self.confusion.tolist(),
            "predictions": self.predictions,
        }


def confusion_report(truth, predicted, labels) -> Evaluation:
    index = {lab: i for i, lab in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=int)
    for t, p in zip(truth, predicted):
        confusion[index[t], index[p]] += 1
    correct = sum(t == p for t, p in zip(truth, predicted))
    return Evaluation(correct / len(truth), confusion, list(labels), list(predicted))


def evaluate(model: GmmModel, test_set, kernel=None) -> Evaluation:
    """Clip-level accuracy and confusion matrix over ``(features, label)`` pairs."""
    test_set = list(test_set)
    if not test_set:
        raise ContractError("empty test set")
    truth, predicted = [], []
    for features, label in test_set:
        if label not in model.scenes:
            raise ContractError(f"test label {label!r} is not a trained scene")
        truth.append(label)
        predicted.append(classify_clip(model, features, kernel)[0])
    return confusion_report(truth, predicted, model.scenes)
