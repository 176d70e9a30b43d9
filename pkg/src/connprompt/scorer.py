"""Mask-scoring backends.

A scorer takes a rendered prompt and a candidate answer list and returns
one pre-softmax score per candidate at the mask position. Three
implementations ship here:

* MockScorer - scripted scores for tests and dry runs.
* ReferenceScorer - a trainable bag-of-words linear model; a desk-scale
  stand-in for a pretrained masked LM with the same training objective.
* RemoteScorer - client for the HTTP sidecar wrapping a real MLM.

score_mask never mutates scorer state; train_step is the only mutator and
requires exclusive access.
"""

from __future__ import annotations

import json
import math
import string
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import requests

from .errors import (
    BackendError,
    BackendUnavailableError,
    CapabilityError,
    ContractError,
    HandshakeError,
)
from .prompt import DEFAULT_MASK_TOKEN, DEFAULT_SEP_TOKEN, RenderedPrompt

PROTOCOL_VERSION = "v1"

_PUNCT = string.punctuation


@dataclass(frozen=True)
class ScoreVector:
    """Scores for exactly the requested candidates, comparable within one call."""

    scores: dict[str, float]

    def __post_init__(self):
        for token, value in self.scores.items():
            if not math.isfinite(value):
                raise ContractError(f"non-finite score for candidate {token!r}: {value}")

    def __getitem__(self, token: str) -> float:
        return self.scores[token]

    def items(self):
        return self.scores.items()


@dataclass(frozen=True)
class ScorerCapabilities:
    trainable: bool
    deterministic: bool
    tokenizer_kind: str


@dataclass(frozen=True)
class TrainStepConfig:
    """Per-step training knobs, including the full candidate answer list."""

    candidates: tuple[str, ...]
    learning_rate: float
    weight_decay: float
    label_smoothing: float


Batch = Sequence[tuple[RenderedPrompt, str]]


def _check_candidates(scorer: "Scorer", candidates: Sequence[str]) -> None:
    if not candidates:
        raise ContractError("candidate list must be non-empty")
    flags = scorer.single_token_flags(list(candidates))
    bad = [c for c, ok in zip(candidates, flags) if not ok]
    if bad:
        raise ContractError(f"candidates are not single tokens for this scorer: {bad}")


class Scorer:
    """Interface contract; concrete backends override the raising methods."""

    mask_token: str = DEFAULT_MASK_TOKEN
    sep_token: str = DEFAULT_SEP_TOKEN

    def capabilities(self) -> ScorerCapabilities:
        raise NotImplementedError

    def tokenize(self, text: str) -> list[str]:
        raise CapabilityError(f"{type(self).__name__} does not expose a local tokenizer")

    def single_token_flags(self, words: list[str]) -> list[bool]:
        raise NotImplementedError

    def prepare(self, texts: Iterable[str]) -> None:
        """Hook for backends that build vocabulary from the training corpus."""

    def score_mask(self, prompt: RenderedPrompt, candidates: Sequence[str]) -> ScoreVector:
        raise NotImplementedError

    def score_many(
        self, prompts: Sequence[RenderedPrompt], candidates: Sequence[str]
    ) -> list[ScoreVector]:
        return [self.score_mask(p, candidates) for p in prompts]

    def train_step(self, batch: Batch, config: TrainStepConfig) -> float:
        raise CapabilityError(f"{type(self).__name__} is not trainable")

    def save_checkpoint(self, checkpoint_id: str) -> str:
        raise CapabilityError(f"{type(self).__name__} does not support checkpoints")

    def load_checkpoint(self, checkpoint_id: str) -> None:
        raise CapabilityError(f"{type(self).__name__} does not support checkpoints")


def _whitespace_tokenize(text: str, mask_token: str, sep_token: str) -> list[str]:
    # Segment markers are glued to surrounding text in rendered prompts;
    # strip them, then isolate the mask so it survives as its own token.
    text = text.replace(sep_token, " ")
    text = text.replace(mask_token, f" {mask_token} ")
    return text.split()


class MockScorer(Scorer):
    """Scripted scores, identical for every prompt."""

    def __init__(self, script: dict[str, float] | None = None, default: float = 0.0):
        self.script = dict(script or {})
        self.default = default

    def capabilities(self) -> ScorerCapabilities:
        return ScorerCapabilities(trainable=False, deterministic=True,
                                  tokenizer_kind="whitespace")

    def tokenize(self, text: str) -> list[str]:
        return _whitespace_tokenize(text, self.mask_token, self.sep_token)

    def single_token_flags(self, words: list[str]) -> list[bool]:
        return [len(word.split()) == 1 for word in words]

    def score_mask(self, prompt: RenderedPrompt, candidates: Sequence[str]) -> ScoreVector:
        _check_candidates(self, candidates)
        return ScoreVector({c: self.script.get(c, self.default) for c in candidates})


@dataclass
class FeatureConfig:
    """Feature extraction knobs for the reference scorer."""

    window: int = 3  # tokens each side of the mask that get extra features


class ReferenceScorer(Scorer):
    """Bag-of-words linear scorer trained with plain gradient descent and
    decoupled weight decay (weights only, never biases).

    Features are lowercased word counts over the whole prompt plus
    mask-adjacent window copies; words unseen at vocabulary-build time are
    ignored at inference. Zero-initialized, so an untrained scorer gives
    every candidate the same score.
    """

    CHECKPOINT_FORMAT = "reference-scorer/1"

    def __init__(self, features: FeatureConfig | None = None, seed: int = 0):
        self.features = features or FeatureConfig()
        self.seed = seed
        self.vocab: dict[str, int] = {}
        self.weights: dict[str, np.ndarray] = {}
        self.bias: dict[str, float] = {}
        self._checkpoints: dict[str, tuple[dict[str, np.ndarray], dict[str, float]]] = {}

    def capabilities(self) -> ScorerCapabilities:
        return ScorerCapabilities(trainable=True, deterministic=True,
                                  tokenizer_kind="whitespace")

    def tokenize(self, text: str) -> list[str]:
        return _whitespace_tokenize(text, self.mask_token, self.sep_token)

    def single_token_flags(self, words: list[str]) -> list[bool]:
        return [len(word.split()) == 1 for word in words]

    # -- features ---------------------------------------------------------

    def extract_features(self, text: str) -> dict[str, float]:
        tokens = self.tokenize(text)
        feats: dict[str, float] = {}
        mask_index = None
        cleaned: list[str | None] = []
        for i, tok in enumerate(tokens):
            if tok == self.mask_token:
                mask_index = i
                cleaned.append(None)
                continue
            word = tok.strip(_PUNCT).lower()
            cleaned.append(word or None)
            if word:
                feats[word] = feats.get(word, 0.0) + 1.0
        if mask_index is not None and self.features.window > 0:
            lo = max(0, mask_index - self.features.window)
            hi = min(len(cleaned), mask_index + self.features.window + 1)
            for i in range(lo, hi):
                word = cleaned[i]
                if word is not None:
                    key = f"near:{word}"
                    feats[key] = feats.get(key, 0.0) + 1.0
        return feats

    def prepare(self, texts: Iterable[str]) -> None:
        """Build the feature vocabulary from the training corpus (sorted for
        run-to-run stability). Happens before training; resets any rows."""
        names: set[str] = set(self.vocab)
        for text in texts:
            names.update(self.extract_features(text))
        self.vocab = {name: i for i, name in enumerate(sorted(names))}
        for cand in self.weights:
            self.weights[cand] = np.zeros(len(self.vocab))
            self.bias[cand] = 0.0

    def _feature_vector(self, text: str) -> tuple[np.ndarray, np.ndarray]:
        feats = self.extract_features(text)
        idx = []
        val = []
        for name, count in feats.items():
            j = self.vocab.get(name)
            if j is not None:
                idx.append(j)
                val.append(count)
        return np.asarray(idx, dtype=np.intp), np.asarray(val, dtype=np.float64)

    def _ensure_candidate(self, token: str) -> None:
        if token not in self.weights:
            self.weights[token] = np.zeros(len(self.vocab))
            self.bias[token] = 0.0

    def _score_features(self, idx: np.ndarray, val: np.ndarray, candidates: Sequence[str]) -> np.ndarray:
        out = np.empty(len(candidates))
        for k, cand in enumerate(candidates):
            row = self.weights.get(cand)
            if row is None:
                out[k] = 0.0
            else:
                out[k] = float(row[idx] @ val) + self.bias.get(cand, 0.0)
        return out

    # -- scoring and training ----------------------------------------------

    def score_mask(self, prompt: RenderedPrompt, candidates: Sequence[str]) -> ScoreVector:
        _check_candidates(self, candidates)
        idx, val = self._feature_vector(prompt.text)
        scores = self._score_features(idx, val, candidates)
        return ScoreVector({c: float(s) for c, s in zip(candidates, scores)})

    def _batch_forward(self, batch: Batch, config: TrainStepConfig):
        candidates = list(config.candidates)
        cand_index = {c: k for k, c in enumerate(candidates)}
        feats = []
        gold_rows = []
        for prompt, gold in batch:
            if gold not in cand_index:
                raise ContractError(f"gold answer {gold!r} is not among the candidates")
            feats.append(self._feature_vector(prompt.text))
            gold_rows.append(cand_index[gold])
        scores = np.stack([self._score_features(idx, val, candidates) for idx, val in feats])
        # stable log-softmax
        shifted = scores - scores.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_p = shifted - log_z
        probs = np.exp(log_p)
        k = len(candidates)
        eps = config.label_smoothing
        q = np.full_like(probs, eps / k)
        q[np.arange(len(batch)), gold_rows] += 1.0 - eps
        loss = float(-(q * log_p).sum(axis=1).mean())
        return candidates, feats, probs, q, loss

    def loss_on(self, batch: Batch, config: TrainStepConfig) -> float:
        """Batch-mean smoothed cross-entropy without updating parameters."""
        for candidate in config.candidates:
            self._ensure_candidate(candidate)
        return self._batch_forward(batch, config)[4]

    def gradients(self, batch: Batch, config: TrainStepConfig):
        """Analytic gradients of loss_on w.r.t. every weight row and bias."""
        for candidate in config.candidates:
            self._ensure_candidate(candidate)
        candidates, feats, probs, q, loss = self._batch_forward(batch, config)
        delta = (probs - q) / len(batch)
        grad_w = {c: np.zeros(len(self.vocab)) for c in candidates}
        grad_b = {c: 0.0 for c in candidates}
        for b, (idx, val) in enumerate(feats):
            for k, cand in enumerate(candidates):
                np.add.at(grad_w[cand], idx, delta[b, k] * val)
                grad_b[cand] += delta[b, k]
        return grad_w, grad_b, loss

    def train_step(self, batch: Batch, config: TrainStepConfig) -> float:
        if not batch:
            raise ContractError("empty training batch")
        grad_w, grad_b, loss = self.gradients(batch, config)
        lr = config.learning_rate
        decay = 1.0 - lr * config.weight_decay
        for cand in config.candidates:
            self.weights[cand] *= decay
            self.weights[cand] -= lr * grad_w[cand]
            self.bias[cand] -= lr * grad_b[cand]
        return loss

    # -- checkpoints --------------------------------------------------------

    def save_checkpoint(self, checkpoint_id: str) -> str:
        self._checkpoints[checkpoint_id] = (
            {c: w.copy() for c, w in self.weights.items()},
            dict(self.bias),
        )
        return checkpoint_id

    def load_checkpoint(self, checkpoint_id: str) -> None:
        try:
            weights, bias = self._checkpoints[checkpoint_id]
        except KeyError:
            raise ContractError(f"unknown checkpoint {checkpoint_id!r}") from None
        self.weights = {c: w.copy() for c, w in weights.items()}
        self.bias = dict(bias)

    def save_file(self, path: str | Path) -> None:
        payload = {
            "format": self.CHECKPOINT_FORMAT,
            "seed": self.seed,
            "window": self.features.window,
            "vocab": self.vocab,
            "weights": {c: w.tolist() for c, w in self.weights.items()},
            "bias": self.bias,
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load_file(cls, path: str | Path) -> "ReferenceScorer":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != cls.CHECKPOINT_FORMAT:
            raise ContractError(f"unsupported checkpoint format {payload.get('format')!r}")
        scorer = cls(FeatureConfig(window=payload["window"]), seed=payload["seed"])
        scorer.vocab = {str(k): int(v) for k, v in payload["vocab"].items()}
        scorer.weights = {c: np.asarray(w, dtype=np.float64) for c, w in payload["weights"].items()}
        scorer.bias = {c: float(b) for c, b in payload["bias"].items()}
        return scorer


@dataclass
class RemoteConfig:
    base_url: str
    timeout: float = 30.0
    retries: int = 2
    backoff: float = 0.2


class RemoteScorer(Scorer):
    """Client for the HTTP sidecar realizing the full-fidelity backend.

    Scoring is safe for concurrent callers; a training session must be
    driven by a single thread (the sidecar additionally serializes
    /train_batch on its side).
    """

    def __init__(self, config: RemoteConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session or requests.Session()
        self._health: dict | None = None

    # -- transport ----------------------------------------------------------

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        url = self.config.base_url.rstrip("/") + path
        attempts = self.config.retries + 1
        last = "unknown error"
        for attempt in range(attempts):
            try:
                resp = self._session.request(method, url, json=payload,
                                             timeout=self.config.timeout)
            except (requests.ConnectionError, requests.Timeout) as exc:
                last = str(exc) or type(exc).__name__
                if attempt + 1 < attempts:
                    time.sleep(self.config.backoff * (attempt + 1))
                continue
            if resp.status_code >= 400:
                raise BackendError(f"{method} {path} -> {resp.status_code}: {resp.text}")
            return resp.json()
        raise BackendUnavailableError(self.config.base_url, attempts, last)

    def _ensure_connected(self) -> dict:
        if self._health is None:
            health = self._request("GET", "/health")
            version = health.get("version")
            if version != PROTOCOL_VERSION:
                raise HandshakeError(
                    f"backend speaks protocol {version!r}, expected {PROTOCOL_VERSION!r}"
                )
            self._health = health
            self.mask_token = health["mask_token"]
            self.sep_token = health["sep_token"]
        return self._health

    # -- scorer interface ----------------------------------------------------

    def capabilities(self) -> ScorerCapabilities:
        health = self._ensure_connected()
        return ScorerCapabilities(
            trainable=bool(health.get("trainable", False)),
            deterministic=True,
            tokenizer_kind=f"remote:{health.get('model_name', 'unknown')}",
        )

    def single_token_flags(self, words: list[str]) -> list[bool]:
        self._ensure_connected()
        out = self._request("POST", "/tokenize_check", {"words": list(words)})
        return [bool(flag) for flag in out["single_token"]]

    def score_mask(self, prompt: RenderedPrompt, candidates: Sequence[str]) -> ScoreVector:
        return self.score_many([prompt], candidates)[0]

    def score_many(
        self, prompts: Sequence[RenderedPrompt], candidates: Sequence[str]
    ) -> list[ScoreVector]:
        self._ensure_connected()
        if not candidates:
            raise ContractError("candidate list must be non-empty")
        out = self._request(
            "POST",
            "/score",
            {"texts": [p.text for p in prompts], "candidates": list(candidates)},
        )
        rows = out["scores"]
        if len(rows) != len(prompts):
            raise ContractError(f"backend returned {len(rows)} rows for {len(prompts)} texts")
        vectors = []
        for row in rows:
            if len(row) != len(candidates):
                raise ContractError("score row is not aligned with the candidate list")
            vectors.append(ScoreVector(dict(zip(candidates, map(float, row)))))
        return vectors

    def train_step(self, batch: Batch, config: TrainStepConfig) -> float:
        health = self._ensure_connected()
        if not health.get("trainable", False):
            raise CapabilityError("backend reports trainable=false")
        payload = {
            "texts": [p.text for p, _ in batch],
            "gold": [gold for _, gold in batch],
            "candidates": list(config.candidates),
            "lr": config.learning_rate,
            "weight_decay": config.weight_decay,
            "label_smoothing": config.label_smoothing,
        }
        return float(self._request("POST", "/train_batch", payload)["loss"])

    def save_checkpoint(self, checkpoint_id: str) -> str:
        self._ensure_connected()
        out = self._request("POST", "/save", {"checkpoint_id": checkpoint_id})
        return str(out["checkpoint_id"])

    def load_checkpoint(self, checkpoint_id: str) -> None:
        self._ensure_connected()
        self._request("POST", "/load", {"checkpoint_id": checkpoint_id})
