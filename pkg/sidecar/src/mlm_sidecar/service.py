"""Masked-LM scoring and fine-tuning behind a small JSON-over-HTTP protocol.

Endpoints (protocol v1):

* ``GET /health`` - version, model name, mask/segment placeholder strings,
  trainable flag.
* ``POST /tokenize_check`` - which words are single tokens in prompt
  context (leading space).
* ``POST /score`` - pre-softmax logits at the mask position for each
  candidate's token id, rows aligned with the request candidate order.
  Deterministic: the model stays in eval mode.
* ``POST /train_batch`` - one AdamW step (decoupled weight decay) on the
  batch-mean label-smoothed cross-entropy over the candidate-restricted
  distribution. Requests are serialized by an internal lock.
* ``POST /save`` / ``POST /load`` - checkpoint the model weights under a
  configured directory; loading restores scores exactly.

Texts carry the literal mask placeholder advertised by /health. Prompts
longer than the model capacity are trimmed from the left first (argument
material before the mask), then from the right of the text but never past
the mask, so the instruction tail and mask survive.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from pathlib import Path

import torch
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel
from transformers import AutoModelForMaskedLM, AutoTokenizer

PROTOCOL_VERSION = "v1"

_CHECKPOINT_ID_RE = re.compile(r"^[A-Za-z0-9._-]{1,128}$")


@dataclass
class BackendConfig:
    model: str
    device: str = "cpu"
    max_length: int | None = None
    checkpoint_dir: str = "checkpoints"


class ProtocolError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        super().__init__(message)


class MaskedLMBackend:
    """Owns the model, tokenizer, optimizer and checkpoint directory."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        self.model = AutoModelForMaskedLM.from_pretrained(config.model)
        self.device = torch.device(config.device)
        self.model.to(self.device)
        self.model.eval()
        self.mask_id = self.tokenizer.mask_token_id
        if self.mask_id is None:
            raise ValueError(f"model {config.model} has no mask token")
        self._train_lock = threading.Lock()
        self._optimizer: torch.optim.AdamW | None = None
        self.capacity = self._capacity(config.max_length)
        self.checkpoint_dir = Path(config.checkpoint_dir)

    def _capacity(self, requested: int | None) -> int:
        limit = getattr(self.model.config, "max_position_embeddings", 512)
        # BERT-style position tables include the two special positions
        model_cap = max(8, limit - 2)
        if requested is not None:
            return min(requested, model_cap)
        declared = getattr(self.tokenizer, "model_max_length", model_cap)
        if declared and declared < 10**9:
            return min(declared, model_cap)
        return model_cap

    # -- protocol operations -------------------------------------------------

    def health(self) -> dict:
        return {
            "version": PROTOCOL_VERSION,
            "model_name": str(self.config.model),
            "mask_token": self.tokenizer.mask_token,
            # segment boundary placeholder as it appears inside prompt text
            "sep_token": self.tokenizer.sep_token * 2,
            "trainable": True,
        }

    def tokenize_check(self, words: list[str]) -> list[bool]:
        flags = []
        for word in words:
            ids = self.tokenizer(" " + word, add_special_tokens=False)["input_ids"]
            flags.append(len(ids) == 1)
        return flags

    def _candidate_ids(self, candidates: list[str]) -> list[int]:
        if not candidates:
            raise ProtocolError(400, "candidates must be non-empty")
        ids = []
        for word in candidates:
            pieces = self.tokenizer(" " + word, add_special_tokens=False)["input_ids"]
            if len(pieces) != 1:
                raise ProtocolError(
                    400, f"candidate {word!r} is not a single token ({len(pieces)} pieces)"
                )
            ids.append(pieces[0])
        return ids

    def _encode(self, text: str) -> list[int]:
        ids = self.tokenizer(text)["input_ids"]
        if ids.count(self.mask_id) != 1:
            raise ProtocolError(
                400, f"text must contain exactly one {self.tokenizer.mask_token!r}"
            )
        while len(ids) > self.capacity:
            mask_pos = ids.index(self.mask_id)
            if mask_pos > 1:
                del ids[1]  # leftmost content token (argument material)
            elif len(ids) - 2 > mask_pos:
                del ids[len(ids) - 2]  # rightmost before the final special
            else:
                raise ProtocolError(400, "prompt cannot be shrunk to model capacity")
        return ids

    def _batch(self, texts: list[str]):
        if not texts:
            raise ProtocolError(400, "texts must be non-empty")
        encoded = [self._encode(t) for t in texts]
        width = max(len(ids) for ids in encoded)
        pad = self.tokenizer.pad_token_id or 0
        input_ids = torch.full((len(encoded), width), pad, dtype=torch.long)
        attention = torch.zeros((len(encoded), width), dtype=torch.long)
        mask_rows = []
        for i, ids in enumerate(encoded):
            input_ids[i, : len(ids)] = torch.tensor(ids, dtype=torch.long)
            attention[i, : len(ids)] = 1
            mask_rows.append(ids.index(self.mask_id))
        return (input_ids.to(self.device), attention.to(self.device),
                torch.tensor(mask_rows, device=self.device))

    def _mask_logits(self, texts: list[str]) -> torch.Tensor:
        input_ids, attention, mask_rows = self._batch(texts)
        output = self.model(input_ids=input_ids, attention_mask=attention)
        rows = torch.arange(len(texts), device=self.device)
        return output.logits[rows, mask_rows]

    def score(self, texts: list[str], candidates: list[str]) -> list[list[float]]:
        candidate_ids = self._candidate_ids(candidates)
        self.model.eval()
        with torch.no_grad():
            logits = self._mask_logits(texts)
        selected = logits[:, candidate_ids]
        return [[float(v) for v in row] for row in selected.cpu()]

    def train_batch(
        self,
        texts: list[str],
        gold: list[str],
        lr: float,
        weight_decay: float,
        label_smoothing: float,
        candidates: list[str] | None = None,
    ) -> float:
        if len(texts) != len(gold):
            raise ProtocolError(400, "texts and gold must have equal length")
        if not 0.0 <= label_smoothing < 1.0:
            raise ProtocolError(400, f"label_smoothing out of range: {label_smoothing}")
        if candidates is None:
            candidates = list(dict.fromkeys(gold))
        candidate_ids = self._candidate_ids(candidates)
        index = {word: i for i, word in enumerate(candidates)}
        try:
            gold_rows = [index[g] for g in gold]
        except KeyError as exc:
            raise ProtocolError(400, f"gold word {exc.args[0]!r} not in candidates") from None

        with self._train_lock:
            optimizer = self._optimizer_for(lr, weight_decay)
            self.model.train()
            try:
                logits = self._mask_logits(texts)[:, candidate_ids]
                log_probs = torch.log_softmax(logits, dim=-1)
                k = len(candidates)
                q = torch.full_like(log_probs, label_smoothing / k)
                rows = torch.arange(len(texts), device=self.device)
                q[rows, torch.tensor(gold_rows, device=self.device)] += 1.0 - label_smoothing
                loss = -(q * log_probs).sum(dim=-1).mean()
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                return float(loss.detach().cpu())
            finally:
                self.model.eval()

    def _optimizer_for(self, lr: float, weight_decay: float) -> torch.optim.AdamW:
        if self._optimizer is None:
            self._optimizer = torch.optim.AdamW(
                self.model.parameters(), lr=lr, weight_decay=weight_decay
            )
        for group in self._optimizer.param_groups:
            group["lr"] = lr
            group["weight_decay"] = weight_decay
        return self._optimizer

    def _checkpoint_path(self, checkpoint_id: str) -> Path:
        if not _CHECKPOINT_ID_RE.match(checkpoint_id):
            raise ProtocolError(400, f"invalid checkpoint id {checkpoint_id!r}")
        return self.checkpoint_dir / f"{checkpoint_id}.pt"

    def save(self, checkpoint_id: str) -> str:
        path = self._checkpoint_path(checkpoint_id)
        with self._train_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            torch.save(self.model.state_dict(), path)
        return checkpoint_id

    def load(self, checkpoint_id: str) -> str:
        path = self._checkpoint_path(checkpoint_id)
        if not path.exists():
            raise ProtocolError(404, f"unknown checkpoint {checkpoint_id!r}")
        with self._train_lock:
            state = torch.load(path, map_location=self.device, weights_only=True)
            self.model.load_state_dict(state)
            self.model.eval()
        return checkpoint_id


class TokenizeCheckRequest(BaseModel):
    words: list[str]


class ScoreRequest(BaseModel):
    texts: list[str]
    candidates: list[str]


class TrainBatchRequest(BaseModel):
    texts: list[str]
    gold: list[str]
    lr: float = 1e-5
    weight_decay: float = 1e-4
    label_smoothing: float = 0.05
    candidates: list[str] | None = None


class CheckpointRequest(BaseModel):
    checkpoint_id: str


def create_app(backend: MaskedLMBackend) -> FastAPI:
    app = FastAPI(title="mlm-sidecar", version=PROTOCOL_VERSION)

    def run(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ProtocolError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from None
        except torch.cuda.OutOfMemoryError as exc:  # pragma: no cover
            raise HTTPException(status_code=503, detail=f"out of memory: {exc}") from None

    @app.get("/health")
    def health():
        return backend.health()

    @app.post("/tokenize_check")
    def tokenize_check(request: TokenizeCheckRequest):
        return {"single_token": run(backend.tokenize_check, request.words)}

    @app.post("/score")
    def score(request: ScoreRequest):
        return {"scores": run(backend.score, request.texts, request.candidates)}

    @app.post("/train_batch")
    def train_batch(request: TrainBatchRequest):
        loss = run(
            backend.train_batch,
            request.texts,
            request.gold,
            request.lr,
            request.weight_decay,
            request.label_smoothing,
            request.candidates,
        )
        return {"loss": loss}

    @app.post("/save")
    def save(request: CheckpointRequest):
        return {"checkpoint_id": run(backend.save, request.checkpoint_id)}

    @app.post("/load")
    def load(request: CheckpointRequest):
        return {"checkpoint_id": run(backend.load, request.checkpoint_id)}

    return app
