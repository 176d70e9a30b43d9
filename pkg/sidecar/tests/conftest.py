"""Builds a tiny randomly-initialized masked LM (with a real byte-level BPE
tokenizer) on disk, so the protocol suite runs offline and fast."""

from __future__ import annotations

import os

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

# the full implicit answer vocabulary, so wire-level experiments with the
# built-in verbalizers pass the single-token constraint on the tiny model
ANSWER_WORDS = [
    "although", "nevertheless", "but", "however",
    "because", "as", "so", "consequently", "thus", "since",
    "instead", "rather", "or", "and", "also", "furthermore",
    "instance", "example", "first", "indeed", "specifically",
    "then", "subsequently", "previously", "earlier", "after", "meanwhile",
    "if", "unless", "none",
]

_PROSE = (
    "Arg1: it rained all day. Arg2: the game was cancelled. "
    "The conjunction between Arg1 and Arg2 is because. "
    "In summary, the discourse relation between Arg1 and Arg2 is cause."
)


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    from tokenizers import ByteLevelBPETokenizer
    from tokenizers.processors import RobertaProcessing
    from transformers import (
        PreTrainedTokenizerFast,
        RobertaConfig,
        RobertaForMaskedLM,
    )
    import torch

    target = tmp_path_factory.mktemp("tiny-mlm")
    # leading filler so every answer word is seen with a preceding space,
    # which is how the single-token check tokenizes candidates
    corpus = ["the " + " ".join(ANSWER_WORDS)] * 300 + [_PROSE] * 150

    bpe = ByteLevelBPETokenizer()
    bpe.train_from_iterator(
        corpus, vocab_size=800, min_frequency=2,
        special_tokens=["<s>", "<pad>", "</s>", "<unk>", "<mask>"],
    )
    bpe._tokenizer.post_processor = RobertaProcessing(
        sep=("</s>", bpe.token_to_id("</s>")), cls=("<s>", bpe.token_to_id("<s>")),
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=bpe._tokenizer,
        bos_token="<s>", eos_token="</s>", unk_token="<unk>", pad_token="<pad>",
        mask_token="<mask>", sep_token="</s>", cls_token="<s>",
        model_max_length=64,
    )

    torch.manual_seed(0)
    config = RobertaConfig(
        vocab_size=len(tokenizer),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=66,
        type_vocab_size=1,
        pad_token_id=tokenizer.pad_token_id,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.eos_token_id,
    )
    model = RobertaForMaskedLM(config)
    model.save_pretrained(target)
    tokenizer.save_pretrained(target)
    return str(target)


@pytest.fixture
def backend(tiny_model_dir, tmp_path):
    from mlm_sidecar import BackendConfig, MaskedLMBackend

    return MaskedLMBackend(
        BackendConfig(model=tiny_model_dir, device="cpu",
                      checkpoint_dir=str(tmp_path / "ckpts"))
    )


@pytest.fixture
def client(backend):
    from fastapi.testclient import TestClient

    from mlm_sidecar import create_app

    with TestClient(create_app(backend)) as test_client:
        yield test_client
