"""Protocol conformance: recorded request/response behavior of every
endpoint, including training-loss decrease and checkpoint round trips."""

from __future__ import annotations

import pytest

PROMPT = "Arg1: it rained. Arg2: the game was cancelled.</s></s>The conjunction between Arg1 and Arg2 is <mask>."
SHORT = "it rained <mask> the game was cancelled."
CANDIDATES = ["because", "and", "but"]


class TestHealth:
    def test_reports_version_and_special_tokens(self, client):
        body = client.get("/health").json()
        assert body["version"] == "v1"
        assert body["mask_token"] == "<mask>"
        assert body["sep_token"] == "</s></s>"
        assert body["trainable"] is True
        assert body["model_name"]


class TestTokenizeCheck:
    def test_matches_direct_tokenizer_run(self, client, backend):
        words = ["because", "for example", "and", "notwithstanding the fact"]
        response = client.post("/tokenize_check", json={"words": words})
        flags = response.json()["single_token"]
        # oracle: the backend tokenizer itself, word prefixed with a space
        expected = [
            len(backend.tokenizer(" " + w, add_special_tokens=False)["input_ids"]) == 1
            for w in words
        ]
        assert flags == expected
        assert flags[0] is True   # trained into the BPE vocabulary
        assert flags[1] is False  # multiword splits


class TestScore:
    def test_shape_matches_texts_by_candidates(self, client):
        response = client.post(
            "/score", json={"texts": [PROMPT, SHORT], "candidates": CANDIDATES}
        )
        rows = response.json()["scores"]
        assert len(rows) == 2
        assert all(len(row) == len(CANDIDATES) for row in rows)

    def test_rows_align_with_candidate_order(self, client, backend):
        import torch

        response = client.post(
            "/score", json={"texts": [SHORT], "candidates": CANDIDATES}
        )
        row = response.json()["scores"][0]
        # oracle: drive the wrapped model directly
        encoding = backend.tokenizer(SHORT, return_tensors="pt")
        backend.model.eval()
        with torch.no_grad():
            logits = backend.model(**encoding).logits[0]
        mask_pos = encoding["input_ids"][0].tolist().index(backend.mask_id)
        for value, word in zip(row, CANDIDATES):
            token_id = backend.tokenizer(" " + word, add_special_tokens=False)["input_ids"][0]
            assert value == pytest.approx(float(logits[mask_pos, token_id]), abs=1e-5)

    def test_deterministic_in_inference_mode(self, client):
        payload = {"texts": [PROMPT], "candidates": CANDIDATES}
        first = client.post("/score", json=payload).json()
        second = client.post("/score", json=payload).json()
        assert first == second

    def test_text_without_mask_is_400(self, client):
        response = client.post(
            "/score", json={"texts": ["no mask here"], "candidates": CANDIDATES}
        )
        assert response.status_code == 400

    def test_text_with_two_masks_is_400(self, client):
        response = client.post(
            "/score",
            json={"texts": ["one <mask> two <mask>"], "candidates": CANDIDATES},
        )
        assert response.status_code == 400

    def test_multitoken_candidate_is_400_naming_it(self, client):
        response = client.post(
            "/score", json={"texts": [SHORT], "candidates": ["because", "for example"]}
        )
        assert response.status_code == 400
        assert "for example" in response.json()["detail"]

    def test_long_input_truncated_but_scored(self, client):
        # far beyond the tiny model's 64-token capacity
        long_arg = "rain " * 300
        text = f"Arg1: {long_arg}. Arg2: the game was cancelled.</s></s>The conjunction between Arg1 and Arg2 is <mask>."
        response = client.post("/score", json={"texts": [text], "candidates": CANDIDATES})
        assert response.status_code == 200
        assert len(response.json()["scores"][0]) == 3


class TestTrainBatch:
    def test_loss_decreases_on_repeated_batch(self, client):
        payload = {
            "texts": [PROMPT, SHORT],
            "gold": ["because", "because"],
            "candidates": CANDIDATES,
            "lr": 1e-3,
            "weight_decay": 1e-4,
            "label_smoothing": 0.05,
        }
        losses = [
            client.post("/train_batch", json=payload).json()["loss"] for _ in range(5)
        ]
        assert losses[-1] < losses[0]

    def test_candidates_default_to_unique_golds(self, client):
        payload = {
            "texts": [SHORT, PROMPT],
            "gold": ["because", "and"],
            "lr": 1e-4,
        }
        response = client.post("/train_batch", json=payload)
        assert response.status_code == 200
        assert response.json()["loss"] > 0

    def test_gold_outside_candidates_is_400(self, client):
        response = client.post(
            "/train_batch",
            json={"texts": [SHORT], "gold": ["meanwhile"], "candidates": CANDIDATES},
        )
        assert response.status_code == 400

    def test_training_changes_scores(self, client):
        payload = {"texts": [SHORT], "candidates": CANDIDATES}
        before = client.post("/score", json=payload).json()
        client.post(
            "/train_batch",
            json={"texts": [SHORT], "gold": ["because"],
                  "candidates": CANDIDATES, "lr": 1e-2},
        )
        after = client.post("/score", json=payload).json()
        assert before != after


class TestCheckpoints:
    def test_save_train_load_restores_scores_exactly(self, client):
        payload = {"texts": [PROMPT, SHORT], "candidates": CANDIDATES}
        baseline = client.post("/score", json=payload).json()
        assert client.post("/save", json={"checkpoint_id": "base"}).json() == {
            "checkpoint_id": "base"
        }
        for _ in range(3):
            client.post(
                "/train_batch",
                json={"texts": [SHORT], "gold": ["and"],
                      "candidates": CANDIDATES, "lr": 1e-2},
            )
        drifted = client.post("/score", json=payload).json()
        assert drifted != baseline
        assert client.post("/load", json={"checkpoint_id": "base"}).status_code == 200
        restored = client.post("/score", json=payload).json()
        assert restored == baseline

    def test_unknown_checkpoint_is_404(self, client):
        assert client.post("/load", json={"checkpoint_id": "ghost"}).status_code == 404

    def test_hostile_checkpoint_id_is_400(self, client):
        response = client.post("/save", json={"checkpoint_id": "../../etc/passwd"})
        assert response.status_code == 400
