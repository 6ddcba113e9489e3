"""Load a transformer and turn texts into fixed pooled sentence vectors."""
from __future__ import annotations

import numpy as np

POOLINGS = ("mean", "first")


class ModelLoadError(RuntimeError):
    """The model identifier could not be resolved or loaded."""


class EmbeddingModel:
    """A frozen transformer plus a pooling rule.

    Pooling "mean" averages final-layer token states over non-padding
    positions; "first" takes the first token's state. Inference runs in
    eval mode with gradients disabled, so identical texts always produce
    identical vectors.
    """

    def __init__(self, model_id: str, pooling: str = "mean"):
        if pooling not in POOLINGS:
            raise ValueError(f"pooling must be one of {POOLINGS}, got {pooling!r}")
        # imported here so the CLI can print argument errors without
        # paying torch import time
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_id!r}: {exc}") from exc
        self.model.eval()
        self.model_id = model_id
        self.pooling = pooling
        self.dim = int(self.model.config.hidden_size)

    def embed(self, texts: list[str], batch_size: int = 32) -> np.ndarray:
        """Embed texts into an (n, dim) float32 array, preserving order."""
        if not texts:
            raise ValueError("no texts to embed")
        if any(not t.strip() for t in texts):
            raise ValueError("cannot embed empty or whitespace-only text")
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        torch = self._torch
        chunks = []
        with torch.inference_mode():
            for start in range(0, len(texts), batch_size):
                batch = texts[start : start + batch_size]
                encoded = self.tokenizer(
                    batch, padding=True, truncation=True, return_tensors="pt"
                )
                states = self.model(**encoded).last_hidden_state
                if self.pooling == "mean":
                    mask = encoded["attention_mask"].unsqueeze(-1).to(states.dtype)
                    pooled = (states * mask).sum(dim=1) / mask.sum(dim=1)
                else:
                    pooled = states[:, 0, :]
                chunks.append(pooled.to(torch.float32).cpu().numpy())
        return np.vstack(chunks)
