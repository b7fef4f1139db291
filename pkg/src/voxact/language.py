"""Goal-string encoders.

The policy consumes a fixed-length token feature sequence. Any encoder
producing (num_tokens, feature_dim) can be plugged in; the built-in
fallback hashes each lowercased whitespace token into a seeded embedding,
so the package has no pretrained-model dependency and two runs of the
same goal string always produce identical features.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import InvalidInputError


class LanguageEncoder:
    """Interface: encode(goal) -> (num_tokens, feature_dim) float array."""

    num_tokens: int
    feature_dim: int

    def encode(self, goal: str) -> np.ndarray:
        raise NotImplementedError


class HashingLanguageEncoder(LanguageEncoder):
    """Deterministic per-token hash embeddings, zero-padded or truncated."""

    def __init__(self, num_tokens: int = 77, feature_dim: int = 512):
        self.num_tokens = int(num_tokens)
        self.feature_dim = int(feature_dim)
        self._cache: dict[str, np.ndarray] = {}

    def _token_embedding(self, token: str) -> np.ndarray:
        if token not in self._cache:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "little")
            rng = np.random.default_rng(seed)
            self._cache[token] = rng.standard_normal(self.feature_dim)
        return self._cache[token]

    def encode(self, goal: str) -> np.ndarray:
        if not goal or not goal.strip():
            raise InvalidInputError("language goal must be non-empty")
        tokens = goal.lower().split()
        out = np.zeros((self.num_tokens, self.feature_dim), dtype=np.float64)
        for i, token in enumerate(tokens[: self.num_tokens]):
            out[i] = self._token_embedding(token)
        return out
