"""Sentence embedding providers used by the similarity metric and the reward."""

import hashlib
import logging
import threading
from abc import ABC, abstractmethod

import numpy as np
import requests

from .errors import EmbeddingError
from .evalkit import tokenize
from .models import EndpointConfig

logger = logging.getLogger(__name__)


class EmbeddingProvider(ABC):
    """Maps text to a fixed-size vector; the same text always yields the same vector."""

    @property
    @abstractmethod
    def identity(self) -> str:
        """Stable name recorded in reports (e.g. ``hashing-256-seed0``)."""

    @property
    @abstractmethod
    def dimensionality(self) -> int: ...

    @abstractmethod
    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbeddingProvider(EmbeddingProvider):
    """Deterministic offline provider: signed feature hashing of unigrams and bigrams.

    Texts sharing many tokens land close together, so it behaves like a crude
    lexical sentence encoder. Used by tests and when no embedding endpoint is set.
    """

    def __init__(self, dim: int = 256, seed: int = 0):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.seed = seed
        self._key = seed.to_bytes(8, "little", signed=True)

    @property
    def identity(self) -> str:
        return f"hashing-{self.dim}-seed{self.seed}"

    @property
    def dimensionality(self) -> int:
        return self.dim

    def _bucket(self, feature: str) -> tuple[int, float]:
        digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8, key=self._key).digest()
        value = int.from_bytes(digest, "little")
        return value % self.dim, 1.0 if (value >> 63) & 1 else -1.0

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        features = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
        vector = np.zeros(self.dim, dtype=np.float64)
        for feature in features:
            index, sign = self._bucket(feature)
            vector[index] += sign
        return vector


class HttpEmbeddingProvider(EmbeddingProvider):
    """Client for an OpenAI-style ``/embeddings`` route, with a per-session cache."""

    def __init__(self, config: EndpointConfig, session: requests.Session | None = None):
        if not config.configured or not config.embedding_model:
            raise EmbeddingError("Embedding endpoint requires base_url and embedding_model")
        self.config = config
        self._session = session or requests.Session()
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self._dim = 0

    @property
    def identity(self) -> str:
        return f"http:{self.config.embedding_model}"

    @property
    def dimensionality(self) -> int:
        return self._dim

    @property
    def url(self) -> str:
        return self.config.base_url.rstrip("/") + "/embeddings"

    def embed(self, text: str) -> np.ndarray:
        with self._lock:
            if text in self._cache:
                return self._cache[text]

        headers = {"Content-Type": "application/json", "X-Fcmir-Prompt-Kind": "embedding"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        payload = {"model": self.config.embedding_model, "input": text}
        try:
            response = self._session.post(
                self.url, json=payload, headers=headers, timeout=self.config.timeout_s
            )
            response.raise_for_status()
            vector = np.asarray(response.json()["data"][0]["embedding"], dtype=np.float64)
        except (requests.RequestException, ValueError, KeyError, IndexError, TypeError) as e:
            raise EmbeddingError(f"Embedding request failed: {e}") from e
        if vector.ndim != 1 or vector.size == 0:
            raise EmbeddingError(f"Embedding has unusable shape {vector.shape}")

        with self._lock:
            self._dim = vector.size
            self._cache[text] = vector
        logger.debug(f"Embedded {len(text)} chars with {self.identity}")
        return vector


def make_provider(config: EndpointConfig | None = None, seed: int = 0) -> EmbeddingProvider:
    """HTTP provider when an embedding model is configured, else the hashing provider."""
    if config is not None and config.configured and config.embedding_model:
        return HttpEmbeddingProvider(config)
    logger.info("No embedding endpoint configured; using the hashing embedding provider")
    return HashingEmbeddingProvider(seed=seed)
