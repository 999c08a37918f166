"""Label similarity providers.

Two interchangeable implementations of the same contract (symmetric scores in
[0, 1], identical texts score 1.0): an offline character-trigram baseline and
a client for an external embedding service.  Empty strings are handled before
either backend runs: two empties are identical, an empty against nonempty
text shares nothing and scores 0.
"""
from __future__ import annotations

import math
import os
import threading
import time
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass

import requests


class EmbeddingServiceError(RuntimeError):
    """Embedding request failed for good after the configured retries."""

    def __init__(self, message: str, attempts: int):
        self.attempts = attempts
        super().__init__(f"{message} (after {attempts} attempt(s))")


class SimilarityProvider(ABC):
    """Scores text pairs in [0, 1]; symmetric, 1.0 on identical text."""

    def sim(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        if not a or not b:
            return 0.0
        return self._score(a, b)

    @abstractmethod
    def _score(self, a: str, b: str) -> float:
        ...


class NgramSimilarity(SimilarityProvider):
    """Cosine over character-trigram counts of lowercased, space-collapsed text.

    Inputs are padded with a single space on each side so that short strings
    still produce trigrams.
    """

    name = "ngram"

    def _score(self, a: str, b: str) -> float:
        na = _normalize_text(a)
        nb = _normalize_text(b)
        if not na or not nb:
            return 1.0 if na == nb else 0.0
        return _clamp(_cosine_counts(_trigrams(na), _trigrams(nb)))


def _normalize_text(text: str) -> str:
    return " ".join(text.lower().split())


def _trigrams(text: str) -> Counter:
    padded = f" {text} "
    return Counter(padded[i : i + 3] for i in range(len(padded) - 2))


def _cosine_counts(a: Counter, b: Counter) -> float:
    dot = sum(count * b[gram] for gram, count in a.items())
    if dot == 0:
        return 0.0
    return dot / math.sqrt(
        sum(c * c for c in a.values()) * sum(c * c for c in b.values())
    )


def _clamp(value: float) -> float:
    return min(1.0, max(0.0, value))


@dataclass
class EmbeddingConfig:
    """Where and how to reach the embedding service.

    The endpoint must accept ``POST {"texts": [...]}`` (plus ``"model"`` when
    configured) and answer ``{"vectors": [[...], ...]}`` with one vector per
    input text, in order.  The auth token is read from the named environment
    variable; when unset, requests go out unauthenticated.
    """

    url: str
    model: str | None = None
    auth_env: str = "EMBEDDING_API_TOKEN"
    batch_size: int = 16
    retries: int = 3
    backoff: float = 0.5
    timeout: float = 30.0
    dimension: int | None = None


class EmbeddingSimilarity(SimilarityProvider):
    """Cosine similarity of service-provided vectors, mapped onto [0, 1].

    Raw cosine lives in [-1, 1]; scores are (cos + 1) / 2, clamped.  Vectors
    are cached per input text (lock-protected, shared across threads) so a
    run sees stable scores no matter how calls interleave.
    """

    name = "embedding"

    def __init__(self, config: EmbeddingConfig):
        self.config = config
        self._cache: dict[str, tuple[float, ...]] = {}
        self._lock = threading.Lock()
        self._dimension = config.dimension

    def _score(self, a: str, b: str) -> float:
        va, vb = self.vectors([a, b])
        return _clamp((_cosine(va, vb) + 1.0) / 2.0)

    def vectors(self, texts: list[str]) -> list[tuple[float, ...]]:
        with self._lock:
            missing = sorted({t for t in texts if t not in self._cache})
            for start in range(0, len(missing), self.config.batch_size):
                chunk = missing[start : start + self.config.batch_size]
                for text, vector in zip(chunk, self._fetch(chunk)):
                    self._cache[text] = vector
            return [self._cache[t] for t in texts]

    def _fetch(self, texts: list[str]) -> list[tuple[float, ...]]:
        payload: dict = {"texts": texts}
        if self.config.model:
            payload["model"] = self.config.model
        headers = {}
        token = os.environ.get(self.config.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"

        last_error = "embedding request failed"
        attempts = 0
        for attempt in range(self.config.retries + 1):
            attempts = attempt + 1
            if attempt:
                time.sleep(self.config.backoff * 2 ** (attempt - 1))
            try:
                response = requests.post(
                    self.config.url,
                    json=payload,
                    headers=headers,
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                last_error = f"embedding transport failure: {exc}"
                continue
            if response.status_code != 200:
                last_error = f"embedding service returned HTTP {response.status_code}"
                continue
            try:
                return self._validated(response.json().get("vectors"), len(texts))
            except ValueError as exc:
                last_error = str(exc)
                continue
        raise EmbeddingServiceError(last_error, attempts)

    def _validated(self, vectors, expected: int) -> list[tuple[float, ...]]:
        if not isinstance(vectors, list) or len(vectors) != expected:
            raise ValueError(
                f"embedding response listed {0 if vectors is None else len(vectors)}"
                f" vectors for {expected} texts"
            )
        out = []
        for vector in vectors:
            values = tuple(float(x) for x in vector)
            if not values or any(not math.isfinite(x) for x in values):
                raise ValueError("embedding vector has no finite components")
            if self._dimension is None:
                self._dimension = len(values)
            if len(values) != self._dimension:
                raise ValueError(
                    f"embedding dimension mismatch: got {len(values)}, "
                    f"expected {self._dimension}"
                )
            out.append(values)
        return out


def _cosine(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm = math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b))
    if norm == 0:
        return 0.0
    return dot / norm
