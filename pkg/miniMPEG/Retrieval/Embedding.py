"""
Embedding providers.

HttpEmbeddingProvider talks to a local model server:
    POST <endpoint>  {"model": <name>, "input": [<texts>]}  ->  {"embeddings": [[...], ...]}
Texts are sent in batches; up to max_in_flight batches are in flight at the same time.

MockEmbeddingProvider needs no server. It hashes the character trigrams of the lower-cased text into a fixed number of
buckets, so similar texts get similar vectors and the same text always gets the same vector. It is what the tests and
offline runs use.

All vectors are float32; distances are computed in float64 by the vector store.
"""

from __future__ import annotations

import hashlib
import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
import requests

from miniMPEG.Retrieval.RetrievalExceptions import (
    EmptyEmbeddingInput,
    EmbeddingDimensionMismatch,
    NonFiniteEmbedding,
    EmbeddingTransportError,
    MalformedEmbeddingResponse,
    EmbeddingNotDeterministic)
from miniMPEG.Utilities.Retry import RetryPolicy, ServerUnavailable


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f'An embedding must be a non-empty 1-D vector, got shape {values.shape}.')
        object.__setattr__(self, 'values', values)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EmbeddingVector) and np.array_equal(self.values, other.values)

    def __len__(self) -> int:
        return self.dimension

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


class EmbeddingProvider(ABC):
    CHECK_TEXT = 'How can I rotate a video by 90 degrees?'

    def __init__(self, model_name: str, dimension: int) -> None:
        self.model_name = model_name
        self.dimension = dimension

    @abstractmethod
    def _embed_texts(self, texts: List[str]) -> List[Sequence[float]]:
        ...

    def _check(self, vectors: np.ndarray, count: int) -> np.ndarray:
        if vectors.ndim != 2 or vectors.shape[0] != count:
            raise MalformedEmbeddingResponse(getattr(self, 'endpoint', self.model_name),
                                             reason=f'{count} texts but {vectors.shape[0] if vectors.ndim else 0} vectors',
                                             variables={'shape': vectors.shape})
        if vectors.shape[1] != self.dimension:
            raise EmbeddingDimensionMismatch(self.dimension, int(vectors.shape[1]), where=f'model "{self.model_name}"',
                                             variables={'model': self.model_name})
        if not np.all(np.isfinite(vectors)):
            raise NonFiniteEmbedding(self.model_name, variables={'shape': vectors.shape})
        return vectors

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        """Embeds texts (order preserved) into a (len(texts), dimension) float32 array."""

        texts = list(texts)
        if any(not t for t in texts):
            raise EmptyEmbeddingInput(variables={'empty_positions': [i for i, t in enumerate(texts) if not t]})
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float32)

        raw = self._embed_texts(texts)
        try:
            vectors = np.asarray(raw, dtype=np.float32)
        except (ValueError, TypeError) as e:
            raise MalformedEmbeddingResponse(getattr(self, 'endpoint', self.model_name), reason=str(e),
                                             variables={'texts': len(texts)})
        return self._check(vectors, len(texts))

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise EmptyEmbeddingInput(variables={'text': text})
        return EmbeddingVector(self.embed_batch([text])[0])

    def check_determinism(self) -> None:
        """Embeds a fixed text twice and fails if the vectors differ (or have the wrong dimension)."""
        first = self.embed(self.CHECK_TEXT)
        second = self.embed(self.CHECK_TEXT)
        if first != second:
            raise EmbeddingNotDeterministic(self.model_name, variables={'text': self.CHECK_TEXT})

    def identity(self) -> Dict[str, object]:
        """Settings that determine the vectors; recorded in the index manifest."""
        return {'provider': type(self).__name__, 'model': self.model_name, 'dimension': self.dimension}


class HttpEmbeddingProvider(EmbeddingProvider):
    def __init__(self,
                 endpoint: str,
                 model_name: str,
                 dimension: int,
                 batch_size: int = 32,
                 max_in_flight: int = 2,
                 timeout: float = 60.0,
                 retry: RetryPolicy | None = None,
                 session: requests.Session | None = None
                 ) -> None:
        super().__init__(model_name, dimension)
        self.endpoint = endpoint
        self.batch_size = batch_size
        self.max_in_flight = max_in_flight
        self.timeout = timeout
        self._retry = retry if retry is not None else RetryPolicy()
        self._session = session if session is not None else requests.Session()

    def _post(self, batch: List[str]) -> List[Sequence[float]]:
        def send() -> requests.Response:
            response = self._session.post(self.endpoint, json={'model': self.model_name, 'input': batch},
                                          timeout=self.timeout)
            if response.status_code >= 500:
                raise ServerUnavailable(f'HTTP {response.status_code}')
            return response

        try:
            response, attempts = self._retry.call(send, what=f'embedding request to {self.endpoint}')
        except requests.RequestException as e:
            raise EmbeddingTransportError(self.endpoint, attempts=getattr(e, 'attempts', 1), reason=str(e),
                                          variables={'batch': len(batch)})

        if response.status_code != 200:
            raise MalformedEmbeddingResponse(self.endpoint, reason=f'HTTP {response.status_code}: {response.text[:200]}',
                                             variables={'batch': len(batch)})
        try:
            embeddings = response.json()['embeddings']
        except (ValueError, KeyError, TypeError) as e:
            raise MalformedEmbeddingResponse(self.endpoint, reason=f'missing "embeddings" ({e})',
                                             variables={'batch': len(batch)})
        if not isinstance(embeddings, list) or len(embeddings) != len(batch):
            raise MalformedEmbeddingResponse(self.endpoint, reason='one vector per input text expected',
                                             variables={'batch': len(batch)})
        return embeddings

    def _embed_texts(self, texts: List[str]) -> List[Sequence[float]]:
        batches = [texts[i:i + self.batch_size] for i in range(0, len(texts), self.batch_size)]
        logger.debug('embedding %d texts in %d batches', len(texts), len(batches))

        if len(batches) == 1 or self.max_in_flight <= 1:
            results = [self._post(batch) for batch in batches]
        else:
            with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
                results = list(pool.map(self._post, batches))

        return [vector for batch in results for vector in batch]


class MockEmbeddingProvider(EmbeddingProvider):
    def __init__(self, dimension: int = 32, seed: int = 0, ngram: int = 3, model_name: str = 'mock-trigram') -> None:
        super().__init__(model_name, dimension)
        self.seed = seed
        self.ngram = ngram
        self._key = seed.to_bytes(8, 'little', signed=False)
        self.calls = 0

    def identity(self) -> Dict[str, object]:
        return {**super().identity(), 'seed': self.seed, 'ngram': self.ngram}

    def _vector(self, text: str) -> np.ndarray:
        text = text.lower()
        vector = np.zeros(self.dimension, dtype=np.float64)
        grams = [text[i:i + self.ngram] for i in range(max(1, len(text) - self.ngram + 1))]

        for gram in grams:
            h = int.from_bytes(hashlib.blake2b(gram.encode('utf-8'), digest_size=8, key=self._key).digest(), 'little')
            vector[h % self.dimension] += 1.0 if (h >> 32) & 1 else -1.0

        return vector

    def _embed_texts(self, texts: List[str]) -> List[Sequence[float]]:
        self.calls += 1
        return [self._vector(t) for t in texts]
