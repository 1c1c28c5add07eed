import numpy as np
import pytest
import requests

from miniMPEG.Retrieval.Embedding import EmbeddingVector, HttpEmbeddingProvider, MockEmbeddingProvider
from miniMPEG.Retrieval.RetrievalExceptions import (
    EmbeddingDimensionMismatch,
    EmbeddingNotDeterministic,
    EmbeddingTransportError,
    EmptyEmbeddingInput,
    MalformedEmbeddingResponse,
    NonFiniteEmbedding)
from miniMPEG.Utilities.Retry import RetryPolicy


class FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload
        self.text = str(payload)

    def json(self):
        if isinstance(self._payload, Exception):
            raise self._payload
        return self._payload


def vectors_for(texts, dimension=4):
    return [[float(len(t)), float(i), 0.5, -1.0][:dimension] for i, t in enumerate(texts)]


@pytest.fixture
def no_sleep():
    return RetryPolicy(retries=2, backoff=0.01, sleep=lambda _: None)


def test_batches_keep_input_order(monkeypatch, no_sleep):
    sent = list()

    def post(self, url, json=None, timeout=None):
        sent.append(list(json['input']))
        return FakeResponse(payload={'embeddings': vectors_for(json['input'])})

    monkeypatch.setattr(requests.Session, 'post', post)
    provider = HttpEmbeddingProvider('http://embed', 'bge', 4, batch_size=3, max_in_flight=2, retry=no_sleep)
    texts = [f'text number {i}' * (i + 1) for i in range(8)]

    vectors = provider.embed_batch(texts)

    assert vectors.dtype == np.float32
    assert vectors.shape == (8, 4)
    assert [len(batch) for batch in sorted(sent, key=lambda b: texts.index(b[0]))] == [3, 3, 2]
    assert vectors[:, 0].tolist() == [float(len(t)) for t in texts]


def test_transport_errors_are_retried(monkeypatch, no_sleep):
    attempts = list()

    def post(self, url, json=None, timeout=None):
        attempts.append(url)
        if len(attempts) < 3:
            raise requests.ConnectionError('refused')
        return FakeResponse(payload={'embeddings': vectors_for(json['input'])})

    monkeypatch.setattr(requests.Session, 'post', post)
    provider = HttpEmbeddingProvider('http://embed', 'bge', 4, retry=no_sleep)

    assert provider.embed('query').dimension == 4
    assert len(attempts) == 3


def test_transport_error_after_the_last_retry(monkeypatch, no_sleep):
    monkeypatch.setattr(requests.Session, 'post', lambda self, url, json=None, timeout=None: FakeResponse(503))
    provider = HttpEmbeddingProvider('http://embed', 'bge', 4, retry=no_sleep)

    with pytest.raises(EmbeddingTransportError) as info:
        provider.embed('query')
    assert info.value.attempts == 3
    assert info.value.exit_code == 5


@pytest.mark.parametrize('payload', [{'data': []}, {'embeddings': [[1.0, 2.0]] * 2}, ValueError('no json')])
def test_malformed_responses(monkeypatch, no_sleep, payload):
    monkeypatch.setattr(requests.Session, 'post',
                        lambda self, url, json=None, timeout=None: FakeResponse(payload=payload))
    provider = HttpEmbeddingProvider('http://embed', 'bge', 2, retry=no_sleep)
    with pytest.raises(MalformedEmbeddingResponse):
        provider.embed('query')


def test_wrong_dimension_is_fatal(monkeypatch, no_sleep):
    monkeypatch.setattr(requests.Session, 'post',
                        lambda self, url, json=None, timeout=None: FakeResponse(payload={'embeddings': [[1.0] * 5]}))
    provider = HttpEmbeddingProvider('http://embed', 'bge', 4, retry=no_sleep)
    with pytest.raises(EmbeddingDimensionMismatch):
        provider.embed('query')


def test_non_finite_values(monkeypatch, no_sleep):
    monkeypatch.setattr(requests.Session, 'post', lambda self, url, json=None, timeout=None:
                        FakeResponse(payload={'embeddings': [[1.0, float('nan')]]}))
    provider = HttpEmbeddingProvider('http://embed', 'bge', 2, retry=no_sleep)
    with pytest.raises(NonFiniteEmbedding):
        provider.embed('query')


def test_empty_input_never_reaches_the_server(monkeypatch):
    def post(*args, **kwargs):
        raise AssertionError('the server must not be called')

    monkeypatch.setattr(requests.Session, 'post', post)
    provider = HttpEmbeddingProvider('http://embed', 'bge', 4)
    with pytest.raises(EmptyEmbeddingInput):
        provider.embed('')
    with pytest.raises(EmptyEmbeddingInput):
        provider.embed_batch(['a', ''])


def test_determinism_check_detects_noise(monkeypatch, no_sleep):
    counter = iter(range(100))
    monkeypatch.setattr(requests.Session, 'post', lambda self, url, json=None, timeout=None:
                        FakeResponse(payload={'embeddings': [[float(next(counter)), 0.0]]}))
    provider = HttpEmbeddingProvider('http://embed', 'bge', 2, retry=no_sleep)
    with pytest.raises(EmbeddingNotDeterministic):
        provider.check_determinism()


def test_mock_embedder_is_deterministic():
    first = MockEmbeddingProvider(dimension=32, seed=0)
    second = MockEmbeddingProvider(dimension=32, seed=0)
    other_seed = MockEmbeddingProvider(dimension=32, seed=1)
    text = 'How can I rotate a video by 90 degrees?'

    assert first.embed(text) == second.embed(text)
    assert first.embed(text) != other_seed.embed(text)
    first.check_determinism()


def test_mock_embedder_puts_similar_texts_closer():
    provider = MockEmbeddingProvider(dimension=64)
    query = provider.embed('rotate the video with the transpose filter').values
    near = provider.embed('the transpose filter can rotate a video').values
    far = provider.embed('vvencapp encodes raw yuv with a target bitrate').values
    assert np.linalg.norm(query - near) < np.linalg.norm(query - far)


def test_embedding_vector_shape():
    with pytest.raises(ValueError):
        EmbeddingVector(np.zeros((2, 2)))
    assert len(EmbeddingVector([1, 2, 3])) == 3
