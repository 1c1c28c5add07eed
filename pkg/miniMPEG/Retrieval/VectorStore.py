"""
Flat (exhaustive) vector stores, one per tool.

Every query is compared against every stored vector with the Euclidean distance
    d(q, v) = sqrt(sum_i (q_i - v_i) ** 2)
computed in float64, and the k closest chunks are selected with a bounded max-heap of size k (O(N log k)). Equal
distances are ordered by insertion index, so results are deterministic. When a query is routed to both tools, the two
stores form one candidate pool (FFmpeg store first) and one heap selects from it.

Store file layout (little-endian):
    b"EVS1" | u32 dimension | u32 count | count * dimension float32
    | u32 len + UTF-8 tool tag
    | count * (u32 len + content | u32 len + source_file | u32 chunk_index | u32 start | u32 overlap_chars)
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from miniMPEG.Corpus.Document import Chunk, ChunkMetadata, ToolTag
from miniMPEG.Retrieval.Embedding import EmbeddingProvider, EmbeddingVector
from miniMPEG.Retrieval.RetrievalExceptions import (
    EmbeddingDimensionMismatch,
    StoreFormatError,
    StoreVersionMismatch)
from miniMPEG.Utilities.File import File


logger = logging.getLogger(__name__)

MAGIC = b'EVS1'
STORE_FILES: Dict[ToolTag, str] = {ToolTag.FFMPEG: 'ffmpeg.evs', ToolTag.VVENC: 'vvenc.evs'}


@dataclass(frozen=True)
class ScoredChunk:
    chunk: Chunk
    distance: float

    def to_dict(self) -> dict:
        return {'chunk': self.chunk.to_dict(), 'distance': self.distance}

    @classmethod
    def from_dict(cls, d: dict) -> ScoredChunk:
        return cls(chunk=Chunk.from_dict(d['chunk']), distance=float(d['distance']))


def heap_select(distances: Sequence[float], k: int) -> List[int]:
    """
    Indices of the k smallest distances, ordered by (distance, index). Keeps a max-heap of the k best candidates seen
    so far; heapq is a min-heap, so entries are stored negated.
    """

    if k < 1:
        raise ValueError(f'k must be at least 1, got {k}.')

    heap: List[Tuple[float, int]] = list()
    for index, distance in enumerate(distances):
        entry = (-distance, -index)
        if len(heap) < k:
            heapq.heappush(heap, entry)
        elif entry > heap[0]:
            heapq.heapreplace(heap, entry)

    return [-i for _, i in sorted(heap, reverse=True)]


def euclidean_distances(vectors: np.ndarray, query: np.ndarray) -> np.ndarray:
    difference = vectors.astype(np.float64) - query.astype(np.float64)
    return np.sqrt(np.sum(difference * difference, axis=1))


class VectorStore:
    def __init__(self, tool_tag: ToolTag, dimension: int, vectors: np.ndarray | None = None,
                 chunks: List[Chunk] | None = None) -> None:
        self.tool_tag = tool_tag
        self.dimension = dimension
        self.vectors = (np.zeros((0, dimension), dtype=np.float32) if vectors is None
                        else np.ascontiguousarray(vectors, dtype=np.float32))
        self.chunks = list(chunks or [])

        if self.vectors.ndim != 2 or self.vectors.shape[1] != dimension:
            raise EmbeddingDimensionMismatch(dimension, int(self.vectors.shape[-1]), where=f'{tool_tag.value} store',
                                             variables={'shape': self.vectors.shape})
        if self.vectors.shape[0] != len(self.chunks):
            raise ValueError(f'{self.vectors.shape[0]} vectors but {len(self.chunks)} chunks.')

    def __len__(self) -> int:
        return len(self.chunks)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, VectorStore)
                and self.tool_tag == other.tool_tag
                and self.dimension == other.dimension
                and np.array_equal(self.vectors, other.vectors)
                and self.chunks == other.chunks)

    def __repr__(self) -> str:
        return f'VectorStore({self.tool_tag.value}, dimension={self.dimension}, size={len(self)})'

    # ====================================================================================================== SEARCH
    def _query_array(self, query: EmbeddingVector | np.ndarray) -> np.ndarray:
        values = query.values if isinstance(query, EmbeddingVector) else np.asarray(query, dtype=np.float32)
        if values.shape != (self.dimension,):
            raise EmbeddingDimensionMismatch(self.dimension, int(values.shape[-1]) if values.ndim else 0,
                                             where=f'query against the {self.tool_tag.value} store',
                                             variables={'shape': values.shape})
        return values

    def distances(self, query: EmbeddingVector | np.ndarray) -> np.ndarray:
        return euclidean_distances(self.vectors, self._query_array(query))

    def search(self, query: EmbeddingVector | np.ndarray, k: int = 5) -> List[ScoredChunk]:
        return search([self], query, k)

    # ================================================================================================= PERSISTENCE
    def to_bytes(self) -> bytes:
        parts = [MAGIC, struct.pack('<II', self.dimension, len(self))]
        parts.append(self.vectors.astype('<f4').tobytes())

        def string(s: str) -> bytes:
            encoded = s.encode('utf-8')
            return struct.pack('<I', len(encoded)) + encoded

        parts.append(string(self.tool_tag.value))
        for chunk in self.chunks:
            m = chunk.metadata
            parts.append(string(chunk.content))
            parts.append(string(m.source_file))
            parts.append(struct.pack('<III', m.chunk_index, m.start, m.overlap_chars))
        return b''.join(parts)

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def persist(self, path: Path) -> None:
        File().bind(Path(path).resolve()).write_bytes_atomic(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes, source: str = '<bytes>', expected_dimension: int | None = None) -> VectorStore:
        reader = _Reader(data, source)

        magic = reader.take(4, 'magic')
        if magic != MAGIC:
            if magic[:3] == MAGIC[:3]:
                raise StoreVersionMismatch(source, found=magic[3:].decode('latin-1'), expected=MAGIC[3:].decode(),
                                           variables={'magic': magic})
            offset = next(i for i in range(4) if magic[i] != MAGIC[i])
            raise StoreFormatError(source, offset, reason=f'bad magic {magic!r}', variables={'magic': magic})

        dimension, count = reader.u32(), reader.u32()
        if expected_dimension is not None and dimension != expected_dimension:
            raise EmbeddingDimensionMismatch(expected_dimension, dimension, where=f'store file "{source}"',
                                             variables={'count': count})
        if dimension == 0:
            raise StoreFormatError(source, 4, reason='dimension is zero', variables={'count': count})

        raw = reader.take(4 * dimension * count, 'vectors')
        vectors = np.frombuffer(raw, dtype='<f4').astype(np.float32).reshape(count, dimension)

        try:
            tool_tag = ToolTag.parse(reader.string('tool tag'))
        except ValueError as e:
            raise StoreFormatError(source, reader.offset, reason=str(e), variables={})

        chunks = list()
        for _ in range(count):
            content = reader.string('chunk content')
            source_file = reader.string('source file')
            chunk_index, start, overlap_chars = reader.u32(), reader.u32(), reader.u32()
            metadata = ChunkMetadata(source_file=source_file, chunk_index=chunk_index, tool_tag=tool_tag,
                                     start=start, overlap_chars=overlap_chars)
            chunks.append(Chunk(content=content, metadata=metadata))

        if reader.offset != len(data):
            raise StoreFormatError(source, reader.offset, reason=f'{len(data) - reader.offset} trailing bytes',
                                   variables={})

        return cls(tool_tag, dimension, vectors, chunks)

    @classmethod
    def load(cls, path: Path, expected_dimension: int | None = None) -> VectorStore:
        return cls.from_bytes(Path(path).read_bytes(), source=str(path), expected_dimension=expected_dimension)


class _Reader:
    def __init__(self, data: bytes, source: str) -> None:
        self._data = data
        self._source = source
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self._data):
            raise StoreFormatError(self._source, self.offset,
                                   reason=f'truncated while reading {what} ({n} bytes needed, '
                                          f'{len(self._data) - self.offset} left)',
                                   variables={'size': len(self._data)})
        chunk = self._data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def u32(self) -> int:
        return struct.unpack('<I', self.take(4, 'u32'))[0]

    def string(self, what: str) -> str:
        length = self.u32()
        start = self.offset
        raw = self.take(length, what)
        try:
            return raw.decode('utf-8')
        except UnicodeDecodeError as e:
            raise StoreFormatError(self._source, start + e.start, reason=f'invalid UTF-8 in {what}', variables={})


# ================================================================================================ MODULE FUNCTIONS
def _store_order(chunk: Chunk) -> Tuple[str, int]:
    return chunk.metadata.source_file, chunk.metadata.chunk_index


def build_store(chunks: Iterable[Chunk], provider: EmbeddingProvider, tool_tag: ToolTag,
                reuse: Dict[Tuple[str, int, str], np.ndarray] | None = None) -> VectorStore:
    """
    Embeds the chunks of one tool and returns their flat store, ordered by (source_file, chunk_index).

    :param reuse: vectors already known, keyed by (source_file, chunk_index, content); such chunks are not embedded
    again. Used by incremental re-indexing.
    """

    selected = sorted((c for c in chunks if c.tool_tag == tool_tag), key=_store_order)
    if not selected:
        logger.warning('the %s store is empty; queries routed to it return no results', tool_tag.value)
        return VectorStore(tool_tag, provider.dimension)

    reuse = reuse or {}
    keys = [(c.metadata.source_file, c.metadata.chunk_index, c.content) for c in selected]
    missing = [i for i, key in enumerate(keys) if key not in reuse]

    vectors = np.zeros((len(selected), provider.dimension), dtype=np.float32)
    if missing:
        embedded = provider.embed_batch([selected[i].content for i in missing])
        for row, i in enumerate(missing):
            vectors[i] = embedded[row]
    for i, key in enumerate(keys):
        if key in reuse:
            vectors[i] = reuse[key]

    logger.info('%s store: %d chunks (%d embedded, %d reused)', tool_tag.value, len(selected), len(missing),
                len(selected) - len(missing))
    return VectorStore(tool_tag, provider.dimension, vectors, selected)


def search(stores: Sequence[VectorStore], query: EmbeddingVector | np.ndarray, k: int = 5) -> List[ScoredChunk]:
    """
    Exact top-k over the union of the given stores, ascending by distance; ties keep pool order (stores in the given
    order, insertion order inside a store). Empty stores contribute nothing; an empty pool gives an empty result.
    """

    if k < 1:
        raise ValueError(f'k must be at least 1, got {k}.')

    pool: List[Chunk] = list()
    distances: List[float] = list()
    for store in stores:
        d = store.distances(query)
        pool.extend(store.chunks)
        distances.extend(d.tolist())

    return [ScoredChunk(pool[i], distances[i]) for i in heap_select(distances, k)] if pool else []


class StoreSet:
    """The two tool-scoped stores of an index directory."""

    def __init__(self, ffmpeg: VectorStore, vvenc: VectorStore) -> None:
        if ffmpeg.dimension != vvenc.dimension:
            raise EmbeddingDimensionMismatch(ffmpeg.dimension, vvenc.dimension, where='the VVenC store',
                                             variables={})
        self.stores: Dict[ToolTag, VectorStore] = {ToolTag.FFMPEG: ffmpeg, ToolTag.VVENC: vvenc}

    def __getitem__(self, tag: ToolTag) -> VectorStore:
        return self.stores[tag]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, StoreSet) and self.stores == other.stores

    @property
    def dimension(self) -> int:
        return self.stores[ToolTag.FFMPEG].dimension

    @property
    def size(self) -> int:
        return sum(len(s) for s in self.stores.values())

    def select(self, tags: Iterable[ToolTag]) -> List[VectorStore]:
        return [self.stores[tag] for tag in (ToolTag.FFMPEG, ToolTag.VVENC) if tag in set(tags)]

    def vectors_by_key(self) -> Dict[Tuple[str, int, str], np.ndarray]:
        known = dict()
        for store in self.stores.values():
            for chunk, vector in zip(store.chunks, store.vectors):
                known[(chunk.metadata.source_file, chunk.metadata.chunk_index, chunk.content)] = vector
        return known

    @classmethod
    def build(cls, chunks: Sequence[Chunk], provider: EmbeddingProvider,
              reuse: Dict[Tuple[str, int, str], np.ndarray] | None = None) -> StoreSet:
        return cls(build_store(chunks, provider, ToolTag.FFMPEG, reuse),
                   build_store(chunks, provider, ToolTag.VVENC, reuse))

    def all_chunks(self) -> List[Chunk]:
        return [c for store in self.stores.values() for c in store.chunks]

    def persist(self, directory: Path) -> None:
        for tag, name in STORE_FILES.items():
            self.stores[tag].persist(Path(directory) / name)

    @staticmethod
    def exists(directory: Path) -> bool:
        return all((Path(directory) / name).exists() for name in STORE_FILES.values())

    @classmethod
    def load(cls, directory: Path, expected_dimension: int | None = None) -> StoreSet:
        stores = {tag: VectorStore.load(Path(directory) / name, expected_dimension)
                  for tag, name in STORE_FILES.items()}
        return cls(stores[ToolTag.FFMPEG], stores[ToolTag.VVENC])
