"""
Data types of the documentation corpus.

A SourceDocument is one plain-text file extracted from the official documentation. It is cut into Chunks by the
recursive splitter (see Splitter.py); each Chunk keeps a ChunkMetadata record saying where it came from, so that a
retrieved piece of text can always be traced back to its file and position.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, asdict
from enum import Enum
from pathlib import Path
from typing import Tuple

from miniMPEG.Corpus.CorpusExceptions import InvalidChunkConfig, EmptyDocument, UnreadableDocument


class ToolTag(str, Enum):
    FFMPEG = 'FFmpeg'
    VVENC = 'VVenC'

    @classmethod
    def parse(cls, value: str) -> ToolTag:
        if isinstance(value, cls):
            return value
        for tag in cls:
            if tag.value.lower() == str(value).strip().lower():
                return tag
        raise ValueError(f'Unknown tool tag: {value!r}. Expected one of {[t.value for t in cls]}.')


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class SourceDocument:
    path: str  # relative to the corpus root, POSIX separators
    text: str
    tool_tag: ToolTag
    content_hash: str = ''

    def __post_init__(self):
        if not self.text.strip():
            raise EmptyDocument(self.path, variables={'path': self.path})
        if not self.content_hash:
            object.__setattr__(self, 'content_hash', text_digest(self.text))

    @classmethod
    def load(cls, path: Path, tool_tag: ToolTag, name: str | None = None) -> SourceDocument:
        # bytes are decoded without newline translation, so that the hash equals the hash of the file on disk
        try:
            text = Path(path).read_bytes().decode('utf-8')
        except (OSError, UnicodeDecodeError) as e:
            raise UnreadableDocument(str(path), reason=str(e), variables={'path': str(path)})

        return cls(path=name if name is not None else Path(path).as_posix(), text=text, tool_tag=tool_tag)

    @property
    def size(self) -> int:
        return len(self.text)


DEFAULT_DELIMITERS: Tuple[Tuple[str, ...], ...] = (
    ('\n\n',),
    ('\n',),
    ('. ', '! ', '? '),
    (' ',),
)


@dataclass(frozen=True)
class ChunkConfig:
    """
    chunk_size is the maximal number of characters of a chunk (overlap included), overlap the number of characters
    carried over from the tail of the previous chunk. Each entry of delimiters is a delimiter class: a tuple of
    separators that are equally preferred. Classes are tried in order.
    """

    chunk_size: int = 3000
    overlap: int = 500
    delimiters: Tuple[Tuple[str, ...], ...] = DEFAULT_DELIMITERS

    def __post_init__(self):
        normalized = tuple(
            (d,) if isinstance(d, str) else tuple(d)
            for d in self.delimiters
        )
        object.__setattr__(self, 'delimiters', normalized)

        variables = {'chunk_size': self.chunk_size, 'overlap': self.overlap, 'delimiters': self.delimiters}
        if not isinstance(self.chunk_size, int) or not isinstance(self.overlap, int):
            raise InvalidChunkConfig('chunk_size and overlap must be integers', variables=variables)
        if self.overlap < 0:
            raise InvalidChunkConfig('overlap must not be negative', variables=variables)
        if self.chunk_size <= self.overlap:
            raise InvalidChunkConfig('chunk_size must be larger than overlap', variables=variables)
        if not normalized or any(not cls for cls in normalized):
            raise InvalidChunkConfig('the delimiter list must not be empty', variables=variables)
        if any(not isinstance(d, str) or not d for cls in normalized for d in cls):
            raise InvalidChunkConfig('delimiters must be non-empty strings', variables=variables)

    @property
    def all_delimiters(self) -> Tuple[str, ...]:
        return tuple(d for cls in self.delimiters for d in cls)


@dataclass(frozen=True)
class ChunkMetadata:
    source_file: str
    chunk_index: int
    tool_tag: ToolTag
    start: int = 0  # offset of content in the source document
    overlap_chars: int = 0  # leading characters shared with the previous chunk

    def to_dict(self) -> dict:
        d = asdict(self)
        d['tool_tag'] = self.tool_tag.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ChunkMetadata:
        return cls(source_file=d['source_file'], chunk_index=int(d['chunk_index']),
                   tool_tag=ToolTag.parse(d['tool_tag']), start=int(d.get('start', 0)),
                   overlap_chars=int(d.get('overlap_chars', 0)))


@dataclass(frozen=True)
class Chunk:
    content: str
    metadata: ChunkMetadata = field(compare=True)

    @property
    def body(self) -> str:
        """The part of the content that is not repeated from the previous chunk."""
        return self.content[self.metadata.overlap_chars:]

    @property
    def tool_tag(self) -> ToolTag:
        return self.metadata.tool_tag

    def to_dict(self) -> dict:
        return {'content': self.content, 'metadata': self.metadata.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> Chunk:
        return cls(content=d['content'], metadata=ChunkMetadata.from_dict(d['metadata']))
