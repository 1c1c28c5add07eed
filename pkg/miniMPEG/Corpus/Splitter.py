"""
Recursive character splitting.

A document that does not fit into one chunk is cut at the occurrences of the first delimiter class that is present in
it (paragraph breaks first, then line breaks, sentence punctuation and finally single spaces). The resulting pieces are
merged back greedily as long as the merged span fits into chunk_size. A piece that alone is longer than chunk_size is
split again, but only with the delimiter classes that come after the one that produced it. A piece that contains no
delimiter at all is cut every chunk_size characters.

The splitter works on spans (start, end) of the original text, so every chunk is a substring of its document:
- whitespace at the edges of a chunk is trimmed;
- the punctuation mark of a sentence delimiter stays with the sentence it ends, its trailing space is dropped;
- a chunk after the first is extended to the left by up to `overlap` characters of the previous chunk. The extension
  starts right after a delimiter inside that window (or at the window start if there is none) and never makes the
  chunk longer than chunk_size.
"""

from __future__ import annotations

import re
from typing import List, Tuple

from miniMPEG.Corpus.Document import Chunk, ChunkConfig, ChunkMetadata, SourceDocument


Span = Tuple[int, int]


class RecursiveSplitter:
    def __init__(self, config: ChunkConfig) -> None:
        self._config = config
        self._patterns = [
            re.compile('|'.join(re.escape(d) for d in sorted(cls, key=len, reverse=True)))
            for cls in config.delimiters
        ]
        self._boundary = re.compile('|'.join(re.escape(d) for d in sorted(config.all_delimiters, key=len, reverse=True)))
        self._longest_delimiter = max(len(d) for d in config.all_delimiters)

    # ====================================================================================================== HOOKS
    def _on_delimiter(self, start: int, end: int, level: int, index: int) -> None:
        """Called when the span text[start:end], entered at delimiter level `level`, is split with class `index`."""

    def _on_hard_split(self, start: int, end: int, level: int) -> None:
        """Called when no delimiter class from `level` on is present in text[start:end]."""

    # ================================================================================================== PRIVATE METHODS
    @staticmethod
    def _trim(text: str, start: int, end: int) -> Span:
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        return start, end

    def _split(self, text: str, start: int, end: int, level: int) -> List[Span]:
        start, end = self._trim(text, start, end)
        if start >= end:
            return []
        if end - start <= self._config.chunk_size:
            return [(start, end)]

        for index in range(level, len(self._patterns)):
            matches = list(self._patterns[index].finditer(text, start, end))
            if matches:
                break
        else:
            self._on_hard_split(start, end, level)
            return self._hard_split(text, start, end)

        self._on_delimiter(start, end, level, index)

        pieces = list()
        position = start
        for match in matches:
            kept = len(match.group().rstrip())
            pieces.append((position, match.start() + kept))
            position = match.end()
        pieces.append((position, end))

        return self._merge(text, pieces, index)

    def _hard_split(self, text: str, start: int, end: int) -> List[Span]:
        spans = list()
        for position in range(start, end, self._config.chunk_size):
            s, e = self._trim(text, position, min(position + self._config.chunk_size, end))
            if s < e:
                spans.append((s, e))
        return spans

    def _merge(self, text: str, pieces: List[Span], index: int) -> List[Span]:
        size = self._config.chunk_size
        merged = list()
        group: Span | None = None

        for piece_start, piece_end in pieces:
            piece_start, piece_end = self._trim(text, piece_start, piece_end)
            if piece_start >= piece_end:
                continue

            if piece_end - piece_start > size:
                if group is not None:
                    merged.append(group)
                    group = None
                merged.extend(self._split(text, piece_start, piece_end, index + 1))
                continue

            if group is None:
                group = (piece_start, piece_end)
            elif piece_end - group[0] <= size:
                group = (group[0], piece_end)
            else:
                merged.append(group)
                group = (piece_start, piece_end)

        if group is not None:
            merged.append(group)
        return merged

    def _overlap_start(self, text: str, previous: Span, body: Span) -> int:
        previous_start, previous_end = previous
        body_start, body_end = body

        low = max(previous_end - self._config.overlap, previous_start, body_end - self._config.chunk_size)
        if low >= previous_end:
            return body_start

        start = low
        search_from = max(previous_start, low - self._longest_delimiter)
        for match in self._boundary.finditer(text, search_from, previous_end):
            if match.end() >= low:
                start = match.end()
                break

        while start < body_start and text[start].isspace():
            start += 1
        return min(start, body_start)

    # =================================================================================================== PUBLIC METHODS
    def split_spans(self, text: str) -> List[Span]:
        """Non-overlapping body spans of the chunks, in document order."""
        return self._split(text, 0, len(text), 0)

    def split(self, document: SourceDocument) -> List[Chunk]:
        text = document.text
        chunks = list()
        previous: Span | None = None

        for index, body in enumerate(self.split_spans(text)):
            start = body[0]
            if previous is not None and self._config.overlap > 0:
                start = self._overlap_start(text, previous, body)

            metadata = ChunkMetadata(
                source_file=document.path,
                chunk_index=index,
                tool_tag=document.tool_tag,
                start=start,
                overlap_chars=body[0] - start,
            )
            chunks.append(Chunk(content=text[start:body[1]], metadata=metadata))
            previous = (start, body[1])

        return chunks


def split_document(document: SourceDocument, config: ChunkConfig) -> List[Chunk]:
    return RecursiveSplitter(config).split(document)
