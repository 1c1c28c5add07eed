from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path, PurePosixPath
from typing import Callable, Dict, List, Mapping

from miniMPEG.Corpus.CorpusExceptions import CorpusException, NothingIngested, UnmappedPath
from miniMPEG.Corpus.Document import Chunk, ChunkConfig, SourceDocument, ToolTag
from miniMPEG.Corpus.Manifest import ChangeSet, CorpusManifest, ManifestEntry, detect_changes
from miniMPEG.Corpus.Splitter import RecursiveSplitter


logger = logging.getLogger(__name__)


class ToolMapping:
    """
    Derives the tool tag of a corpus file from the configuration. Explicit file entries win over directory entries;
    for directories the closest parent directory with a mapped name decides.
    """

    DEFAULT_DIRECTORIES: Dict[str, ToolTag] = {'ffmpeg': ToolTag.FFMPEG, 'vvenc': ToolTag.VVENC}

    def __init__(self,
                 directories: Mapping[str, ToolTag | str] | None = None,
                 files: Mapping[str, ToolTag | str] | None = None
                 ) -> None:
        directories = self.DEFAULT_DIRECTORIES if directories is None else directories
        self._directories = {name.lower(): ToolTag.parse(tag) for name, tag in directories.items()}
        self._files = {PurePosixPath(name).as_posix(): ToolTag.parse(tag) for name, tag in (files or {}).items()}

    def tag_for(self, name: str) -> ToolTag:
        posix = PurePosixPath(name)
        if posix.as_posix() in self._files:
            return self._files[posix.as_posix()]

        for parent in reversed(posix.parts[:-1]):
            if parent.lower() in self._directories:
                return self._directories[parent.lower()]

        raise UnmappedPath(name, variables={'directories': sorted(self._directories), 'files': sorted(self._files)})

    def covers(self, name: str) -> bool:
        try:
            self.tag_for(name)
        except UnmappedPath:
            return False
        return True


def discover_corpus(root: Path, pattern: str = '*.txt') -> Dict[str, Path]:
    """All text files below root (recursively), keyed by their POSIX path relative to root."""
    root = Path(root)
    return {p.relative_to(root).as_posix(): p for p in sorted(root.rglob(pattern)) if p.is_file()}


@dataclass
class IngestResult:
    chunks: List[Chunk]
    manifest: CorpusManifest
    changes: ChangeSet
    errors: List[str] = field(default_factory=list)

    @property
    def processed(self) -> List[str]:
        return sorted({c.metadata.source_file for c in self.chunks})


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


def ingest(paths: Dict[str, Path],
           mapping: ToolMapping,
           config: ChunkConfig,
           manifest: CorpusManifest | None = None,
           clock: Callable[[], str] = _now
           ) -> IngestResult:
    """
    Splits the added and modified files into chunks and returns them together with the updated manifest.

    Unchanged files emit no chunks and keep their manifest entry. A file that cannot be loaded is reported in
    IngestResult.errors and the remaining files are still ingested; if no file at all is usable, NothingIngested is
    raised.

    :param paths: corpus files keyed by their name relative to the corpus root
    :param mapping: configuration mapping from names to tool tags (must cover every file)
    :param config: chunking parameters
    :param manifest: manifest of the previous ingestion, None for a fresh one
    :param clock: returns the ingestion timestamp written into new entries
    """

    for name in paths:
        mapping.tag_for(name)

    manifest = manifest if manifest is not None else CorpusManifest()
    changes = detect_changes(manifest, paths)
    splitter = RecursiveSplitter(config)

    entries = {name: manifest.entries[name] for name in changes.unchanged}
    chunks: List[Chunk] = list()
    errors: List[str] = list()
    timestamp = clock()

    for name in changes.to_process:
        try:
            document = SourceDocument.load(paths[name], mapping.tag_for(name), name=name)
        except CorpusException as e:
            logger.warning('skipping %s: %s', name, e.message)
            errors.append(f'{name}: {e.message}')
            continue

        document_chunks = splitter.split(document)
        chunks.extend(document_chunks)
        entries[name] = ManifestEntry(content_hash=document.content_hash, chunk_count=len(document_chunks),
                                      ingested_at=timestamp)
        logger.info('ingested %s: %d chunks (%s)', name, len(document_chunks), document.tool_tag.value)

    for name in paths:
        if name not in entries and name not in changes.to_process:
            # present in paths but unreadable; detect_changes classified it as removed or skipped it
            errors.append(f'{name}: unreadable')

    if paths and not entries:
        raise NothingIngested(errors, variables={'files': len(paths)})

    return IngestResult(chunks=chunks, manifest=CorpusManifest(entries=dict(sorted(entries.items()))),
                        changes=changes, errors=errors)
