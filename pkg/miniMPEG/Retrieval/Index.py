"""
The index directory: the corpus manifest and the two persisted stores.

    <index_dir>/manifest.json
    <index_dir>/ffmpeg.evs
    <index_dir>/vvenc.evs

update_index re-splits only the corpus files whose content hash changed and embeds only the chunks it has no vector
for. Because the stores are ordered by (source_file, chunk_index), the result is identical to a full rebuild. The
manifest also keeps a fingerprint of the chunking and embedding settings; when it differs, everything is rebuilt.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

from miniMPEG.Corpus.Document import ChunkConfig, ToolTag
from miniMPEG.Corpus.Ingest import ToolMapping, ingest
from miniMPEG.Corpus.CorpusExceptions import ManifestCorrupted
from miniMPEG.Corpus.Manifest import ChangeSet, CorpusManifest
from miniMPEG.Retrieval.Embedding import EmbeddingProvider
from miniMPEG.Retrieval.RetrievalExceptions import StoreFormatError, StoreVersionMismatch
from miniMPEG.Retrieval.VectorStore import StoreSet


logger = logging.getLogger(__name__)

MANIFEST_FILE = 'manifest.json'


@dataclass
class IndexSummary:
    changes: ChangeSet
    store_sizes: Dict[str, int] = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)
    rebuilt: bool = True

    @property
    def total_chunks(self) -> int:
        return sum(self.store_sizes.values())


def index_exists(index_dir: Path) -> bool:
    return StoreSet.exists(index_dir) and (Path(index_dir) / MANIFEST_FILE).exists()


def load_index(index_dir: Path, dimension: int | None = None) -> StoreSet:
    return StoreSet.load(index_dir, expected_dimension=dimension)


def index_fingerprint(config: ChunkConfig, provider: EmbeddingProvider) -> str:
    settings = {'chunk_size': config.chunk_size, 'overlap': config.overlap,
                'delimiters': [list(cls) for cls in config.delimiters], 'embedding': provider.identity()}
    return hashlib.sha256(json.dumps(settings, sort_keys=True).encode('utf-8')).hexdigest()


def update_index(paths: Dict[str, Path],
                 mapping: ToolMapping,
                 config: ChunkConfig,
                 provider: EmbeddingProvider,
                 index_dir: Path,
                 full: bool = False
                 ) -> IndexSummary:
    """
    :param paths: corpus files keyed by their name relative to the corpus root
    :param full: ignore the manifest and the persisted stores and rebuild everything
    """

    index_dir = Path(index_dir)
    manifest_path = index_dir / MANIFEST_FILE

    fingerprint = index_fingerprint(config, provider)
    previous: StoreSet | None = None
    manifest = CorpusManifest()
    if not full and index_exists(index_dir):
        try:
            manifest = CorpusManifest.load(manifest_path)
            if manifest.fingerprint == fingerprint:
                previous = StoreSet.load(index_dir, expected_dimension=provider.dimension)
            else:
                logger.warning('chunking or embedding settings changed since the last run, rebuilding the index')
                manifest = CorpusManifest()
        except (StoreFormatError, StoreVersionMismatch, ManifestCorrupted) as e:
            logger.warning('the persisted index cannot be reused, rebuilding: %s', e.message)
            previous, manifest = None, CorpusManifest()

    result = ingest(paths, mapping, config, manifest)

    if previous is not None and result.changes.is_empty:
        logger.info('no changes in the corpus; the index is up to date')
        return IndexSummary(result.changes, {tag.value: len(previous[tag]) for tag in ToolTag}, result.errors,
                            rebuilt=False)

    kept = list()
    reuse = dict()
    if previous is not None:
        unchanged = set(result.changes.unchanged)
        kept = [c for c in previous.all_chunks() if c.metadata.source_file in unchanged]
        reuse = previous.vectors_by_key()

    stores = StoreSet.build(kept + result.chunks, provider, reuse)
    index_dir.mkdir(parents=True, exist_ok=True)
    stores.persist(index_dir)
    result.manifest.fingerprint = fingerprint
    result.manifest.save(manifest_path)

    sizes = {tag.value: len(stores[tag]) for tag in ToolTag}
    logger.info('index written to %s: %s', index_dir, sizes)
    return IndexSummary(result.changes, sizes, result.errors, rebuilt=True)
