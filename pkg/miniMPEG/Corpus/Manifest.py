"""
The corpus manifest remembers which documents went into the index: their content hash, how many chunks they produced
and when. It is saved as manifest.json next to the vector stores and is what makes re-indexing incremental: only files
whose hash changed are split and embedded again.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List

from miniMPEG.Corpus.CorpusExceptions import ManifestCorrupted
from miniMPEG.Utilities.File import File


MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ManifestEntry:
    content_hash: str
    chunk_count: int
    ingested_at: str


@dataclass
class CorpusManifest:
    entries: Dict[str, ManifestEntry] = field(default_factory=dict)
    fingerprint: str = ''  # chunking and embedding settings the entries were indexed with

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, CorpusManifest) and self.entries == other.entries
                and self.fingerprint == other.fingerprint)

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        payload = {
            'version': MANIFEST_VERSION,
            'fingerprint': self.fingerprint,
            'entries': {
                path: {'content_hash': e.content_hash, 'chunk_count': e.chunk_count, 'ingested_at': e.ingested_at}
                for path, e in sorted(self.entries.items())
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True) + '\n'

    @classmethod
    def from_json(cls, text: str, source: str = '<string>') -> CorpusManifest:
        try:
            payload = json.loads(text)
            if payload.get('version') != MANIFEST_VERSION:
                raise ValueError(f'unsupported version {payload.get("version")!r}')
            entries = {
                path: ManifestEntry(content_hash=str(e['content_hash']), chunk_count=int(e['chunk_count']),
                                    ingested_at=str(e['ingested_at']))
                for path, e in payload['entries'].items()
            }
        except (ValueError, KeyError, TypeError, AttributeError) as e:
            raise ManifestCorrupted(source, reason=str(e), variables={'source': source})
        return cls(entries=entries, fingerprint=str(payload.get('fingerprint', '')))

    def save(self, path: Path) -> None:
        File(path).bind(Path(path).resolve()).write_atomic(self.to_json())

    @classmethod
    def load(cls, path: Path) -> CorpusManifest:
        """Loads the manifest, or returns an empty one if the file does not exist yet."""
        path = Path(path)
        if not path.exists():
            return cls()
        return cls.from_json(path.read_text(encoding='utf-8'), source=str(path))


@dataclass(frozen=True)
class ChangeSet:
    added: List[str] = field(default_factory=list)
    modified: List[str] = field(default_factory=list)
    removed: List[str] = field(default_factory=list)
    unchanged: List[str] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not (self.added or self.modified or self.removed)

    @property
    def to_process(self) -> List[str]:
        return sorted(self.added + self.modified)


def file_digest(path: Path) -> str | None:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return None


def detect_changes(manifest: CorpusManifest, paths: Dict[str, Path] | Iterable[Path]) -> ChangeSet:
    """
    Classifies the given files against the manifest by comparing content hashes.

    :param manifest: the manifest of the last ingestion (may be empty)
    :param paths: files of the corpus, keyed by the name under which they are recorded in the manifest. A plain
    iterable of paths is keyed by the POSIX form of each path.
    :return: added / modified / removed / unchanged names, each sorted. A file that cannot be read is removed.
    """

    if not isinstance(paths, dict):
        paths = {Path(p).as_posix(): Path(p) for p in paths}

    added, modified, removed, unchanged = list(), list(), list(), list()

    for name in sorted(paths):
        digest = file_digest(paths[name])
        entry = manifest.entries.get(name)

        if digest is None:
            if entry is not None:
                removed.append(name)
        elif entry is None:
            added.append(name)
        elif entry.content_hash != digest:
            modified.append(name)
        else:
            unchanged.append(name)

    removed.extend(sorted(name for name in manifest.entries if name not in paths))

    return ChangeSet(added=added, modified=modified, removed=sorted(removed), unchanged=unchanged)
