"""
Query datasets for the benchmark: JSONL, one {"id", "query", "tool", "category"} object per line. Each tool has its
own nine categories (Data/categories.txt); a query must use one of the categories of its tool.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

from miniMPEG.Corpus.Document import ToolTag
from miniMPEG.Evaluation.EvaluationExceptions import (
    DatasetMissing,
    EmptyDataset,
    DatasetSchemaError,
    DuplicateQueryId)
from miniMPEG.Utilities.File import File


FIELDS = ('id', 'query', 'tool', 'category')


class CategoryTaxonomy:
    def __init__(self, file_name: str | Path = 'Data/categories.txt') -> None:
        self._categories: Dict[ToolTag, List[str]] = {tag: list() for tag in ToolTag}
        for line in File(__file__).bind(file_name).read_all():
            tool, category = line.split(':', 1)
            self._categories[ToolTag.parse(tool)].append(category.strip())

    def categories(self, tool: ToolTag) -> List[str]:
        return list(self._categories[tool])

    def contains(self, tool: ToolTag, category: str) -> bool:
        return category in self._categories[tool]

    @property
    def order(self) -> List[str]:
        return [c for tag in ToolTag for c in self._categories[tag]]

    def tool_of(self, category: str) -> ToolTag | None:
        for tag, categories in self._categories.items():
            if category in categories:
                return tag
        return None


@dataclass(frozen=True)
class QueryItem:
    id: str
    query: str
    tool: ToolTag
    category: str

    def to_dict(self) -> dict:
        return {'id': self.id, 'query': self.query, 'tool': self.tool.value, 'category': self.category}

    @classmethod
    def from_dict(cls, d: dict) -> QueryItem:
        return cls(id=d['id'], query=d['query'], tool=ToolTag.parse(d['tool']), category=d['category'])


def _parse_line(text: str, path: str, number: int, taxonomy: CategoryTaxonomy) -> QueryItem:
    def fail(reason: str) -> DatasetSchemaError:
        return DatasetSchemaError(path, number, reason, variables={'line': text[:120]})

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise fail(f'not JSON ({e.msg})')
    if not isinstance(data, dict):
        raise fail('not a JSON object')

    missing = [f for f in FIELDS if f not in data]
    extra = sorted(set(data) - set(FIELDS))
    if missing:
        raise fail(f'missing field(s) {", ".join(missing)}')
    if extra:
        raise fail(f'unknown field(s) {", ".join(extra)}')
    for name in FIELDS:
        if not isinstance(data[name], str) or not data[name].strip():
            raise fail(f'"{name}" must be a non-empty string')

    try:
        tool = ToolTag.parse(data['tool'])
    except ValueError:
        raise fail(f'unknown tool "{data["tool"]}"')
    if not taxonomy.contains(tool, data['category']):
        raise fail(f'"{data["category"]}" is not a {tool.value} category')

    return QueryItem(id=data['id'], query=data['query'], tool=tool, category=data['category'])


def load_dataset(path: str | Path, taxonomy: CategoryTaxonomy | None = None) -> List[QueryItem]:
    """
    Reads and validates a dataset. Blank lines are skipped.

    :raises DatasetMissing, EmptyDataset, DatasetSchemaError (naming the line), DuplicateQueryId
    """

    path = Path(path)
    if not path.is_file():
        raise DatasetMissing(str(path), variables={'cwd': str(Path.cwd())})
    taxonomy = taxonomy or CategoryTaxonomy()

    items: List[QueryItem] = list()
    first_seen: Dict[str, int] = dict()
    for number, text in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1):
        if not text.strip():
            continue
        item = _parse_line(text, str(path), number, taxonomy)
        if item.id in first_seen:
            raise DuplicateQueryId(str(path), number, item.id, first_seen[item.id], variables={'id': item.id})
        first_seen[item.id] = number
        items.append(item)

    if not items:
        raise EmptyDataset(str(path), variables={'size': path.stat().st_size})
    return items


def summarize(items: List[QueryItem]) -> Dict[Tuple[str, str], int]:
    """Number of queries per (tool, category)."""
    return dict(sorted(Counter((i.tool.value, i.category) for i in items).items()))
