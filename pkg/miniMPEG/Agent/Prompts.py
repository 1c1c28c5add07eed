"""
Prompt templates and prompt assembly.

The templates are the .txt files in the Templates directory, filled with str.format. They are versioned with the code;
the SHA-256 of all of them together is written into every AnswerRecord, so that an evaluation run can be traced back to
the exact prompts it used.

A prompt must fit into the character budget of the chat model. When it does not, retrieved chunks are dropped starting
from the lowest-ranked one; the query and the answer under review are never dropped.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

from miniMPEG.Agent.AgentExceptions import ContextOverflow, UnknownTemplate
from miniMPEG.Retrieval.VectorStore import ScoredChunk
from miniMPEG.Utilities.File import File


TEMPLATE_NAMES = ('system', 'select_tool', 'generate', 'reflect', 'revise', 'judge')


def format_context(chunks: Sequence[ScoredChunk]) -> str:
    if not chunks:
        return ''

    parts = ['\n\nDocumentation excerpts, most relevant first:']
    for rank, scored in enumerate(chunks, start=1):
        m = scored.chunk.metadata
        parts.append(f'\n\n[{rank}] {m.tool_tag.value} | {m.source_file} | chunk {m.chunk_index}\n'
                     f'{scored.chunk.content}')
    return ''.join(parts)


@dataclass(frozen=True)
class Prompt:
    messages: List[Dict[str, str]]
    used_chunks: int  # retrieved chunks that fit into the budget

    @property
    def length(self) -> int:
        return sum(len(m['content']) for m in self.messages)


class PromptTemplates:
    def __init__(self, directory: str | Path | None = None) -> None:
        """:param directory: a directory with the template files; the shipped Templates directory by default."""

        self._texts: Dict[str, str] = dict()
        for name in TEMPLATE_NAMES:
            file = File(__file__)
            file.bind(Path(directory) / f'{name}.txt' if directory is not None else f'Templates/{name}.txt')
            self._texts[name] = file.read_text().strip('\n')

        self._digest = hashlib.sha256(
            '\0'.join(f'{name}\0{self._texts[name]}' for name in TEMPLATE_NAMES).encode('utf-8')
        ).hexdigest()

    def __getitem__(self, name: str) -> str:
        try:
            return self._texts[name]
        except KeyError:
            raise UnknownTemplate(name, list(TEMPLATE_NAMES), variables={})

    @property
    def digest(self) -> str:
        return self._digest

    def render(self, name: str, **fields: str) -> str:
        return self[name].format(**fields)

    def assemble(self, name: str, budget: int, chunks: Sequence[ScoredChunk] = (), **fields: str) -> Prompt:
        """
        Builds the system + user messages of a stage. Templates that have a {context} field receive the formatted
        chunks; chunks are removed from the end of the list until the prompt fits into the budget.

        :raises ContextOverflow: the prompt does not fit even without any chunk
        """

        system = self['system']
        chunks = list(chunks)
        uses_context = '{context}' in self[name]

        while True:
            if uses_context:
                fields['context'] = format_context(chunks)
            prompt = Prompt(messages=[{'role': 'system', 'content': system},
                                      {'role': 'user', 'content': self.render(name, **fields)}],
                            used_chunks=len(chunks))
            if prompt.length <= budget:
                return prompt
            if not chunks:
                raise ContextOverflow(name, prompt.length, budget, variables={'query': fields.get('query', '')[:80]})
            chunks.pop()
