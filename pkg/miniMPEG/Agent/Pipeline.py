"""
The reasoning phase of the agent:

    1. select_tool  the model names the tool the query is about (FFmpeg, VVenC or Both);
    2. retrieve     the query is embedded and the k closest chunks are taken from the store(s) of that tool;
    3. generate     the model answers with the chunks in its prompt;
    4. reflect      the model reviews its answer and replies OK or REVISE;
    5. revise       on REVISE the answer is rewritten with the feedback, and the review is repeated.

Steps 4-5 run at most i_max times. The modes switch parts off: Base only generates (no tool selection, no retrieval),
RagOnly stops after step 3, Full runs everything.

Model output never crashes the pipeline: labels and review markers that cannot be parsed fall back to Both and REVISE.
A transport failure ends the run with a record that names the failed stage.
"""

from __future__ import annotations

import json
import logging
import string
import time
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Callable, List, Tuple

from miniMPEG.Agent.AgentExceptions import (
    ChatTransportError,
    MalformedChatResponse,
    ScriptExhausted,
    ContextOverflow,
    EmptyQuery,
    IndexRequired,
    RecordSchemaMismatch)
from miniMPEG.Agent.ChatClient import ChatModel, Completion
from miniMPEG.Agent.Prompts import PromptTemplates
from miniMPEG.Corpus.Document import ToolTag
from miniMPEG.MiniMPEGException import NotSupposedToHappen
from miniMPEG.Retrieval.Embedding import EmbeddingProvider
from miniMPEG.Retrieval.RetrievalExceptions import EmbeddingTransportError, MalformedEmbeddingResponse
from miniMPEG.Retrieval.VectorStore import ScoredChunk, StoreSet, search
from miniMPEG.Utilities.Checks import range_check


logger = logging.getLogger(__name__)

RECORD_SCHEMA_VERSION = 1

# failures that end a run with a failed record instead of an exception
RECOVERABLE = (ChatTransportError, MalformedChatResponse, ScriptExhausted, ContextOverflow,
               EmbeddingTransportError, MalformedEmbeddingResponse)


class ToolLabel(str, Enum):
    FFMPEG = 'FFmpeg'
    VVENC = 'VVenC'
    BOTH = 'Both'

    @property
    def tags(self) -> Tuple[ToolTag, ...]:
        if self is ToolLabel.FFMPEG:
            return (ToolTag.FFMPEG,)
        if self is ToolLabel.VVENC:
            return (ToolTag.VVENC,)
        if self is ToolLabel.BOTH:
            return ToolTag.FFMPEG, ToolTag.VVENC
        raise NotSupposedToHappen(variables={'label': self})

    @property
    def description(self) -> str:
        return 'FFmpeg and VVenC' if self is ToolLabel.BOTH else self.value

    @classmethod
    def parse(cls, text: str) -> Tuple[ToolLabel, bool]:
        """
        Reads a label from model output. The first word decides when it is exactly one of the labels (case and
        punctuation ignored); otherwise the text is scanned for "ffmpeg" and "vvenc". When both or neither appear the
        label is Both.

        :return: the label and False if it is the fallback
        """

        words = text.strip().split()
        first = words[0].strip(string.punctuation).lower() if words else ''
        exact = {label.value.lower(): label for label in cls}
        if first in exact:
            return exact[first], True

        lowered = text.lower()
        has_ffmpeg, has_vvenc = 'ffmpeg' in lowered, 'vvenc' in lowered
        if has_ffmpeg and not has_vvenc:
            return cls.FFMPEG, True
        if has_vvenc and not has_ffmpeg:
            return cls.VVENC, True
        return cls.BOTH, has_ffmpeg and has_vvenc


class Verdict(str, Enum):
    OK = 'OK'
    REVISE = 'REVISE'


@dataclass(frozen=True)
class Feedback:
    raw: str
    verdict: Verdict
    notes: str

    @classmethod
    def parse(cls, raw: str) -> Tuple[Feedback, bool]:
        """The first non-blank line must be exactly OK or REVISE (case, '*', '#', ':' and '.' ignored)."""

        lines = raw.splitlines()
        for position, line in enumerate(lines):
            if line.strip():
                marker = line.strip().strip('*#:. ').upper()
                if marker in Verdict.__members__:
                    notes = '\n'.join(lines[position + 1:]).strip()
                    return cls(raw, Verdict(marker), notes), True
                break
        return cls(raw, Verdict.REVISE, raw), False

    def to_dict(self) -> dict:
        return {'raw': self.raw, 'verdict': self.verdict.value, 'notes': self.notes}

    @classmethod
    def from_dict(cls, d: dict) -> Feedback:
        return cls(raw=d['raw'], verdict=Verdict(d['verdict']), notes=d['notes'])


class Mode(str, Enum):
    BASE = 'Base'
    RAG_ONLY = 'RagOnly'
    FULL = 'Full'

    @classmethod
    def parse(cls, value: str | Mode) -> Mode:
        if isinstance(value, Mode):
            return value
        key = str(value).strip().lower().replace('-', '').replace('_', '')
        aliases = {'base': cls.BASE, 'ragonly': cls.RAG_ONLY, 'rag': cls.RAG_ONLY, 'full': cls.FULL}
        if key not in aliases:
            raise ValueError(f'Unknown mode {value!r}. Expected one of {[m.value for m in cls]}.')
        return aliases[key]


@dataclass(frozen=True)
class AgentConfig:
    i_max: int = 1
    k: int = 5
    mode: Mode = Mode.FULL

    def __post_init__(self):
        object.__setattr__(self, 'mode', Mode.parse(self.mode))
        range_check('agent.i_max', self.i_max, minimum=0)
        range_check('agent.k', self.k, minimum=1)


@dataclass(frozen=True)
class CallRecord:
    stage: str
    prompt_tokens: int
    completion_tokens: int
    estimated: bool
    wall_time: float

    @classmethod
    def of(cls, stage: str, completion: Completion) -> CallRecord:
        return cls(stage, completion.prompt_tokens, completion.completion_tokens, completion.estimated,
                   completion.wall_time)


@dataclass
class AnswerRecord:
    query: str
    mode: Mode
    model: str
    i_max: int
    template_hash: str
    tool: ToolLabel = ToolLabel.BOTH
    retrieved: List[ScoredChunk] = field(default_factory=list)
    answer: str = ''
    feedback_trail: List[Feedback] = field(default_factory=list)
    calls: List[CallRecord] = field(default_factory=list)
    stages: List[str] = field(default_factory=list)
    failed_stage: str | None = None
    error: str | None = None
    retrieval_time: float = 0.0  # embedding the query and searching the stores

    # ===================================================================================================== PROPERTIES
    @property
    def llm_calls(self) -> int:
        return len(self.calls)

    @property
    def failed(self) -> bool:
        return self.failed_stage is not None

    @property
    def token_counts(self) -> List[Tuple[int, int]]:
        return [(c.prompt_tokens, c.completion_tokens) for c in self.calls]

    @property
    def wall_times(self) -> List[float]:
        return [c.wall_time for c in self.calls]

    @property
    def completion_tokens(self) -> int:
        return sum(c.completion_tokens for c in self.calls)

    @property
    def answer_tokens(self) -> int:
        """Completion tokens of the call that produced the final answer."""
        for call in reversed(self.calls):
            if call.stage in ('generate', 'revise'):
                return call.completion_tokens
        return 0

    @property
    def inference_time(self) -> float:
        return sum(self.wall_times) + self.retrieval_time

    @property
    def tokens_estimated(self) -> bool:
        return any(c.estimated for c in self.calls)

    # ================================================================================================ SERIALIZATION
    def to_dict(self) -> dict:
        return {
            'schema_version': RECORD_SCHEMA_VERSION,
            'query': self.query,
            'mode': self.mode.value,
            'model': self.model,
            'i_max': self.i_max,
            'template_hash': self.template_hash,
            'tool': self.tool.value,
            'retrieved': [s.to_dict() for s in self.retrieved],
            'answer': self.answer,
            'feedback_trail': [f.to_dict() for f in self.feedback_trail],
            'calls': [asdict(c) for c in self.calls],
            'stages': list(self.stages),
            'failed_stage': self.failed_stage,
            'error': self.error,
            'retrieval_time': self.retrieval_time,
            'llm_calls': self.llm_calls,
        }

    @classmethod
    def from_dict(cls, d: dict) -> AnswerRecord:
        if d.get('schema_version') != RECORD_SCHEMA_VERSION:
            raise RecordSchemaMismatch(d.get('schema_version'), RECORD_SCHEMA_VERSION, variables={})
        return cls(query=d['query'], mode=Mode(d['mode']), model=d['model'], i_max=int(d['i_max']),
                   template_hash=d['template_hash'], tool=ToolLabel(d['tool']),
                   retrieved=[ScoredChunk.from_dict(s) for s in d['retrieved']], answer=d['answer'],
                   feedback_trail=[Feedback.from_dict(f) for f in d['feedback_trail']],
                   calls=[CallRecord(**c) for c in d['calls']], stages=list(d['stages']),
                   failed_stage=d['failed_stage'], error=d['error'],
                   retrieval_time=float(d.get('retrieval_time', 0.0)))

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> AnswerRecord:
        return cls.from_dict(json.loads(text))


# ===================================================================================================== STAGES
def _call(client: ChatModel, stage: str, messages: list, trace: List[CallRecord] | None) -> Completion:
    completion = client.complete(messages, stage=stage)
    if trace is not None:
        trace.append(CallRecord.of(stage, completion))
    return completion


def select_tool(client: ChatModel, query: str, templates: PromptTemplates | None = None,
                trace: List[CallRecord] | None = None) -> ToolLabel:
    if not query.strip():
        raise EmptyQuery(variables={'query': query})
    templates = templates or PromptTemplates()

    prompt = templates.assemble('select_tool', client.char_budget, query=query)
    completion = _call(client, 'select_tool', prompt.messages, trace)
    label, parsed = ToolLabel.parse(completion.text)
    if not parsed:
        logger.warning('could not read a tool label from %r; using Both', completion.text[:80])
    return label


def generate(client: ChatModel, query: str, retrieved: List[ScoredChunk], tool: ToolLabel,
             templates: PromptTemplates | None = None, trace: List[CallRecord] | None = None) -> str:
    templates = templates or PromptTemplates()

    prompt = templates.assemble('generate', client.char_budget, retrieved, query=query, tool=tool.description)
    if prompt.used_chunks < len(retrieved):
        logger.info('generate: %d of %d chunks dropped to fit %d characters', len(retrieved) - prompt.used_chunks,
                    len(retrieved), client.char_budget)
    return _call(client, 'generate', prompt.messages, trace).text


def reflect(client: ChatModel, query: str, answer: str, retrieved: List[ScoredChunk],
            templates: PromptTemplates | None = None, trace: List[CallRecord] | None = None) -> Feedback:
    templates = templates or PromptTemplates()

    prompt = templates.assemble('reflect', client.char_budget, retrieved, query=query, answer=answer)
    completion = _call(client, 'reflect', prompt.messages, trace)
    feedback, parsed = Feedback.parse(completion.text)
    if not parsed:
        logger.warning('no OK/REVISE marker in the review %r; treating it as REVISE', completion.text[:80])
    return feedback


def revise(client: ChatModel, query: str, retrieved: List[ScoredChunk], answer: str, feedback: Feedback,
           templates: PromptTemplates | None = None, trace: List[CallRecord] | None = None) -> str:
    templates = templates or PromptTemplates()

    prompt = templates.assemble('revise', client.char_budget, retrieved, query=query, answer=answer,
                                feedback=feedback.notes or feedback.raw)
    return _call(client, 'revise', prompt.messages, trace).text


def retrieve(query: str, tool: ToolLabel, stores: StoreSet, embedder: EmbeddingProvider, k: int) -> List[ScoredChunk]:
    return search(stores.select(tool.tags), embedder.embed(query), k)


def run_pipeline(query: str,
                 config: AgentConfig,
                 client: ChatModel,
                 stores: StoreSet | None = None,
                 embedder: EmbeddingProvider | None = None,
                 templates: PromptTemplates | None = None,
                 clock: Callable[[], float] = time.perf_counter
                 ) -> AnswerRecord:
    """
    Answers one query. Base mode makes 1 model call, RagOnly 2 and Full at most 2 + 2 * i_max.
    The inference time of the record is the wall time of the model calls plus the retrieval time measured with clock.

    :raises IndexRequired: RagOnly or Full mode without stores or embedder
    """

    if not query.strip():
        raise EmptyQuery(variables={'query': query})
    if config.mode is not Mode.BASE and (stores is None or embedder is None):
        raise IndexRequired(config.mode.value, variables={'stores': stores, 'embedder': embedder})

    templates = templates or PromptTemplates()
    record = AnswerRecord(query=query, mode=config.mode, model=client.model_name, i_max=config.i_max,
                          template_hash=templates.digest)
    stage = 'start'

    def enter(name: str) -> None:
        nonlocal stage
        stage = name
        record.stages.append(name)

    try:
        if config.mode is not Mode.BASE:
            enter('select_tool')
            record.tool = select_tool(client, query, templates, record.calls)
            enter('retrieve')
            started = clock()
            try:
                record.retrieved = retrieve(query, record.tool, stores, embedder, config.k)
            finally:
                record.retrieval_time = clock() - started

        enter('generate')
        record.answer = generate(client, query, record.retrieved, record.tool, templates, record.calls)

        if config.mode is Mode.FULL:
            for _ in range(config.i_max):
                enter('reflect')
                feedback = reflect(client, query, record.answer, record.retrieved, templates, record.calls)
                record.feedback_trail.append(feedback)
                if feedback.verdict is Verdict.OK:
                    break
                enter('revise')
                record.answer = revise(client, query, record.retrieved, record.answer, feedback, templates,
                                       record.calls)

    except RECOVERABLE as e:
        record.failed_stage = stage
        record.error = getattr(e, 'message', str(e))
        logger.error('pipeline failed at %s: %s', stage, record.error)

    return record


__all__ = ['ToolLabel', 'Verdict', 'Feedback', 'Mode', 'AgentConfig', 'CallRecord', 'AnswerRecord',
           'select_tool', 'generate', 'reflect', 'revise', 'retrieve', 'run_pipeline']
