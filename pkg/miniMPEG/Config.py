"""
Configuration of miniMPEG: one YAML file with one section per part of the program. Every key has a default, so an
empty (or absent) file is a valid configuration. The defaults are the edge setup: chunks of 3000 characters with 500
characters of overlap, k = 5, one reflection iteration and a context of 4000 tokens.

    corpus:      root, pattern, directories, files
    chunking:    chunk_size, overlap, delimiters
    retrieval:   provider (http | mock), endpoint, model, dimension, k, index_dir, batch_size, max_in_flight, timeout,
                 seed
    agent:       endpoint, model, mode, i_max, temperature, max_tokens, context_limit, timeout, retries, backoff,
                 script
    executor:    workdir, allowlist, binaries, timeout
    evaluation:  dataset, output_dir, modes, imax_sweep, models, judges, energy_source, watts, judge_workers

The environment variables CHAT_ENDPOINT, EMBED_ENDPOINT and JUDGE_ENDPOINT override the endpoints of the file.
Relative paths are relative to the directory of the configuration file.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, fields, replace, MISSING
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple

import yaml

from miniMPEG.Agent.ChatClient import ChatModel, HttpChatClient, ScriptedChatClient
from miniMPEG.Agent.Pipeline import Mode
from miniMPEG.ConfigExceptions import ConfigFileMissing, ConfigSyntaxError, InvalidConfigValue
from miniMPEG.Corpus.Document import ChunkConfig, DEFAULT_DELIMITERS
from miniMPEG.Corpus.Ingest import ToolMapping
from miniMPEG.Evaluation.Energy import EnergyMeter
from miniMPEG.Executor.Extractor import Program
from miniMPEG.Executor.Policy import ExecutionPolicy
from miniMPEG.Retrieval.Embedding import EmbeddingProvider, HttpEmbeddingProvider, MockEmbeddingProvider
from miniMPEG.Utilities.Checks import keywords_check, range_check, positive_check, type_check
from miniMPEG.Utilities.Retry import RetryPolicy


logger = logging.getLogger(__name__)

ENV_OVERRIDES = {'CHAT_ENDPOINT': 'agent.endpoint', 'EMBED_ENDPOINT': 'retrieval.endpoint',
                 'JUDGE_ENDPOINT': 'evaluation.judges.*.endpoint'}
ENERGY_SOURCES = ('auto', 'rapl', 'constant', 'none')


def _load_script(path: str, key: str) -> ScriptedChatClient:
    try:
        script = yaml.safe_load(Path(path).read_text(encoding='utf-8'))
    except (OSError, yaml.YAMLError) as e:
        raise InvalidConfigValue(key, path, f'cannot read the chat script ({e})', variables={})
    if not isinstance(script, dict):
        raise InvalidConfigValue(key, path, 'a chat script maps stage names to responses', variables={})
    return ScriptedChatClient(script, model_name=Path(path).stem)


# ========================================================================================================= SECTIONS
@dataclass(frozen=True)
class CorpusSettings:
    root: str = 'corpus'
    pattern: str = '*.txt'
    directories: Dict[str, str] = field(default_factory=lambda: {'ffmpeg': 'FFmpeg', 'vvenc': 'VVenC'})
    files: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        try:
            self.mapping()
        except ValueError as e:
            raise InvalidConfigValue('corpus.directories', self.directories, str(e), variables={'files': self.files})

    def mapping(self) -> ToolMapping:
        return ToolMapping(self.directories, self.files)


@dataclass(frozen=True)
class RetrievalSettings:
    provider: str = 'http'
    endpoint: str = 'http://localhost:11434/api/embed'
    model: str = 'bge-small-en-v1.5'
    dimension: int = 384
    k: int = 5
    index_dir: str = 'index'
    batch_size: int = 32
    max_in_flight: int = 2
    timeout: float = 60.0
    seed: int = 0

    def __post_init__(self):
        if self.provider not in ('http', 'mock'):
            raise InvalidConfigValue('retrieval.provider', self.provider, 'expected "http" or "mock"', variables={})
        for name in ('dimension', 'k', 'batch_size', 'max_in_flight', 'timeout'):
            positive_check(f'retrieval.{name}', getattr(self, name))

    def embedder(self, retry: RetryPolicy | None = None) -> EmbeddingProvider:
        if self.provider == 'mock':
            return MockEmbeddingProvider(dimension=self.dimension, seed=self.seed)
        return HttpEmbeddingProvider(self.endpoint, self.model, self.dimension, batch_size=self.batch_size,
                                     max_in_flight=self.max_in_flight, timeout=self.timeout, retry=retry)


@dataclass(frozen=True)
class AgentSettings:
    endpoint: str = 'http://localhost:11434/v1/chat/completions'
    model: str = 'qwen2.5:7b'
    mode: str = 'Full'
    i_max: int = 1
    temperature: float = 0.0
    max_tokens: int = 1024
    context_limit: int = 4000
    timeout: float = 300.0
    retries: int = 2
    backoff: float = 0.5
    script: str | None = None  # a YAML chat script; replaces the server (offline runs)

    def __post_init__(self):
        try:
            object.__setattr__(self, 'mode', Mode.parse(self.mode).value)
        except ValueError as e:
            raise InvalidConfigValue('agent.mode', self.mode, str(e), variables={})
        range_check('agent.i_max', self.i_max, minimum=0)
        range_check('agent.temperature', self.temperature, minimum=0)
        range_check('agent.retries', self.retries, minimum=0)
        range_check('agent.backoff', self.backoff, minimum=0)
        for name in ('max_tokens', 'context_limit', 'timeout'):
            positive_check(f'agent.{name}', getattr(self, name))

    @property
    def retry(self) -> RetryPolicy:
        return RetryPolicy(retries=self.retries, backoff=self.backoff)

    def client(self, model: str | None = None) -> ChatModel:
        if self.script is not None:
            return _load_script(self.script, 'agent.script')
        return HttpChatClient(self.endpoint, model or self.model, context_limit=self.context_limit,
                              temperature=self.temperature, max_tokens=self.max_tokens, timeout=self.timeout,
                              retry=self.retry)


@dataclass(frozen=True)
class JudgeSettings:
    endpoint: str = 'http://localhost:11434/v1/chat/completions'
    model: str = 'judge'
    script: str | None = None

    def client(self, agent: AgentSettings, key: str) -> ChatModel:
        if self.script is not None:
            return _load_script(self.script, f'{key}.script')
        # judges see long answers; they get the same limits as the agent
        return HttpChatClient(self.endpoint, self.model, context_limit=agent.context_limit, temperature=0.0,
                              max_tokens=agent.max_tokens, timeout=agent.timeout, retry=agent.retry)


@dataclass(frozen=True)
class ExecutorSettings:
    workdir: str = '.'
    allowlist: Tuple[str, ...] = tuple(p.value for p in Program)
    binaries: Dict[str, str] = field(default_factory=dict)
    timeout: float = 300.0

    def __post_init__(self):
        object.__setattr__(self, 'allowlist', tuple(self.allowlist))
        known = {p.value for p in Program}
        for name in tuple(self.allowlist) + tuple(self.binaries):
            if name not in known:
                raise InvalidConfigValue('executor.allowlist', name, f'only {sorted(known)} can be allowed',
                                         variables={'binaries': self.binaries})
        positive_check('executor.timeout', self.timeout)

    def policy(self) -> ExecutionPolicy:
        return ExecutionPolicy(workdir=Path(self.workdir), allowlist=frozenset(Program(p) for p in self.allowlist),
                               binaries={Program(p): path for p, path in self.binaries.items()}, timeout=self.timeout)


@dataclass(frozen=True)
class EvaluationSettings:
    dataset: str | None = None  # the shipped sample when not set
    output_dir: str = 'eval'
    modes: Tuple[str, ...] = ('base', 'rag', 'full')
    imax_sweep: Tuple[int, ...] = ()
    models: Dict[str, str] = field(default_factory=dict)  # report name -> model id; the agent model when empty
    judges: Dict[str, JudgeSettings] = field(default_factory=dict)
    energy_source: str = 'auto'
    watts: float | None = None
    judge_workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'modes', tuple(self.modes))
        object.__setattr__(self, 'imax_sweep', tuple(self.imax_sweep))
        if self.energy_source not in ENERGY_SOURCES:
            raise InvalidConfigValue('evaluation.energy_source', self.energy_source, f'expected one of {ENERGY_SOURCES}',
                                     variables={})
        if self.watts is not None:
            positive_check('evaluation.watts', self.watts)
        for i in self.imax_sweep:
            range_check('evaluation.imax_sweep', i, minimum=1)
        positive_check('evaluation.judge_workers', self.judge_workers)

    def meter(self) -> EnergyMeter:
        return EnergyMeter(source=self.energy_source, watts=self.watts)


# ================================================================================================= LOADING
def _coerce(key: str, value: Any, default: Any) -> Any:
    """Checks a YAML value against the type of the default (bool is never a number)."""

    if default is None:
        if value is None or type_check([value], [str, int, float]):
            return float(value) if isinstance(value, int) and not isinstance(value, bool) else value
    elif isinstance(default, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(default, float):
        if type_check([value], [int, float]):
            return float(value)
    elif isinstance(default, int):
        if type_check([value], [int]):
            return value
    elif isinstance(default, str):
        if isinstance(value, str):
            return value
    elif isinstance(default, tuple):
        if isinstance(value, (list, tuple)):
            return tuple(value)
        if isinstance(value, str):
            return tuple(v.strip() for v in value.split(',') if v.strip())
    elif isinstance(default, dict):
        if value is None:
            return {}
        if isinstance(value, dict):
            return dict(value)

    raise InvalidConfigValue(key, value, f'expected a value like {default!r}', variables={'type': type(value).__name__})


def _section(cls: type, name: str, data: Any, overrides: Mapping[str, Any] | None = None) -> Any:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidConfigValue(name, data, 'a section must be a mapping', variables={})

    allowed = [f.name for f in fields(cls)]
    keywords_check(data.keys(), allowed, function_name=name, variables={'section': name, 'keys': sorted(data)})

    kwargs = dict()
    for f in fields(cls):
        if f.name not in data:
            continue
        default = f.default if f.default is not MISSING else f.default_factory()
        kwargs[f.name] = _coerce(f'{name}.{f.name}', data[f.name], default)
    kwargs.update(overrides or {})
    return cls(**kwargs)


def _relative(base: Path, value: str | None) -> str | None:
    if value is None:
        return None
    path = Path(value).expanduser()
    return str(path if path.is_absolute() else base / path)


@dataclass(frozen=True)
class AppConfig:
    corpus: CorpusSettings = field(default_factory=CorpusSettings)
    chunking: ChunkConfig = field(default_factory=ChunkConfig)
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    agent: AgentSettings = field(default_factory=AgentSettings)
    executor: ExecutorSettings = field(default_factory=ExecutorSettings)
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)

    SECTIONS = ('corpus', 'chunking', 'retrieval', 'agent', 'executor', 'evaluation')

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None, base: Path | None = None,
                  environ: Mapping[str, str] | None = None) -> AppConfig:
        data = dict(data or {})
        base = Path(base) if base is not None else Path.cwd()
        environ = os.environ if environ is None else environ
        keywords_check(data.keys(), cls.SECTIONS, function_name='configuration file', variables={'keys': sorted(data)})

        chunking_data = data.get('chunking') or {}
        if not isinstance(chunking_data, dict):
            raise InvalidConfigValue('chunking', chunking_data, 'a section must be a mapping', variables={})
        keywords_check(chunking_data.keys(), ('chunk_size', 'overlap', 'delimiters'), function_name='chunking',
                       variables={'keys': sorted(chunking_data)})
        chunking = ChunkConfig(
            chunk_size=_coerce('chunking.chunk_size', chunking_data.get('chunk_size', 3000), 0),
            overlap=_coerce('chunking.overlap', chunking_data.get('overlap', 500), 0),
            delimiters=tuple(chunking_data.get('delimiters', DEFAULT_DELIMITERS)),
        )

        corpus = _section(CorpusSettings, 'corpus', data.get('corpus'))
        corpus = replace(corpus, root=_relative(base, corpus.root))

        retrieval = _section(RetrievalSettings, 'retrieval', data.get('retrieval'))
        retrieval = replace(retrieval, index_dir=_relative(base, retrieval.index_dir),
                            endpoint=environ.get('EMBED_ENDPOINT', retrieval.endpoint))

        agent = _section(AgentSettings, 'agent', data.get('agent'))
        agent = replace(agent, endpoint=environ.get('CHAT_ENDPOINT', agent.endpoint),
                        script=_relative(base, agent.script))

        executor = _section(ExecutorSettings, 'executor', data.get('executor'))
        executor = replace(executor, workdir=_relative(base, executor.workdir))

        evaluation_data = dict(data.get('evaluation') or {})
        judges_data = evaluation_data.pop('judges', None) or {}
        if not isinstance(judges_data, dict):
            raise InvalidConfigValue('evaluation.judges', judges_data, 'expected a mapping of judge names',
                                     variables={})
        judges = {name: _section(JudgeSettings, f'evaluation.judges.{name}', settings)
                  for name, settings in judges_data.items()}
        judges = {name: replace(j, endpoint=environ.get('JUDGE_ENDPOINT', j.endpoint), script=_relative(base, j.script))
                  for name, j in judges.items()}
        if not judges and 'JUDGE_ENDPOINT' in environ:
            judges = {'judge': JudgeSettings(endpoint=environ['JUDGE_ENDPOINT'])}

        evaluation = _section(EvaluationSettings, 'evaluation', evaluation_data, overrides={'judges': judges})
        evaluation = replace(evaluation, dataset=_relative(base, evaluation.dataset),
                             output_dir=_relative(base, evaluation.output_dir))

        return cls(corpus, chunking, retrieval, agent, executor, evaluation)

    @classmethod
    def load(cls, path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> AppConfig:
        """Reads the YAML file (defaults only when path is None) and applies the environment overrides."""

        if path is None:
            return cls.from_dict({}, environ=environ)

        path = Path(path)
        if not path.is_file():
            raise ConfigFileMissing(str(path), variables={'cwd': str(Path.cwd())})
        try:
            data = yaml.safe_load(path.read_text(encoding='utf-8'))
        except yaml.YAMLError as e:
            raise ConfigSyntaxError(str(path), str(e).replace('\n', ' '), variables={})
        if data is not None and not isinstance(data, dict):
            raise ConfigSyntaxError(str(path), 'the top level must be a mapping of sections', variables={})

        logger.debug('configuration loaded from %s', path)
        return cls.from_dict(data, base=path.resolve().parent, environ=environ)

    def chat_clients(self) -> Dict[str, ChatModel]:
        models = self.evaluation.models or {self.agent.model: self.agent.model}
        return {name: self.agent.client(model) for name, model in models.items()}

    def judge_clients(self) -> Dict[str, ChatModel]:
        return {name: j.client(self.agent, f'evaluation.judges.{name}') for name, j in self.evaluation.judges.items()}
