"""
The benchmark harness.

For every mode, every chat model and every query the pipeline is run, the answer is judged by every judge and an
EvalRecord is appended to the checkpoint log (JSONL, one record per line, flushed after each query). With resume=True
the records already in the log are kept and their (mode, model, query) keys are skipped, so an interrupted sweep
continues where it stopped. The report is always computed from the whole log, in a fixed order, so a resumed run gives
the same report as an uninterrupted one.

Metrics per query:
    response_tokens  completion tokens of all model calls of the query
    answer_tokens    completion tokens of the final answer alone (the response length)
    inference_time   wall times of these calls plus the retrieval time, in seconds
    tps              response_tokens / inference_time
    energy_wh        see Energy.py
The report averages them over all queries of a (mode, model, judge, category) group; accuracy is
100 * correct / judged, unjudged answers are counted but left out.
"""

from __future__ import annotations

import json
import logging
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

import pandas as pd

from miniMPEG.Agent.AgentExceptions import IndexRequired
from miniMPEG.Agent.ChatClient import ChatModel
from miniMPEG.Agent.Pipeline import AgentConfig, AnswerRecord, Mode, run_pipeline
from miniMPEG.Agent.Prompts import PromptTemplates
from miniMPEG.Evaluation.Dataset import CategoryTaxonomy, QueryItem
from miniMPEG.Evaluation.Energy import EnergyEstimate, EnergyMeter, EnergySource
from miniMPEG.Evaluation.EvaluationExceptions import CheckpointCorrupted, InvalidModeSpec
from miniMPEG.Evaluation.Judge import JudgeVerdict, judge_all
from miniMPEG.MiniMPEGException import MiniMPEGException
from miniMPEG.Retrieval.Embedding import EmbeddingProvider
from miniMPEG.Retrieval.VectorStore import StoreSet
from miniMPEG.Utilities.File import File


logger = logging.getLogger(__name__)

ALL = 'ALL'
NO_JUDGE = 'none'
MODE_PATTERN = re.compile(r'^\s*(base|rag|ragonly|rag-only|full)\s*(?::\s*(\d+))?\s*$', re.IGNORECASE)

REPORT_COLUMNS = ['mode', 'model', 'judge', 'category', 'queries', 'judged', 'unjudged', 'correct', 'accuracy',
                  'failed', 'mean_llm_calls', 'mean_response_tokens', 'mean_answer_tokens', 'mean_tps',
                  'mean_inference_time', 'mean_energy_wh', 'energy_source']


@dataclass(frozen=True)
class ModeSpec:
    mode: Mode
    i_max: int = 1

    @property
    def label(self) -> str:
        return f'Full(I={self.i_max})' if self.mode is Mode.FULL else self.mode.value

    def agent_config(self, k: int) -> AgentConfig:
        return AgentConfig(i_max=self.i_max, k=k, mode=self.mode)

    @classmethod
    def parse(cls, text: str, default_i_max: int = 1) -> ModeSpec:
        """'base', 'rag' or 'full', the last optionally with the reflection limit: 'full:3'."""

        match = MODE_PATTERN.match(text)
        if not match:
            raise InvalidModeSpec(text, variables={})
        mode = Mode.parse(match.group(1))
        if match.group(2) is not None and mode is not Mode.FULL:
            raise InvalidModeSpec(text, variables={'mode': mode.value})
        return cls(mode, int(match.group(2)) if match.group(2) is not None else default_i_max)


def sweep(i_values: Iterable[int]) -> List[ModeSpec]:
    return [ModeSpec(Mode.FULL, i) for i in i_values]


@dataclass
class EvalRecord:
    item: QueryItem
    mode_label: str
    model: str  # name of the chat model in the benchmark
    record: AnswerRecord
    verdicts: Dict[str, JudgeVerdict | None] = field(default_factory=dict)
    energy: EnergyEstimate = EnergyEstimate(None, EnergySource.NONE)

    @property
    def key(self) -> Tuple[str, str, str]:
        return self.mode_label, self.model, self.item.id

    @property
    def response_tokens(self) -> int:
        return self.record.completion_tokens

    @property
    def answer_tokens(self) -> int:
        return self.record.answer_tokens

    @property
    def inference_time(self) -> float:
        return self.record.inference_time

    @property
    def tps(self) -> float | None:
        return self.response_tokens / self.inference_time if self.inference_time > 0 else None

    @property
    def energy_wh(self) -> float | None:
        return self.energy.wh

    def to_dict(self) -> dict:
        return {
            'item': self.item.to_dict(),
            'mode': self.mode_label,
            'model': self.model,
            'tool_label': self.record.tool.value,
            'llm_calls': self.record.llm_calls,
            'response_tokens': self.response_tokens,
            'answer_tokens': self.answer_tokens,
            'tokens_estimated': self.record.tokens_estimated,
            'inference_time': self.inference_time,
            'tps': self.tps,
            'energy': self.energy.to_dict(),
            'verdicts': {name: (v.value if v is not None else None) for name, v in sorted(self.verdicts.items())},
            'template_hash': self.record.template_hash,
            'record': self.record.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> EvalRecord:
        return cls(item=QueryItem.from_dict(d['item']), mode_label=d['mode'], model=d['model'],
                   record=AnswerRecord.from_dict(d['record']),
                   verdicts={name: (JudgeVerdict(v) if v is not None else None) for name, v in d['verdicts'].items()},
                   energy=EnergyEstimate.from_dict(d['energy']))


class CheckpointLog:
    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._file = File().bind(self.path.resolve())

    def read(self) -> List[EvalRecord]:
        if not self.path.exists():
            return list()
        records = list()
        for number, line in enumerate(self.path.read_text(encoding='utf-8').split('\n'), start=1):
            if not line.strip():
                continue
            try:
                records.append(EvalRecord.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as e:
                raise CheckpointCorrupted(str(self.path), number, str(e), variables={'line': line[:120]})
        return records

    def append(self, record: EvalRecord) -> None:
        self._file.append(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False))

    def clear(self) -> None:
        self._file.delete()


# ======================================================================================================= REPORT
def _clean(value: object) -> object:
    if isinstance(value, float) and math.isnan(value):
        return None
    if hasattr(value, 'item'):  # numpy scalar
        return _clean(value.item())
    return value


class MetricsReport:
    def __init__(self, table: pd.DataFrame) -> None:
        self.table = table

    @classmethod
    def from_records(cls, records: Sequence[EvalRecord], mode_order: Sequence[str] = (),
                     taxonomy: CategoryTaxonomy | None = None) -> MetricsReport:
        taxonomy = taxonomy or CategoryTaxonomy()

        rows = list()
        for r in records:
            judges = sorted(r.verdicts) or [NO_JUDGE]
            for judge in judges:
                verdict = r.verdicts.get(judge)
                base = {
                    'mode': r.mode_label, 'model': r.model, 'judge': judge,
                    'correct': (float('nan') if verdict is None else float(verdict is JudgeVerdict.CORRECT)),
                    'failed': float(r.record.failed), 'llm_calls': float(r.record.llm_calls),
                    'response_tokens': float(r.response_tokens),
                    'answer_tokens': float(r.answer_tokens),
                    'tps': float('nan') if r.tps is None else r.tps,
                    'inference_time': r.inference_time,
                    'energy_wh': float('nan') if r.energy_wh is None else r.energy_wh,
                    'energy_source': r.energy.source.value,
                }
                for category in (ALL, f'{ALL}:{r.item.tool.value}', r.item.category):
                    rows.append({**base, 'category': category})

        if not rows:
            return cls(pd.DataFrame(columns=REPORT_COLUMNS))

        frame = pd.DataFrame(rows)
        grouped = frame.groupby(['mode', 'model', 'judge', 'category'], sort=False)
        table = pd.DataFrame({
            'queries': grouped.size(),
            'judged': grouped['correct'].count(),
            'correct': grouped['correct'].sum(),
            'failed': grouped['failed'].sum(),
            'mean_llm_calls': grouped['llm_calls'].mean(),
            'mean_response_tokens': grouped['response_tokens'].mean(),
            'mean_answer_tokens': grouped['answer_tokens'].mean(),
            'mean_tps': grouped['tps'].mean(),
            'mean_inference_time': grouped['inference_time'].mean(),
            'mean_energy_wh': grouped['energy_wh'].mean(),
            'energy_source': grouped['energy_source'].agg(lambda s: ','.join(sorted(set(s)))),
        }).reset_index()
        table['unjudged'] = table['queries'] - table['judged']
        table['accuracy'] = [100.0 * c / j if j else float('nan') for c, j in zip(table['correct'], table['judged'])]

        modes = list(mode_order) + sorted(set(table['mode']) - set(mode_order))
        categories = [ALL] + [f'{ALL}:{tag}' for tag in ('FFmpeg', 'VVenC')] + taxonomy.order
        categories += sorted(set(table['category']) - set(categories))
        table['_mode'] = table['mode'].map(modes.index)
        table['_category'] = table['category'].map(categories.index)
        table = table.sort_values(['_mode', 'model', 'judge', '_category'], kind='mergesort')
        table = table.drop(columns=['_mode', '_category']).reset_index(drop=True)

        for column in ('queries', 'judged', 'unjudged', 'correct', 'failed'):
            table[column] = table[column].astype(int)
        return cls(table[REPORT_COLUMNS])

    def rows(self) -> List[dict]:
        return [{k: _clean(v) for k, v in row.items()} for row in self.table.to_dict(orient='records')]

    def row(self, mode: str, model: str, judge: str, category: str = ALL) -> dict:
        for r in self.rows():
            if (r['mode'], r['model'], r['judge'], r['category']) == (mode, model, judge, category):
                return r
        raise KeyError((mode, model, judge, category))

    @property
    def modes(self) -> List[str]:
        return list(dict.fromkeys(self.table['mode']))

    def to_json(self) -> str:
        return json.dumps({'rows': self.rows()}, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        return self.table.to_csv(index=False, lineterminator='\n')

    def write(self, directory: str | Path, stem: str = 'report') -> Tuple[Path, Path]:
        directory = Path(directory).resolve()
        json_path, csv_path = directory / f'{stem}.json', directory / f'{stem}.csv'
        File().bind(json_path).write_atomic(self.to_json())
        File().bind(csv_path).write_atomic(self.to_csv())
        return json_path, csv_path


@dataclass
class BenchmarkResult:
    report: MetricsReport
    records: List[EvalRecord]


# ==================================================================================================== HARNESS
def _order(records: List[EvalRecord], modes: Sequence[ModeSpec], items: Sequence[QueryItem]) -> List[EvalRecord]:
    mode_index = {spec.label: i for i, spec in enumerate(modes)}
    item_index = {item.id: i for i, item in enumerate(items)}
    return sorted(records, key=lambda r: (mode_index.get(r.mode_label, len(mode_index)), r.mode_label, r.model,
                                          item_index.get(r.item.id, len(item_index)), r.item.id))


def evaluate_one(item: QueryItem, spec: ModeSpec, model_name: str, client: ChatModel, judges: Dict[str, ChatModel],
                 stores: StoreSet | None, embedder: EmbeddingProvider | None, templates: PromptTemplates,
                 meter: EnergyMeter, k: int = 5, judge_workers: int = 1,
                 clock: Callable[[], float] = time.perf_counter) -> EvalRecord:
    config = spec.agent_config(k)
    with meter.measure() as measurement:
        try:
            record = run_pipeline(item.query, config, client, stores, embedder, templates, clock)
        except IndexRequired:
            raise
        except MiniMPEGException as e:
            logger.error('query %s could not be answered: %s', item.id, e.message)
            record = AnswerRecord(query=item.query, mode=config.mode, model=client.model_name, i_max=config.i_max,
                                  template_hash=templates.digest, failed_stage='pipeline', error=e.message)
    energy = meter.estimate(record.inference_time, measurement)

    if record.failed and not record.answer:
        # no answer to judge
        verdicts = {name: JudgeVerdict.INCORRECT for name in judges}
    else:
        verdicts = judge_all(judges, item.query, record.answer, templates, judge_workers)

    return EvalRecord(item, spec.label, model_name, record, verdicts, energy)


def run_benchmark(items: Sequence[QueryItem],
                  modes: Sequence[ModeSpec],
                  models: Dict[str, ChatModel],
                  judges: Dict[str, ChatModel],
                  stores: StoreSet | None = None,
                  embedder: EmbeddingProvider | None = None,
                  meter: EnergyMeter | None = None,
                  log_path: str | Path | None = None,
                  resume: bool = False,
                  k: int = 5,
                  templates: PromptTemplates | None = None,
                  judge_workers: int = 1,
                  taxonomy: CategoryTaxonomy | None = None,
                  clock: Callable[[], float] = time.perf_counter
                  ) -> BenchmarkResult:
    """
    Runs every mode with every model over the items. Per-query failures are recorded, never raised.

    :param models: chat clients by the name written to the report
    :param judges: judge clients by name; may be empty (accuracy is then absent)
    :param log_path: the checkpoint log; without it nothing is persisted and resume is impossible
    :param clock: measures the retrieval time of each query
    """

    templates = templates or PromptTemplates()
    meter = meter or EnergyMeter(source='none')
    log = CheckpointLog(log_path) if log_path is not None else None

    records: List[EvalRecord] = list()
    if log is not None:
        if resume:
            records = log.read()
            logger.info('resuming: %d records already in %s', len(records), log.path)
        else:
            log.clear()
    done = {r.key for r in records}

    for spec in modes:
        for model_name in sorted(models):
            client = models[model_name]
            for item in items:
                if (spec.label, model_name, item.id) in done:
                    continue
                logger.info('%s / %s / %s', spec.label, model_name, item.id)
                evaluated = evaluate_one(item, spec, model_name, client, judges, stores, embedder, templates, meter, k,
                                         judge_workers, clock)
                records.append(evaluated)
                done.add(evaluated.key)
                if log is not None:
                    log.append(evaluated)

    ordered = _order(records, modes, items)
    report = MetricsReport.from_records(ordered, [spec.label for spec in modes], taxonomy)

    return BenchmarkResult(report, ordered)
