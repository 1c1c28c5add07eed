"""
The command-line interface:

    minimpeg index [--full]                      split, embed and store the documentation corpus
    minimpeg ask "query" [--mode M] [--execute]  answer a query (and run the command after confirmation)
    minimpeg run FILE [--yes]                    run the commands of a file
    minimpeg eval [DATASET] [--modes ...]        run the benchmark and write the report

Exit codes: 0 success, 1 unexpected error, 2 usage, 3 configuration, 4 index missing, 5 model server unreachable,
6 command rejected by the safety checks, 7 command failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Sequence, TextIO, Tuple

from miniMPEG.Agent.Pipeline import AgentConfig, AnswerRecord, Mode, run_pipeline
from miniMPEG.Config import AppConfig
from miniMPEG.Corpus.CorpusExceptions import CorpusRootMissing
from miniMPEG.Corpus.Ingest import discover_corpus
from miniMPEG.Evaluation.Benchmark import CheckpointLog, MetricsReport, ModeSpec, run_benchmark, sweep
from miniMPEG.Evaluation.Dataset import load_dataset
from miniMPEG.Evaluation.EvaluationExceptions import InvalidModeSpec
from miniMPEG.Executor.ExecutorExceptions import CommandFileMissing, CommandRejected, ExecutionFailed, NoCommandFound
from miniMPEG.Executor.Extractor import ExtractedCommand, extract_commands_with_diagnostics
from miniMPEG.Executor.Policy import ExecutionPolicy, Rejection, ValidatedCommand, validate
from miniMPEG.Executor.Runner import ExecutionResult, execute
from miniMPEG.MiniMPEGException import MiniMPEGException
from miniMPEG.Retrieval.Embedding import EmbeddingProvider
from miniMPEG.Retrieval.Index import index_exists, load_index, update_index
from miniMPEG.Retrieval.RetrievalExceptions import IndexMissing
from miniMPEG.Retrieval.VectorStore import StoreSet


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_TRANSPORT = 5
SAMPLE_DATASET = Path(__file__).parent / 'Evaluation' / 'Data' / 'sample_queries.jsonl'


# ===================================================================================================== HELPERS
def _retrieval(config: AppConfig) -> Tuple[StoreSet, EmbeddingProvider]:
    index_dir = Path(config.retrieval.index_dir)
    if not index_exists(index_dir):
        raise IndexMissing(str(index_dir), variables={'config_index_dir': config.retrieval.index_dir})
    embedder = config.retrieval.embedder()
    embedder.check_determinism()
    return load_index(index_dir, embedder.dimension), embedder


def _confirm(command: ExtractedCommand, out: TextIO) -> bool:
    print(f'Run "{command.command_line}"? [y/N] ', end='', file=out, flush=True)
    try:
        reply = input()
    except EOFError:
        return False
    return reply.strip().lower() in ('y', 'yes')


def _describe(checked: ValidatedCommand | Rejection) -> str:
    if checked.accepted:
        return 'accepted'
    return f'rejected: {checked.reason.value} ({checked.detail})'


def _print_result(result: ExecutionResult, out: TextIO) -> None:
    print(f'  -> {result.status.value} (exit code {result.exit_code}, {result.duration:.2f}s)', file=out)
    for output in result.outputs:
        print(f'     wrote {output}', file=out)
    if not result.ok and result.stderr_tail:
        print('     ' + result.stderr_tail.strip().replace('\n', '\n     '), file=out)
    if result.run_dir:
        print(f'     run record: {Path(result.run_dir) / "run.json"}', file=out)


def _execute_all(commands: Sequence[ValidatedCommand], policy: ExecutionPolicy, dry_run: bool, yes: bool,
                 out: TextIO | None = None) -> int:
    """Runs the commands in order; progress goes to out (stdout unless given)."""

    out = out or sys.stdout
    for validated in commands:
        if not dry_run and not yes and not _confirm(validated.command, out):
            print(f'skipped: {validated.command.command_line}', file=out)
            continue
        print(f'$ {validated.command.command_line}', file=out)
        result = execute(validated, policy, dry_run=dry_run)
        _print_result(result, out)
        if not result.ok:
            raise ExecutionFailed(validated.command.raw_line, result.status.value, result.exit_code,
                                  variables={'run_dir': result.run_dir})
    return EXIT_OK


# ==================================================================================================== COMMANDS
def cmd_index(config: AppConfig, args: argparse.Namespace) -> int:
    root = Path(config.corpus.root)
    if not root.is_dir():
        raise CorpusRootMissing(str(root), variables={'pattern': config.corpus.pattern})

    embedder = config.retrieval.embedder()
    embedder.check_determinism()
    paths = discover_corpus(root, config.corpus.pattern)
    summary = update_index(paths, config.corpus.mapping(), config.chunking, embedder,
                           Path(config.retrieval.index_dir), full=args.full)

    for error in summary.errors:
        print(f'skipped {error}', file=sys.stderr)
    if not summary.rebuilt:
        print(f'no changes; index up to date ({summary.total_chunks} chunks)')
        return EXIT_OK

    changes = summary.changes
    print(f'{len(paths)} files: {len(changes.added)} added, {len(changes.modified)} modified, '
          f'{len(changes.removed)} removed, {len(changes.unchanged)} unchanged')
    for tool, size in summary.store_sizes.items():
        print(f'{tool} store: {size} chunks')
    print(f'total: {summary.total_chunks} chunks in {config.retrieval.index_dir}')
    return EXIT_OK


def cmd_ask(config: AppConfig, args: argparse.Namespace) -> int:
    mode = Mode.parse(args.mode or config.agent.mode)
    agent_config = AgentConfig(i_max=args.imax if args.imax is not None else config.agent.i_max,
                               k=config.retrieval.k, mode=mode)
    stores, embedder = _retrieval(config) if mode is not Mode.BASE else (None, None)

    record = run_pipeline(args.query, agent_config, config.agent.client(), stores, embedder)
    commands, diagnostics = extract_commands_with_diagnostics(record.answer)
    policy = config.executor.policy()
    checked = [validate(c, policy) for c in commands]

    if args.json:
        print(record.to_json(indent=2))
    else:
        _print_record(record, commands, checked)
        for d in diagnostics:
            print(f'  (line {d.line_number} skipped: {d.reason})')

    if record.failed:
        print(f'failed at {record.failed_stage}: {record.error}', file=sys.stderr)
        return EXIT_TRANSPORT
    if not args.execute:
        return EXIT_OK

    if not commands:
        raise NoCommandFound('the answer', variables={'answer': record.answer[:200]})
    selected = checked if args.all else checked[:1]
    for c in selected:
        if not c.accepted:
            raise CommandRejected(c.command.raw_line, c.reason.value, c.detail, variables={})
    # the JSON record alone stays on stdout
    return _execute_all(selected, policy, args.dry_run, args.yes, out=sys.stderr if args.json else None)


def _print_record(record: AnswerRecord, commands: List[ExtractedCommand], checked: list) -> None:
    print(f'Mode: {record.mode.value}   Tool: {record.tool.value}   Model calls: {record.llm_calls}')
    print()
    print(record.answer.strip())
    print()
    if commands:
        print('Commands:')
        for position, (command, check) in enumerate(zip(commands, checked), start=1):
            print(f'  [{position}] {command.command_line}   {_describe(check)}')
    else:
        print('Commands: none found')
    if record.retrieved:
        print('Sources:')
        for rank, scored in enumerate(record.retrieved, start=1):
            m = scored.chunk.metadata
            print(f'  [{rank}] {m.source_file}, chunk {m.chunk_index} (distance {scored.distance:.4f})')
    if record.feedback_trail:
        print('Review: ' + ' -> '.join(f.verdict.value for f in record.feedback_trail))


def cmd_run(config: AppConfig, args: argparse.Namespace) -> int:
    path = Path(args.file)
    if not path.is_file():
        raise CommandFileMissing(str(path), variables={'cwd': str(Path.cwd())})
    text = path.read_text(encoding='utf-8')
    commands, diagnostics = extract_commands_with_diagnostics(text, in_code_block=True)
    for d in diagnostics:
        print(f'line {d.line_number} skipped: {d.reason}', file=sys.stderr)
    if not commands:
        raise NoCommandFound(f'"{path}"', variables={'size': len(text)})

    policy = config.executor.policy()
    checked = [validate(c, policy) for c in commands]
    for c in checked:
        print(f'{c.command.command_line}   {_describe(c)}')
    for c in checked:
        # nothing runs unless every command of the file passes
        if not c.accepted:
            raise CommandRejected(c.command.raw_line, c.reason.value, c.detail, variables={'file': str(path)})
    return _execute_all(checked, policy, args.dry_run, args.yes)


def _parse_sweep(text: str) -> List[int]:
    try:
        if '..' in text:
            low, high = text.split('..', 1)
            return list(range(int(low), int(high) + 1))
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise InvalidModeSpec(f'full:{text}', variables={'imax_sweep': text})


def _mode_specs(config: AppConfig, args: argparse.Namespace) -> List[ModeSpec]:
    names = args.modes.split(',') if args.modes else list(config.evaluation.modes)
    specs = [ModeSpec.parse(name, config.agent.i_max) for name in names if name.strip()]
    i_values = _parse_sweep(args.imax_sweep) if args.imax_sweep else list(config.evaluation.imax_sweep)
    if i_values:
        specs = [s for s in specs if s.mode is not Mode.FULL] + sweep(i_values)
    return list(dict.fromkeys(specs))


def cmd_eval(config: AppConfig, args: argparse.Namespace) -> int:
    dataset = Path(args.dataset or config.evaluation.dataset or SAMPLE_DATASET)
    items = load_dataset(dataset)
    specs = _mode_specs(config, args)
    stores, embedder = (_retrieval(config) if any(s.mode is not Mode.BASE for s in specs) else (None, None))

    output_dir = Path(args.output or config.evaluation.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    log_path = output_dir / 'records.jsonl'
    labels = [s.label for s in specs]

    try:
        result = run_benchmark(items, specs, config.chat_clients(), config.judge_clients(), stores, embedder,
                               meter=config.evaluation.meter(), log_path=log_path, resume=args.resume,
                               k=config.retrieval.k, judge_workers=config.evaluation.judge_workers)
    except BaseException:
        # keep what was done so far
        if log_path.exists():
            MetricsReport.from_records(CheckpointLog(log_path).read(), labels).write(output_dir)
            logger.error('benchmark interrupted; partial report written to %s', output_dir)
        raise

    json_path, csv_path = result.report.write(output_dir)
    print(f'{len(result.records)} records for {len(items)} queries, {len(specs)} mode(s)')
    print(f'report: {json_path}, {csv_path}')
    print(f'records: {log_path}')
    for row in result.report.rows():
        if row['category'] == 'ALL':
            accuracy = 'n/a' if row['accuracy'] is None else f'{row["accuracy"]:.1f}%'
            print(f'  {row["mode"]:<12} {row["model"]:<20} {row["judge"]:<10} accuracy {accuracy:>7}   '
                  f'calls {row["mean_llm_calls"]:.2f}')
    return EXIT_OK


# ===================================================================================================== PARSER
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='minimpeg', description='FFmpeg and VVenC commands from plain questions.')
    parser.add_argument('-c', '--config', help='YAML configuration file (defaults when left out)')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='debug output')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='errors only')
    sub = parser.add_subparsers(dest='command', required=True)

    index = sub.add_parser('index', help='build or update the vector stores')
    index.add_argument('--full', action='store_true', help='rebuild everything, ignoring the manifest')
    index.set_defaults(func=cmd_index)

    ask = sub.add_parser('ask', help='answer a query')
    ask.add_argument('query')
    ask.add_argument('--mode', choices=['base', 'rag', 'full'], type=str.lower)
    ask.add_argument('--imax', type=int, help='maximal number of reflection iterations')
    ask.add_argument('--execute', action='store_true', help='run the first extracted command')
    ask.add_argument('--all', action='store_true', help='with --execute: run every extracted command')
    ask.add_argument('--yes', action='store_true', help='do not ask before running')
    ask.add_argument('--dry-run', action='store_true', help='validate but do not start any process')
    ask.add_argument('--json', action='store_true', help='print the answer record as JSON')
    ask.set_defaults(func=cmd_ask)

    run = sub.add_parser('run', help='run the commands of a file')
    run.add_argument('file')
    run.add_argument('--yes', action='store_true')
    run.add_argument('--dry-run', action='store_true')
    run.set_defaults(func=cmd_run)

    evaluate = sub.add_parser('eval', help='run the benchmark')
    evaluate.add_argument('dataset', nargs='?', help='JSONL dataset (the sample dataset by default)')
    evaluate.add_argument('--modes', help='comma-separated: base, rag, full or full:N')
    evaluate.add_argument('--imax-sweep', help='reflection limits of the Full mode, "1..4" or "1,2,4"')
    evaluate.add_argument('--resume', action='store_true', help='continue the run recorded in the output directory')
    evaluate.add_argument('--output', help='output directory')
    evaluate.set_defaults(func=cmd_eval)

    return parser


def _setup_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr, force=True)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args)

    try:
        config = AppConfig.load(args.config)
        return args.func(config, args)
    except MiniMPEGException as e:
        print(e, file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print('interrupted', file=sys.stderr)
        return EXIT_UNEXPECTED
    except Exception:
        logger.exception('unexpected error')
        return EXIT_UNEXPECTED


def cli() -> None:
    sys.exit(main())


if __name__ == '__main__':
    cli()
