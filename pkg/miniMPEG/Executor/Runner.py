"""
Runs validated commands. The process is spawned directly from argv (never through a shell) inside a fresh run
directory:

    <workdir>/runs/<timestamp>/
        input.mp4 -> <workdir>/input.mp4     inputs, symbolically linked (copied where links are not possible)
        output.mp4                           whatever the command writes
        run.json                             argv, status, exit code, timings, output files

A command that fails is a result, not an exception: the status tells what happened.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, List, Tuple

from miniMPEG.Executor.ExecutorExceptions import WorkdirMissing
from miniMPEG.Executor.Policy import ExecutionPolicy, ValidatedCommand, resolve_inside
from miniMPEG.Utilities.File import File


logger = logging.getLogger(__name__)

TAIL_CHARS = 4000
MISSING_EXIT_CODE = 127
TIMEOUT_EXIT_CODE = -9


class ExecutionStatus(str, Enum):
    OK = 'Ok'
    NON_ZERO_EXIT = 'NonZeroExit'
    TIMEOUT = 'Timeout'
    BINARY_MISSING = 'BinaryMissing'
    DRY_RUN = 'DryRun'


@dataclass(frozen=True)
class ExecutionResult:
    argv: Tuple[str, ...]
    status: ExecutionStatus
    exit_code: int
    stdout_tail: str = ''
    stderr_tail: str = ''
    duration: float = 0.0
    outputs: Tuple[str, ...] = field(default_factory=tuple)  # created files
    run_dir: str | None = None

    @property
    def ok(self) -> bool:
        return self.status in (ExecutionStatus.OK, ExecutionStatus.DRY_RUN)

    def to_dict(self) -> dict:
        return {'argv': list(self.argv), 'status': self.status.value, 'exit_code': self.exit_code,
                'stdout_tail': self.stdout_tail, 'stderr_tail': self.stderr_tail, 'duration': self.duration,
                'outputs': list(self.outputs), 'run_dir': self.run_dir}


def _tail(data: bytes | str | None) -> str:
    if data is None:
        return ''
    text = data.decode('utf-8', errors='replace') if isinstance(data, bytes) else data
    return text[-TAIL_CHARS:]


def resolve_binary(validated: ValidatedCommand, policy: ExecutionPolicy) -> str | None:
    configured = policy.binaries.get(validated.program)
    if configured:
        path = Path(configured).expanduser()
        return str(path) if path.exists() else None
    # the command may name the program by path; only the allowed name is looked up
    return shutil.which(validated.program.value)


def _new_run_dir(workdir: Path) -> Path:
    stamp = datetime.now(timezone.utc).strftime('%Y%m%dT%H%M%S_%fZ')
    run_dir = workdir / 'runs' / stamp
    suffix = 0
    while run_dir.exists():
        suffix += 1
        run_dir = workdir / 'runs' / f'{stamp}-{suffix}'
    run_dir.mkdir(parents=True)
    return run_dir


def _link_inputs(validated: ValidatedCommand, workdir: Path, run_dir: Path) -> None:
    for written in validated.inputs:
        if Path(written).is_absolute():
            continue
        source = resolve_inside(written, workdir)
        if source is None or not source.exists():
            continue
        target = run_dir / source.relative_to(workdir)
        if target.exists() or target == run_dir:
            continue
        target.parent.mkdir(parents=True, exist_ok=True)
        try:
            os.symlink(source, target, target_is_directory=source.is_dir())
        except OSError:
            if source.is_dir():
                shutil.copytree(source, target)
            else:
                shutil.copy2(source, target)


def _prepare_outputs(validated: ValidatedCommand, run_dir: Path) -> None:
    for written in validated.outputs:
        if not Path(written).is_absolute():
            (run_dir / written).parent.mkdir(parents=True, exist_ok=True)


def _created_outputs(validated: ValidatedCommand, run_dir: Path) -> List[str]:
    created = list()
    for written in validated.outputs:
        path = Path(written) if Path(written).is_absolute() else run_dir / written
        if path.exists() and not path.is_symlink():
            created.append(str(path))
    return created


def _record(run_dir: Path, result: ExecutionResult, binary: str, started_at: str) -> None:
    record = result.to_dict()
    record.update({'binary': binary, 'started_at': started_at})
    File().bind(run_dir / 'run.json').write_atomic(json.dumps(record, indent=2, sort_keys=True))


def execute(validated: ValidatedCommand,
            policy: ExecutionPolicy,
            dry_run: bool = False,
            clock: Callable[[], float] = time.perf_counter
            ) -> ExecutionResult:
    argv = validated.argv
    if dry_run:
        logger.info('dry run: %s', validated.command.command_line)
        return ExecutionResult(argv, ExecutionStatus.DRY_RUN, 0)

    if not policy.workdir.is_dir():
        raise WorkdirMissing(str(policy.workdir), variables={'argv': argv})

    binary = resolve_binary(validated, policy)
    if binary is None:
        logger.error('%s is not installed (or not at the configured path)', validated.program.value)
        return ExecutionResult(argv, ExecutionStatus.BINARY_MISSING, MISSING_EXIT_CODE,
                               stderr_tail=f'{validated.program.value}: binary not found')

    run_dir = _new_run_dir(policy.workdir)
    _link_inputs(validated, policy.workdir, run_dir)
    _prepare_outputs(validated, run_dir)
    started_at = datetime.now(timezone.utc).isoformat()
    logger.info('running %s in %s', validated.command.command_line, run_dir)

    started = clock()
    try:
        process = subprocess.run([binary, *argv[1:]], cwd=run_dir, stdin=subprocess.DEVNULL, capture_output=True,
                                 timeout=policy.timeout, shell=False)
    except subprocess.TimeoutExpired as e:
        result = ExecutionResult(argv, ExecutionStatus.TIMEOUT, TIMEOUT_EXIT_CODE, _tail(e.stdout), _tail(e.stderr),
                                 max(0.0, clock() - started), (), str(run_dir))
    except FileNotFoundError as e:
        result = ExecutionResult(argv, ExecutionStatus.BINARY_MISSING, MISSING_EXIT_CODE, '', str(e),
                                 max(0.0, clock() - started), (), str(run_dir))
    else:
        duration = max(0.0, clock() - started)
        status = ExecutionStatus.OK if process.returncode == 0 else ExecutionStatus.NON_ZERO_EXIT
        outputs = tuple(_created_outputs(validated, run_dir)) if process.returncode == 0 else ()
        result = ExecutionResult(argv, status, process.returncode, _tail(process.stdout), _tail(process.stderr),
                                 duration, outputs, str(run_dir))

    _record(run_dir, result, binary, started_at)
    logger.info('%s finished: %s (exit %d, %.2fs)', validated.program.value, result.status.value, result.exit_code,
                result.duration)
    return result
