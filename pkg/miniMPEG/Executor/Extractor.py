"""
Finds command lines in the free text a model answers with.

Candidates are
    - every line inside a fenced code block (``` or ~~~), except '#' comments; a leading '$ ' prompt is ignored;
    - lines outside code blocks that start with an allowed program and contain an option (a word starting with -);
    - inline code spans (`...`) under the same condition.
A line ending with a backslash continues on the next line. Everything else is explanation and is discarded.

Lines are tokenized POSIX style with shlex: double quotes keep spaces, single quotes are literal, a backslash escapes
the next character, and nothing is expanded. A candidate whose quotes do not close is skipped and reported in the
diagnostics.
"""

from __future__ import annotations

import logging
import re
import shlex
from dataclasses import dataclass
from enum import Enum
from pathlib import PurePosixPath
from typing import List, Tuple


logger = logging.getLogger(__name__)

FENCE = re.compile(r'^\s*(```|~~~)')
INLINE_CODE = re.compile(r'`([^`\n]+)`')
PROMPT = re.compile(r'^\$\s+')
CONTINUATION = re.compile(r'\\[ \t]*\r?\n')


class Program(str, Enum):
    FFMPEG = 'ffmpeg'
    FFPROBE = 'ffprobe'
    FFPLAY = 'ffplay'
    VVENCAPP = 'vvencapp'
    VVENCFFAPP = 'vvencFFapp'

    @classmethod
    def lookup(cls, token: str) -> Program | None:
        """Program named by the first token, also when written as a path or with .exe. None if not allowed."""

        name = PurePosixPath(token.replace('\\', '/')).name
        if name.lower().endswith('.exe'):
            name = name[:-4]
        for program in cls:
            if program.value == name:
                return program
        return None


@dataclass(frozen=True)
class ExtractedCommand:
    raw_line: str
    program: Program | None  # None when argv[0] is not an allowed program; validation rejects such commands
    argv: Tuple[str, ...]
    source_span: Tuple[int, int]  # answer[start:end] == raw_line

    @property
    def command_line(self) -> str:
        return shlex.join(self.argv)

    def to_dict(self) -> dict:
        return {'raw_line': self.raw_line, 'program': self.program.value if self.program else None,
                'argv': list(self.argv), 'source_span': list(self.source_span)}


@dataclass(frozen=True)
class Diagnostic:
    line_number: int  # 1-based
    text: str
    reason: str


def tokenize(line: str) -> List[str]:
    """POSIX-style split of one (possibly continued) command line. Raises ValueError on unbalanced quotes."""
    return shlex.split(CONTINUATION.sub(' ', line), comments=False, posix=True)


def _looks_like_command(text: str) -> bool:
    """Outside code blocks: an allowed program followed by at least one option."""
    words = text.split()
    return bool(words) and Program.lookup(words[0]) is not None and any(w.startswith('-') for w in words[1:])


class _Candidate:
    def __init__(self, start: int, end: int, line_number: int) -> None:
        self.start = start
        self.end = end
        self.line_number = line_number


def _lines(answer: str) -> List[Tuple[int, int, str]]:
    """(start offset, line number, text without the newline) for every line."""

    result = list()
    offset = 0
    for number, line in enumerate(answer.split('\n'), start=1):
        result.append((offset, number, line.rstrip('\r')))
        offset += len(line) + 1
    return result


def _candidates(answer: str, in_code_block: bool = False) -> List[_Candidate]:
    lines = _lines(answer)
    candidates: List[_Candidate] = list()
    in_fence = in_code_block
    i = 0

    while i < len(lines):
        offset, number, text = lines[i]
        i += 1

        if FENCE.match(text):
            in_fence = not in_fence
            continue

        stripped = text.lstrip()
        lead = len(text) - len(stripped)
        prompt = PROMPT.match(stripped)
        if prompt:
            lead += prompt.end()
            stripped = stripped[prompt.end():]

        if in_fence:
            is_candidate = bool(stripped.strip()) and not stripped.startswith('#')
        else:
            is_candidate = _looks_like_command(stripped)

        if not is_candidate:
            if not in_fence:
                for match in INLINE_CODE.finditer(text):
                    code = match.group(1).strip()
                    if _looks_like_command(code):
                        start = offset + match.start(1) + (len(match.group(1)) - len(match.group(1).lstrip()))
                        candidates.append(_Candidate(start, start + len(code), number))
            continue

        start = offset + lead
        end = offset + len(text.rstrip())
        # continuation lines
        while text.rstrip().endswith('\\') and i < len(lines) and not FENCE.match(lines[i][2]):
            offset, _, text = lines[i]
            i += 1
            end = offset + len(text.rstrip())

        candidates.append(_Candidate(start, end, number))

    return sorted(candidates, key=lambda c: c.start)


def extract_commands_with_diagnostics(answer: str, in_code_block: bool = False
                                      ) -> Tuple[List[ExtractedCommand], List[Diagnostic]]:
    """:param in_code_block: treat the text as the content of a code block (command files)"""

    commands: List[ExtractedCommand] = list()
    diagnostics: List[Diagnostic] = list()

    for candidate in _candidates(answer, in_code_block):
        raw_line = answer[candidate.start:candidate.end]
        try:
            argv = tokenize(raw_line)
        except ValueError as e:
            diagnostics.append(Diagnostic(candidate.line_number, raw_line, f'cannot tokenize: {e}'))
            logger.debug('skipping line %d: %s', candidate.line_number, e)
            continue

        program = Program.lookup(argv[0]) if argv else None
        commands.append(ExtractedCommand(raw_line, program, tuple(argv), (candidate.start, candidate.end)))

    return commands, diagnostics


def extract_commands(answer: str, in_code_block: bool = False) -> List[ExtractedCommand]:
    """Commands of the answer in order of appearance. See extract_commands_with_diagnostics for skipped lines."""
    return extract_commands_with_diagnostics(answer, in_code_block)[0]
