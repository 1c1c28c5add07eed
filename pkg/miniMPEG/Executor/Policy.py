"""
Safety checks for extracted commands, run before anything is executed:

    EmptyArgv            nothing to run;
    ProgramNotAllowed    argv[0] is not ffmpeg, ffprobe, ffplay, vvencapp or vvencFFapp;
    ShellMetacharacter   an argument contains ; | & ` $ < or > (the command is rejected, never cleaned up);
    PathEscape           a file argument resolves outside the work directory, or names a protocol (file:, http:...).

The file arguments are found per program. For ffmpeg the values of -i are inputs and the positional arguments are
outputs. Options are looked up in a table of known flags and of known options with a non-file value; the value of any
other option is not trusted and is checked like a file. Files named inside filter strings are not inspected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, List, Tuple

from miniMPEG.Executor.Extractor import ExtractedCommand, Program


SHELL_METACHARACTERS = frozenset(';|&`$<>')
PROTOCOL = re.compile(r'^[A-Za-z][A-Za-z0-9+.-]*:')

FFMPEG_FLAGS = frozenset({
    '-y', '-n', '-hide_banner', '-nostdin', '-stdin', '-stats', '-nostats', '-an', '-vn', '-sn', '-dn', '-shortest',
    '-re', '-copyts', '-start_at_zero', '-benchmark', '-benchmark_all', '-ignore_unknown', '-copy_unknown',
    '-accurate_seek', '-noaccurate_seek', '-dump', '-hex', '-report', '-debug_ts', '-autorotate', '-noautorotate',
    '-xerror', '-psnr', '-vstats', '-qphist',
})
FFPROBE_FLAGS = frozenset({
    '-hide_banner', '-pretty', '-unit', '-prefix', '-byte_binary_prefix', '-sexagesimal', '-bitexact',
    '-count_frames', '-count_packets', '-show_data', '-show_error', '-show_format', '-show_frames', '-show_packets',
    '-show_programs', '-show_streams', '-show_chapters', '-show_private_data', '-show_program_version',
    '-show_library_versions', '-show_versions', '-show_pixel_formats', '-show_data_hash',
})
FFPLAY_FLAGS = frozenset({
    '-hide_banner', '-fs', '-an', '-vn', '-sn', '-nodisp', '-noborder', '-alwaysontop', '-autoexit', '-exitonkeydown',
    '-exitonmousedown', '-stats', '-nostats', '-fast', '-genpts', '-infbuf', '-framedrop', '-noframedrop',
})
# options of the ffmpeg family whose value is never a file (stream specifiers stripped: -c:v is -c)
VALUE_OPTIONS = frozenset({
    '-vf', '-af', '-filter', '-filter_complex', '-lavfi', '-metadata', '-c', '-codec', '-vcodec', '-acodec',
    '-scodec', '-b', '-crf', '-qp', '-q', '-qscale', '-preset', '-tune', '-profile', '-level', '-s', '-r', '-ss',
    '-sseof', '-t', '-to', '-f', '-map', '-map_metadata', '-map_chapters', '-pix_fmt', '-aspect', '-ar', '-ac', '-g',
    '-threads', '-loglevel', '-v', '-frames', '-vframes', '-aframes', '-bsf', '-tag', '-disposition', '-itsoffset',
    '-fs', '-maxrate', '-minrate', '-bufsize', '-sample_fmt', '-channel_layout', '-vsync', '-fps_mode',
    '-stream_loop', '-loop', '-framerate', '-video_size', '-pass', '-hwaccel', '-movflags', '-x264-params',
    '-x265-params', '-x264opts', '-timecode', '-keyint_min', '-sc_threshold', '-color_primaries', '-color_trc',
    '-colorspace', '-color_range', '-pattern_type', '-start_number', '-max_muxing_queue_size', '-probesize',
    '-analyzeduration', '-show_entries', '-of', '-print_format', '-select_streams', '-read_intervals', '-x',
    '-window_title', '-volume', '-sync', '-showmode', '-seek_interval', '-left', '-top',
})
# options whose value is a file written (or read) by ffmpeg
FFMPEG_FILE_OPTIONS = frozenset({'-passlogfile', '-vstats_file', '-filter_script', '-filter_complex_script',
                                 '-attach', '-sdp_file', '-dump_attachment'})

VVENCAPP_INPUTS = frozenset({'-i', '--input'})
VVENCAPP_OUTPUTS = frozenset({'-o', '--output'})
VVENCFFAPP_INPUTS = frozenset({'-i', '--InputFile', '-c'})
VVENCFFAPP_OUTPUTS = frozenset({'-b', '--BitstreamFile', '-o', '--ReconFile'})

DEFAULT_ALLOWLIST: FrozenSet[Program] = frozenset(Program)


class RejectionReason(str, Enum):
    PROGRAM_NOT_ALLOWED = 'ProgramNotAllowed'
    SHELL_METACHARACTER = 'ShellMetacharacter'
    PATH_ESCAPE = 'PathEscape'
    EMPTY_ARGV = 'EmptyArgv'


@dataclass(frozen=True)
class ExecutionPolicy:
    workdir: Path
    allowlist: FrozenSet[Program] = DEFAULT_ALLOWLIST
    binaries: Dict[Program, str] = field(default_factory=dict)  # explicit binary paths; others are looked up on PATH
    timeout: float = 300.0

    def __post_init__(self):
        object.__setattr__(self, 'workdir', Path(self.workdir).expanduser().resolve())
        object.__setattr__(self, 'allowlist', frozenset(self.allowlist))


@dataclass(frozen=True)
class Rejection:
    command: ExtractedCommand
    reason: RejectionReason
    detail: str

    accepted = False


@dataclass(frozen=True)
class ValidatedCommand:
    command: ExtractedCommand
    inputs: Tuple[str, ...]  # arguments as written
    outputs: Tuple[str, ...]

    accepted = True

    @property
    def program(self) -> Program:
        return self.command.program

    @property
    def argv(self) -> Tuple[str, ...]:
        return self.command.argv


@dataclass
class ArgumentScan:
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    unclassified: List[str] = field(default_factory=list)  # values of options missing from the tables

    def confined(self) -> List[str]:
        return [p for p in self.inputs + self.outputs + self.unclassified if p != '-']


def _split_long(token: str) -> Tuple[str, str | None]:
    if token.startswith('--') and '=' in token:
        option, value = token.split('=', 1)
        return option, value
    return token, None


def _is_option(token: str) -> bool:
    return token.startswith('-') and len(token) > 1


def _ffmpeg_family_scan(argv: Tuple[str, ...], flags: FrozenSet[str], positional_is_output: bool) -> ArgumentScan:
    scan = ArgumentScan()
    last = len(argv) - 1
    i = 1
    while i <= last:
        token = argv[i]
        if not _is_option(token):
            (scan.outputs if positional_is_output else scan.inputs).append(token)
            i += 1
            continue

        base = token.split(':', 1)[0]
        if token in flags or base in flags or i == last:
            i += 1
            continue
        value = argv[i + 1]
        if base == '-i':
            scan.inputs.append(value)
        elif base in FFMPEG_FILE_OPTIONS:
            scan.outputs.append(value)
        elif base in VALUE_OPTIONS:
            pass
        elif _is_option(value) or (positional_is_output and i + 1 == last):
            # unknown flag: the next token is not its value
            i += 1
            continue
        else:
            scan.unclassified.append(value)
        i += 2
    return scan


def _vvenc_scan(argv: Tuple[str, ...], input_options: FrozenSet[str], output_options: FrozenSet[str]) -> ArgumentScan:
    scan = ArgumentScan()
    i = 1
    while i < len(argv):
        option, value = _split_long(argv[i])
        step = 1
        if not _is_option(option):
            scan.unclassified.append(option)
        elif value is None and i + 1 < len(argv) and not _is_option(argv[i + 1]):
            value = argv[i + 1]
            step = 2

        if value is not None:
            if option in input_options:
                scan.inputs.append(value)
            elif option in output_options:
                scan.outputs.append(value)
            else:
                scan.unclassified.append(value)
        i += step
    return scan


def scan_arguments(command: ExtractedCommand) -> ArgumentScan:
    argv = command.argv
    program = command.program
    if program is Program.FFMPEG:
        return _ffmpeg_family_scan(argv, FFMPEG_FLAGS, positional_is_output=True)
    if program is Program.FFPROBE:
        return _ffmpeg_family_scan(argv, FFPROBE_FLAGS, positional_is_output=False)
    if program is Program.FFPLAY:
        return _ffmpeg_family_scan(argv, FFPLAY_FLAGS, positional_is_output=False)
    if program is Program.VVENCAPP:
        return _vvenc_scan(argv, VVENCAPP_INPUTS, VVENCAPP_OUTPUTS)
    if program is Program.VVENCFFAPP:
        return _vvenc_scan(argv, VVENCFFAPP_INPUTS, VVENCFFAPP_OUTPUTS)
    return ArgumentScan()


def file_arguments(command: ExtractedCommand) -> Tuple[List[str], List[str]]:
    """(inputs, outputs) named by the command, as written. '-' (standard stream) is left out."""

    scan = scan_arguments(command)
    return [p for p in scan.inputs if p != '-'], [p for p in scan.outputs if p != '-']


def resolve_inside(path: str, workdir: Path) -> Path | None:
    """The resolved path, or None if it leaves the work directory (symbolic links followed) or names a protocol."""

    if '://' in path or PROTOCOL.match(path):
        return None
    candidate = Path(path).expanduser()
    resolved = (candidate if candidate.is_absolute() else workdir / candidate).resolve()
    return resolved if resolved == workdir or resolved.is_relative_to(workdir) else None


def validate(command: ExtractedCommand, policy: ExecutionPolicy) -> ValidatedCommand | Rejection:
    argv = command.argv
    if not argv or not argv[0]:
        return Rejection(command, RejectionReason.EMPTY_ARGV, 'the command has no program')

    if command.program is None or command.program not in policy.allowlist:
        return Rejection(command, RejectionReason.PROGRAM_NOT_ALLOWED, f'"{argv[0]}" is not an allowed program')

    for token in argv:
        found = sorted(set(token) & SHELL_METACHARACTERS)
        if found:
            return Rejection(command, RejectionReason.SHELL_METACHARACTER,
                             f'argument {token!r} contains {"".join(found)!r}')

    scan = scan_arguments(command)
    for path in scan.confined():
        if resolve_inside(path, policy.workdir) is None:
            return Rejection(command, RejectionReason.PATH_ESCAPE, f'{path!r} is outside {policy.workdir}')

    inputs, outputs = file_arguments(command)
    return ValidatedCommand(command, tuple(inputs), tuple(outputs))
