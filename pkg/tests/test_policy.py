import os
import shlex

import pytest

from miniMPEG.Executor.Extractor import ExtractedCommand, Program, extract_commands
from miniMPEG.Executor.Policy import (
    ExecutionPolicy,
    RejectionReason,
    file_arguments,
    resolve_inside,
    validate)


def command(line: str) -> ExtractedCommand:
    found, = extract_commands(line, in_code_block=True)
    return found


@pytest.fixture
def policy(workdir) -> ExecutionPolicy:
    return ExecutionPolicy(workdir)


ADVERSARIAL = [
    ('ffmpeg -i ../../etc/passwd out.mp4', RejectionReason.PATH_ESCAPE),
    ('ffmpeg -i a.mp4 out.mp4 && rm -rf /', RejectionReason.SHELL_METACHARACTER),
    ('ffmpeg -i input.mp4 output.mp4; rm -rf ~', RejectionReason.SHELL_METACHARACTER),
    ('ffmpeg -i input.mp4 "$(touch pwned).mp4"', RejectionReason.SHELL_METACHARACTER),
    ('ffmpeg -i input.mp4 -vf "drawtext=text=`id`" out.mp4', RejectionReason.SHELL_METACHARACTER),
    ('ffmpeg -i input.mp4 out.mp4 > /dev/null', RejectionReason.SHELL_METACHARACTER),
    ('curl -o input.mp4 http://example.com/video.mp4', RejectionReason.PROGRAM_NOT_ALLOWED),
    ('bash -c "ffmpeg -i input.mp4 out.mp4"', RejectionReason.PROGRAM_NOT_ALLOWED),
    ('ffmpeg -i http://example.com/video.mp4 out.mp4', RejectionReason.PATH_ESCAPE),
    ('ffmpeg -i input.mp4 /etc/cron.d/out.mp4', RejectionReason.PATH_ESCAPE),
    ('vvencapp -i in.yuv -s 1920x1080 -o ../x.266', RejectionReason.PATH_ESCAPE),
    ('vvencapp --output=../x.266 --input in.yuv', RejectionReason.PATH_ESCAPE),
    ('vvencFFapp -c ../../other/encoder.cfg -i in.yuv -b out.266', RejectionReason.PATH_ESCAPE),
    ('ffmpeg -i input.mp4 -pass 1 -passlogfile /var/tmp/stats out.mp4', RejectionReason.PATH_ESCAPE),
    ('ffmpeg -i file:/etc/passwd out.mp4', RejectionReason.PATH_ESCAPE),
    ('ffmpeg -i input.mp4 file:/tmp/escaped.mp4', RejectionReason.PATH_ESCAPE),
    ('ffmpeg -i concat:a.mp4 out.mp4', RejectionReason.PATH_ESCAPE),
    ('ffmpeg -i input.mp4 -xerror /tmp/escaped.mp4', RejectionReason.PATH_ESCAPE),
    ('ffmpeg -i input.mp4 -psnr /tmp/escaped.mp4', RejectionReason.PATH_ESCAPE),
    ('ffmpeg -i input.mp4 -frobnicate /tmp/escaped.mp4', RejectionReason.PATH_ESCAPE),
    ('ffmpeg -i input.mp4 -frobnicate /tmp/escaped.mp4 out.mp4', RejectionReason.PATH_ESCAPE),
    ('ffprobe -frobnicate /etc/passwd input.mp4', RejectionReason.PATH_ESCAPE),
    ('vvencapp -i in.yuv --frobnicate=/tmp/x.266 -o out.266', RejectionReason.PATH_ESCAPE),
    ('vvencapp -i in.yuv -o out.266 /tmp/stray.266', RejectionReason.PATH_ESCAPE),
]


@pytest.mark.parametrize('line, reason', ADVERSARIAL)
def test_adversarial_commands_are_rejected(policy, line, reason):
    verdict = validate(command(line), policy)
    assert not verdict.accepted
    assert verdict.reason is reason
    assert verdict.detail


def test_logo_overlay_is_accepted(policy):
    line = 'ffmpeg -i input.mp4 -i logo.png -filter_complex "overlay=W-w-10:H-h-10" output.mp4'
    verdict = validate(command(line), policy)
    assert verdict.accepted
    assert verdict.inputs == ('input.mp4', 'logo.png')
    assert verdict.outputs == ('output.mp4',)
    assert verdict.program is Program.FFMPEG
    assert verdict.argv == command(line).argv


def test_flags_do_not_swallow_files(policy):
    verdict = validate(command('ffmpeg -y -hide_banner -i input.mp4 -c:v libx264 -crf 23 -an output.mp4'), policy)
    assert verdict.inputs == ('input.mp4',)
    assert verdict.outputs == ('output.mp4',)


def test_ffprobe_positional_is_input(policy):
    verdict = validate(command('ffprobe -v error -show_streams output.mp4'), policy)
    assert verdict.accepted
    assert verdict.inputs == ('output.mp4',)
    assert verdict.outputs == ()


def test_vvencapp_files():
    inputs, outputs = file_arguments(command('vvencapp --preset medium -i in.yuv -s 1920x1080 -r 50 --output=out.266'))
    assert inputs == ['in.yuv']
    assert outputs == ['out.266']


def test_standard_streams_are_not_files(policy):
    verdict = validate(command('ffmpeg -i - -f mp4 -'), policy)
    assert verdict.accepted
    assert verdict.inputs == () and verdict.outputs == ()


def test_absolute_path_inside_workdir(policy, workdir):
    line = f'ffmpeg -i {shlex.quote(str(workdir / "input.mp4"))} out/rotated.mp4'
    verdict = validate(command(line), policy)
    assert verdict.accepted
    assert verdict.outputs == ('out/rotated.mp4',)


@pytest.mark.skipif(os.name != 'posix', reason='symbolic links')
def test_symlink_out_of_workdir(policy, workdir):
    (workdir / 'system').symlink_to('/etc', target_is_directory=True)
    verdict = validate(command('ffmpeg -i system/passwd out.mp4'), policy)
    assert verdict.reason is RejectionReason.PATH_ESCAPE


def test_empty_argv(policy):
    assert validate(ExtractedCommand('', None, (), (0, 0)), policy).reason is RejectionReason.EMPTY_ARGV
    assert validate(command('""'), policy).reason is RejectionReason.EMPTY_ARGV


def test_allowlist_is_configurable(workdir):
    policy = ExecutionPolicy(workdir, allowlist={Program.FFMPEG})
    assert validate(command('ffprobe -show_format input.mp4'), policy).reason is RejectionReason.PROGRAM_NOT_ALLOWED
    assert validate(command('ffmpeg -i input.mp4 output.mp4'), policy).accepted


def test_program_check_comes_first(policy):
    verdict = validate(command('sh -c "ffmpeg -i input.mp4 out.mp4; rm x"'), policy)
    assert verdict.reason is RejectionReason.PROGRAM_NOT_ALLOWED


def test_resolve_inside(workdir):
    workdir = workdir.resolve()
    assert resolve_inside('input.mp4', workdir) == workdir / 'input.mp4'
    assert resolve_inside('a/../input.mp4', workdir) == workdir / 'input.mp4'
    assert resolve_inside('.', workdir) == workdir
    assert resolve_inside('..', workdir) is None
    assert resolve_inside('file:///etc/passwd', workdir) is None


def test_policy_resolves_workdir(tmp_path):
    policy = ExecutionPolicy(str(tmp_path / 'a' / '..' / 'work'))
    assert policy.workdir == (tmp_path / 'work').resolve()
    assert policy.timeout == 300.0
    assert policy.allowlist == frozenset(Program)


def test_unknown_options_do_not_hide_the_output(policy):
    verdict = validate(command('ffmpeg -i input.mp4 -xerror out.mp4'), policy)
    assert verdict.outputs == ('out.mp4',)

    verdict = validate(command('ffmpeg -frobnicate -i input.mp4 -frobnicate 3 out.mp4'), policy)
    assert verdict.accepted
    assert verdict.inputs == ('input.mp4',)
    assert verdict.outputs == ('out.mp4',)


def test_option_values_with_colons_are_not_protocols(policy):
    line = 'ffmpeg -ss 00:00:05 -i input.mp4 -map 0:v:0 -c:v libx264 -metadata:s:v rotate=90 out.mp4'
    verdict = validate(command(line), policy)
    assert verdict.accepted
    assert verdict.outputs == ('out.mp4',)


def test_protocols_never_resolve(workdir):
    for path in ('file:/etc/passwd', 'file:input.mp4', 'pipe:1', 'http:x', 'C:\\x.mp4'):
        assert resolve_inside(path, workdir.resolve()) is None
