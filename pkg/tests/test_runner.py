import json
import random
import shutil
import subprocess
from pathlib import Path

import pytest

from miniMPEG.Executor.Extractor import Program, extract_commands
from miniMPEG.Executor.ExecutorExceptions import WorkdirMissing
from miniMPEG.Executor.Policy import ExecutionPolicy, RejectionReason, validate
from miniMPEG.Executor.Runner import ExecutionStatus, execute


ROTATE = 'ffmpeg -i input.mp4 -vf "transpose=cclock" output.mp4'
RECORD_ARGS = 'printf "%s\\n" "$@" > args.txt\nfor last; do :; done\nprintf frame > "$last"'


def validated(line: str, policy: ExecutionPolicy):
    command, = extract_commands(line, in_code_block=True)
    verdict = validate(command, policy)
    assert verdict.accepted, verdict
    return verdict


def test_dry_run_spawns_nothing(workdir):
    policy = ExecutionPolicy(workdir, binaries={Program.FFMPEG: str(workdir / 'no-such-binary')})
    result = execute(validated(ROTATE, policy), policy, dry_run=True)
    assert result.status is ExecutionStatus.DRY_RUN
    assert result.exit_code == 0
    assert result.duration == 0
    assert result.ok
    assert result.run_dir is None
    assert not (workdir / 'runs').exists()


PAYLOADS = ['$(touch pwned)', '`touch pwned`', '; touch pwned', '&& touch pwned', '| touch pwned', '> pwned']


def test_command_substitution_never_runs(workdir, fake_binary, monkeypatch):
    monkeypatch.chdir(workdir)
    binary = fake_binary('exit 0')
    policy = ExecutionPolicy(workdir, binaries={Program.FFMPEG: str(binary)})
    rng = random.Random(7)

    for _ in range(100):
        payload = rng.choice(PAYLOADS)
        quote = rng.choice(['', '"', "'"])
        position = rng.randrange(4)
        argv = ['-i', 'input.mp4', '-vf', 'transpose=cclock', 'output.mp4']
        argv.insert(position + 1, f'{quote}{payload}{quote}')
        line = 'ffmpeg ' + ' '.join(argv)

        for command in extract_commands(line, in_code_block=True):
            verdict = validate(command, policy)
            if verdict.accepted:
                result = execute(verdict, policy)
                assert payload in result.argv
            else:
                assert verdict.reason in (RejectionReason.SHELL_METACHARACTER, RejectionReason.PROGRAM_NOT_ALLOWED)

    assert not list(workdir.rglob('pwned'))
    assert not (binary.parent / 'pwned').exists()


def test_arguments_are_passed_literally(workdir, fake_binary):
    binary = fake_binary(RECORD_ARGS)
    policy = ExecutionPolicy(workdir, binaries={Program.FFMPEG: str(binary)})
    line = 'ffmpeg -i input.mp4 -metadata "title=My Clip *" -vf "transpose=cclock" output.mp4'
    command = validated(line, policy)

    result = execute(command, policy)

    assert result.status is ExecutionStatus.OK
    assert result.exit_code == 0
    run_dir = Path(result.run_dir)
    assert run_dir.parent == workdir.resolve() / 'runs'
    assert (run_dir / 'args.txt').read_text().splitlines() == list(command.argv[1:])
    assert result.outputs == (str(run_dir / 'output.mp4'),)
    assert (run_dir / 'input.mp4').read_bytes() == (workdir / 'input.mp4').read_bytes()


def test_run_record(workdir, fake_binary):
    binary = fake_binary('echo encoding\necho "frame=1" >&2')
    policy = ExecutionPolicy(workdir, binaries={Program.FFMPEG: str(binary)})
    result = execute(validated(ROTATE, policy), policy)

    record = json.loads((Path(result.run_dir) / 'run.json').read_text())
    assert record['argv'] == list(result.argv)
    assert record['status'] == 'Ok'
    assert record['exit_code'] == 0
    assert record['binary'] == str(binary)
    assert record['stdout_tail'] == 'encoding\n'
    assert record['stderr_tail'] == 'frame=1\n'
    assert record['duration'] >= 0
    assert record['started_at']
    assert result.outputs == ()  # nothing written


def test_runs_get_their_own_directories(workdir, fake_binary):
    policy = ExecutionPolicy(workdir, binaries={Program.FFMPEG: str(fake_binary('exit 0'))})
    command = validated(ROTATE, policy)
    first, second = execute(command, policy), execute(command, policy)
    assert first.run_dir != second.run_dir


def test_non_zero_exit_is_a_result(workdir, fake_binary):
    binary = fake_binary('echo "missing.mp4: No such file or directory" >&2\nexit 3')
    policy = ExecutionPolicy(workdir, binaries={Program.FFMPEG: str(binary)})
    result = execute(validated('ffmpeg -i missing.mp4 output.mp4', policy), policy)
    assert result.status is ExecutionStatus.NON_ZERO_EXIT
    assert result.exit_code == 3
    assert 'No such file or directory' in result.stderr_tail
    assert result.outputs == ()
    assert not result.ok


def test_timeout_kills_the_process(workdir, fake_binary):
    binary = fake_binary('exec sleep 5')
    policy = ExecutionPolicy(workdir, binaries={Program.FFMPEG: str(binary)}, timeout=0.5)
    result = execute(validated(ROTATE, policy), policy)
    assert result.status is ExecutionStatus.TIMEOUT
    assert result.exit_code == -9
    assert 0.5 <= result.duration < 5
    assert json.loads((Path(result.run_dir) / 'run.json').read_text())['status'] == 'Timeout'


def test_configured_binary_missing(workdir, tmp_path):
    policy = ExecutionPolicy(workdir, binaries={Program.FFMPEG: str(tmp_path / 'nowhere' / 'ffmpeg')})
    result = execute(validated(ROTATE, policy), policy)
    assert result.status is ExecutionStatus.BINARY_MISSING
    assert result.exit_code == 127
    assert result.run_dir is None


def test_binary_looked_up_by_allowed_name(workdir, fake_binary, monkeypatch):
    binary = fake_binary('exit 0', name='ffprobe')
    monkeypatch.setenv('PATH', str(binary.parent))
    policy = ExecutionPolicy(workdir)
    result = execute(validated('/opt/evil/ffprobe -show_streams input.mp4', policy), policy)
    assert result.status is ExecutionStatus.OK
    assert json.loads((Path(result.run_dir) / 'run.json').read_text())['binary'] == str(binary)


def test_missing_workdir(tmp_path):
    policy = ExecutionPolicy(tmp_path / 'absent')
    command = validated(ROTATE, policy)
    with pytest.raises(WorkdirMissing):
        execute(command, policy)


@pytest.mark.ffmpeg
@pytest.mark.skipif(shutil.which('ffmpeg') is None, reason='ffmpeg is not installed')
class TestRealFfmpeg:
    @pytest.fixture
    def clip(self, workdir) -> Path:
        path = workdir / 'input.mp4'
        subprocess.run(['ffmpeg', '-y', '-hide_banner', '-loglevel', 'error', '-f', 'lavfi',
                        '-i', 'testsrc=duration=1:size=320x240:rate=10', '-pix_fmt', 'yuv420p', str(path)],
                       check=True, capture_output=True)
        return path

    def test_rotation(self, workdir, clip):
        policy = ExecutionPolicy(workdir, timeout=60)
        result = execute(validated(ROTATE, policy), policy)
        assert result.status is ExecutionStatus.OK, result.stderr_tail
        output = Path(result.outputs[0])
        assert output.exists()
        assert output.read_bytes() != clip.read_bytes()

    def test_missing_input(self, workdir, clip):
        policy = ExecutionPolicy(workdir, timeout=60)
        result = execute(validated('ffmpeg -i missing.mp4 output.mp4', policy), policy)
        assert result.status is ExecutionStatus.NON_ZERO_EXIT
        assert 'missing.mp4' in result.stderr_tail
