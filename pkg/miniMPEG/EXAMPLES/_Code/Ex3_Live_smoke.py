"""
A live check against real servers. The four queries (rotate, letterbox, brightness/contrast, logo) are answered by the
configured chat model with retrieval from the index; the first command of every answer is validated and run on a
generated two-second test clip. With model variance allowed, at least three of the four commands should succeed.

Requirements: a chat server (CHAT_ENDPOINT), an embedding server (EMBED_ENDPOINT), "minimpeg index" done, and ffmpeg.
Set SETTINGS.SMOKE_CONFIG to the YAML file used for the index.
"""


import shutil
import subprocess
from pathlib import Path

from miniMPEG.EXAMPLES import comment, SETTINGS
from miniMPEG.Agent.Pipeline import AgentConfig, Mode, run_pipeline
from miniMPEG.Config import AppConfig
from miniMPEG.Executor.Extractor import extract_commands
from miniMPEG.Executor.Policy import ExecutionPolicy, validate
from miniMPEG.Executor.Runner import execute
from miniMPEG.Retrieval.Index import load_index

queries = [
    'How can I rotate a video by 90 degrees?',
    'How can I add letterboxing to a video?',
    'How do I adjust the brightness and contrast of a video?',
    'How do I add a logo to a video?',
]

config = AppConfig.load(SETTINGS.SMOKE_CONFIG)
ffmpeg = shutil.which('ffmpeg')
if ffmpeg is None:
    raise RuntimeError('ffmpeg is not on PATH; the live smoke example needs it.')

workdir = Path(SETTINGS.SMOKE_WORKDIR).resolve()
workdir.mkdir(parents=True, exist_ok=True)
comment(f'1. Test media in {workdir}')
subprocess.run([ffmpeg, '-y', '-f', 'lavfi', '-i', 'testsrc=duration=2:size=640x360:rate=25', '-pix_fmt', 'yuv420p',
                str(workdir / 'input.mp4')], check=True, capture_output=True)
subprocess.run([ffmpeg, '-y', '-f', 'lavfi', '-i', 'color=c=red:size=64x64', '-frames:v', '1',
                str(workdir / 'logo.png')], check=True, capture_output=True)

embedder = config.retrieval.embedder()
embedder.check_determinism()
stores = load_index(Path(config.retrieval.index_dir), embedder.dimension)
client = config.agent.client()
policy = ExecutionPolicy(workdir=workdir, timeout=config.executor.timeout)
agent_config = AgentConfig(i_max=config.agent.i_max, k=config.retrieval.k, mode=Mode.FULL)

passed = 0
for query in queries:
    comment(f'\n2. {query}')
    record = run_pipeline(query, agent_config, client, stores, embedder)
    commands = extract_commands(record.answer)
    if record.failed or not commands:
        comment(f'   no command ({record.error or "nothing extracted"})')
        continue
    checked = validate(commands[0], policy)
    if not checked.accepted:
        comment(f'   {commands[0].raw_line}\n   rejected: {checked.reason.value}')
        continue
    result = execute(checked, policy)
    comment(f'   {commands[0].command_line}\n   {result.status.value} in {result.duration:.1f}s')
    passed += result.ok

comment(f'\n{passed} of {len(queries)} commands ran successfully (3 expected).')
