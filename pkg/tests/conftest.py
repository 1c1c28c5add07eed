import os
import stat
from pathlib import Path
from typing import Dict

import pytest

from miniMPEG.Agent.ChatClient import ScriptedChatClient
from miniMPEG.Agent.Prompts import PromptTemplates
from miniMPEG.Corpus.Document import ChunkConfig, SourceDocument, ToolTag
from miniMPEG.Corpus.Splitter import split_document
from miniMPEG.Retrieval.Embedding import MockEmbeddingProvider
from miniMPEG.Retrieval.VectorStore import StoreSet


FIXTURES = Path(__file__).parent / 'fixtures'

ROTATE_ANSWER = ('Use the transpose filter:\n\n```bash\nffmpeg -i input.mp4 -vf "transpose=cclock" output.mp4\n```\n\n'
                 'transpose=cclock rotates the frames by 90 degrees counterclockwise.')

CORPUS = {
    'ffmpeg/filters.txt': ('transpose\n\nTranspose rows with columns in the input video and optionally flip it. '
                           'The dir option accepts cclock_flip, clock, cclock and clock_flip.\n\n'
                           'pad\n\nAdd paddings to the input image, and place the original input at the provided x, '
                           'y coordinates. Use it to add letterboxing.\n\n'
                           'eq\n\nSet brightness, contrast, saturation and approximate gamma adjustment.'),
    'ffmpeg/main.txt': ('ffmpeg is a universal media converter. It reads from an arbitrary number of input files, '
                        'specified by the -i option, and writes to an arbitrary number of output files.\n\n'
                        'The overlay filter composes one video on top of another, for example a logo.'),
    'vvenc/usage.txt': ('vvencapp is the simple encoder application of VVenC.\n\n'
                        'vvencapp --preset medium -i input.yuv -s 1920x1080 -r 50 -o output.266\n\n'
                        'The --threads option sets the number of worker threads; --qp sets the quantization '
                        'parameter and --bitrate a target bitrate.'),
}

ALWAYS_OK = {'select_tool': 'FFmpeg', 'generate': ROTATE_ANSWER, 'reflect': 'OK', 'revise': ROTATE_ANSWER,
             'judge': 'CORRECT'}


@pytest.fixture
def embedder() -> MockEmbeddingProvider:
    return MockEmbeddingProvider(dimension=32, seed=0)


@pytest.fixture(scope='session')
def templates() -> PromptTemplates:
    return PromptTemplates()


@pytest.fixture
def corpus_dir(tmp_path) -> Path:
    root = tmp_path / 'corpus'
    for name, text in CORPUS.items():
        path = root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
    return root


@pytest.fixture
def chunks():
    config = ChunkConfig(chunk_size=200, overlap=40)
    result = list()
    for name, text in CORPUS.items():
        tag = ToolTag.FFMPEG if name.startswith('ffmpeg') else ToolTag.VVENC
        result.extend(split_document(SourceDocument(name, text, tag), config))
    return result


@pytest.fixture
def stores(chunks, embedder) -> StoreSet:
    return StoreSet.build(chunks, embedder)


@pytest.fixture
def ok_client() -> ScriptedChatClient:
    return ScriptedChatClient(ALWAYS_OK, model_name='scripted')


@pytest.fixture
def workdir(tmp_path) -> Path:
    directory = tmp_path / 'work'
    directory.mkdir()
    (directory / 'input.mp4').write_bytes(b'\x00\x00\x00\x18ftypmp42')
    (directory / 'logo.png').write_bytes(b'\x89PNG\r\n\x1a\n')
    return directory


@pytest.fixture
def fake_binary(tmp_path):
    """Writes an executable shell script standing in for ffmpeg; returns a factory taking the script body."""

    if os.name != 'posix':
        pytest.skip('fake binaries are shell scripts')

    made: Dict[str, Path] = dict()

    def make(body: str, name: str = 'ffmpeg') -> Path:
        path = tmp_path / 'bin' / name
        path.parent.mkdir(exist_ok=True)
        path.write_text('#!/bin/sh\n' + body + '\n', encoding='utf-8')
        path.chmod(path.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
        made[name] = path
        return path

    return make
