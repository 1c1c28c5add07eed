from pathlib import Path

import pytest
import yaml

from conftest import FIXTURES
from miniMPEG.Agent.ChatClient import HttpChatClient, ScriptedChatClient
from miniMPEG.Config import AppConfig
from miniMPEG.ConfigExceptions import ConfigFileMissing, ConfigSyntaxError, InvalidConfigValue
from miniMPEG.Corpus.CorpusExceptions import InvalidChunkConfig
from miniMPEG.Corpus.Document import ToolTag
from miniMPEG.Executor.Extractor import Program
from miniMPEG.Retrieval.Embedding import HttpEmbeddingProvider, MockEmbeddingProvider
from miniMPEG.Utilities.UtilityExceptions import KeywordNotAllowed, ValueOutOfRange


def write_config(directory: Path, data) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / 'minimpeg.yaml'
    path.write_text(yaml.safe_dump(data), encoding='utf-8')
    return path


def test_defaults():
    config = AppConfig.load(None, environ={})
    assert (config.chunking.chunk_size, config.chunking.overlap) == (3000, 500)
    assert config.retrieval.k == 5
    assert config.retrieval.provider == 'http'
    assert config.agent.i_max == 1
    assert config.agent.mode == 'Full'
    assert config.agent.context_limit == 4000
    assert config.executor.timeout == 300.0
    assert set(config.executor.allowlist) == {p.value for p in Program}
    assert config.evaluation.modes == ('base', 'rag', 'full')
    assert config.evaluation.judges == {}


def test_empty_file_is_valid(tmp_path):
    path = tmp_path / 'empty.yaml'
    path.write_text('', encoding='utf-8')
    assert AppConfig.load(path, environ={}).retrieval.k == 5


def test_file_values_and_relative_paths(tmp_path):
    path = write_config(tmp_path / 'conf', {
        'corpus': {'root': 'docs', 'directories': {'ff': 'FFmpeg', 'vv': 'VVenC'}},
        'chunking': {'chunk_size': 1200, 'overlap': 200},
        'retrieval': {'provider': 'mock', 'dimension': 32, 'k': 3, 'index_dir': 'idx'},
        'agent': {'mode': 'rag', 'i_max': 3, 'temperature': 0},
        'executor': {'workdir': '/srv/media', 'binaries': {'ffmpeg': '/opt/ffmpeg/bin/ffmpeg'}, 'timeout': 60},
        'evaluation': {'modes': 'base, full:2', 'imax_sweep': [1, 2], 'watts': 50},
    })
    config = AppConfig.load(path, environ={})
    base = path.resolve().parent

    assert config.corpus.root == str(base / 'docs')
    assert config.corpus.mapping().tag_for('vv/usage.txt') is ToolTag.VVENC
    assert (config.chunking.chunk_size, config.chunking.overlap) == (1200, 200)
    assert config.retrieval.index_dir == str(base / 'idx')
    assert config.agent.mode == 'RagOnly'
    assert config.agent.temperature == 0.0
    assert config.executor.workdir == '/srv/media'
    assert config.evaluation.modes == ('base', 'full:2')
    assert config.evaluation.imax_sweep == (1, 2)
    assert config.evaluation.watts == 50.0
    assert config.evaluation.output_dir == str(base / 'eval')

    embedder = config.retrieval.embedder()
    assert isinstance(embedder, MockEmbeddingProvider)
    assert embedder.dimension == 32

    policy = config.executor.policy()
    assert policy.binaries == {Program.FFMPEG: '/opt/ffmpeg/bin/ffmpeg'}
    assert policy.timeout == 60.0


def test_environment_overrides(tmp_path):
    path = write_config(tmp_path, {'evaluation': {'judges': {'a': {'model': 'm1'}, 'b': {'model': 'm2'}}}})
    environ = {'CHAT_ENDPOINT': 'http://chat:8000/v1/chat/completions', 'EMBED_ENDPOINT': 'http://embed:8001/embed',
               'JUDGE_ENDPOINT': 'http://judge:8002/v1/chat/completions'}
    config = AppConfig.load(path, environ=environ)

    assert config.agent.endpoint == environ['CHAT_ENDPOINT']
    assert config.retrieval.endpoint == environ['EMBED_ENDPOINT']
    assert {j.endpoint for j in config.evaluation.judges.values()} == {environ['JUDGE_ENDPOINT']}
    assert isinstance(config.retrieval.embedder(), HttpEmbeddingProvider)

    client = config.agent.client()
    assert isinstance(client, HttpChatClient)
    assert client.endpoint == environ['CHAT_ENDPOINT']


def test_judge_endpoint_without_judges():
    config = AppConfig.from_dict({}, environ={'JUDGE_ENDPOINT': 'http://judge/v1/chat/completions'})
    assert list(config.evaluation.judges) == ['judge']
    assert config.evaluation.judges['judge'].endpoint == 'http://judge/v1/chat/completions'


@pytest.mark.parametrize('data', [
    {'retreival': {}},
    {'retrieval': {'top_k': 3}},
    {'chunking': {'size': 1000}},
    {'agent': {'model': 'x', 'temprature': 0.2}},
    {'evaluation': {'judges': {'a': {'url': 'http://x'}}}},
])
def test_unknown_keys(data):
    with pytest.raises(KeywordNotAllowed) as error:
        AppConfig.from_dict(data, environ={})
    assert error.value.exit_code == 3


@pytest.mark.parametrize('data, exception', [
    ({'retrieval': {'k': 'five'}}, InvalidConfigValue),
    ({'retrieval': {'k': 0}}, ValueOutOfRange),
    ({'retrieval': {'provider': 'openai'}}, InvalidConfigValue),
    ({'agent': {'i_max': True}}, InvalidConfigValue),
    ({'agent': {'i_max': -1}}, ValueOutOfRange),
    ({'agent': {'mode': 'turbo'}}, InvalidConfigValue),
    ({'executor': {'allowlist': ['ffmpeg', 'bash']}}, InvalidConfigValue),
    ({'evaluation': {'energy_source': 'solar'}}, InvalidConfigValue),
    ({'evaluation': {'imax_sweep': [0, 1]}}, ValueOutOfRange),
    ({'corpus': {'directories': {'ffmpeg': 'x264'}}}, InvalidConfigValue),
    ({'chunking': {'chunk_size': 'big'}}, InvalidConfigValue),
    ({'chunking': {'chunk_size': 400, 'overlap': 400}}, InvalidChunkConfig),
    ({'agent': 'fast'}, InvalidConfigValue),
])
def test_bad_values(data, exception):
    with pytest.raises(exception):
        AppConfig.from_dict(data, environ={})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigFileMissing) as error:
        AppConfig.load(tmp_path / 'absent.yaml', environ={})
    assert error.value.exit_code == 3


@pytest.mark.parametrize('text', ['agent: [unclosed', '- a list\n- of sections\n'])
def test_syntax_errors(tmp_path, text):
    path = tmp_path / 'bad.yaml'
    path.write_text(text, encoding='utf-8')
    with pytest.raises(ConfigSyntaxError):
        AppConfig.load(path, environ={})


def test_script_clients(tmp_path):
    path = write_config(tmp_path, {
        'agent': {'script': str(FIXTURES / 'rotate_script.yaml')},
        'evaluation': {'judges': {'scripted': {'script': str(FIXTURES / 'judge_script.yaml')},
                                  'remote': {'model': 'big-judge'}}},
    })
    config = AppConfig.load(path, environ={})

    clients = config.chat_clients()
    assert list(clients) == [config.agent.model]
    client = clients[config.agent.model]
    assert isinstance(client, ScriptedChatClient)
    assert client.model_name == 'rotate_script'
    assert 'transpose=cclock' in client.complete([{'role': 'user', 'content': 'rotate'}]).text

    judges = config.judge_clients()
    assert isinstance(judges['scripted'], ScriptedChatClient)
    assert judges['scripted'].complete([], stage='judge').text == 'CORRECT'
    assert isinstance(judges['remote'], HttpChatClient)
    assert judges['remote'].model_name == 'big-judge'


def test_unreadable_script(tmp_path):
    config = AppConfig.from_dict({'agent': {'script': 'absent.yaml'}}, base=tmp_path, environ={})
    with pytest.raises(InvalidConfigValue):
        config.agent.client()


def test_named_models():
    config = AppConfig.from_dict({'evaluation': {'models': {'small': 'qwen2.5:3b', 'large': 'qwen2.5:14b'}}},
                                 environ={})
    clients = config.chat_clients()
    assert {name: c.model_name for name, c in clients.items()} == {'small': 'qwen2.5:3b', 'large': 'qwen2.5:14b'}
