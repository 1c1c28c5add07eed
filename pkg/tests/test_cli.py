import json
from pathlib import Path

import pytest
import yaml

from conftest import FIXTURES
from miniMPEG.Agent.Pipeline import AnswerRecord
from miniMPEG.cli import main


@pytest.fixture(autouse=True)
def no_endpoint_overrides(monkeypatch):
    for name in ('CHAT_ENDPOINT', 'EMBED_ENDPOINT', 'JUDGE_ENDPOINT'):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def config_path(tmp_path, corpus_dir, workdir) -> Path:
    data = {
        'corpus': {'root': str(corpus_dir)},
        'chunking': {'chunk_size': 200, 'overlap': 40},
        'retrieval': {'provider': 'mock', 'dimension': 32, 'k': 3, 'index_dir': 'index'},
        'agent': {'script': str(FIXTURES / 'rotate_script.yaml')},
        'executor': {'workdir': str(workdir)},
        'evaluation': {'output_dir': 'eval', 'energy_source': 'constant', 'watts': 50,
                       'judges': {'scripted': {'script': str(FIXTURES / 'judge_script.yaml')}}},
    }
    path = tmp_path / 'minimpeg.yaml'
    path.write_text(yaml.safe_dump(data), encoding='utf-8')
    return path


@pytest.fixture
def indexed(config_path, capsys) -> Path:
    assert main(['-c', str(config_path), 'index']) == 0
    capsys.readouterr()
    return config_path


def test_index_then_nothing_to_do(config_path, capsys):
    assert main(['-c', str(config_path), 'index']) == 0
    out = capsys.readouterr().out
    assert '3 files: 3 added' in out
    assert (config_path.parent / 'index').is_dir()

    assert main(['-c', str(config_path), 'index']) == 0
    assert 'no changes' in capsys.readouterr().out


def test_index_without_corpus(tmp_path, capsys):
    path = tmp_path / 'c.yaml'
    path.write_text(yaml.safe_dump({'corpus': {'root': 'absent'}, 'retrieval': {'provider': 'mock'}}))
    assert main(['-c', str(path), 'index']) == 3


def test_ask_json(indexed, capsys):
    assert main(['-c', str(indexed), 'ask', 'How can I rotate a video by 90 degrees?', '--json']) == 0
    record = AnswerRecord.from_json(capsys.readouterr().out)
    assert record.mode.value == 'Full'
    assert record.llm_calls == 3
    assert 'transpose=cclock' in record.answer
    assert len(record.retrieved) == 3


def test_ask_prints_commands_and_sources(indexed, capsys):
    assert main(['-c', str(indexed), 'ask', 'How can I rotate a video by 90 degrees?', '--mode', 'rag']) == 0
    out = capsys.readouterr().out
    assert 'Mode: RagOnly' in out
    assert 'ffmpeg -i input.mp4 -vf transpose=cclock output.mp4   accepted' in out
    assert 'Sources:' in out


def test_ask_execute_dry_run(indexed, capsys):
    code = main(['-c', str(indexed), 'ask', 'How can I rotate a video by 90 degrees?', '--execute', '--dry-run',
                 '--yes'])
    assert code == 0
    out = capsys.readouterr().out
    assert '$ ffmpeg -i input.mp4 -vf transpose=cclock output.mp4' in out
    assert 'DryRun' in out


def test_ask_json_execute_keeps_stdout_parseable(indexed, capsys):
    code = main(['-c', str(indexed), 'ask', 'How can I rotate a video by 90 degrees?', '--json', '--execute',
                 '--dry-run', '--yes'])
    assert code == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)['mode'] == 'Full'
    assert '$ ffmpeg -i input.mp4 -vf transpose=cclock output.mp4' in captured.err
    assert 'DryRun' in captured.err


def test_ask_base_mode_needs_no_index(config_path, capsys):
    assert main(['-c', str(config_path), 'ask', 'How can I rotate a video?', '--mode', 'base']) == 0
    assert 'Model calls: 1' in capsys.readouterr().out


def test_ask_without_index(config_path):
    assert main(['-c', str(config_path), 'ask', 'How can I rotate a video?', '--mode', 'rag']) == 4


def test_run_file_dry_run(config_path, capsys):
    assert main(['-c', str(config_path), 'run', str(FIXTURES / 'commands.sh'), '--dry-run']) == 0
    out = capsys.readouterr().out
    assert out.count('accepted') == 2
    assert out.count('DryRun') == 2


def test_run_rejected_file(config_path, tmp_path, capsys):
    commands = tmp_path / 'bad.sh'
    commands.write_text('ffmpeg -i input.mp4 output.mp4\nffmpeg -i ../../secret.mp4 leak.mp4\n')
    assert main(['-c', str(config_path), 'run', str(commands), '--dry-run']) == 6
    out = capsys.readouterr().out
    assert 'PathEscape' in out
    assert 'DryRun' not in out


def test_run_missing_or_empty_file(config_path, tmp_path):
    assert main(['-c', str(config_path), 'run', str(tmp_path / 'absent.sh')]) == 2
    empty = tmp_path / 'empty.sh'
    empty.write_text('# nothing here\n')
    assert main(['-c', str(config_path), 'run', str(empty)]) == 6


def test_eval_base(config_path, capsys):
    code = main(['-c', str(config_path), 'eval', str(FIXTURES / 'queries4.jsonl'), '--modes', 'base'])
    assert code == 0
    output = config_path.parent / 'eval'
    report = json.loads((output / 'report.json').read_text())
    row = report['rows'][0]
    assert (row['mode'], row['judge'], row['category'], row['queries']) == ('Base', 'scripted', 'ALL', 4)
    assert row['accuracy'] == 100.0
    assert row['mean_energy_wh'] == pytest.approx(50.0 * 0.5 / 3600)
    assert (output / 'report.csv').exists()
    assert len((output / 'records.jsonl').read_text().strip().split('\n')) == 4
    assert 'accuracy  100.0%' in capsys.readouterr().out


def test_eval_sweep(indexed):
    code = main(['-c', str(indexed), 'eval', str(FIXTURES / 'queries4.jsonl'), '--modes', 'full',
                 '--imax-sweep', '1..4'])
    assert code == 0
    rows = json.loads((indexed.parent / 'eval' / 'report.json').read_text())['rows']
    modes = list(dict.fromkeys(r['mode'] for r in rows))
    assert modes == ['Full(I=1)', 'Full(I=2)', 'Full(I=3)', 'Full(I=4)']


def test_eval_resume(config_path):
    args = ['-c', str(config_path), 'eval', str(FIXTURES / 'queries4.jsonl'), '--modes', 'base']
    assert main(args) == 0
    report = (config_path.parent / 'eval' / 'report.json').read_text()
    assert main(args + ['--resume']) == 0
    assert (config_path.parent / 'eval' / 'report.json').read_text() == report


def test_eval_bad_mode(config_path):
    assert main(['-c', str(config_path), 'eval', '--modes', 'turbo']) == 2


def test_missing_config(tmp_path):
    assert main(['-c', str(tmp_path / 'absent.yaml'), 'index']) == 3


def test_unknown_config_key(tmp_path):
    path = tmp_path / 'c.yaml'
    path.write_text('retrieval:\n  top_k: 3\n')
    assert main(['-c', str(path), 'index']) == 3


@pytest.mark.parametrize('argv', [['ask'], ['compress', 'x'], ['ask', 'q', '--mode', 'turbo'], []])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as error:
        main(argv)
    assert error.value.code == 2
