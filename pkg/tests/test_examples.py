import pytest

from miniMPEG.Agent.Pipeline import Mode
from miniMPEG.EXAMPLES import EXAMPLE_LIST, run_example


def test_offline_pipeline(capsys):
    namespace = run_example(EXAMPLE_LIST.OFFLINE_PIPELINE, enter_after_doc=False)
    records = namespace['records']
    assert [records[m].llm_calls for m in (Mode.BASE, Mode.RAG_ONLY, Mode.FULL)] == [1, 2, 4]
    assert 'transpose=cclock' in records[Mode.FULL].answer
    assert 'RUNNING EXAMPLE 1' in capsys.readouterr().out


def test_extract_and_validate():
    namespace = run_example(EXAMPLE_LIST.EXTRACT_AND_VALIDATE, enter_after_doc=False)
    assert namespace['verdicts'] == ['accepted'] * 4 + ['ShellMetacharacter', 'PathEscape', 'ProgramNotAllowed']


def test_unknown_example():
    with pytest.raises(FileNotFoundError):
        run_example('Ex9_Nothing', enter_after_doc=False)
