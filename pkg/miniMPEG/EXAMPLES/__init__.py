from dataclasses import dataclass
from pathlib import Path
from time import sleep


# SETTINGS
@dataclass
class SETTINGS:
    READ_TIME: float = 0  # seconds
    SMOKE_CONFIG: str | None = None  # YAML config of the live smoke example; defaults + environment when None
    SMOKE_WORKDIR: str = 'smoke'


class EXAMPLE_LIST:
    OFFLINE_PIPELINE: str = 'Ex1_Offline_pipeline'
    EXTRACT_AND_VALIDATE: str = 'Ex2_Extract_and_validate'
    LIVE_SMOKE: str = 'Ex3_Live_smoke'


"""
The examples print what they do step by step. The variable 'READ_TIME' in 'SETTINGS' gives the time in seconds that
each message "sleeps" before the code runs further (0 disables it):
>>> from miniMPEG.EXAMPLES import SETTINGS
>>> SETTINGS.READ_TIME = 1

OFFLINE_PIPELINE and EXTRACT_AND_VALIDATE need no model server and no ffmpeg. LIVE_SMOKE needs a chat server, an
embedding server, an index built with "minimpeg index" and ffmpeg on PATH.
"""


initial_message = """
To run any example, use
>>> from miniMPEG.EXAMPLES import run_example, EXAMPLE_LIST
>>> run_example(EXAMPLE_LIST.EXAMPLE_NAME)

The following examples are available:
> OFFLINE_PIPELINE. The whole agent (tool selection, retrieval, generation, review) on a small corpus, with the mock
embedder and a scripted model, in the Base, RagOnly and Full modes.
> EXTRACT_AND_VALIDATE. How commands are taken out of an answer and checked before anything runs.
> LIVE_SMOKE. Four rotation/letterbox/brightness/logo queries against real servers; the commands are run on a test clip.
"""


def comment(*texts, sep=' ', end='\n',
            no_delay: bool = False,
            approval: str = '',
            ) -> None:

    print(*texts, sep=sep, end=end)

    if approval:
        input(approval)
    elif not no_delay and SETTINGS.READ_TIME > 0:
        sleep(SETTINGS.READ_TIME)


def run_example(file_name: str, enter_after_doc: bool = True) -> dict:
    """Runs an example and returns its global namespace (the tests read results from it)."""

    file = Path(__file__).parent / f'_Code/{file_name}.py'
    example_number = file_name.strip('Ex').split('_')[0]
    if not file.exists():
        raise FileNotFoundError(f'The example "{file_name}" was not found. Available: '
                                f'{sorted(p.stem for p in file.parent.glob("Ex*.py"))}')

    code = file.read_text(encoding='utf-8')
    doc = code.strip().strip('"""').split('"""')[0]

    comment('This example shows the following:\n', doc, '\n', no_delay=True)

    if enter_after_doc:
        input('Press "Enter" to continue >>> ')
    print(f'\n----- ====== RUNNING EXAMPLE {example_number} ====== ------')
    namespace = {'__name__': f'miniMPEG.EXAMPLES._Code.{file_name}', '__file__': str(file)}
    exec(compile(code, str(file), 'exec'), namespace)
    print('\n----- ====== Done running the example code. ====== ------')
    return namespace


def show_examples() -> None:
    print(initial_message)
