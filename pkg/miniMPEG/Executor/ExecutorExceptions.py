from miniMPEG.MiniMPEGException import MiniMPEGException


class ExecutorException(MiniMPEGException):
    exit_code = 7


class WorkdirMissing(ExecutorException):
    exit_code = 3

    def __init__(self, path: str, variables: dict):
        self._message = f'\nThe work directory "{path}" does not exist.'
        self.description = (f'\nGenerated commands may only read and write inside executor.workdir. Create the\n'
                            f'directory and put the input media there.')
        super().__init__(variables)


class CommandRejected(ExecutorException):
    exit_code = 6

    def __init__(self, raw_line: str, reason: str, detail: str, variables: dict):
        self.reason = reason
        self._message = f'\nThe command {raw_line!r} was rejected: {reason} ({detail}).'
        self.description = (f'\nOnly ffmpeg, ffprobe, ffplay, vvencapp and vvencFFapp may run. Arguments must not\n'
                            f'contain shell metacharacters and every file must lie inside the work directory.')
        super().__init__(variables)


class ExecutionFailed(ExecutorException):
    def __init__(self, raw_line: str, status: str, exit_code: int, variables: dict):
        self._message = f'\nThe command {raw_line!r} did not succeed: {status} (exit code {exit_code}).'
        self.description = f'\nThe standard error of the process and the run record are in the run directory.'
        super().__init__(variables)


class NoCommandFound(ExecutorException):
    exit_code = 6

    def __init__(self, source: str, variables: dict):
        self._message = f'\nNo command line was found in {source}.'
        self.description = (f'\nCommands are taken from fenced code blocks, inline code spans and lines starting\n'
                            f'with an allowed program name.')
        super().__init__(variables)


class CommandFileMissing(ExecutorException):
    exit_code = 2

    def __init__(self, path: str, variables: dict):
        self._message = f'\nThe command file "{path}" does not exist.'
        self.description = f'\nPass a text file with one command per line (comments start with #).'
        super().__init__(variables)
