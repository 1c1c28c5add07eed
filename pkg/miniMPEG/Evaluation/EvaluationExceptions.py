from miniMPEG.MiniMPEGException import MiniMPEGException


class EvaluationException(MiniMPEGException):
    exit_code = 3


class DatasetMissing(EvaluationException):
    def __init__(self, path: str, variables: dict):
        self._message = f'\nThe dataset "{path}" does not exist.'
        self.description = f'\nSet evaluation.dataset in the config file or pass the dataset path to "minimpeg eval".'
        super().__init__(variables)


class EmptyDataset(EvaluationException):
    def __init__(self, path: str, variables: dict):
        self._message = f'\nThe dataset "{path}" contains no queries.'
        self.description = f'\nA dataset is a JSONL file: one {{"id", "query", "tool", "category"}} object per line.'
        super().__init__(variables)


class DatasetSchemaError(EvaluationException):
    def __init__(self, path: str, line: int, reason: str, variables: dict):
        self.line = line
        self._message = f'\nLine {line} of the dataset "{path}" is invalid: {reason}.'
        self.description = (f'\nEvery line must be a JSON object with exactly the fields "id", "query", "tool"\n'
                            f'(FFmpeg or VVenC) and "category" (one of the categories of that tool, see\n'
                            f'miniMPEG/Evaluation/Data/categories.txt).')
        super().__init__(variables)


class DuplicateQueryId(DatasetSchemaError):
    def __init__(self, path: str, line: int, query_id: str, first_line: int, variables: dict):
        super().__init__(path, line, f'the id "{query_id}" was already used on line {first_line}', variables)


class CheckpointCorrupted(EvaluationException):
    def __init__(self, path: str, line: int, reason: str, variables: dict):
        self._message = f'\nLine {line} of the checkpoint log "{path}" cannot be read: {reason}.'
        self.description = (f'\nThe log is appended one record per line. A run that was killed while writing may\n'
                            f'leave a broken last line; delete that line and resume, or start without --resume.')
        super().__init__(variables)


class InvalidModeSpec(EvaluationException):
    exit_code = 2

    def __init__(self, text: str, variables: dict):
        self._message = f'\nCannot read the benchmark mode "{text}".'
        self.description = f'\nUse base, rag or full, optionally with the reflection limit: full:3.'
        super().__init__(variables)
