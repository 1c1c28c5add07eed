from miniMPEG.MiniMPEGException import MiniMPEGException


class CorpusException(MiniMPEGException):
    exit_code = 3


class InvalidChunkConfig(CorpusException):
    """Raised before any splitting happens if the chunking parameters break their invariants."""
    def __init__(self, reason: str, variables: dict):
        self._message = f'\nThe chunking configuration is invalid: {reason}.'
        self.description = (f'\nThe chunk size must be larger than the overlap, the overlap must not be negative and\n'
                            f'the delimiter list must contain at least one non-empty delimiter. The defaults are\n'
                            f'chunk_size=3000, overlap=500 and delimiters = paragraph break, line break, sentence\n'
                            f'punctuation (". ", "! ", "? ") and a single space.')
        super().__init__(variables)


class EmptyDocument(CorpusException):
    def __init__(self, path: str, variables: dict):
        self._message = f'\nThe document "{path}" is empty.'
        self.description = (f'\nEmpty files (or files containing only whitespace) are rejected at load, because they\n'
                            f'cannot produce a single chunk.')
        super().__init__(variables)


class UnreadableDocument(CorpusException):
    def __init__(self, path: str, reason: str, variables: dict):
        self._message = f'\nThe document "{path}" cannot be read as UTF-8 text: {reason}.'
        self.description = (f'\nThe corpus is ingested as plain UTF-8 text files, one file per source document,\n'
                            f'extracted offline.')
        super().__init__(variables)


class UnmappedPath(CorpusException):
    def __init__(self, path: str, variables: dict):
        self._message = f'\nThe path "{path}" has no tool tag.'
        self.description = (f'\nThe tool tag of every document is derived from the configuration: either the path\n'
                            f'is listed explicitly, or one of its parent directories is a mapped directory name\n'
                            f'(by default "ffmpeg" and "vvenc"). Content is never used to guess the tag.')
        super().__init__(variables)


class NothingIngested(CorpusException):
    def __init__(self, errors: list, variables: dict):
        self._message = f'\nNone of the corpus files could be ingested ({len(errors)} failed).'
        self.description = '\n' + '\n'.join(f'  {e}' for e in errors)
        super().__init__(variables)


class ManifestCorrupted(CorpusException):
    def __init__(self, path: str, reason: str, variables: dict):
        self._message = f'\nThe corpus manifest "{path}" cannot be read: {reason}.'
        self.description = f'\nDelete the index directory and run "minimpeg index" again to rebuild it from scratch.'
        super().__init__(variables)


class CorpusRootMissing(CorpusException):
    def __init__(self, path: str, variables: dict):
        self._message = f'\nThe corpus directory "{path}" does not exist.'
        self.description = (f'\nSet corpus.root in the config file. The corpus is a directory of plain-text files with\n'
                            f'an "ffmpeg" and a "vvenc" subdirectory (see corpus.directories).')
        super().__init__(variables)
