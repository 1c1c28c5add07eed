from miniMPEG.MiniMPEGException import MiniMPEGException


class RetrievalException(MiniMPEGException):
    exit_code = 3


class EmptyEmbeddingInput(RetrievalException):
    def __init__(self, variables: dict):
        self._message = f'\nCannot embed an empty text.'
        self.description = f'\nThe embedding provider is not called for empty input; pass a non-empty query or chunk.'
        super().__init__(variables)


class EmbeddingDimensionMismatch(RetrievalException):
    """Fatal: the configured dimension and the dimension of a vector disagree."""
    def __init__(self, expected: int, got: int, where: str, variables: dict):
        self._message = f'\nDimension mismatch in {where}: expected {expected}, got {got}.'
        self.description = (f'\nThe embedding dimension is a configuration value (retrieval.dimension). It must equal\n'
                            f'the output length of the embedding model and the dimension of the persisted stores.\n'
                            f'After switching the model, delete the index directory and rebuild it.')
        super().__init__(variables)


class NonFiniteEmbedding(RetrievalException):
    def __init__(self, model: str, variables: dict):
        self._message = f'\nThe embedding model "{model}" returned a vector with non-finite values.'
        self.description = ''
        super().__init__(variables)


class EmbeddingTransportError(RetrievalException):
    """Retryable network failure; raised after all retries were used."""
    exit_code = 5

    def __init__(self, endpoint: str, attempts: int, reason: str, variables: dict):
        self.attempts = attempts
        self._message = f'\nThe embedding server at "{endpoint}" failed after {attempts} attempt(s): {reason}.'
        self.description = (f'\nCheck that the embedding server is running and that retrieval.endpoint (or the\n'
                            f'EMBED_ENDPOINT environment variable) points to it.')
        super().__init__(variables)


class MalformedEmbeddingResponse(RetrievalException):
    exit_code = 5

    def __init__(self, endpoint: str, reason: str, variables: dict):
        self._message = f'\nThe embedding server at "{endpoint}" answered with an unexpected body: {reason}.'
        self.description = (f'\nThe expected response is a JSON object {{"embeddings": [[...], ...]}} with one vector\n'
                            f'per input text, in input order.')
        super().__init__(variables)


class EmbeddingNotDeterministic(RetrievalException):
    def __init__(self, model: str, variables: dict):
        self._message = f'\nThe embedding model "{model}" returned two different vectors for the same text.'
        self.description = (f'\nRetrieval assumes that identical texts have identical embeddings within a session.\n'
                            f'Disable sampling/noise on the embedding server.')
        super().__init__(variables)


class StoreFormatError(RetrievalException):
    def __init__(self, path: str, offset: int, reason: str, variables: dict):
        self.offset = offset
        self._message = f'\nThe vector store "{path}" is corrupted at byte offset {offset}: {reason}.'
        self.description = (f'\nThe store file is little-endian binary: magic "EVS1", u32 dimension, u32 count,\n'
                            f'float32 vectors, then length-prefixed UTF-8 chunk contents and metadata. Rebuild the\n'
                            f'index with "minimpeg index --full".')
        super().__init__(variables)


class StoreVersionMismatch(RetrievalException):
    def __init__(self, path: str, found: str, expected: str, variables: dict):
        self._message = f'\nThe vector store "{path}" has format version {found!r}, expected {expected!r}.'
        self.description = f'\nRebuild the index with "minimpeg index --full".'
        super().__init__(variables)


class IndexMissing(RetrievalException):
    exit_code = 4

    def __init__(self, path: str, variables: dict):
        self._message = f'\nThere is no index in "{path}".'
        self.description = (f'\nRun "minimpeg index" first, or ask in the Base mode (--mode base), which answers\n'
                            f'without retrieval.')
        super().__init__(variables)
