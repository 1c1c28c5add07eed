from miniMPEG.MiniMPEGException import MiniMPEGException


class AgentException(MiniMPEGException):
    exit_code = 3


class ChatTransportError(AgentException):
    """The chat server could not be reached (or answered 5xx) after all retries."""
    exit_code = 5

    def __init__(self, endpoint: str, attempts: int, reason: str, variables: dict):
        self.attempts = attempts
        self._message = f'\nThe chat server at "{endpoint}" failed after {attempts} attempt(s): {reason}.'
        self.description = (f'\nCheck that the chat server is running and that agent.endpoint (or the CHAT_ENDPOINT\n'
                            f'environment variable) points to it.')
        super().__init__(variables)


class MalformedChatResponse(AgentException):
    exit_code = 5

    def __init__(self, endpoint: str, reason: str, variables: dict):
        self._message = f'\nThe chat server at "{endpoint}" answered with an unexpected body: {reason}.'
        self.description = (f'\nSupported bodies are the OpenAI style {{"choices": [{{"message": {{"content": ...}}}}]}}\n'
                            f'and the Ollama style {{"message": {{"content": ...}}}}.')
        super().__init__(variables)


class ScriptExhausted(AgentException):
    def __init__(self, stage: str, variables: dict):
        self._message = f'\nThe scripted chat client has no more responses for the stage "{stage}".'
        self.description = (f'\nA ScriptedChatClient answers from fixed lists. Give it a callable or a longer list\n'
                            f'for this stage.')
        super().__init__(variables)


class ContextOverflow(AgentException):
    def __init__(self, stage: str, length: int, budget: int, variables: dict):
        self._message = (f'\nThe "{stage}" prompt is {length} characters long even without retrieved context; '
                         f'the budget is {budget}.')
        self.description = (f'\nRetrieved chunks are dropped first (lowest-ranked first). The query and the answer\n'
                            f'being reviewed are never dropped, so the request cannot be sent. Shorten the query or\n'
                            f'raise agent.context_limit.')
        super().__init__(variables)


class UnknownTemplate(AgentException):
    def __init__(self, name: str, known: list, variables: dict):
        self._message = f'\nThere is no prompt template called "{name}". Known templates: {", ".join(known)}.'
        self.description = f'\nTemplates are the .txt files in miniMPEG/Agent/Templates.'
        super().__init__(variables)


class RecordSchemaMismatch(AgentException):
    def __init__(self, found: object, expected: int, variables: dict):
        self._message = f'\nThe answer record has schema version {found!r}, expected {expected}.'
        self.description = ''
        super().__init__(variables)


class EmptyQuery(AgentException):
    def __init__(self, variables: dict):
        self._message = f'\nThe query is empty.'
        self.description = f'\nAsk a question about FFmpeg or VVenC, for example "How can I rotate a video by 90 degrees?"'
        super().__init__(variables)


class IndexRequired(AgentException):
    exit_code = 4

    def __init__(self, mode: str, variables: dict):
        self._message = f'\nThe "{mode}" mode retrieves documentation, but no vector stores were given.'
        self.description = (f'\nBuild the index first with "minimpeg index", or use the "Base" mode, which answers\n'
                            f'without retrieval.')
        super().__init__(variables)
