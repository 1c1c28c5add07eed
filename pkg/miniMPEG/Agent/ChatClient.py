"""
Chat-completion clients.

Every client takes a list of chat messages and returns a Completion: the text of the answer, the token counts and the
wall time of the call. The pipeline only talks to the ChatModel interface, so the HTTP client can be swapped for the
ScriptedChatClient in tests and offline benchmark runs.

Wire protocol of HttpChatClient:
    POST <endpoint>  {"model": <name>, "messages": [{"role": ..., "content": ...}], "temperature": <num>,
                      "max_tokens": <num>}
The answer may be OpenAI style ({"choices": [{"message": {"content": ...}}], "usage": {...}}) or Ollama style
({"message": {"content": ...}, "prompt_eval_count": ..., "eval_count": ...}). When the server reports no token counts,
they are estimated by whitespace tokenization and the completion is flagged as estimated.
"""

from __future__ import annotations

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, asdict
from typing import Callable, Dict, List, Sequence

import requests

from miniMPEG.Agent.AgentExceptions import ChatTransportError, MalformedChatResponse, ScriptExhausted
from miniMPEG.Utilities.Checks import positive_check
from miniMPEG.Utilities.Retry import RetryPolicy, ServerUnavailable


logger = logging.getLogger(__name__)

CHARS_PER_TOKEN = 4


def whitespace_tokens(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_tokens: int
    completion_tokens: int
    estimated: bool
    wall_time: float  # seconds

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> Completion:
        return cls(text=d['text'], prompt_tokens=int(d['prompt_tokens']),
                   completion_tokens=int(d['completion_tokens']), estimated=bool(d['estimated']),
                   wall_time=float(d['wall_time']))


class ChatModel(ABC):
    def __init__(self, model_name: str, context_limit: int = 4000, temperature: float = 0.0,
                 max_tokens: int = 1024) -> None:
        positive_check('context_limit', context_limit)
        self.model_name = model_name
        self.context_limit = context_limit
        self.temperature = temperature
        self.max_tokens = max_tokens

    @property
    def char_budget(self) -> int:
        """Prompt budget in characters, about four English characters per token."""
        return self.context_limit * CHARS_PER_TOKEN

    @abstractmethod
    def complete(self, messages: List[Dict[str, str]], stage: str = 'generate') -> Completion:
        """
        :param messages: chat messages, each {"role": "system" | "user" | "assistant", "content": text}
        :param stage: name of the pipeline stage; used for logging and by scripted clients
        """
        ...


class HttpChatClient(ChatModel):
    def __init__(self,
                 endpoint: str,
                 model_name: str,
                 context_limit: int = 4000,
                 temperature: float = 0.0,
                 max_tokens: int = 1024,
                 timeout: float = 300.0,
                 retry: RetryPolicy | None = None,
                 session: requests.Session | None = None,
                 clock: Callable[[], float] = time.perf_counter
                 ) -> None:
        super().__init__(model_name, context_limit, temperature, max_tokens)
        self.endpoint = endpoint
        self.timeout = timeout
        self._retry = retry if retry is not None else RetryPolicy()
        self._session = session if session is not None else requests.Session()
        self._clock = clock

    def _body(self, messages: List[Dict[str, str]]) -> dict:
        return {'model': self.model_name, 'messages': messages, 'temperature': self.temperature,
                'max_tokens': self.max_tokens}

    def _parse(self, data: dict) -> tuple:
        """Returns (text, prompt_tokens | None, completion_tokens | None)."""

        if 'choices' in data:
            text = data['choices'][0]['message']['content']
            usage = data.get('usage') or {}
            return text, usage.get('prompt_tokens'), usage.get('completion_tokens')
        if 'message' in data:
            return data['message']['content'], data.get('prompt_eval_count'), data.get('eval_count')
        raise KeyError('neither "choices" nor "message" in the response')

    def complete(self, messages: List[Dict[str, str]], stage: str = 'generate') -> Completion:
        def send() -> requests.Response:
            response = self._session.post(self.endpoint, json=self._body(messages), timeout=self.timeout)
            if response.status_code >= 500:
                raise ServerUnavailable(f'HTTP {response.status_code}')
            return response

        started = self._clock()
        try:
            response, attempts = self._retry.call(send, what=f'{stage} request to {self.endpoint}')
        except requests.RequestException as e:
            raise ChatTransportError(self.endpoint, attempts=getattr(e, 'attempts', 1), reason=str(e),
                                     variables={'stage': stage, 'model': self.model_name})
        wall_time = self._clock() - started

        if response.status_code != 200:
            raise MalformedChatResponse(self.endpoint, reason=f'HTTP {response.status_code}: {response.text[:200]}',
                                        variables={'stage': stage})
        try:
            text, prompt_tokens, completion_tokens = self._parse(response.json())
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise MalformedChatResponse(self.endpoint, reason=str(e), variables={'stage': stage})
        if not isinstance(text, str):
            raise MalformedChatResponse(self.endpoint, reason='the completion text is not a string',
                                        variables={'stage': stage, 'text': text})

        estimated = prompt_tokens is None or completion_tokens is None
        if estimated:
            prompt_tokens = sum(whitespace_tokens(m['content']) for m in messages)
            completion_tokens = whitespace_tokens(text)

        logger.debug('%s: %d prompt / %d completion tokens in %.3fs', stage, prompt_tokens, completion_tokens,
                     wall_time)
        return Completion(text, int(prompt_tokens), int(completion_tokens), estimated, wall_time)


Response = str | BaseException | Callable[[List[Dict[str, str]]], str]


class ScriptedChatClient(ChatModel):
    """
    A chat model that answers from a script, used by the tests and by offline benchmark runs.

    The script maps a stage name ("select_tool", "generate", "reflect", "revise", "judge") to
        - a string, returned on every call of that stage;
        - a list, consumed one item per call (ScriptExhausted when it runs out);
        - a callable, called with the messages.
    An exception instance in place of a response is raised, which simulates a transport failure. The stage "*" is used
    for stages that are not in the script. Every call takes exactly wall_time seconds and the tokens are counted by
    whitespace, so runs with the same script are identical.
    """

    def __init__(self, script: Dict[str, Response | Sequence[Response]], model_name: str = 'scripted',
                 wall_time: float = 0.5, context_limit: int = 4000) -> None:
        super().__init__(model_name, context_limit)
        self._script = {stage: (list(r) if isinstance(r, (list, tuple)) else r) for stage, r in script.items()}
        self._positions: Dict[str, int] = dict()
        self.wall_time = wall_time
        self.calls: List[tuple] = list()

    @classmethod
    def echo(cls, **kwargs) -> ScriptedChatClient:
        """A client that answers every call with its own user prompt."""
        return cls({'*': lambda messages: messages[-1]['content']}, **kwargs)

    def _next(self, stage: str, messages: List[Dict[str, str]]) -> str:
        key = stage if stage in self._script else '*'
        if key not in self._script:
            raise ScriptExhausted(stage, variables={'stages': list(self._script)})

        response = self._script[key]
        if isinstance(response, list):
            position = self._positions.get(key, 0)
            if position >= len(response):
                raise ScriptExhausted(stage, variables={'used': position})
            self._positions[key] = position + 1
            response = response[position]

        if isinstance(response, BaseException):
            raise response
        if callable(response):
            return response(messages)
        return response

    def calls_for(self, stage: str) -> int:
        return sum(1 for s, _ in self.calls if s == stage)

    def complete(self, messages: List[Dict[str, str]], stage: str = 'generate') -> Completion:
        self.calls.append((stage, messages))
        text = self._next(stage, messages)
        prompt_tokens = sum(whitespace_tokens(m['content']) for m in messages)
        return Completion(text, prompt_tokens, whitespace_tokens(text), True, self.wall_time)
