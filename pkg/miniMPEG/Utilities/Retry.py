"""
Retry policy shared by the HTTP clients (chat, embedding, judge). Only transport problems are retried; a model that
answers with nonsense is answered with nonsense again, so content problems are never retried.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Tuple, Type, TypeVar

import requests


logger = logging.getLogger(__name__)

T = TypeVar('T')

TRANSPORT_ERRORS: Tuple[Type[BaseException], ...] = (
    requests.ConnectionError,
    requests.Timeout,
)


class ServerUnavailable(requests.RequestException):
    """Raised by the clients for HTTP 5xx answers, which are treated as transport problems."""


@dataclass
class RetryPolicy:
    retries: int = 2
    backoff: float = 0.5  # seconds, doubled after every failed attempt
    retry_on: Tuple[Type[BaseException], ...] = TRANSPORT_ERRORS + (ServerUnavailable,)
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)

    def call(self, func: Callable[[], T], what: str = 'request') -> Tuple[T, int]:
        """
        Calls func until it succeeds or the retries are exhausted.

        :return: the result of func and the number of attempts it took
        :raises: the last transport exception, with the attribute "attempts" set
        """

        attempt = 0
        delay = self.backoff

        while True:
            attempt += 1
            try:
                return func(), attempt
            except self.retry_on as e:
                if attempt > self.retries:
                    e.attempts = attempt
                    raise
                logger.warning('%s failed (attempt %d of %d): %s; retrying in %.2fs',
                               what, attempt, self.retries + 1, e, delay)
                self.sleep(delay)
                delay *= 2
