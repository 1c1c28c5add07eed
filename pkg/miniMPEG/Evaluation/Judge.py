"""
LLM-as-a-judge. A judge model reads a query and an answer and replies with a first line of CORRECT or INCORRECT.
Output without the marker counts as INCORRECT. A judge that cannot be reached, or whose prompt does not fit its
context, leaves the answer unjudged (None): such answers are left out of the accuracy and counted separately.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Dict, Tuple

from miniMPEG.Agent.AgentExceptions import ChatTransportError, ContextOverflow, MalformedChatResponse, ScriptExhausted
from miniMPEG.Agent.ChatClient import ChatModel
from miniMPEG.Agent.Prompts import PromptTemplates


logger = logging.getLogger(__name__)

# a judge that fails this way leaves the answer unjudged
JUDGE_FAILURES = (ChatTransportError, MalformedChatResponse, ScriptExhausted, ContextOverflow)


class JudgeVerdict(str, Enum):
    CORRECT = 'Correct'
    INCORRECT = 'Incorrect'


def parse_verdict(text: str) -> Tuple[JudgeVerdict, bool]:
    for line in text.splitlines():
        if line.strip():
            marker = line.strip().strip('*#:. ').upper()
            if marker == 'CORRECT':
                return JudgeVerdict.CORRECT, True
            if marker == 'INCORRECT':
                return JudgeVerdict.INCORRECT, True
            break
    return JudgeVerdict.INCORRECT, False


def judge(judge_client: ChatModel, query: str, answer: str, templates: PromptTemplates | None = None) -> JudgeVerdict:
    templates = templates or PromptTemplates()
    prompt = templates.assemble('judge', judge_client.char_budget, query=query, answer=answer)
    completion = judge_client.complete(prompt.messages, stage='judge')

    verdict, parsed = parse_verdict(completion.text)
    if not parsed:
        logger.warning('judge %s gave no CORRECT/INCORRECT marker (%r); counting INCORRECT',
                       judge_client.model_name, completion.text[:80])
    return verdict


def judge_all(judges: Dict[str, ChatModel], query: str, answer: str, templates: PromptTemplates | None = None,
              max_workers: int = 1) -> Dict[str, JudgeVerdict | None]:
    """Verdict of every judge; None where the judge failed. Judges run in parallel when max_workers > 1."""

    templates = templates or PromptTemplates()

    def one(name: str) -> JudgeVerdict | None:
        try:
            return judge(judges[name], query, answer, templates)
        except JUDGE_FAILURES as e:
            logger.error('judge %s failed, the answer stays unjudged: %s', name, getattr(e, 'message', e))
            return None

    names = sorted(judges)
    if max_workers > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            verdicts = list(pool.map(one, names))
    else:
        verdicts = [one(name) for name in names]
    return dict(zip(names, verdicts))
