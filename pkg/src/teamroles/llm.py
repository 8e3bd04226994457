"""Few-shot prompting against an abstract chat-completion backend.

The backend is a single `complete(prompt, config) -> text` operation.
Two implementations ship: a generic HTTPS chat-completion client and a
deterministic mock that delegates to the keyword classifier, so the whole
pipeline runs offline.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from .errors import PipelineError
from .rules import KeywordTaxonomy, NoKeywordMatch, classify_statement
from .types import ROLE_ORDER, ContributionRecord, RoleLabel

TRUNCATION_MARKER = " ...[statement truncated]"


class EmptyStatement(PipelineError):
    pass


class UnparseableResponse(PipelineError):
    pass


class TransportFailure(PipelineError):
    pass


DEFAULT_ROLE_DEFINITIONS = """You classify the role of one author of a scientific paper from their self-reported contribution statement. Assign exactly one of three roles:

1. Leadership: designing, conceptualizing, directing, supervising, coordinating, interpreting, conducting, and writing the research.
2. Direct Support: helping, assisting, preparing, collecting, and analyzing.
3. Indirect Support: participating, providing, contributing, commenting, editing, and discussing.

If a statement contains activities from several categories, answer with the highest category present (Leadership ranks above Direct Support, which ranks above Indirect Support)."""

DEFAULT_INSTRUCTION = (
    "Answer with exactly one of: Leadership, Direct Support, Indirect Support."
)

DEFAULT_FEW_SHOT: Tuple[Tuple[str, RoleLabel], ...] = (
    ("Designed the study and supervised the project.", RoleLabel.LEADERSHIP),
    ("Conceptualized the research and wrote the manuscript.", RoleLabel.LEADERSHIP),
    ("Collected the samples and analyzed the data.", RoleLabel.DIRECT_SUPPORT),
    ("Helped with preparing the experiments.", RoleLabel.DIRECT_SUPPORT),
    ("Provided reagents and commented on the manuscript.", RoleLabel.INDIRECT_SUPPORT),
    ("Participated in discussions and edited the text.", RoleLabel.INDIRECT_SUPPORT),
)


@dataclass(frozen=True)
class PromptTemplate:
    role_definitions: str = DEFAULT_ROLE_DEFINITIONS
    few_shot_examples: Tuple[Tuple[str, RoleLabel], ...] = DEFAULT_FEW_SHOT
    instruction: str = DEFAULT_INSTRUCTION
    char_budget: int = 8000

    def __post_init__(self):
        covered = {label for _, label in self.few_shot_examples}
        missing = set(ROLE_ORDER) - covered
        if missing:
            raise ValueError(
                f"few-shot examples must cover every role; missing {sorted(m.value for m in missing)}"
            )


@dataclass(frozen=True)
class BackendConfig:
    endpoint_url: str = ""
    model_name: str = "mock"
    temperature: float = 0.01
    max_retries: int = 2
    timeout: float = 30.0
    api_key_env: str = "TEAMROLES_API_KEY"
    retry_backoff: float = 1.0  # seconds; doubled per attempt
    max_concurrency: int = 1

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def build_prompt(record: ContributionRecord, template: PromptTemplate = PromptTemplate()) -> str:
    """Render the deterministic few-shot prompt for one record."""
    statement = record.statement.strip()
    if not statement:
        raise EmptyStatement(f"record {record.record_id} has an empty statement")

    parts = [template.role_definitions, "", "Examples:"]
    for example_statement, label in template.few_shot_examples:
        parts.append(f'Statement: "{example_statement}"')
        parts.append(f"Role: {label.value}")
    parts.append("")
    parts.append(template.instruction)
    head = "\n".join(parts)

    tail_format = '\nStatement: "{stmt}"\nRole:'
    budget = template.char_budget - len(head) - len(tail_format.format(stmt=""))
    if len(statement) > budget:
        statement = statement[: max(0, budget - len(TRUNCATION_MARKER))] + TRUNCATION_MARKER
    return head + tail_format.format(stmt=statement)


_ROLE_PATTERNS = [
    (re.compile(r"\bleadership\b", re.IGNORECASE), RoleLabel.LEADERSHIP),
    (re.compile(r"\bdirect support\b", re.IGNORECASE), RoleLabel.DIRECT_SUPPORT),
    (re.compile(r"\bindirect support\b", re.IGNORECASE), RoleLabel.INDIRECT_SUPPORT),
]


def parse_response(response: str) -> RoleLabel:
    """Last role name mentioned wins; models typically end with the verdict."""
    last: Optional[Tuple[int, RoleLabel]] = None
    for pattern, label in _ROLE_PATTERNS:
        for match in pattern.finditer(response):
            if last is None or match.start() > last[0]:
                last = (match.start(), label)
    if last is None:
        raise UnparseableResponse(f"no role name in response: {response[:120]!r}")
    return last[1]


class ChatBackend:
    """Abstract chat-completion backend."""

    def complete(self, prompt: str, config: BackendConfig) -> str:
        raise NotImplementedError


class MockBackend(ChatBackend):
    """Deterministic backend that answers with the keyword classifier's label.

    Extracts the target statement (the final Statement: line of the prompt)
    and classifies it; statements with no keyword produce a refusal, which
    the parser reports as UnparseableResponse.
    """

    def __init__(self, taxonomy: KeywordTaxonomy = KeywordTaxonomy()):
        self.taxonomy = taxonomy

    def complete(self, prompt: str, config: BackendConfig) -> str:
        marker = 'Statement: "'
        start = prompt.rfind(marker)
        end = prompt.rfind('"\nRole:')
        if start == -1 or end <= start:
            return "I cannot find a statement to classify."
        statement = prompt[start + len(marker) : end]
        try:
            label = classify_statement(statement, self.taxonomy)
        except NoKeywordMatch:
            return "I cannot determine this."
        return label.value


class HttpBackend(ChatBackend):
    """Generic chat-completion endpoint: POST {model, messages, temperature}."""

    def complete(self, prompt: str, config: BackendConfig) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": config.temperature,
        }
        try:
            resp = requests.post(
                config.endpoint_url, json=body, headers=headers, timeout=config.timeout
            )
            resp.raise_for_status()
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except requests.RequestException as exc:
            raise TransportFailure(str(exc)) from exc
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportFailure(f"malformed completion response: {exc}") from exc


@dataclass(frozen=True)
class BatchOutcome:
    record_id: str
    label: Optional[RoleLabel]
    error: Optional[str]
    raw_response_hash: Optional[str]

    @property
    def ok(self) -> bool:
        return self.label is not None


def _classify_one(
    record: ContributionRecord,
    backend: ChatBackend,
    template: PromptTemplate,
    config: BackendConfig,
    sleep: Callable[[float], None],
) -> BatchOutcome:
    try:
        prompt = build_prompt(record, template)
    except EmptyStatement as exc:
        return BatchOutcome(record.record_id, None, f"EmptyStatement: {exc}", None)

    response = None
    for attempt in range(config.max_retries + 1):
        try:
            response = backend.complete(prompt, config)
            break
        except TransportFailure as exc:
            if attempt == config.max_retries:
                return BatchOutcome(record.record_id, None, f"TransportFailure: {exc}", None)
            sleep(config.retry_backoff * (2**attempt))

    digest = hashlib.sha256(response.encode("utf-8")).hexdigest()
    try:
        label = parse_response(response)
    except UnparseableResponse as exc:
        return BatchOutcome(record.record_id, None, f"UnparseableResponse: {exc}", digest)
    return BatchOutcome(record.record_id, label, None, digest)


def classify_batch(
    records: List[ContributionRecord],
    backend: ChatBackend,
    template: PromptTemplate = PromptTemplate(),
    config: BackendConfig = BackendConfig(),
    sleep: Callable[[float], None] = time.sleep,
) -> List[BatchOutcome]:
    """Classify every record; per-record failures never abort the batch.

    Results preserve input order. Concurrency is bounded by
    config.max_concurrency; the mock backend is pure, so concurrent runs
    stay deterministic.
    """
    if config.max_concurrency > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=config.max_concurrency) as pool:
            return list(
                pool.map(lambda r: _classify_one(r, backend, template, config, sleep), records)
            )
    return [_classify_one(r, backend, template, config, sleep) for r in records]


def write_outcomes(outcomes: List[BatchOutcome], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for out in outcomes:
            fh.write(
                json.dumps(
                    {
                        "record_id": out.record_id,
                        "label": out.label.value if out.label else None,
                        "error": out.error,
                        "raw_response_hash": out.raw_response_hash,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_outcomes(path) -> List[BatchOutcome]:
    outcomes = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            data = json.loads(line)
            outcomes.append(
                BatchOutcome(
                    record_id=data["record_id"],
                    label=RoleLabel.from_string(data["label"]) if data.get("label") else None,
                    error=data.get("error"),
                    raw_response_hash=data.get("raw_response_hash"),
                )
            )
    return outcomes
