"""Summarizer backends, one configured per stage.

``extractive-oracle`` is a deterministic, query-aware TF sentence
selector that stands in for a trained model. ``remote`` POSTs to an
inference service::

    request  {"query": str | null, "source": str, "max_output_tokens": int, "stage": int}
    response {"summary": str}

Set ``STAGESUM_AUTH_HEADER`` to forward an ``Authorization`` header.
"""

from __future__ import annotations

import logging
import os
import re
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Any, Callable, Mapping, Sequence

import httpx

from .errors import BackendError, BatchError, ConfigError, ProtocolError
from .text import Unit, count_tokens, split_sentences, tokenize, truncate_tokens

logger = logging.getLogger(__name__)

AUTH_ENV = "STAGESUM_AUTH_HEADER"
KINDS = ("extractive-oracle", "remote")
COARSE_OUTPUT_TOKENS = 100
FINE_OUTPUT_TOKENS = 400

STOPWORDS: frozenset[str] = frozenset(
    """
    a about above after again against all also am an and any are as at be because
    been before being below between both but by can could did do does doing down
    during each few for from further had has have having he her here hers herself
    him himself his how i if in into is it its itself just me more most my myself
    no nor not now of off on once only or other our ours ourselves out over own
    same she should so some such than that the their theirs them themselves then
    there these they this those through to too under until up very was we were
    what when where which while who whom why will with would you your yours
    yourself yourselves s t d ll m re ve
    """.split()
)

_SEPARATOR_RE = re.compile(r"</?s>")


@dataclass(frozen=True)
class SummarizeRequest:
    source: str
    max_output_tokens: int
    query: str | None = None
    stage_index: int = 1

    def __post_init__(self):
        if not self.source.strip():
            raise ValueError("summarize request has an empty source")
        if self.max_output_tokens < 1:
            raise ValueError(f"max_output_tokens must be >= 1, got {self.max_output_tokens}")

    def payload(self) -> dict[str, Any]:
        return {
            "query": self.query,
            "source": self.source,
            "max_output_tokens": self.max_output_tokens,
            "stage": self.stage_index,
        }


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "extractive-oracle"
    endpoint: str | None = None
    timeout: float = 60.0
    max_in_flight: int = 4
    retries: int = 2
    backoff: float = 1.0
    # None picks the coarse or fine default depending on where the spec is used
    max_output_tokens: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown backend kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "remote" and not self.endpoint:
            raise ConfigError("remote backend requires an endpoint")
        if self.max_in_flight < 1:
            raise ConfigError(f"max_in_flight must be >= 1, got {self.max_in_flight}")
        if self.retries < 0:
            raise ConfigError(f"retries must be >= 0, got {self.retries}")
        if self.max_output_tokens is not None and self.max_output_tokens < 1:
            raise ConfigError(f"max_output_tokens must be >= 1, got {self.max_output_tokens}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> BackendSpec:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown backend option(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def output_tokens(self, fine: bool) -> int:
        if self.max_output_tokens is not None:
            return self.max_output_tokens
        return FINE_OUTPUT_TOKENS if fine else COARSE_OUTPUT_TOKENS


def build_tf(source: str, query: str | None = None) -> Counter[str]:
    """Token counts of the source, with each query token adding 2."""
    tf = Counter(tokenize(source))
    if query:
        for tok in tokenize(query):
            tf[tok] += 2
    return tf


def _content_tokens(text: str) -> set[str]:
    return {
        tok for tok in tokenize(text)
        if tok not in STOPWORDS and any(ch.isalnum() for ch in tok)
    }


def extractive_oracle_score(sentence: Unit, tf: Mapping[str, int]) -> float:
    """Sum of tf over the sentence's distinct content tokens, over (1 + sentence length)."""
    total = sum(tf.get(tok, 0) for tok in _content_tokens(sentence.text))
    return total / (1 + count_tokens(sentence.text))


def oracle_summarize(req: SummarizeRequest) -> str:
    cleaned = _SEPARATOR_RE.sub(" ", req.source)
    sentences = split_sentences(cleaned)
    if not sentences:
        return truncate_tokens(req.source, req.max_output_tokens)
    tf = build_tf(cleaned, req.query)
    scores = [extractive_oracle_score(s, tf) for s in sentences]
    ranked = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))

    budget = req.max_output_tokens
    picked: list[int] = []
    used = 0
    for i in ranked:
        size = count_tokens(sentences[i].text)
        if used + size <= budget:
            picked.append(i)
            used += size
    if not picked:
        return truncate_tokens(sentences[ranked[0]].text, budget)
    return " ".join(sentences[i].text for i in sorted(picked))


class Summarizer:
    """Callable front for one :class:`BackendSpec`; safe to share across threads."""

    def __init__(
        self,
        spec: BackendSpec,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.spec = spec
        self._sleep = sleep
        self._client: httpx.Client | None = None
        if spec.kind == "remote":
            headers = {}
            auth = os.environ.get(AUTH_ENV)
            if auth:
                headers["Authorization"] = auth
            self._client = httpx.Client(timeout=spec.timeout, headers=headers, transport=transport)

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def __enter__(self) -> Summarizer:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def summarize(self, req: SummarizeRequest) -> str:
        if self.spec.kind == "extractive-oracle":
            return oracle_summarize(req)
        return self._remote(req)

    def _remote(self, req: SummarizeRequest) -> str:
        meta = {"endpoint": self.spec.endpoint, "stage": req.stage_index}
        attempts = self.spec.retries + 1
        last: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                delay = self.spec.backoff * 2 ** (attempt - 1)
                logger.warning("retrying %s in %.1fs after: %s", self.spec.endpoint, delay, last)
                self._sleep(delay)
            try:
                resp = self._client.post(self.spec.endpoint, json=req.payload())
            except httpx.HTTPError as exc:
                last = exc
                continue
            if not resp.is_success:
                last = BackendError(f"HTTP {resp.status_code}")
                continue
            return self._parse(resp, req, meta)
        raise BackendError(
            f"backend {self.spec.endpoint} failed after {attempts} attempt(s): {last}",
            {**meta, "attempts": attempts},
        )

    @staticmethod
    def _parse(resp: httpx.Response, req: SummarizeRequest, meta: dict) -> str:
        try:
            body = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"response is not JSON: {exc}", meta) from exc
        summary = body.get("summary") if isinstance(body, dict) else None
        if not isinstance(summary, str):
            raise ProtocolError("response has no string 'summary' field", meta)
        if not summary.strip():
            raise ProtocolError("backend returned an empty summary", meta)
        if count_tokens(summary) > req.max_output_tokens:
            summary = truncate_tokens(summary, req.max_output_tokens)
        return summary

    def summarize_batch(self, reqs: Sequence[SummarizeRequest]) -> list[str]:
        """Summaries in input order, with at most ``max_in_flight`` calls outstanding."""
        if self.spec.max_in_flight == 1 or len(reqs) <= 1:
            out = []
            for i, req in enumerate(reqs):
                try:
                    out.append(self.summarize(req))
                except Exception as exc:
                    raise BatchError(i, exc) from exc
            return out
        with ThreadPoolExecutor(max_workers=self.spec.max_in_flight) as pool:
            futures = [pool.submit(self.summarize, req) for req in reqs]
            out = []
            for i, fut in enumerate(futures):
                try:
                    out.append(fut.result())
                except Exception as exc:
                    for pending in futures[i + 1 :]:
                        pending.cancel()
                    raise BatchError(i, exc) from exc
            return out


def summarize(req: SummarizeRequest, spec: BackendSpec) -> str:
    with Summarizer(spec) as backend:
        return backend.summarize(req)


def summarize_batch(reqs: Sequence[SummarizeRequest], spec: BackendSpec) -> list[str]:
    with Summarizer(spec) as backend:
        return backend.summarize_batch(reqs)
