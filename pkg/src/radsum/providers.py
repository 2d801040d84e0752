"""External-model interfaces and their deterministic mock implementations.

Three provider families are defined: text generation backends, token
embedding providers, and NLI entailment providers. Real models are reached
only over HTTP through a configurable profile; they are never linked
in-process. The mocks are pure functions of their inputs and power every
test in the suite.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence, runtime_checkable

import numpy as np
import requests

from .errors import ProviderError, TransientProviderError
from .text import DEFAULT_TOKENIZER, TokenSeq, split_sentences, tokenize, truncate_tokens

# Prompt block labels; mock backends extract their working text from the
# block under the last matching label. Templates must keep these in sync.
FINDINGS_MARKER = "Findings:"
DRAFT_MARKER = "Draft impression:"

UNIT_NORM_TOLERANCE = 1e-6


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_output_tokens: int = 256
    temperature: float = 0.0
    stop_sequences: tuple[str, ...] = ()
    # Opaque plumbing for mock backends (e.g. report_id); HTTP backends ignore it.
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.max_output_tokens < 1:
            raise ProviderError("max_output_tokens must be >= 1")
        if self.temperature < 0:
            raise ProviderError("temperature must be >= 0")


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    backend_id: str
    latency_ms: int = 0
    truncated: bool = False

    def __post_init__(self) -> None:
        if not self.text and not self.truncated:
            raise ProviderError(
                f"backend {self.backend_id!r} returned empty text without truncation"
            )


@runtime_checkable
class GenerationBackend(Protocol):
    backend_id: str
    max_in_flight: int | None

    def complete(self, request: GenerationRequest) -> GenerationResponse: ...

    def describe(self) -> dict: ...


def extract_block(prompt: str, markers: Sequence[str] = (DRAFT_MARKER, FINDINGS_MARKER)) -> str:
    """Text of the last block labeled by the first marker found.

    A block starts on the line after a full-line marker and runs to the next
    blank line or the end of the prompt.
    """
    for marker in markers:
        pattern = re.compile(rf"^{re.escape(marker)}\n(.*?)(?:\n\n|\Z)", re.M | re.S)
        matches = pattern.findall(prompt)
        if matches:
            return matches[-1].strip()
    raise ProviderError(
        f"prompt contains no block labeled with any of {list(markers)}"
    )


@dataclass
class ExtractiveHeadBackend:
    """Returns the first ``k`` sentences of the prompt's working block."""

    k: int = 1
    backend_id: str = "mock-extractive-head"
    max_in_flight: int | None = None

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        source = extract_block(request.prompt)
        sentences = split_sentences(source)
        text = " ".join(sentences[: self.k])
        return GenerationResponse(text=text, backend_id=self.backend_id, truncated=not text)

    def describe(self) -> dict:
        return {"type": "extractive-head", "k": self.k, "backend_id": self.backend_id}


@dataclass
class KeywordSelectBackend:
    """Returns the working block's sentences that contain a configured term.

    Matches are case-insensitive on the normalized token level; selected
    sentences come back one per line, ready for bullet formatting.
    """

    keywords: tuple[str, ...] = ()
    backend_id: str = "mock-keyword-select"
    max_in_flight: int | None = None

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        source = extract_block(request.prompt)
        wanted = {k.lower() for k in self.keywords}
        lines = [
            sentence
            for sentence in split_sentences(source)
            if wanted & set(tokenize(sentence, DEFAULT_TOKENIZER))
        ]
        text = "\n".join(lines)
        return GenerationResponse(text=text, backend_id=self.backend_id, truncated=not text)

    def describe(self) -> dict:
        return {
            "type": "keyword-select",
            "keywords": sorted(self.keywords),
            "backend_id": self.backend_id,
        }


@dataclass
class EchoBackend:
    """Returns the prompt's working block verbatim."""

    backend_id: str = "mock-echo"
    max_in_flight: int | None = None

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        text = extract_block(request.prompt)
        return GenerationResponse(text=text, backend_id=self.backend_id, truncated=not text)

    def describe(self) -> dict:
        return {"type": "echo", "backend_id": self.backend_id}


@dataclass
class ReferenceBackend:
    """Oracle backend: answers with the reference impression of the report
    named in the request metadata, ignoring the prompt entirely."""

    impressions: dict[str, str]
    dataset_name: str = ""
    backend_id: str = "mock-reference"
    max_in_flight: int | None = None

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        report_id = request.metadata.get("report_id")
        if report_id is None or report_id not in self.impressions:
            raise ProviderError(
                f"reference backend has no impression for report {report_id!r}"
            )
        return GenerationResponse(
            text=self.impressions[report_id], backend_id=self.backend_id
        )

    def describe(self) -> dict:
        return {
            "type": "reference",
            "dataset": self.dataset_name,
            "backend_id": self.backend_id,
        }


def generate(
    request: GenerationRequest,
    backend: GenerationBackend,
    retries: int = 2,
    backoff_s: float = 0.25,
) -> GenerationResponse:
    """Run one generation with retry-on-transient-failure and a token cap.

    Transient failures are retried with exponential backoff up to ``retries``
    extra attempts; the final error names the backend and the attempt count.
    The response never carries more than ``max_output_tokens`` tokens (counted
    with the default tokenizer config).
    """
    attempts = retries + 1
    last_error: Exception | None = None
    for attempt in range(attempts):
        start = time.monotonic()
        try:
            response = backend.complete(request)
        except TransientProviderError as exc:
            last_error = exc
            if attempt < attempts - 1 and backoff_s > 0:
                time.sleep(backoff_s * (2**attempt))
            continue
        latency_ms = int((time.monotonic() - start) * 1000)
        text, truncated = truncate_tokens(response.text, request.max_output_tokens)
        return GenerationResponse(
            text=text,
            backend_id=response.backend_id,
            latency_ms=latency_ms,
            truncated=response.truncated or truncated,
        )
    raise ProviderError(
        f"backend {backend.backend_id!r} failed after {attempts} attempts: {last_error}"
    )


# ---------------------------------------------------------------------------
# Embeddings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingMatrix:
    tokens: tuple[str, ...]
    vectors: np.ndarray  # shape (len(tokens), dimension), unit rows
    dimension: int


@runtime_checkable
class EmbeddingProvider(Protocol):
    max_in_flight: int | None

    def vectors_for(self, tokens: TokenSeq) -> np.ndarray: ...

    def describe(self) -> dict: ...


@dataclass
class OneHotEmbedding:
    """Token -> standard basis vector over a fixed vocabulary."""

    vocabulary: tuple[str, ...]
    max_in_flight: int | None = None

    def vectors_for(self, tokens: TokenSeq) -> np.ndarray:
        index = {token: i for i, token in enumerate(self.vocabulary)}
        out = np.zeros((len(tokens), len(self.vocabulary)))
        for row, token in enumerate(tokens):
            if token not in index:
                raise ProviderError(
                    f"token {token!r} not in one-hot vocabulary ({len(index)} entries)"
                )
            out[row, index[token]] = 1.0
        return out

    def describe(self) -> dict:
        return {"type": "one-hot", "vocabulary_size": len(self.vocabulary)}


@dataclass
class HashEmbedding:
    """Token -> pseudorandom unit vector derived from a hash of the token.

    Equal tokens map to equal vectors across calls and platforms; distinct
    tokens land in near-orthogonal directions for reasonable dimensions.
    """

    dimension: int = 64
    seed: int = 0
    max_in_flight: int | None = None

    def _vector(self, token: str) -> np.ndarray:
        digest = hashlib.sha256(f"{self.seed}:{token}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        vec = rng.standard_normal(self.dimension)
        return vec / np.linalg.norm(vec)

    def vectors_for(self, tokens: TokenSeq) -> np.ndarray:
        return np.stack([self._vector(token) for token in tokens])

    def describe(self) -> dict:
        return {"type": "hash", "dimension": self.dimension, "seed": self.seed}


@dataclass
class FileBackedEmbedding:
    """Precomputed token vectors loaded from a JSON file.

    File schema: ``{"dimension": d, "vectors": {token: [floats...]}}``.
    """

    path: str
    max_in_flight: int | None = None

    def __post_init__(self) -> None:
        with open(self.path, encoding="utf-8") as handle:
            data = json.load(handle)
        self.dimension = int(data["dimension"])
        self._vectors = {
            token: np.asarray(vec, dtype=float) for token, vec in data["vectors"].items()
        }
        for token, vec in self._vectors.items():
            if vec.shape != (self.dimension,):
                raise ProviderError(
                    f"stored vector for {token!r} has dimension {vec.shape}, "
                    f"expected ({self.dimension},)"
                )

    def vectors_for(self, tokens: TokenSeq) -> np.ndarray:
        rows = []
        for token in tokens:
            if token not in self._vectors:
                raise ProviderError(f"no stored vector for token {token!r}")
            rows.append(self._vectors[token])
        return np.stack(rows)

    def describe(self) -> dict:
        return {"type": "file", "path": str(self.path), "dimension": self.dimension}


def embed(tokens: TokenSeq, provider: EmbeddingProvider) -> EmbeddingMatrix:
    """One unit vector per token, with the unit norm enforced.

    Vectors already within tolerance of unit norm pass through untouched so
    file-backed providers return exactly their stored vectors; anything else
    is renormalized, and a near-zero norm is a provider error.
    """
    if not tokens:
        raise ProviderError("cannot embed an empty token sequence")
    vectors = np.asarray(provider.vectors_for(tokens), dtype=float)
    if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
        raise ProviderError(
            f"provider returned shape {vectors.shape} for {len(tokens)} tokens"
        )
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms < 1e-12) or not np.all(np.isfinite(vectors)):
        raise ProviderError("provider returned a zero or non-finite vector")
    off = np.abs(norms - 1.0) > UNIT_NORM_TOLERANCE
    if np.any(off):
        vectors = vectors.copy()
        vectors[off] = vectors[off] / norms[off, None]
    return EmbeddingMatrix(
        tokens=tuple(tokens), vectors=vectors, dimension=vectors.shape[1]
    )


# ---------------------------------------------------------------------------
# NLI entailment
# ---------------------------------------------------------------------------


@runtime_checkable
class NliProvider(Protocol):
    max_in_flight: int | None

    def entailment(self, premise: str, hypothesis: str) -> float: ...

    def describe(self) -> dict: ...


@dataclass
class OverlapNli:
    """Entailment proxy: fraction of hypothesis token types present in the premise."""

    max_in_flight: int | None = None

    def entailment(self, premise: str, hypothesis: str) -> float:
        hyp = set(tokenize(hypothesis, DEFAULT_TOKENIZER))
        if not hyp:
            return 0.0
        prem = set(tokenize(premise, DEFAULT_TOKENIZER))
        return len(hyp & prem) / len(hyp)

    def describe(self) -> dict:
        return {"type": "overlap"}


@dataclass
class ContainmentNli:
    """Entailment proxy: 1.0 iff the normalized hypothesis occurs verbatim
    inside the normalized premise, else 0.0."""

    max_in_flight: int | None = None

    def entailment(self, premise: str, hypothesis: str) -> float:
        prem = " ".join(tokenize(premise, DEFAULT_TOKENIZER))
        hyp = " ".join(tokenize(hypothesis, DEFAULT_TOKENIZER))
        if not hyp:
            return 0.0
        return 1.0 if hyp in prem else 0.0

    def describe(self) -> dict:
        return {"type": "containment"}


def entail(premise: str, hypothesis: str, provider: NliProvider) -> float:
    """Entailment probability of ``hypothesis`` given ``premise``, in [0, 1]."""
    if not premise.strip() or not hypothesis.strip():
        raise ProviderError("entailment requires non-empty premise and hypothesis")
    try:
        value = float(provider.entailment(premise, hypothesis))
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(f"NLI provider failed: {exc}") from exc
    if not 0.0 <= value <= 1.0:
        raise ProviderError(f"NLI provider returned {value} outside [0, 1]")
    return value


# ---------------------------------------------------------------------------
# HTTP remotes
# ---------------------------------------------------------------------------

# transport(url, body, headers, timeout_s) -> (status_code, parsed_json)
Transport = Callable[[str, dict, dict, float], tuple[int, object]]


def _requests_transport(url: str, body: dict, headers: dict, timeout_s: float):
    try:
        response = requests.post(url, json=body, headers=headers, timeout=timeout_s)
    except requests.RequestException as exc:
        raise TransientProviderError(f"transport failure for {url}: {exc}") from exc
    try:
        payload = response.json()
    except ValueError:
        payload = None
    return response.status_code, payload


def _dig(payload: object, path: Sequence[object]) -> object:
    node = payload
    for step in path:
        if isinstance(step, int) and isinstance(node, list) and -len(node) <= step < len(node):
            node = node[step]
        elif isinstance(node, dict) and step in node:
            node = node[step]
        else:
            raise ProviderError("invalid provider response")
    return node


@dataclass
class HttpProfile:
    """Wire shape of one remote endpoint; everything is configurable so any
    chat-completion-style server can be targeted without code changes."""

    base_url: str
    path: str = "/v1/completions"
    auth_header: str = "Authorization"
    auth_scheme: str = "Bearer"
    auth_token_env: str | None = None
    request_fields: dict = field(default_factory=dict)
    static_fields: dict = field(default_factory=dict)
    response_path: tuple = ("text",)
    timeout_s: float = 30.0
    max_retries: int = 2
    max_in_flight: int | None = 4
    backend_id: str = "remote"

    @classmethod
    def from_dict(cls, data: dict) -> "HttpProfile":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in data.items() if k in known}
        if "response_path" in kwargs:
            kwargs["response_path"] = tuple(kwargs["response_path"])
        return cls(**kwargs)

    def headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.auth_token_env:
            token = os.environ.get(self.auth_token_env, "")
            if token:
                value = f"{self.auth_scheme} {token}".strip()
                headers[self.auth_header] = value
        return headers

    def url(self) -> str:
        return self.base_url.rstrip("/") + self.path

    def describe(self) -> dict:
        return {
            "type": "http",
            "url": self.url(),
            "backend_id": self.backend_id,
            "response_path": list(self.response_path),
        }


@dataclass
class HttpGenerationBackend:
    profile: HttpProfile
    transport: Transport = _requests_transport

    def __post_init__(self) -> None:
        self.backend_id = self.profile.backend_id
        self.max_in_flight = self.profile.max_in_flight

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        fields = self.profile.request_fields
        body = dict(self.profile.static_fields)
        body[fields.get("prompt", "prompt")] = request.prompt
        body[fields.get("max_tokens", "max_tokens")] = request.max_output_tokens
        body[fields.get("temperature", "temperature")] = request.temperature
        if request.stop_sequences:
            body[fields.get("stop", "stop")] = list(request.stop_sequences)
        status, payload = self.transport(
            self.profile.url(), body, self.profile.headers(), self.profile.timeout_s
        )
        if status >= 500:
            raise TransientProviderError(f"{self.backend_id}: server error {status}")
        if status != 200:
            raise ProviderError(f"{self.backend_id}: request rejected with {status}")
        text = _dig(payload, self.profile.response_path)
        if not isinstance(text, str):
            raise ProviderError("invalid provider response")
        return GenerationResponse(text=text, backend_id=self.backend_id, truncated=not text)

    def describe(self) -> dict:
        return self.profile.describe()


@dataclass
class HttpNliProvider:
    profile: HttpProfile
    transport: Transport = _requests_transport

    def __post_init__(self) -> None:
        self.max_in_flight = self.profile.max_in_flight

    def entailment(self, premise: str, hypothesis: str) -> float:
        fields = self.profile.request_fields
        body = dict(self.profile.static_fields)
        body[fields.get("premise", "premise")] = premise
        body[fields.get("hypothesis", "hypothesis")] = hypothesis
        status, payload = self.transport(
            self.profile.url(), body, self.profile.headers(), self.profile.timeout_s
        )
        if status >= 500:
            raise TransientProviderError(f"{self.profile.backend_id}: server error {status}")
        if status != 200:
            raise ProviderError(f"{self.profile.backend_id}: request rejected with {status}")
        value = _dig(payload, self.profile.response_path)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ProviderError("invalid provider response")
        return float(value)

    def describe(self) -> dict:
        return self.profile.describe()


@dataclass
class HttpEmbeddingProvider:
    profile: HttpProfile
    transport: Transport = _requests_transport

    def __post_init__(self) -> None:
        self.max_in_flight = self.profile.max_in_flight

    def vectors_for(self, tokens: TokenSeq) -> np.ndarray:
        fields = self.profile.request_fields
        body = dict(self.profile.static_fields)
        body[fields.get("tokens", "tokens")] = list(tokens)
        status, payload = self.transport(
            self.profile.url(), body, self.profile.headers(), self.profile.timeout_s
        )
        if status >= 500:
            raise TransientProviderError(f"{self.profile.backend_id}: server error {status}")
        if status != 200:
            raise ProviderError(f"{self.profile.backend_id}: request rejected with {status}")
        rows = _dig(payload, self.profile.response_path)
        if not isinstance(rows, list) or len(rows) != len(tokens):
            raise ProviderError("invalid provider response")
        try:
            return np.asarray(rows, dtype=float)
        except (TypeError, ValueError):
            raise ProviderError("invalid provider response") from None

    def describe(self) -> dict:
        return self.profile.describe()


# ---------------------------------------------------------------------------
# Profile-driven construction
# ---------------------------------------------------------------------------


def build_generation_backend(spec: dict, impressions: dict[str, str] | None = None,
                             dataset_name: str = "") -> GenerationBackend:
    """Instantiate a backend from a profile entry.

    ``impressions`` is required for the reference oracle type and is supplied
    by the harness from the dataset under evaluation.
    """
    kind = spec.get("type")
    if kind == "extractive-head":
        return ExtractiveHeadBackend(
            k=int(spec.get("k", 1)),
            backend_id=spec.get("backend_id", f"mock-extractive-head-k{spec.get('k', 1)}"),
        )
    if kind == "keyword-select":
        return KeywordSelectBackend(
            keywords=tuple(spec.get("keywords", ())),
            backend_id=spec.get("backend_id", "mock-keyword-select"),
        )
    if kind == "echo":
        return EchoBackend(backend_id=spec.get("backend_id", "mock-echo"))
    if kind == "reference":
        if impressions is None:
            raise ProviderError("reference backend needs the dataset's impressions")
        return ReferenceBackend(
            impressions=impressions,
            dataset_name=dataset_name,
            backend_id=spec.get("backend_id", "mock-reference"),
        )
    if kind == "http":
        return HttpGenerationBackend(HttpProfile.from_dict(spec))
    raise ProviderError(f"unknown generation backend type {kind!r}")


def build_embedding_provider(spec: dict) -> EmbeddingProvider:
    kind = spec.get("type")
    if kind == "one-hot":
        return OneHotEmbedding(vocabulary=tuple(spec["vocabulary"]))
    if kind == "hash":
        return HashEmbedding(
            dimension=int(spec.get("dimension", 64)), seed=int(spec.get("seed", 0))
        )
    if kind == "file":
        return FileBackedEmbedding(path=spec["path"])
    if kind == "http":
        return HttpEmbeddingProvider(HttpProfile.from_dict(spec))
    raise ProviderError(f"unknown embedding provider type {kind!r}")


def build_nli_provider(spec: dict) -> NliProvider:
    kind = spec.get("type")
    if kind == "overlap":
        return OverlapNli()
    if kind == "containment":
        return ContainmentNli()
    if kind == "http":
        return HttpNliProvider(HttpProfile.from_dict(spec))
    raise ProviderError(f"unknown NLI provider type {kind!r}")


def load_provider_profile(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)
