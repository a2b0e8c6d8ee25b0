"""Dataset construction: sentence-aware token chunking, top-k retrieval,
knowledge-block input assembly, preference labeling, and rejection filtering.

The token counter is pluggable because token counts are a property of
whatever model consumes the data; the default counts one token per CJK
character and one per whitespace-delimited run otherwise, which is stable
and dependency-free.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyText, RangeError

logger = logging.getLogger(__name__)

SENTENCE_MARKS = "。！？.!?；;"

KTO_TRUE_THRESHOLD = 0.90
KTO_FALSE_THRESHOLD = 0.60
REJECTION_THRESHOLD = 8.5


def _cjkish(ch: str) -> bool:
    cp = ord(ch)
    return (
        0x3000 <= cp <= 0x303F   # CJK punctuation
        or 0x3400 <= cp <= 0x4DBF
        or 0x4E00 <= cp <= 0x9FFF
        or 0xF900 <= cp <= 0xFAFF
        or 0xFF00 <= cp <= 0xFFEF  # fullwidth forms
    )


class TokenCounter(Protocol):
    def count(self, text: str) -> int: ...

    def split_at(self, text: str, n: int) -> int:
        """Char offset just after the n-th token (token boundary split)."""
        ...


class CharClassTokenizer:
    """One token per CJK char; one per non-space run otherwise."""

    def spans(self, text: str) -> Iterable[tuple[int, int]]:
        i = 0
        n = len(text)
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if _cjkish(ch):
                yield (i, i + 1)
                i += 1
                continue
            j = i
            while j < n and not text[j].isspace() and not _cjkish(text[j]):
                j += 1
            yield (i, j)
            i = j

    def count(self, text: str) -> int:
        return sum(1 for _ in self.spans(text))

    def split_at(self, text: str, n: int) -> int:
        seen = 0
        for _, end in self.spans(text):
            seen += 1
            if seen == n:
                return end
        return len(text)


DEFAULT_TOKENIZER = CharClassTokenizer()


@dataclass(frozen=True)
class Chunk:
    index: int
    text: str
    token_count: int


def _sentence_pieces(text: str) -> list[str]:
    pieces: list[str] = []
    start = 0
    for i, ch in enumerate(text):
        if ch in SENTENCE_MARKS:
            pieces.append(text[start:i + 1])
            start = i + 1
    if start < len(text):
        pieces.append(text[start:])
    return pieces


def chunk_text(
    text: str,
    max_tokens: int = 512,
    tokenizer: TokenCounter = DEFAULT_TOKENIZER,
    overlap: int = 0,
) -> list[Chunk]:
    """Greedy sentence-aligned packing into chunks of at most ``max_tokens``.

    Each chunk ends at the last sentence-final punctuation mark whose
    inclusion fits the budget; a single sentence over the budget is
    hard-split at a token boundary (logged). With ``overlap=0`` the chunk
    texts partition the source byte-exactly; a positive overlap carries
    trailing sentences of the previous chunk into the next one and gives up
    the partition property.
    """
    if not text:
        raise EmptyText("nothing to chunk")
    if max_tokens < 1:
        raise RangeError("max_tokens must be >= 1")
    if overlap < 0 or overlap >= max_tokens:
        raise RangeError("overlap must be in [0, max_tokens)")

    # Sentence pieces, with any over-budget sentence hard-split at token
    # boundaries up front so every piece fits the budget on its own.
    pieces: list[str] = []
    for piece in _sentence_pieces(text):
        count = tokenizer.count(piece)
        if count > max_tokens:
            logger.warning(
                "sentence of %d tokens exceeds the %d-token budget; hard-splitting",
                count, max_tokens,
            )
            while count > max_tokens:
                cut = tokenizer.split_at(piece, max_tokens)
                pieces.append(piece[:cut])
                piece = piece[cut:]
                count = tokenizer.count(piece)
        if piece:
            pieces.append(piece)

    grouped: list[list[str]] = []
    current: list[str] = []
    current_tokens = 0
    for piece in pieces:
        count = tokenizer.count(piece)
        if current and current_tokens + count > max_tokens:
            grouped.append(current)
            tail: list[str] = []
            if overlap > 0:
                budget = overlap
                for prev in reversed(current):
                    prev_count = tokenizer.count(prev)
                    if prev_count > budget:
                        break
                    tail.insert(0, prev)
                    budget -= prev_count
                while tail and sum(tokenizer.count(q) for q in tail) + count > max_tokens:
                    tail.pop(0)
            current = tail
            current_tokens = sum(tokenizer.count(q) for q in current)
        current.append(piece)
        current_tokens += count
    if current:
        grouped.append(current)

    return [
        Chunk(index=i, text="".join(group), token_count=tokenizer.count("".join(group)))
        for i, group in enumerate(grouped)
    ]


# ---------------------------------------------------------------------------
# Retrieval
# ---------------------------------------------------------------------------

def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def select_top_k(
    query: Sequence[float], chunks: Sequence[Sequence[float]], k: int = 3
) -> list[int]:
    """Indices of the k most cosine-similar chunk vectors, ties to lower index."""
    if k < 1:
        raise RangeError("k must be >= 1")
    q = np.asarray(query, dtype=float)
    sims: list[tuple[float, int]] = []
    for i, vec in enumerate(chunks):
        v = np.asarray(vec, dtype=float)
        if v.shape != q.shape:
            raise DimensionMismatch(
                f"chunk {i} has dimension {v.shape}, query has {q.shape}"
            )
        sims.append((cosine_similarity(q, v), i))
    ranked = sorted(sims, key=lambda pair: (-pair[0], pair[1]))
    return [i for _, i in ranked[:k]]


def assemble_rag_input(case_text: str, chunks: Sequence[str]) -> str:
    """Append numbered knowledge blocks to the case text.

    Blocks render as 【Knowledge Base i】content, newline-joined, numbering
    from 1. With no chunks the case text comes back unchanged.
    """
    if not chunks:
        return case_text
    blocks = "\n".join(
        f"【Knowledge Base {i + 1}】{content}" for i, content in enumerate(chunks)
    )
    return case_text + blocks


# ---------------------------------------------------------------------------
# Preference labeling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KtoSample:
    instruction: str
    input: str
    output: str
    label: bool
    provenance: str  # "original" | "model-generated"
    similarity: float | None = None

    def __post_init__(self) -> None:
        if self.provenance == "original":
            if not self.label:
                raise RangeError("original samples are always labeled true")
        elif self.provenance == "model-generated":
            if self.similarity is None:
                raise RangeError("model-generated samples need a similarity")
        else:
            raise RangeError(f"unknown provenance {self.provenance!r}")

    def to_dict(self) -> dict:
        doc = {
            "instruction": self.instruction,
            "input": self.input,
            "output": self.output,
            "label": self.label,
            "provenance": self.provenance,
        }
        if self.similarity is not None:
            doc["similarity"] = self.similarity
        return doc


def kto_label(
    similarity: float,
    true_threshold: float = KTO_TRUE_THRESHOLD,
    false_threshold: float = KTO_FALSE_THRESHOLD,
) -> str:
    """Partition a similarity fraction into "true" / "false" / "discard".

    Strictly above the true threshold is "true", strictly below the false
    threshold is "false"; the band between (both boundaries included) is
    unassigned and discarded.
    """
    if not 0.0 <= similarity <= 1.0:
        raise RangeError(f"similarity must be in [0, 1], got {similarity}")
    if similarity > true_threshold:
        return "true"
    if similarity < false_threshold:
        return "false"
    return "discard"


def label_generated_sample(
    instruction: str,
    input_text: str,
    output: str,
    similarity: float,
    true_threshold: float = KTO_TRUE_THRESHOLD,
    false_threshold: float = KTO_FALSE_THRESHOLD,
) -> KtoSample | None:
    """Build a labeled sample from a model generation, or None for the discard band."""
    verdict = kto_label(similarity, true_threshold, false_threshold)
    if verdict == "discard":
        return None
    return KtoSample(
        instruction=instruction,
        input=input_text,
        output=output,
        label=(verdict == "true"),
        provenance="model-generated",
        similarity=similarity,
    )


def original_sample(instruction: str, input_text: str, output: str) -> KtoSample:
    return KtoSample(
        instruction=instruction, input=input_text, output=output,
        label=True, provenance="original",
    )


# ---------------------------------------------------------------------------
# Rejection filtering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoredResponse:
    sample_id: str
    response: str
    judge_score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.judge_score <= 10.0:
            raise RangeError(f"judge_score must be in [0, 10], got {self.judge_score}")


def rejection_filter(
    responses: Sequence[ScoredResponse], threshold: float = REJECTION_THRESHOLD
) -> list[ScoredResponse]:
    """Keep responses scoring strictly above the threshold, order preserved.

    The comparison runs in decimal so a score sitting exactly on the
    threshold is dropped unambiguously.
    """
    bar = Decimal(str(threshold))
    return [r for r in responses if Decimal(str(r.judge_score)) > bar]


# ---------------------------------------------------------------------------
# Embedding providers
# ---------------------------------------------------------------------------

class EmbeddingProvider(Protocol):
    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class HashNgramEmbedding:
    """Deterministic character-bigram hashing embedding.

    A stand-in local provider for retrieval and similarity when no external
    embedding service is configured. Not a semantic model; adequate for
    surface-overlap ranking and fully reproducible.
    """

    def __init__(self, dim: int = 256, n: int = 2):
        self.dim = dim
        self.n = n

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self._one(t) for t in texts]

    def _one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=float)
        padded = text if len(text) >= self.n else text + " " * (self.n - len(text))
        for i in range(len(padded) - self.n + 1):
            gram = padded[i:i + self.n]
            digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=4).digest()
            vec[int.from_bytes(digest, "little") % self.dim] += 1.0
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


class RemoteEmbedding:
    """OpenAI-compatible /embeddings client; credential comes from an env var."""

    def __init__(self, endpoint: str, model: str = "", auth_env: str = "",
                 timeout: float = 30.0):
        self.endpoint = endpoint
        self.model = model
        self.auth_env = auth_env
        self.timeout = timeout

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        import os

        import httpx

        headers = {}
        if self.auth_env:
            key = os.environ.get(self.auth_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        body = {"input": list(texts)}
        if self.model:
            body["model"] = self.model
        response = httpx.post(self.endpoint, json=body, headers=headers,
                              timeout=self.timeout)
        response.raise_for_status()
        data = response.json()["data"]
        return [np.asarray(item["embedding"], dtype=float) for item in data]


def text_similarity(provider: EmbeddingProvider, a: str, b: str) -> float:
    """Cosine similarity of two texts under a provider, clipped to [0, 1]."""
    va, vb = provider.embed([a, b])
    return min(1.0, max(0.0, cosine_similarity(va, vb)))
