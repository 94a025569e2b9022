"""The trainable set scorer: serialization, forward passes, analytic gradients.

A statement set is serialized to one token stream: a leading CLS token,
then each statement's text in shuffled order (QA pairs joined with
"The answer is").  Tokenization lowercases and splits on whitespace and
punctuation; out-of-vocabulary tokens map to UNK.

The encoder mean-pools token embeddings over the whole stream (CLS
included), applies one tanh hidden layer, and reads out either a scalar
energy or a 2-way logit pair from separate affine heads.  Mean pooling
makes the score exactly invariant under statement permutation, which is
why the forward pass works from token counts: two streams with equal
token multisets produce bit-identical scores.

Gradients are analytic (backprop through the three layers) and are
checked against central finite differences in the test suite.
"""

from __future__ import annotations

import hashlib
import random
import re
import struct
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .datagen import QA, Statement, StatementSet

CLS_TOKEN = "<cls>"
UNK_TOKEN = "<unk>"
CLS_INDEX = 0
UNK_INDEX = 1

QA_JOINER = "The answer is"

_WORD_RE = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")

_MAGIC = b"SCOH"
_FORMAT_VERSION = 1


class CorruptFileError(ValueError):
    """A parameter file is truncated or structurally invalid."""


class VersionMismatchError(ValueError):
    """A parameter file has an unsupported version or an inconsistent header."""


def tokenize(text: str) -> list[str]:
    """Lowercased tokens; punctuation characters become their own tokens."""
    return _WORD_RE.findall(text.lower())


def statement_text(s: Statement) -> str:
    if s.kind == QA:
        return f"{s.question} {QA_JOINER} {s.answer}."
    return s.text


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    index: dict[str, int] = field(compare=False)

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, token: str) -> int:
        return self.index.get(token, UNK_INDEX)

    def sha256(self) -> bytes:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).digest()


def build_vocabulary(sets: Iterable[StatementSet]) -> Vocabulary:
    """Vocabulary over the statement texts of the given sets (training split only)."""
    seen: set[str] = set()
    for s in sets:
        for statement in s.statements:
            seen.update(tokenize(statement_text(statement)))
    seen.discard(CLS_TOKEN)
    seen.discard(UNK_TOKEN)
    tokens = (CLS_TOKEN, UNK_TOKEN, *sorted(seen))
    return Vocabulary(tokens=tokens, index={t: i for i, t in enumerate(tokens)})


@dataclass(frozen=True)
class TokenizedSet:
    """CLS-prefixed token index stream with per-statement boundaries.

    ``offsets[k]`` is the (start, end) slice of the k-th serialized
    statement; ``order[k]`` is its index in the original set.
    """

    tokens: tuple[int, ...]
    offsets: tuple[tuple[int, int], ...]
    order: tuple[int, ...]


def serialize_set(vocab: Vocabulary, s: StatementSet, shuffle_seed: int = 0) -> TokenizedSet:
    """Shuffle statements by ``shuffle_seed``, then tokenize the concatenation."""
    order = list(range(len(s.statements)))
    random.Random(f"serialize:{shuffle_seed}").shuffle(order)
    tokens: list[int] = [CLS_INDEX]
    offsets: list[tuple[int, int]] = []
    for original in order:
        words = tokenize(statement_text(s.statements[original]))
        start = len(tokens)
        tokens.extend(vocab.encode(w) for w in words)
        offsets.append((start, len(tokens)))
    return TokenizedSet(tokens=tuple(tokens), offsets=tuple(offsets), order=tuple(order))


@dataclass
class ModelParams:
    """Embedding table, hidden layer, and the two output heads."""

    vocab: Vocabulary
    emb: np.ndarray        # (V, d)
    w_hidden: np.ndarray   # (d, h)
    b_hidden: np.ndarray   # (h,)
    w_energy: np.ndarray   # (h,)
    b_energy: np.ndarray   # ()
    w_class: np.ndarray    # (h, 2)
    b_class: np.ndarray    # (2,)
    init_seed: int = 0

    @property
    def dims(self) -> tuple[int, int]:
        return self.emb.shape[1], self.w_hidden.shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "emb": self.emb,
            "w_hidden": self.w_hidden,
            "b_hidden": self.b_hidden,
            "w_energy": self.w_energy,
            "b_energy": self.b_energy,
            "w_class": self.w_class,
            "b_class": self.b_class,
        }

    def copy(self) -> "ModelParams":
        return ModelParams(
            vocab=self.vocab,
            init_seed=self.init_seed,
            **{name: arr.copy() for name, arr in self.arrays().items()},
        )

    def validate(self) -> None:
        v, d = self.emb.shape
        h = self.w_hidden.shape[1]
        expected = {
            "emb": (v, d), "w_hidden": (d, h), "b_hidden": (h,),
            "w_energy": (h,), "b_energy": (), "w_class": (h, 2), "b_class": (2,),
        }
        for name, arr in self.arrays().items():
            if arr.shape != expected[name]:
                raise ValueError(f"{name}: shape {arr.shape} != {expected[name]}")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name}: non-finite entries")
        if v != len(self.vocab):
            raise ValueError(f"embedding rows {v} != vocabulary size {len(self.vocab)}")

    @staticmethod
    def init(vocab: Vocabulary, d: int = 64, h: int = 64, seed: int = 0) -> "ModelParams":
        rng = np.random.default_rng(seed)
        params = ModelParams(
            vocab=vocab,
            emb=rng.normal(0.0, 0.1, (len(vocab), d)),
            w_hidden=rng.normal(0.0, 1.0 / np.sqrt(d), (d, h)),
            b_hidden=np.zeros(h),
            w_energy=rng.normal(0.0, 0.1, h),
            b_energy=np.zeros(()),
            w_class=rng.normal(0.0, 0.1, (h, 2)),
            b_class=np.zeros(2),
            init_seed=seed,
        )
        params.validate()
        return params

    @staticmethod
    def zeros(vocab: Vocabulary, d: int = 64, h: int = 64) -> "ModelParams":
        return ModelParams(
            vocab=vocab,
            emb=np.zeros((len(vocab), d)),
            w_hidden=np.zeros((d, h)),
            b_hidden=np.zeros(h),
            w_energy=np.zeros(h),
            b_energy=np.zeros(()),
            w_class=np.zeros((h, 2)),
            b_class=np.zeros(2),
        )


@dataclass(frozen=True)
class TokenCounts:
    """Sparse token histogram of a stream: ascending ids, their counts, total length."""

    ids: np.ndarray
    counts: np.ndarray
    total: int

    @staticmethod
    def of(t: TokenizedSet, vocab_size: int) -> "TokenCounts":
        hist = np.bincount(np.asarray(t.tokens, dtype=np.int64), minlength=vocab_size)
        ids = np.nonzero(hist)[0]
        return TokenCounts(ids=ids, counts=hist[ids].astype(np.float64), total=len(t.tokens))


def _forward(params: ModelParams, tc: TokenCounts) -> tuple[np.ndarray, np.ndarray]:
    pooled = (tc.counts @ params.emb[tc.ids]) / tc.total
    hidden = np.tanh(pooled @ params.w_hidden + params.b_hidden)
    return pooled, hidden


def energy_from_counts(params: ModelParams, tc: TokenCounts) -> float:
    _, hidden = _forward(params, tc)
    return float(hidden @ params.w_energy + params.b_energy)


def energy(params: ModelParams, t: TokenizedSet) -> float:
    """Scalar energy of a serialized set; lower means more consistent."""
    return energy_from_counts(params, TokenCounts.of(t, len(params.vocab)))


def logits_from_counts(params: ModelParams, tc: TokenCounts) -> np.ndarray:
    _, hidden = _forward(params, tc)
    return hidden @ params.w_class + params.b_class


def binary_logits(params: ModelParams, t: TokenizedSet) -> np.ndarray:
    """(consistent, inconsistent) scores from the classification head."""
    return logits_from_counts(params, TokenCounts.of(t, len(params.vocab)))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    exp = np.exp(shifted)
    return exp / exp.sum()


def zero_grads(params: ModelParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.arrays().items()}


def accumulate_grad_energy(
    params: ModelParams,
    tc: TokenCounts,
    into: dict[str, np.ndarray],
    scale: float = 1.0,
) -> float:
    """Add ``scale`` times the energy gradient to ``into``; returns the energy."""
    pooled, hidden = _forward(params, tc)
    value = float(hidden @ params.w_energy + params.b_energy)
    d_hidden = scale * params.w_energy
    _backprop_common(params, tc, pooled, hidden, d_hidden, into)
    into["w_energy"] += scale * hidden
    into["b_energy"] += scale
    return value


def accumulate_grad_logits(
    params: ModelParams,
    tc: TokenCounts,
    upstream: np.ndarray,
    into: dict[str, np.ndarray],
    scale: float = 1.0,
) -> np.ndarray:
    """Add ``scale`` times the gradient of ``upstream @ logits``; returns the logits."""
    pooled, hidden = _forward(params, tc)
    logits = hidden @ params.w_class + params.b_class
    d_hidden = scale * (params.w_class @ upstream)
    _backprop_common(params, tc, pooled, hidden, d_hidden, into)
    into["w_class"] += scale * np.outer(hidden, upstream)
    into["b_class"] += scale * upstream
    return logits


def _backprop_common(
    params: ModelParams,
    tc: TokenCounts,
    pooled: np.ndarray,
    hidden: np.ndarray,
    d_hidden: np.ndarray,
    into: dict[str, np.ndarray],
) -> None:
    d_pre = (1.0 - hidden * hidden) * d_hidden
    into["b_hidden"] += d_pre
    into["w_hidden"] += np.outer(pooled, d_pre)
    d_pooled = params.w_hidden @ d_pre
    into["emb"][tc.ids] += (tc.counts / tc.total)[:, None] * d_pooled[None, :]


def grad_energy(params: ModelParams, t: TokenizedSet) -> tuple[float, dict[str, np.ndarray]]:
    """Energy and its gradient w.r.t. every parameter array."""
    grads = zero_grads(params)
    value = accumulate_grad_energy(params, TokenCounts.of(t, len(params.vocab)), grads)
    return value, grads


def grad_logits(
    params: ModelParams, t: TokenizedSet, upstream: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Logits and the gradient of ``upstream @ logits`` w.r.t. every parameter array."""
    grads = zero_grads(params)
    logits = accumulate_grad_logits(params, TokenCounts.of(t, len(params.vocab)), np.asarray(upstream, dtype=np.float64), grads)
    return logits, grads


_ARRAY_ORDER = ("emb", "w_hidden", "b_hidden", "w_energy", "b_energy", "w_class", "b_class")


def save_params(params: ModelParams, path) -> None:
    """Versioned binary container: header, vocabulary listing, float64 matrices."""
    params.validate()
    d, h = params.dims
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIIIQ", _FORMAT_VERSION, d, h, len(params.vocab), params.init_seed))
        fh.write(params.vocab.sha256())
        for token in params.vocab.tokens:
            raw = token.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        arrays = params.arrays()
        for name in _ARRAY_ORDER:
            fh.write(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CorruptFileError(f"truncated parameter file while reading {what}")
    return data


def load_params(path) -> ModelParams:
    """Inverse of :func:`save_params`."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != _MAGIC:
            raise CorruptFileError("not a parameter file (bad magic)")
        version, d, h, v, init_seed = struct.unpack("<IIIIQ", _read_exact(fh, 24, "header"))
        if version != _FORMAT_VERSION:
            raise VersionMismatchError(f"unsupported format version {version}")
        stored_hash = _read_exact(fh, 32, "vocabulary hash")
        tokens = []
        for i in range(v):
            (length,) = struct.unpack("<I", _read_exact(fh, 4, f"token {i} length"))
            tokens.append(_read_exact(fh, length, f"token {i}").decode("utf-8"))
        vocab = Vocabulary(tokens=tuple(tokens), index={t: i for i, t in enumerate(tokens)})
        if vocab.sha256() != stored_hash:
            raise VersionMismatchError("vocabulary hash does not match the stored listing")
        shapes = {
            "emb": (v, d), "w_hidden": (d, h), "b_hidden": (h,),
            "w_energy": (h,), "b_energy": (), "w_class": (h, 2), "b_class": (2,),
        }
        arrays = {}
        for name in _ARRAY_ORDER:
            shape = shapes[name]
            count = int(np.prod(shape)) if shape else 1
            raw = _read_exact(fh, count * 8, name)
            arrays[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise CorruptFileError("trailing bytes after parameter arrays")
    params = ModelParams(vocab=vocab, init_seed=init_seed, **arrays)
    params.validate()
    return params
