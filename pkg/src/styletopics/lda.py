"""Latent Dirichlet Allocation trained by collapsed Gibbs sampling.

Training is single-threaded and fully deterministic: the same corpus,
hyperparameters, iteration count, and seed always produce bit-identical
counts.  Randomness comes from a PCG64 generator seeded once; topic
assignments are initialized uniformly and every sweep resamples each token
in document order from its collapsed full conditional.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from . import docfile
from ._gibbs import (
    flatten_tuples,
    gibbs_sweep,
    heldout_sweep,
    make_rng,
    tabulate_counts,
)
from .errors import ConfigurationError, ParseError

DEFAULT_BETA = 0.01
THETA_ROW_TOL = 1e-9
PHI_ROW_TOL = 1e-9

ProgressFn = Callable[[int, float], None]


def default_alpha(n_topics: int) -> float:
    """Conventional symmetric document-topic concentration, 50 / K."""
    if n_topics < 1:
        raise ConfigurationError(f"topic count must be >= 1, got {n_topics}")
    return 50.0 / n_topics


@dataclass(eq=False)
class Corpus:
    """Integer-encoded documents over a single vocabulary.

    ``vocab[i]`` is the token with word-id i; ``docs`` maps each doc_id to
    its word-id sequence, in input order.
    """

    vocab: List[str]
    docs: List[Tuple[str, List[int]]]

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @property
    def doc_ids(self) -> List[str]:
        return [doc_id for doc_id, _ in self.docs]

    def word_id(self, token: str) -> int:
        return self.vocab.index(token)


def encode_corpus(lines: Iterable[str]) -> Corpus:
    """Encode TAB-format document lines, assigning word-ids by first appearance.

    Empty documents are retained.  Duplicate doc_ids and malformed lines
    raise ParseError with the offending line number.
    """
    vocab: List[str] = []
    index: Dict[str, int] = {}
    docs: List[Tuple[str, List[int]]] = []
    seen: Dict[str, int] = {}
    for lineno, (doc_id, tokens) in enumerate(docfile.parse_documents(lines), start=1):
        if doc_id in seen:
            raise ParseError(
                f"duplicate doc_id {doc_id!r} (first seen on line {seen[doc_id]})",
                line=lineno,
            )
        seen[doc_id] = lineno
        ids: List[int] = []
        for token in tokens:
            word_id = index.get(token)
            if word_id is None:
                word_id = len(vocab)
                index[token] = word_id
                vocab.append(token)
            ids.append(word_id)
        docs.append((doc_id, ids))
    return Corpus(vocab=vocab, docs=docs)


@dataclass(eq=False)
class LdaModel:
    """Count-matrix state of a trained LDA model.

    ``z`` holds the final per-token assignments in sweep order and is None
    for models restored from JSON (the counts alone determine theta/phi).
    """

    n_topics: int
    alpha: float
    beta: float
    seed: int
    iterations_run: int
    vocab: List[str]
    doc_ids: List[str]
    n_dk: np.ndarray  # (M, K) document-topic counts
    n_kw: np.ndarray  # (K, V) topic-word counts
    n_k: np.ndarray  # (K,) topic totals
    z: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def check_counts(self) -> None:
        """Assert the count-conservation invariants; raises on violation."""
        if (self.n_dk < 0).any() or (self.n_kw < 0).any() or (self.n_k < 0).any():
            raise AssertionError("negative count")
        if not np.array_equal(self.n_kw.sum(axis=1), self.n_k):
            raise AssertionError("topic-word rows do not sum to topic totals")
        if self.n_dk.sum() != self.n_k.sum():
            raise AssertionError("document counts and topic totals disagree")


def _validate_hyperparameters(
    n_topics: int, alpha: float, beta: float, iterations: int
) -> None:
    if n_topics < 1:
        raise ConfigurationError(f"topic count must be >= 1, got {n_topics}")
    if alpha <= 0:
        raise ConfigurationError(f"alpha must be > 0, got {alpha}")
    if beta <= 0:
        raise ConfigurationError(f"beta must be > 0, got {beta}")
    if iterations < 0:
        raise ConfigurationError(f"iterations must be >= 0, got {iterations}")


def _flatten_corpus(corpus: Corpus) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    sequences = [ids for _, ids in corpus.docs]
    return flatten_tuples([sequences])


def train_lda(
    corpus: Corpus,
    n_topics: int,
    alpha: Optional[float] = None,
    beta: float = DEFAULT_BETA,
    iterations: int = 1000,
    seed: int = 0,
    progress: Optional[ProgressFn] = None,
) -> LdaModel:
    """Train LDA on ``corpus`` with ``iterations`` full Gibbs sweeps.

    ``alpha`` defaults to 50/K.  ``progress``, when given, is called every
    100 sweeps (and after the final one) with (sweep, log joint).  The
    returned model is the chain's final state; no burn-in averaging.
    """
    if alpha is None:
        alpha = default_alpha(n_topics)
    _validate_hyperparameters(n_topics, alpha, beta, iterations)

    words, docs, langs = _flatten_corpus(corpus)
    vsizes = np.array([corpus.vocab_size], dtype=np.int64)
    voffs = np.concatenate(([0], np.cumsum(vsizes)))

    rng = make_rng(seed)
    z = rng.integers(0, n_topics, size=words.size).astype(np.int32)
    n_dk, n_kw, n_kl = tabulate_counts(
        words, docs, langs, z, corpus.n_docs, n_topics, voffs, vsizes
    )

    for sweep in range(iterations):
        u = rng.random(words.size)
        gibbs_sweep(words, docs, langs, z, n_dk, n_kw, n_kl, voffs, vsizes, alpha, beta, u)
        done = sweep + 1
        if progress is not None and (done % 100 == 0 or done == iterations):
            progress(done, _log_joint_from_counts(n_dk, n_kw, alpha, beta))

    return LdaModel(
        n_topics=n_topics,
        alpha=alpha,
        beta=beta,
        seed=seed,
        iterations_run=iterations,
        vocab=list(corpus.vocab),
        doc_ids=corpus.doc_ids,
        n_dk=n_dk,
        n_kw=n_kw,
        n_k=n_kl[0].copy(),
        z=z,
    )


def sample_posterior(
    corpus: Corpus,
    n_topics: int,
    alpha: Optional[float] = None,
    beta: float = DEFAULT_BETA,
    burn_in: int = 1000,
    num_samples: int = 1000,
    seed: int = 0,
) -> np.ndarray:
    """Draw successive post-burn-in assignment snapshots from the chain.

    Returns an int32 array of shape (num_samples, total token count): row s
    is the full assignment vector after burn_in + s + 1 sweeps.  Intended
    for convergence diagnostics on small corpora; rows are consecutive
    chain states, not independent draws.
    """
    if alpha is None:
        alpha = default_alpha(n_topics)
    _validate_hyperparameters(n_topics, alpha, beta, burn_in)
    if num_samples < 1:
        raise ConfigurationError(f"num_samples must be >= 1, got {num_samples}")

    words, docs, langs = _flatten_corpus(corpus)
    vsizes = np.array([corpus.vocab_size], dtype=np.int64)
    voffs = np.concatenate(([0], np.cumsum(vsizes)))

    rng = make_rng(seed)
    z = rng.integers(0, n_topics, size=words.size).astype(np.int32)
    n_dk, n_kw, n_kl = tabulate_counts(
        words, docs, langs, z, corpus.n_docs, n_topics, voffs, vsizes
    )

    out = np.empty((num_samples, words.size), dtype=np.int32)
    for sweep in range(burn_in + num_samples):
        u = rng.random(words.size)
        gibbs_sweep(words, docs, langs, z, n_dk, n_kw, n_kl, voffs, vsizes, alpha, beta, u)
        if sweep >= burn_in:
            out[sweep - burn_in] = z
    return out


def full_conditional(model: LdaModel, doc_index: int, word_id: int) -> np.ndarray:
    """Collapsed conditional p(z = k | counts, w) as a normalized vector.

    The model's counts are taken as-is; the caller is responsible for
    having excluded the token being resampled.  The result is nonnegative
    and sums to 1 within 1e-12.
    """
    if not (0 <= doc_index < model.n_docs):
        raise ConfigurationError(f"doc index {doc_index} out of range")
    if not (0 <= word_id < model.vocab_size):
        raise ConfigurationError(f"word id {word_id} out of range")
    p = (
        (model.n_dk[doc_index] + model.alpha)
        * (model.n_kw[:, word_id] + model.beta)
        / (model.n_k + model.vocab_size * model.beta)
    )
    return p / p.sum()


def estimate_theta(model: LdaModel) -> np.ndarray:
    """Smoothed document-topic matrix; rows sum to 1, empty docs are uniform."""
    lengths = model.n_dk.sum(axis=1, keepdims=True)
    theta = (model.n_dk + model.alpha) / (lengths + model.n_topics * model.alpha)
    return theta


def estimate_phi(model: LdaModel) -> np.ndarray:
    """Smoothed topic-word matrix; rows sum to 1, untrained topics are uniform."""
    totals = model.n_k[:, None]
    phi = (model.n_kw + model.beta) / (totals + model.vocab_size * model.beta)
    return phi


def top_words(model: LdaModel, topic: int, n: int) -> List[Tuple[str, float]]:
    """The ``n`` highest-probability tokens of ``topic``.

    Ties break toward the smaller word-id; asking for more words than the
    vocabulary holds returns all of them.
    """
    if not (0 <= topic < model.n_topics):
        raise ConfigurationError(
            f"topic {topic} out of range for a {model.n_topics}-topic model"
        )
    phi_row = estimate_phi(model)[topic]
    order = np.argsort(-phi_row, kind="stable")[: max(n, 0)]
    return [(model.vocab[w], float(phi_row[w])) for w in order]


def infer_held_out(
    model: LdaModel,
    doc: Sequence[int],
    iterations: int = 100,
    seed: int = 0,
) -> np.ndarray:
    """Embed a new document against frozen topic-word counts.

    Runs Gibbs over the new document's assignments only and returns its
    smoothed topic row.  Word ids must be in the model's vocabulary.
    """
    if iterations < 0:
        raise ConfigurationError(f"iterations must be >= 0, got {iterations}")
    words = np.asarray(doc, dtype=np.int32)
    if words.size and (words.min() < 0 or words.max() >= model.vocab_size):
        bad = [int(w) for w in words if w < 0 or w >= model.vocab_size]
        raise ConfigurationError(f"unknown word ids {bad} (vocabulary size {model.vocab_size})")

    rng = make_rng(seed)
    z = rng.integers(0, model.n_topics, size=words.size).astype(np.int32)
    doc_topic = np.zeros(model.n_topics, dtype=np.int32)
    np.add.at(doc_topic, z, 1)

    n_kw = np.ascontiguousarray(model.n_kw, dtype=np.int32)
    n_k = np.ascontiguousarray(model.n_k, dtype=np.int32)
    for _ in range(iterations):
        u = rng.random(words.size)
        heldout_sweep(
            words, z, doc_topic, n_kw, n_k, model.vocab_size,
            model.alpha, model.beta, u,
        )

    return (doc_topic + model.alpha) / (words.size + model.n_topics * model.alpha)


def _log_joint_from_counts(
    n_dk: np.ndarray, n_kw: np.ndarray, alpha: float, beta: float
) -> float:
    """Collapsed log p(w, z): both Dirichlet-multinomial normalizers in full."""
    n_docs, n_topics = n_dk.shape
    vocab_size = n_kw.shape[1]
    lengths = n_dk.sum(axis=1)
    n_k = n_kw.sum(axis=1)
    doc_part = (
        n_docs * (gammaln(n_topics * alpha) - n_topics * gammaln(alpha))
        + gammaln(n_dk + alpha).sum()
        - gammaln(lengths + n_topics * alpha).sum()
    )
    topic_part = (
        n_topics * (gammaln(vocab_size * beta) - vocab_size * gammaln(beta))
        + gammaln(n_kw + beta).sum()
        - gammaln(n_k + vocab_size * beta).sum()
    )
    return float(doc_part + topic_part)


def log_joint(model: LdaModel) -> float:
    """Collapsed joint log-likelihood of the model's current state."""
    return _log_joint_from_counts(model.n_dk, model.n_kw, model.alpha, model.beta)


def model_to_dict(model: LdaModel) -> dict:
    return {
        "format": "lda",
        "K": model.n_topics,
        "alpha": model.alpha,
        "beta": model.beta,
        "seed": model.seed,
        "iterations_run": model.iterations_run,
        "vocab": list(model.vocab),
        "doc_ids": list(model.doc_ids),
        "n_dk": model.n_dk.tolist(),
        "n_kw": model.n_kw.tolist(),
    }


def save_model(model: LdaModel, path) -> None:
    """Write the model as deterministic, compact JSON."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(model_to_dict(model), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def model_from_dict(data: dict) -> LdaModel:
    if data.get("format") != "lda":
        raise ParseError(f"not an lda model file (format={data.get('format')!r})")
    n_kw = np.asarray(data["n_kw"], dtype=np.int32).reshape(
        int(data["K"]), len(data["vocab"])
    )
    n_dk = np.asarray(data["n_dk"], dtype=np.int32).reshape(
        len(data["doc_ids"]), int(data["K"])
    )
    return LdaModel(
        n_topics=int(data["K"]),
        alpha=float(data["alpha"]),
        beta=float(data["beta"]),
        seed=int(data["seed"]),
        iterations_run=int(data["iterations_run"]),
        vocab=list(data["vocab"]),
        doc_ids=list(data["doc_ids"]),
        n_dk=n_dk,
        n_kw=n_kw,
        n_k=n_kw.sum(axis=1).astype(np.int32),
        z=None,
    )


def load_model(path) -> LdaModel:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid model JSON: {exc}") from exc
    return model_from_dict(data)
