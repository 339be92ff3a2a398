"""Collapsed Gibbs sampling kernels shared by the LDA and PolyLDA trainers.

Token streams are flattened to parallel int32 arrays (word id, document
index, language index) in sweep order.  Per-language vocabularies live in
one stacked topic-word count matrix addressed through column offsets, so a
single-language model is simply the L=1 case of the same kernel.

The kernels draw nothing themselves: the trainer hands each sweep a buffer
of uniforms from a seeded PCG64 generator, which keeps the sampler
deterministic and the random stream independent of compilation details.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np
from numba import njit


@njit(cache=True)
def gibbs_sweep(
    words: np.ndarray,
    docs: np.ndarray,
    langs: np.ndarray,
    z: np.ndarray,
    n_dk: np.ndarray,
    n_kw: np.ndarray,
    n_kl: np.ndarray,
    voffs: np.ndarray,
    vsizes: np.ndarray,
    alpha: float,
    beta: float,
    u: np.ndarray,
) -> None:
    """One full sweep: resample every token in stream order, in place.

    For token t in document d, language l, word w the conditional is

        p(z=k) propto (n_dk[d,k] + alpha) * (n_kw[k,w] + beta)
                      / (n_kl[l,k] + V_l * beta)

    with the token's own count removed first.  ``u[t]`` is the uniform
    driving token t's draw.
    """
    n = words.shape[0]
    k_count = n_dk.shape[1]
    p = np.empty(k_count, np.float64)
    for t in range(n):
        w = words[t]
        d = docs[t]
        lang = langs[t]
        k_old = z[t]
        col = voffs[lang] + w

        n_dk[d, k_old] -= 1
        n_kw[k_old, col] -= 1
        n_kl[lang, k_old] -= 1

        v_beta = vsizes[lang] * beta
        total = 0.0
        for k in range(k_count):
            p_k = (
                (n_dk[d, k] + alpha)
                * (n_kw[k, col] + beta)
                / (n_kl[lang, k] + v_beta)
            )
            p[k] = p_k
            total += p_k

        r = u[t] * total
        acc = 0.0
        k_new = k_count - 1
        for k in range(k_count):
            acc += p[k]
            if r < acc:
                k_new = k
                break

        z[t] = k_new
        n_dk[d, k_new] += 1
        n_kw[k_new, col] += 1
        n_kl[lang, k_new] += 1


@njit(cache=True)
def heldout_sweep(
    words: np.ndarray,
    z: np.ndarray,
    doc_topic: np.ndarray,
    n_kw: np.ndarray,
    n_k: np.ndarray,
    vocab_size: int,
    alpha: float,
    beta: float,
    u: np.ndarray,
) -> None:
    """Resample one held-out document against frozen topic-word counts.

    Only ``doc_topic`` (length K) and ``z`` change; the trained model's
    counts are read-only here, so inference never perturbs the model.
    """
    n = words.shape[0]
    k_count = doc_topic.shape[0]
    v_beta = vocab_size * beta
    p = np.empty(k_count, np.float64)
    for t in range(n):
        w = words[t]
        k_old = z[t]
        doc_topic[k_old] -= 1

        total = 0.0
        for k in range(k_count):
            p_k = (doc_topic[k] + alpha) * (n_kw[k, w] + beta) / (n_k[k] + v_beta)
            p[k] = p_k
            total += p_k

        r = u[t] * total
        acc = 0.0
        k_new = k_count - 1
        for k in range(k_count):
            acc += p[k]
            if r < acc:
                k_new = k
                break

        z[t] = k_new
        doc_topic[k_new] += 1


def flatten_tuples(
    docs_per_language: Sequence[Sequence[Sequence[int]]],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flatten aligned documents into (words, docs, langs) sweep arrays.

    ``docs_per_language[l][i]`` is the word-id sequence of tuple i's slot in
    language l.  Sweep order is: tuples in order, languages 0..L-1 within a
    tuple, tokens in order within a slot.
    """
    words: List[int] = []
    docs: List[int] = []
    langs: List[int] = []
    n_tuples = len(docs_per_language[0]) if docs_per_language else 0
    for i in range(n_tuples):
        for lang, language_docs in enumerate(docs_per_language):
            for w in language_docs[i]:
                words.append(w)
                docs.append(i)
                langs.append(lang)
    return (
        np.asarray(words, dtype=np.int32),
        np.asarray(docs, dtype=np.int32),
        np.asarray(langs, dtype=np.int32),
    )


def tabulate_counts(
    words: np.ndarray,
    docs: np.ndarray,
    langs: np.ndarray,
    z: np.ndarray,
    n_docs: int,
    n_topics: int,
    voffs: np.ndarray,
    vsizes: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Count matrices (n_dk, stacked n_kw, n_kl) for a full assignment."""
    n_langs = len(vsizes)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int32)
    n_kw = np.zeros((n_topics, int(voffs[-1])), dtype=np.int32)
    n_kl = np.zeros((n_langs, n_topics), dtype=np.int32)
    if words.size:
        np.add.at(n_dk, (docs, z), 1)
        np.add.at(n_kw, (z, voffs[langs] + words), 1)
        np.add.at(n_kl, (langs, z), 1)
    return n_dk, n_kw, n_kl


def make_rng(seed: int) -> np.random.Generator:
    """The pipeline's seeded generator: PCG64, NumPy's documented default."""
    return np.random.Generator(np.random.PCG64(seed))
