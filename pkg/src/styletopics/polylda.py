"""Polylingual LDA: aligned document tuples with one shared topic mixture.

Each "language" is a modality (visual tokens, text tokens) with its own
vocabulary and topic-word counts; all slots of a tuple draw topics from the
same document-topic distribution.  Training reuses the collapsed Gibbs
kernel from the LDA module, so a single-language model is bit-identical to
plain LDA under the same seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import docfile
from ._gibbs import flatten_tuples, gibbs_sweep, make_rng, tabulate_counts
from .errors import ConfigurationError, ParseError
from .lda import (
    ProgressFn,
    _log_joint_from_counts,
    _validate_hyperparameters,
    default_alpha,
    DEFAULT_BETA,
)


@dataclass(eq=False)
class TupleCorpus:
    """Aligned per-item document tuples across L languages.

    ``tuples[i]`` is (item_id, per-language word-id sequences); a language
    the item is absent from holds an empty sequence.
    """

    vocabs: List[List[str]]
    tuples: List[Tuple[str, List[List[int]]]]

    def __post_init__(self) -> None:
        n_langs = len(self.vocabs)
        for item_id, slots in self.tuples:
            if len(slots) != n_langs:
                raise ConfigurationError(
                    f"tuple {item_id!r} has {len(slots)} slots, expected {n_langs}"
                )

    @property
    def n_languages(self) -> int:
        return len(self.vocabs)

    @property
    def n_tuples(self) -> int:
        return len(self.tuples)

    @property
    def item_ids(self) -> List[str]:
        return [item_id for item_id, _ in self.tuples]

    def vocab_sizes(self) -> List[int]:
        return [len(v) for v in self.vocabs]


def align_tuples(language_lines: Sequence[Iterable[str]]) -> TupleCorpus:
    """Join one TAB-format document file per language into aligned tuples.

    Tuples are keyed by item_id; order is first appearance across files in
    file order.  An item missing from a language gets an empty slot there.
    Word-ids are assigned per language by first appearance.
    """
    if not language_lines:
        raise ConfigurationError("at least one language document file is required")

    n_langs = len(language_lines)
    vocabs: List[List[str]] = [[] for _ in range(n_langs)]
    per_language_docs: List[Dict[str, List[int]]] = [{} for _ in range(n_langs)]
    item_order: List[str] = []
    known = set()

    for lang, lines in enumerate(language_lines):
        index: Dict[str, int] = {}
        for lineno, (item_id, tokens) in enumerate(
            docfile.parse_documents(lines), start=1
        ):
            if item_id in per_language_docs[lang]:
                raise ParseError(
                    f"duplicate item_id {item_id!r} in language {lang}", line=lineno
                )
            ids: List[int] = []
            for token in tokens:
                word_id = index.get(token)
                if word_id is None:
                    word_id = len(vocabs[lang])
                    index[token] = word_id
                    vocabs[lang].append(token)
                ids.append(word_id)
            per_language_docs[lang][item_id] = ids
            if item_id not in known:
                known.add(item_id)
                item_order.append(item_id)

    tuples = [
        (item_id, [per_language_docs[lang].get(item_id, []) for lang in range(n_langs)])
        for item_id in item_order
    ]
    return TupleCorpus(vocabs=vocabs, tuples=tuples)


@dataclass(eq=False)
class PolyLdaModel:
    """Count-matrix state of a trained polylingual model.

    ``n_dk`` is shared across languages; topic-word counts are kept per
    language.  ``z`` holds final assignments in sweep order (tuples in
    order, languages 0..L-1 within a tuple) and is None after JSON load.
    """

    n_topics: int
    alpha: float
    beta: float
    seed: int
    iterations_run: int
    vocabs: List[List[str]]
    item_ids: List[str]
    n_dk: np.ndarray  # (tuples, K) shared topic counts
    n_kw_l: List[np.ndarray]  # per language (K, V_l)
    n_k_l: List[np.ndarray]  # per language (K,)
    z: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_languages(self) -> int:
        return len(self.vocabs)

    def check_counts(self) -> None:
        if (self.n_dk < 0).any():
            raise AssertionError("negative shared count")
        per_language_totals = np.zeros(self.n_topics, dtype=np.int64)
        for lang in range(self.n_languages):
            if (self.n_kw_l[lang] < 0).any():
                raise AssertionError(f"negative count in language {lang}")
            if not np.array_equal(self.n_kw_l[lang].sum(axis=1), self.n_k_l[lang]):
                raise AssertionError(f"language {lang} rows do not sum to totals")
            per_language_totals += self.n_k_l[lang]
        if self.n_dk.sum() != per_language_totals.sum():
            raise AssertionError("shared counts and per-language totals disagree")


def train_polylda(
    corpus: TupleCorpus,
    n_topics: int,
    alpha: Optional[float] = None,
    beta: float = DEFAULT_BETA,
    iterations: int = 1000,
    seed: int = 0,
    progress: Optional[ProgressFn] = None,
) -> PolyLdaModel:
    """Train polylingual LDA with ``iterations`` full Gibbs sweeps.

    The conditional for a token in language l couples the tuple's shared
    topic counts with that language's topic-word counts.  Sweep order is
    tuples in order, languages 0..L-1 within a tuple, tokens in order;
    deterministic given the corpus, hyperparameters, and seed.
    """
    if alpha is None:
        alpha = default_alpha(n_topics)
    _validate_hyperparameters(n_topics, alpha, beta, iterations)

    docs_per_language = [
        [slots[lang] for _, slots in corpus.tuples] for lang in range(corpus.n_languages)
    ]
    words, docs, langs = flatten_tuples(docs_per_language)
    vsizes = np.array(corpus.vocab_sizes(), dtype=np.int64)
    voffs = np.concatenate(([0], np.cumsum(vsizes)))
    if words.size and (words.min() < 0 or (words >= vsizes[langs]).any()):
        raise ConfigurationError("word id out of range for its language vocabulary")

    rng = make_rng(seed)
    z = rng.integers(0, n_topics, size=words.size).astype(np.int32)
    n_dk, n_kw, n_kl = tabulate_counts(
        words, docs, langs, z, corpus.n_tuples, n_topics, voffs, vsizes
    )

    for sweep in range(iterations):
        u = rng.random(words.size)
        gibbs_sweep(words, docs, langs, z, n_dk, n_kw, n_kl, voffs, vsizes, alpha, beta, u)
        done = sweep + 1
        if progress is not None and (done % 100 == 0 or done == iterations):
            progress(done, _log_joint_from_counts(n_dk, n_kw, alpha, beta))

    n_kw_l = [
        np.ascontiguousarray(n_kw[:, voffs[lang] : voffs[lang + 1]])
        for lang in range(corpus.n_languages)
    ]
    return PolyLdaModel(
        n_topics=n_topics,
        alpha=alpha,
        beta=beta,
        seed=seed,
        iterations_run=iterations,
        vocabs=[list(v) for v in corpus.vocabs],
        item_ids=corpus.item_ids,
        n_dk=n_dk,
        n_kw_l=n_kw_l,
        n_k_l=[n_kl[lang].copy() for lang in range(corpus.n_languages)],
        z=z,
    )


def estimate_shared_theta(model: PolyLdaModel) -> np.ndarray:
    """Smoothed tuple-topic matrix over all languages' tokens combined."""
    totals = model.n_dk.sum(axis=1, keepdims=True)
    return (model.n_dk + model.alpha) / (totals + model.n_topics * model.alpha)


def estimate_phi_l(model: PolyLdaModel, language: int) -> np.ndarray:
    """Smoothed topic-word matrix of one language."""
    if not (0 <= language < model.n_languages):
        raise ConfigurationError(
            f"language {language} out of range for {model.n_languages} languages"
        )
    n_kw = model.n_kw_l[language]
    totals = model.n_k_l[language][:, None]
    return (n_kw + model.beta) / (totals + n_kw.shape[1] * model.beta)


def top_words_per_language(
    model: PolyLdaModel, topic: int, n: int
) -> List[List[Tuple[str, float]]]:
    """Per-language ranked token lists for one topic (ties to lower word-id)."""
    if not (0 <= topic < model.n_topics):
        raise ConfigurationError(
            f"topic {topic} out of range for a {model.n_topics}-topic model"
        )
    result = []
    for lang in range(model.n_languages):
        phi_row = estimate_phi_l(model, lang)[topic]
        order = np.argsort(-phi_row, kind="stable")[: max(n, 0)]
        result.append([(model.vocabs[lang][w], float(phi_row[w])) for w in order])
    return result


def model_to_dict(model: PolyLdaModel) -> dict:
    return {
        "format": "polylda",
        "K": model.n_topics,
        "alpha": model.alpha,
        "beta": model.beta,
        "seed": model.seed,
        "iterations_run": model.iterations_run,
        "item_ids": list(model.item_ids),
        "n_dk": model.n_dk.tolist(),
        "languages": [
            {"vocab": list(model.vocabs[lang]), "n_kw": model.n_kw_l[lang].tolist()}
            for lang in range(model.n_languages)
        ],
    }


def save_model(model: PolyLdaModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(model_to_dict(model), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def model_from_dict(data: dict) -> PolyLdaModel:
    if data.get("format") != "polylda":
        raise ParseError(f"not a polylda model file (format={data.get('format')!r})")
    n_topics = int(data["K"])
    vocabs = [list(lang["vocab"]) for lang in data["languages"]]
    n_kw_l = [
        np.asarray(lang["n_kw"], dtype=np.int32).reshape(n_topics, len(vocab))
        for lang, vocab in zip(data["languages"], vocabs)
    ]
    n_dk = np.asarray(data["n_dk"], dtype=np.int32).reshape(
        len(data["item_ids"]), n_topics
    )
    return PolyLdaModel(
        n_topics=n_topics,
        alpha=float(data["alpha"]),
        beta=float(data["beta"]),
        seed=int(data["seed"]),
        iterations_run=int(data["iterations_run"]),
        vocabs=vocabs,
        item_ids=list(data["item_ids"]),
        n_dk=n_dk,
        n_kw_l=n_kw_l,
        n_k_l=[m.sum(axis=1).astype(np.int32) for m in n_kw_l],
        z=None,
    )


def load_model(path) -> PolyLdaModel:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid model JSON: {exc}") from exc
    return model_from_dict(data)
