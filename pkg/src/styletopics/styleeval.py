"""Pair-distance evaluation of topic-space style embeddings.

Items similar under collaborative filtering ("top recs") should sit close
together in topic space, rarely co-clicked items ("bottom recs") far apart.
The headline number is the separation ratio: mean bottom-pair distance over
mean top-pair distance.  Concentration diagnostics (L2 norm, entropy)
describe how peaked each item's topic row is.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, ParseError, StyleTopicsError

TOP_RECS = "top_recs"
BOTTOM_RECS = "bottom_recs"
PAIR_LABELS = (TOP_RECS, BOTTOM_RECS)

METRICS = ("euclidean", "cosine", "hellinger")
DEFAULT_METRIC = "euclidean"

ROW_SUM_TOL = 1e-6


class MissingItemsError(StyleTopicsError):
    """A pair references items with no embedding.

    Attributes:
        missing: sorted ids absent from the embedding map.
    """

    def __init__(self, missing: Sequence[str]):
        self.missing = sorted(set(missing))
        preview = ", ".join(self.missing[:10])
        suffix = ", ..." if len(self.missing) > 10 else ""
        super().__init__(
            f"{len(self.missing)} item(s) missing from the embedding: {preview}{suffix}"
        )


class UndefinedRatioError(StyleTopicsError):
    """The separation ratio is undefined (zero mean top-pair distance)."""


@dataclass(frozen=True)
class PairSet:
    """Scored item pairs of one label (top_recs or bottom_recs)."""

    pairs: Tuple[Tuple[str, str, float], ...]
    label: str

    def __post_init__(self) -> None:
        if self.label not in PAIR_LABELS:
            raise ConfigurationError(
                f"label must be one of {PAIR_LABELS}, got {self.label!r}"
            )
        for a, b, _ in self.pairs:
            if a == b:
                raise ConfigurationError(f"self-pair ({a!r}, {b!r}) is not allowed")

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class DistanceStats:
    """Per-pair distances plus their mean, population stddev, and skewness."""

    n: int
    mean: float
    stddev: float
    skewness: float
    distances: np.ndarray

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "stddev": self.stddev,
            "skewness": self.skewness,
        }


def load_pairs(lines: Iterable[str], label: str) -> PairSet:
    """Parse ``item_a,item_b,score`` CSV lines into a PairSet.

    A header row whose first cell is ``item_a`` is skipped.  Self-pairs and
    unparseable scores are rejected with their line number.
    """
    pairs: List[Tuple[str, str, float]] = []
    reader = csv.reader(lines)
    for lineno, row in enumerate(reader, start=1):
        if not row:
            continue
        if lineno == 1 and row[0].strip().lower() == "item_a":
            continue
        if len(row) != 3:
            raise ParseError(f"expected item_a,item_b,score, got {row!r}", line=lineno)
        a, b = row[0].strip(), row[1].strip()
        if not a or not b:
            raise ParseError("empty item id", line=lineno)
        if a == b:
            raise ParseError(f"self-pair {a!r}", line=lineno)
        try:
            score = float(row[2])
        except ValueError:
            raise ParseError(f"bad score {row[2]!r}", line=lineno) from None
        pairs.append((a, b, score))
    return PairSet(pairs=tuple(pairs), label=label)


def load_pair_file(path, label: str) -> PairSet:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return load_pairs(f, label)


def euclidean_distance(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.linalg.norm(p - q))


def cosine_distance(p: np.ndarray, q: np.ndarray) -> float:
    """1 - cosine similarity; inputs must be nonzero vectors."""
    return float(1.0 - np.dot(p, q) / (np.linalg.norm(p) * np.linalg.norm(q)))


def hellinger_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Hellinger distance between probability rows: ||sqrt(p)-sqrt(q)|| / sqrt(2)."""
    return float(np.linalg.norm(np.sqrt(p) - np.sqrt(q)) / np.sqrt(2.0))


_METRIC_FNS = {
    "euclidean": euclidean_distance,
    "cosine": cosine_distance,
    "hellinger": hellinger_distance,
}


def _describe(distances: np.ndarray) -> Tuple[float, float, float]:
    """Mean, population stddev, and sample skewness g1 (0 when variance is 0)."""
    if distances.size == 0:
        return 0.0, 0.0, 0.0
    mean = float(distances.mean())
    centered = distances - mean
    m2 = float((centered**2).mean())
    m3 = float((centered**3).mean())
    if m2 == 0.0:
        return mean, 0.0, 0.0
    return mean, float(np.sqrt(m2)), m3 / m2**1.5


def pair_distances(
    theta: Mapping[str, np.ndarray], pairs: PairSet, metric: str = DEFAULT_METRIC
) -> DistanceStats:
    """Distances of every pair under ``metric``, with summary statistics.

    Distances are computed and summed in pair order, so results are
    identical across runs.  Every pair's items must be present in
    ``theta``; otherwise all missing ids are reported at once.
    """
    if metric not in _METRIC_FNS:
        raise ConfigurationError(f"unknown metric {metric!r}, expected one of {METRICS}")
    missing = [
        item
        for a, b, _ in pairs.pairs
        for item in (a, b)
        if item not in theta
    ]
    if missing:
        raise MissingItemsError(missing)
    fn = _METRIC_FNS[metric]
    distances = np.array(
        [fn(np.asarray(theta[a], dtype=float), np.asarray(theta[b], dtype=float))
         for a, b, _ in pairs.pairs],
        dtype=float,
    )
    mean, stddev, skewness = _describe(distances)
    return DistanceStats(
        n=len(pairs), mean=mean, stddev=stddev, skewness=skewness, distances=distances
    )


def separation_ratio(top: DistanceStats, bottom: DistanceStats) -> float:
    """Mean bottom-recs distance over mean top-recs distance."""
    if top.n == 0 or bottom.n == 0:
        raise ConfigurationError("both pair sets must be non-empty")
    if top.mean == 0.0:
        raise UndefinedRatioError("mean top-recs distance is 0; ratio undefined")
    return bottom.mean / top.mean


def concentration_stats(theta_rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-row (L2 norm, Shannon entropy in nats) of topic distributions.

    Rows must be probability vectors: nonnegative, summing to 1 within
    1e-6.  Norms lie in [1/sqrt(K), 1], entropies in [0, ln K].
    """
    theta_rows = np.atleast_2d(np.asarray(theta_rows, dtype=float))
    sums = theta_rows.sum(axis=1)
    bad = np.flatnonzero((np.abs(sums - 1.0) > ROW_SUM_TOL) | (theta_rows < 0).any(axis=1))
    if bad.size:
        raise ConfigurationError(
            f"rows {bad.tolist()} are not normalized probability vectors"
        )
    norms = np.linalg.norm(theta_rows, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(theta_rows > 0, theta_rows * np.log(theta_rows), 0.0)
    entropies = -plogp.sum(axis=1)
    return norms, entropies


def summarize_concentration(theta_rows: np.ndarray) -> dict:
    norms, entropies = concentration_stats(theta_rows)
    def _spread(values: np.ndarray) -> dict:
        return {
            "mean": float(values.mean()),
            "min": float(values.min()),
            "max": float(values.max()),
        }
    return {"n": int(norms.size), "l2_norm": _spread(norms), "entropy": _spread(entropies)}


def build_report(
    metric: str,
    top: DistanceStats,
    bottom: DistanceStats,
    theta_rows: np.ndarray,
) -> dict:
    """The evaluation report emitted by the CLI as JSON."""
    return {
        "metric": metric,
        "top": top.to_dict(),
        "bottom": bottom.to_dict(),
        "ratio": separation_ratio(top, bottom),
        "concentration_summary": summarize_concentration(theta_rows),
    }


def write_distances_csv(
    out: IO[str], top: DistanceStats, bottom: DistanceStats,
    top_pairs: PairSet, bottom_pairs: PairSet,
) -> None:
    """Per-pair distances for plotting: label,item_a,item_b,distance rows."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["label", "item_a", "item_b", "distance"])
    for stats, pairs in ((top, top_pairs), (bottom, bottom_pairs)):
        for (a, b, _), dist in zip(pairs.pairs, stats.distances):
            writer.writerow([pairs.label, a, b, repr(float(dist))])
