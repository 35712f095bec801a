"""Per-period co-word edge weights stacked into a pair-by-period matrix.

The weight of word pair (i, j) in period t is the number of documents in
which both words appear, divided by the period's collection size. Only pairs
observed in at least one period get a stored row; a row that is identically
zero would decompose to an identically zero burst row anyway (zero is the
minimizer of both the smoothness term and the l1 penalty for such a row), so
unstored rows are provably burst-free and the conceptual M(M-1)/2-row matrix
never has to exist.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import BinnedCorpus, TokenizedDocument, VocabularyIndex
from .errors import ConfigurationError

PairKey = tuple[int, int]  # canonical orientation i < j


def canonical_pair(i: int, j: int) -> PairKey:
    if i == j:
        raise ValueError(f"self-pair ({i}, {i}) is not a valid word pair")
    return (i, j) if i < j else (j, i)


@dataclass
class PairSeries:
    """Stacked edge weights: observed pair rows by period columns."""

    pairs: np.ndarray  # (n_rows, 2) int64, each row i < j, sorted lexicographically
    weights: np.ndarray  # (n_rows, T) float64
    num_words: int
    omega_sizes: np.ndarray  # (T,) int64

    @property
    def num_rows(self) -> int:
        return self.pairs.shape[0]

    @property
    def num_periods(self) -> int:
        return self.weights.shape[1]

    @property
    def conceptual_rows(self) -> int:
        return self.num_words * (self.num_words - 1) // 2

    def row_index(self) -> dict[PairKey, int]:
        return {(int(i), int(j)): r for r, (i, j) in enumerate(self.pairs)}

    def weight(self, i: int, j: int, t: int) -> float:
        """Weight of pair (i, j) at 1-based period t; unstored pairs are zero."""
        key = canonical_pair(i, j)
        idx = self.row_index().get(key)
        return 0.0 if idx is None else float(self.weights[idx, t - 1])


def count_pairs(
    subset: Iterable[TokenizedDocument], vocab: VocabularyIndex
) -> Counter[PairKey]:
    """Number of documents in which each word pair co-occurs, one period."""
    counts: Counter[PairKey] = Counter()
    for doc in subset:
        ids = sorted(
            vocab.word_to_id[t] for t in doc.tokens if t in vocab.word_to_id
        )
        counts.update(combinations(ids, 2))
    return counts


def edge_weight(n: int, omega_size: int) -> float:
    """Co-occurrence count normalized by the period's collection size."""
    if omega_size < 1:
        raise ConfigurationError("period collection size must be >= 1")
    if n < 0:
        raise ValueError(f"negative co-occurrence count {n}")
    return n / omega_size


def stack(
    per_period: Sequence[dict[PairKey, int]],
    num_words: int,
    omega_sizes: Sequence[int],
) -> PairSeries:
    """Assemble per-period pair counts into one weight matrix.

    Rows are the union of pairs observed in any period, sorted by (i, j);
    columns hold normalized weights, zero where a pair was not observed.
    """
    T = len(per_period)
    if T < 2:
        raise ConfigurationError(
            f"need at least 2 periods to take column differences, got {T}"
        )
    if len(omega_sizes) != T:
        raise ConfigurationError("omega_sizes length must match the number of periods")
    all_pairs = sorted(set().union(*per_period)) if per_period else []
    index = {p: r for r, p in enumerate(all_pairs)}
    weights = np.zeros((len(all_pairs), T), dtype=np.float64)
    for t, counts in enumerate(per_period):
        size = int(omega_sizes[t])
        for pair, n in counts.items():
            weights[index[pair], t] = edge_weight(n, size)
    pairs = (
        np.asarray(all_pairs, dtype=np.int64)
        if all_pairs
        else np.empty((0, 2), dtype=np.int64)
    )
    return PairSeries(
        pairs=pairs,
        weights=weights,
        num_words=num_words,
        omega_sizes=np.asarray(omega_sizes, dtype=np.int64),
    )


def build_pair_series(corpus: BinnedCorpus, vocab: VocabularyIndex) -> PairSeries:
    """Count, normalize and stack all periods of a binned corpus."""
    per_period = [count_pairs(subset, vocab) for subset in corpus.subsets]
    return stack(per_period, vocab.size, corpus.omega_sizes)


def save_pair_series(series: PairSeries, path: str | Path) -> None:
    """Write a series to disk; .npz is binary, anything else the text format.

    Text layout: `M T row_count` on the first line, omega sizes on the
    second, then one `i j w_1 ... w_T` row per stored pair. Weights use
    shortest round-trip float formatting, so load() restores them bit-exactly.
    """
    path = Path(path)
    if path.suffix == ".npz":
        np.savez_compressed(
            path,
            pairs=series.pairs,
            weights=series.weights,
            num_words=np.int64(series.num_words),
            omega_sizes=series.omega_sizes,
        )
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{series.num_words} {series.num_periods} {series.num_rows}\n")
        fh.write(" ".join(str(int(v)) for v in series.omega_sizes) + "\n")
        for (i, j), row in zip(series.pairs, series.weights):
            cells = " ".join(repr(float(v)) for v in row)
            fh.write(f"{i} {j} {cells}\n")


def load_pair_series(path: str | Path) -> PairSeries:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as data:
            return PairSeries(
                pairs=data["pairs"],
                weights=data["weights"],
                num_words=int(data["num_words"]),
                omega_sizes=data["omega_sizes"],
            )
    with open(path, "r", encoding="utf-8") as fh:
        num_words, T, n_rows = (int(v) for v in fh.readline().split())
        omega_sizes = np.asarray([int(v) for v in fh.readline().split()], dtype=np.int64)
        if omega_sizes.shape[0] != T:
            raise ValueError(f"{path}: omega size line has {omega_sizes.shape[0]} values, expected {T}")
        pairs = np.empty((n_rows, 2), dtype=np.int64)
        weights = np.empty((n_rows, T), dtype=np.float64)
        for r in range(n_rows):
            parts = fh.readline().split()
            if len(parts) != 2 + T:
                raise ValueError(f"{path}: malformed row {r}")
            pairs[r, 0], pairs[r, 1] = int(parts[0]), int(parts[1])
            weights[r] = [float(v) for v in parts[2:]]
    return PairSeries(
        pairs=pairs, weights=weights, num_words=num_words, omega_sizes=omega_sizes
    )
