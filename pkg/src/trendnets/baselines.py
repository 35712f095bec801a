"""Comparison burst detectors: three thresholding rules and a two-state automaton.

All detectors emit BurstSet, the common currency consumed by the evaluation
harness: a set of (word pair, period, score) detections. Thresholds are
strict (a value exactly at the threshold is not a burst), so raising a
threshold can only shrink the detection set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coword import PairSeries
from .errors import ConfigurationError

BASE, BURST = 0, 1


@dataclass(frozen=True)
class KleinbergParams:
    """Two-state automaton parameters: burst/base rate ratio and transition cost weight."""

    s: float = 2.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.s <= 1:
            raise ConfigurationError("rate ratio s must be > 1")
        if self.gamma < 0:
            raise ConfigurationError("gamma must be >= 0")


@dataclass
class BurstSet:
    detector: str
    params: dict[str, float]
    scores: dict[tuple[int, int, int], float] = field(default_factory=dict)
    # keys are (i, j, t) with i < j and 1-based period t

    def points(self) -> set[tuple[int, int, int]]:
        return set(self.scores)

    def __len__(self) -> int:
        return len(self.scores)

    def write_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for (i, j, t), score in sorted(self.scores.items()):
                fh.write(f"{i}\t{j}\t{t}\t{repr(float(score))}\t{self.detector}\n")


def _collect(series: PairSeries, rows, cols, values, detector, params) -> BurstSet:
    scores = {
        (int(series.pairs[r, 0]), int(series.pairs[r, 1]), int(t) + 1): float(v)
        for r, t, v in zip(rows, cols, values)
    }
    return BurstSet(detector=detector, params=params, scores=scores)


def threshold_raw(series: PairSeries, tau1: float) -> BurstSet:
    """Flag entries whose edge weight exceeds tau1 (the traditional map rule)."""
    if tau1 < 0:
        raise ConfigurationError("threshold must be >= 0")
    rows, cols = np.nonzero(series.weights > tau1)
    return _collect(
        series, rows, cols, series.weights[rows, cols], "threshold_raw", {"tau1": tau1}
    )


def threshold_derivative(series: PairSeries, tau2: float) -> BurstSet:
    """Flag periods t >= 2 where the weight increased by more than tau2."""
    if tau2 < 0:
        raise ConfigurationError("threshold must be >= 0")
    diffs = series.weights[:, 1:] - series.weights[:, :-1]
    rows, cols = np.nonzero(diffs > tau2)
    return _collect(
        series,
        rows,
        cols + 1,  # difference column c compares period c+2 to c+1
        diffs[rows, cols],
        "threshold_derivative",
        {"tau2": tau2},
    )


def threshold_mean_deviation(series: PairSeries, tau3: float) -> BurstSet:
    """Flag entries exceeding their row's mean over all periods by more than tau3."""
    if tau3 < 0:
        raise ConfigurationError("threshold must be >= 0")
    deviations = series.weights - series.weights.mean(axis=1, keepdims=True)
    rows, cols = np.nonzero(deviations > tau3)
    return _collect(
        series,
        rows,
        cols,
        deviations[rows, cols],
        "threshold_mean_deviation",
        {"tau3": tau3},
    )


def _log_factorials(upto: int) -> np.ndarray:
    table = np.zeros(upto + 1)
    if upto >= 1:
        table[1:] = np.cumsum(np.log(np.arange(1, upto + 1, dtype=np.float64)))
    return table


def _emission_costs(counts: np.ndarray, totals: np.ndarray, p: np.ndarray) -> np.ndarray:
    """-log Binomial(count; total, p) per row and period; p is per-row."""
    lf = _log_factorials(int(totals.max()))
    log_comb = lf[totals][None, :] - lf[counts] - lf[totals[None, :] - counts]
    n = counts.astype(np.float64)
    d = totals.astype(np.float64)[None, :]
    return -(log_comb + n * np.log(p)[:, None] + (d - n) * np.log1p(-p)[:, None])


def kleinberg_batch(counts: np.ndarray, totals: np.ndarray, params: KleinbergParams):
    """Optimal base/burst state sequences for many count series at once.

    Each row is an independent automaton: a base state emitting at the row's
    overall rate p0, a burst state at min(s * p0, 1 - 1e-9); entering the
    burst state costs gamma * ln(T), leaving it is free, and every sequence
    implicitly starts from base before the first period. Emission cost is
    the negative log binomial likelihood of the period's count given the
    period's total. The minimum-cost sequence is found by exact dynamic
    programming; cost ties resolve toward base at every position, which
    makes the result the lexicographically smallest optimal sequence
    (base < burst, positions compared left to right).

    Returns (states, scores), both (n_rows, T). For burst periods the score
    is the extra cost the optimal path would pay if that period were forced
    into the base state; rows whose counts are all zero stay entirely base.
    """
    counts = np.asarray(counts, dtype=np.int64)
    totals = np.asarray(totals, dtype=np.int64)
    if counts.ndim != 2 or totals.shape != (counts.shape[1],):
        raise ValueError("counts must be (n_rows, T) with one total per period")
    n_rows, T = counts.shape
    if T < 2:
        raise ConfigurationError("need at least 2 periods")
    if np.any(counts < 0) or np.any(counts > totals[None, :]):
        raise ValueError("need 0 <= counts <= totals per period")

    states = np.zeros((n_rows, T), dtype=np.int64)
    scores = np.zeros((n_rows, T), dtype=np.float64)
    live = counts.sum(axis=1) > 0
    if not np.any(live):
        return states, scores
    counts = counts[live]
    n_live = counts.shape[0]

    p0 = np.minimum(counts.sum(axis=1) / float(totals.sum()), 1.0 - 1e-9)
    p1 = np.minimum(params.s * p0, 1.0 - 1e-9)
    emit = np.stack([
        _emission_costs(counts, totals, p0),
        _emission_costs(counts, totals, p1),
    ])  # (2, n_live, T)
    up = params.gamma * math.log(T)

    # F[s, :, t]: cheapest prefix through t ending in s (transitions included,
    # starting from a virtual base state); B[s, :, t]: cheapest suffix from t
    # given state s at t, excluding the transition into t
    F = np.empty((2, n_live, T))
    B = np.empty((2, n_live, T))
    F[BASE, :, 0] = emit[BASE, :, 0]
    F[BURST, :, 0] = up + emit[BURST, :, 0]
    for t in range(1, T):
        F[BASE, :, t] = np.minimum(F[BASE, :, t - 1], F[BURST, :, t - 1]) + emit[BASE, :, t]
        F[BURST, :, t] = np.minimum(F[BASE, :, t - 1] + up, F[BURST, :, t - 1]) + emit[BURST, :, t]
    B[:, :, T - 1] = emit[:, :, T - 1]
    for t in range(T - 2, -1, -1):
        B[BASE, :, t] = np.minimum(B[BASE, :, t + 1], B[BURST, :, t + 1] + up) + emit[BASE, :, t]
        B[BURST, :, t] = np.minimum(B[BASE, :, t + 1], B[BURST, :, t + 1]) + emit[BURST, :, t]
    best = np.minimum(B[BASE, :, 0], B[BURST, :, 0] + up)

    live_states = np.zeros((n_live, T), dtype=np.int64)
    acc = np.zeros(n_live)
    prev_burst = np.zeros(n_live, dtype=bool)
    for t in range(T):
        step_to_burst = np.where(prev_burst, 0.0, up)
        cand_base = acc + B[BASE, :, t]
        cand_burst = (acc + step_to_burst) + B[BURST, :, t]
        choose_burst = cand_burst < cand_base  # tie keeps base
        acc = np.where(
            choose_burst,
            (acc + step_to_burst) + emit[BURST, :, t],
            acc + emit[BASE, :, t],
        )
        live_states[:, t] = choose_burst
        prev_burst = choose_burst

    forced_base = F[BASE] + B[BASE] - emit[BASE]
    live_scores = np.where(
        live_states == BURST, np.maximum(forced_base - best[:, None], 0.0), 0.0
    )
    states[live] = live_states
    scores[live] = live_scores
    return states, scores


def kleinberg(counts, totals, params: KleinbergParams):
    """Single-series form of kleinberg_batch; returns (states, scores) of shape (T,)."""
    states, scores = kleinberg_batch(
        np.asarray(counts, dtype=np.int64)[None, :], totals, params
    )
    return states[0], scores[0]


def kleinberg_detector(
    counts: np.ndarray,
    totals: np.ndarray,
    pairs: np.ndarray,
    params: KleinbergParams,
) -> BurstSet:
    """Run the automaton on every pair row and collect burst-state periods."""
    states, scores = kleinberg_batch(counts, totals, params)
    rows, cols = np.nonzero(states == BURST)
    result = BurstSet(
        detector="kleinberg", params={"s": params.s, "gamma": params.gamma}
    )
    for r, t in zip(rows, cols):
        key = (int(pairs[r, 0]), int(pairs[r, 1]), int(t) + 1)
        result.scores[key] = float(scores[r, t])
    return result


def series_counts(series: PairSeries) -> np.ndarray:
    """Recover integer co-occurrence counts from normalized weights."""
    counts = np.rint(series.weights * series.omega_sizes[None, :]).astype(np.int64)
    return np.clip(counts, 0, series.omega_sizes[None, :])
