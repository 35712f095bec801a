"""Synthetic dynamic co-word networks with injected ground-truth bursts.

A stable series is drawn pair by pair: a heavy-tailed base rate (log-normal,
median 2, shape 1 by default) and independent Poisson counts per period.
Bursts are then injected on top: at each period every eligible pair (one
whose pre-injection mean exceeds mu_min) independently becomes a burst point
with probability p_burst. A spike burst rewrites that period's count to
mu + u * sigma with u uniform on [3, 6]; a step burst rewrites every period
from the onset onward, redrawing u each time. Ground truth records the onset
period only, for both kinds.

Pair means and standard deviations are frozen before any injection and never
recomputed. Every pair owns a counter-based RNG stream keyed by (master
seed, pair index), so the generated series does not depend on evaluation
order.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt, log
from pathlib import Path

import numpy as np

from .coword import PairSeries
from .errors import ConfigurationError

TYPE_SPIKE = "A"  # one-period peak
TYPE_STEP = "B"  # jump that stays elevated

_U64 = (1 << 64) - 1


NOISE_MODELS = ("poisson", "drift")


@dataclass(frozen=True)
class SynthConfig:
    """Stable-series generator settings.

    The default noise model draws each period independently from the pair's
    base rate. The "drift" model lets the rate itself wander slowly (log-AR(1)
    modulation with autocorrelation drift_rho and stationary log-scale
    drift_scale) before the Poisson draw, mimicking document collections
    whose topical mix shifts gradually between periods; counts remain
    Poisson given the period's rate.
    """

    num_pairs: int = 2000
    num_periods: int = 50
    rate_median: float = 2.0
    rate_shape: float = 1.0
    noise_model: str = "poisson"
    drift_rho: float = 0.9
    drift_scale: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.num_pairs < 1:
            raise ConfigurationError("num_pairs must be >= 1")
        if self.num_periods < 2:
            raise ConfigurationError("num_periods must be >= 2")
        if self.rate_median <= 0 or self.rate_shape < 0:
            raise ConfigurationError("rate_median must be > 0 and rate_shape >= 0")
        if self.noise_model not in NOISE_MODELS:
            raise ConfigurationError(
                f"noise_model must be one of {NOISE_MODELS}, got {self.noise_model!r}"
            )
        if not 0 <= self.drift_rho < 1 or self.drift_scale < 0:
            raise ConfigurationError("need 0 <= drift_rho < 1 and drift_scale >= 0")


@dataclass
class StableSeries:
    pairs: np.ndarray  # (num_pairs, 2) int64, canonical i < j
    counts: np.ndarray  # (num_pairs, T) float64; integer-valued until injection
    mu: np.ndarray  # per-pair mean of the pre-injection counts
    sigma: np.ndarray  # per-pair population standard deviation, same series
    num_words: int
    rng_seed: int

    @property
    def num_periods(self) -> int:
        return self.counts.shape[1]


@dataclass
class GroundTruth:
    bursts: dict[tuple[int, int, int], str]  # (i, j, onset period) -> burst type

    def points(self) -> set[tuple[int, int, int]]:
        return set(self.bursts)

    def __len__(self) -> int:
        return len(self.bursts)


def _pair_table(num_pairs: int) -> tuple[np.ndarray, int]:
    """First num_pairs canonical (i, j) pairs over the smallest adequate vocabulary."""
    m = max(2, isqrt(2 * num_pairs))
    while m * (m - 1) // 2 < num_pairs:
        m += 1
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    return np.asarray(pairs[:num_pairs], dtype=np.int64), m


def _stream(master_seed: int, tag: int, index: int = 0) -> np.random.Generator:
    # 128-bit Philox key: master seed in the high word, (tag, index) in the low
    key = ((master_seed & _U64) << 64) | ((tag & 0xF) << 60) | (index & ((1 << 60) - 1))
    return np.random.Generator(np.random.Philox(key=key))


def generate_stable(config: SynthConfig) -> StableSeries:
    """Draw a stable (burst-free) count series, reproducible from the seed."""
    pairs, num_words = _pair_table(config.num_pairs)
    T = config.num_periods
    counts = np.empty((config.num_pairs, T), dtype=np.float64)
    log_median = log(config.rate_median)
    for idx in range(config.num_pairs):
        rng = _stream(config.seed, 1, idx)
        rate = rng.lognormal(mean=log_median, sigma=config.rate_shape)
        if config.noise_model == "poisson":
            counts[idx] = rng.poisson(rate, size=T)
        else:
            rho, scale = config.drift_rho, config.drift_scale
            g = np.empty(T)
            g[0] = rng.normal(0.0, scale)
            innovation = scale * np.sqrt(1.0 - rho * rho)
            for t in range(1, T):
                g[t] = rho * g[t - 1] + rng.normal(0.0, innovation)
            counts[idx] = rng.poisson(rate * np.exp(g))
    return StableSeries(
        pairs=pairs,
        counts=counts,
        mu=counts.mean(axis=1),
        sigma=counts.std(axis=1),
        num_words=num_words,
        rng_seed=config.seed,
    )


def inject_bursts(
    series: StableSeries,
    p_burst: float = 0.05,
    p_spike: float = 0.95,
    u_range: tuple[float, float] = (3.0, 6.0),
    mu_min: float = 3.0,
    seed: int | None = None,
) -> tuple[StableSeries, GroundTruth]:
    """Inject spike and step bursts; returns a modified copy plus ground truth."""
    if not 0 < p_burst <= 1 or not 0 <= p_spike <= 1:
        raise ConfigurationError("p_burst must be in (0, 1] and p_spike in [0, 1]")
    if u_range[0] > u_range[1]:
        raise ConfigurationError("u_range must be ordered")
    eligible = np.nonzero(series.mu > mu_min)[0]
    if eligible.size == 0:
        raise ConfigurationError(
            f"no pair has mean count above {mu_min}; raise the base rates "
            "(rate_median) or lower mu_min"
        )
    rng = _stream(series.rng_seed if seed is None else seed, 2)
    counts = series.counts.copy()
    T = series.num_periods
    truth: dict[tuple[int, int, int], str] = {}
    for t in range(1, T + 1):
        hits = eligible[rng.random(eligible.size) < p_burst]
        for idx in hits:
            i, j = (int(v) for v in series.pairs[idx])
            mu, sg = series.mu[idx], series.sigma[idx]
            if rng.random() < p_spike:
                truth[(i, j, t)] = TYPE_SPIKE
                u = rng.uniform(*u_range)
                counts[idx, t - 1] = mu + u * sg
            else:
                truth[(i, j, t)] = TYPE_STEP
                for t2 in range(t, T + 1):
                    u = rng.uniform(*u_range)
                    counts[idx, t2 - 1] = mu + u * sg
    modified = StableSeries(
        pairs=series.pairs,
        counts=counts,
        mu=series.mu,
        sigma=series.sigma,
        num_words=series.num_words,
        rng_seed=series.rng_seed,
    )
    return modified, GroundTruth(bursts=truth)


def to_pair_series(series: StableSeries, omega_size: int = 50) -> PairSeries:
    """Normalize counts by a fixed collection size and stack into a PairSeries."""
    if omega_size < 1:
        raise ConfigurationError("omega_size must be >= 1")
    keep = np.any(series.counts != 0, axis=1)
    return PairSeries(
        pairs=series.pairs[keep].copy(),
        weights=series.counts[keep] / float(omega_size),
        num_words=series.num_words,
        omega_sizes=np.full(series.num_periods, omega_size, dtype=np.int64),
    )


def save_series_tsv(series: StableSeries, path: str | Path) -> None:
    """Nonzero counts as `i j t count` rows (1-based periods)."""
    with open(path, "w", encoding="utf-8") as fh:
        for idx in range(series.pairs.shape[0]):
            i, j = (int(v) for v in series.pairs[idx])
            for t in range(series.num_periods):
                value = series.counts[idx, t]
                if value != 0:
                    fh.write(f"{i}\t{j}\t{t + 1}\t{repr(float(value))}\n")


def save_truth_tsv(truth: GroundTruth, path: str | Path) -> None:
    """Ground-truth onsets as `i j t type` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        for (i, j, t), kind in sorted(truth.bursts.items()):
            fh.write(f"{i}\t{j}\t{t}\t{kind}\n")


def load_truth_tsv(path: str | Path) -> GroundTruth:
    bursts: dict[tuple[int, int, int], str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            i, j, t, kind = line.split("\t")
            bursts[(int(i), int(j), int(t))] = kind.strip()
    return GroundTruth(bursts=bursts)
