"""Score-adaptive Bloom filter: one shared bit array, per-group hash counts.

Rather than switching between K probes and none at a single threshold,
the adaptive filter splits the score axis into g groups and probes the
shared R-bit array K_j times for group j, with K_j decreasing as scores
rise: low-score regions are dense in non-keys and get many probes,
high-score regions are dense in keys and get few (possibly zero, which
accepts on score alone and inserts nothing).

With alpha the probability that any given bit is set,

    alpha = 1 - (1 - 1/R)^(sum_t n_t K_t)

a group-j query that reaches the array passes with probability
alpha^K_j, and the overall false positive rate is sum_j p_j alpha^K_j
with p_j the non-key mass of group j. When p_j / p_{j+1} >= c > 1 and
K_j steps down by one per group, that sum is bounded by a closed form
in (c, alpha, g, K_max), with equality for exactly geometric p; see
``fpr_upper_bound``. ``kmax_from_lbf`` picks the hash-count range that
makes the adaptive filter provably no worse than a threshold filter
with K probes at the same bit budget.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .bits import BitVector, HashFamily
from .scores import ScoredDataset, ScorePartition

__all__ = [
    "AdaptiveParams",
    "AdaptiveBloom",
    "build_ada",
    "query_ada",
    "alpha_load",
    "expected_fpr_ada",
    "fpr_upper_bound",
    "kmax_from_lbf",
]

logger = logging.getLogger(__name__)

_CA_BRANCH_TOL = 1e-9  # |c*alpha - 1| below this selects the limit branch


@dataclass(frozen=True)
class AdaptiveParams:
    """Partition plus one hash count per group (non-increasing in j).

    ``from_ratio`` builds the step-one ladder K_j = k_max - (j - 1) used
    by the tuning strategy; ``with_hash_counts`` accepts any
    non-increasing ladder, which the reduction identities (a threshold
    filter is the g=2 ladder (K, 0)) and the head-to-head comparison
    protocols need.
    """

    partition: ScorePartition
    k_per_group: tuple[int, ...]
    c: float | None = None

    def __post_init__(self):
        ks = self.k_per_group
        if len(ks) != self.partition.g:
            raise ValueError(f"need one hash count per group ({self.partition.g}), got {len(ks)}")
        if any(k < 0 for k in ks):
            raise ValueError(f"hash counts must be >= 0, got {ks}")
        if any(ks[i] < ks[i + 1] for i in range(len(ks) - 1)):
            raise ValueError(f"hash counts must be non-increasing, got {ks}")
        if self.c is not None and self.c <= 1.0:
            raise ValueError(f"ratio c must be > 1, got {self.c}")

    @classmethod
    def from_ratio(cls, partition: ScorePartition, k_max: int, k_min: int = 0,
                   c: float | None = None) -> "AdaptiveParams":
        g = partition.g
        if k_min < 0 or k_max < k_min:
            raise ValueError(f"need k_max >= k_min >= 0, got ({k_max}, {k_min})")
        if k_max - k_min != g - 1:
            raise ValueError(f"k_max - k_min must equal g - 1 = {g - 1}, got {k_max - k_min}")
        return cls(partition, tuple(range(k_max, k_min - 1, -1)), c)

    @classmethod
    def with_hash_counts(cls, partition: ScorePartition, k_per_group,
                         c: float | None = None) -> "AdaptiveParams":
        return cls(partition, tuple(int(k) for k in k_per_group), c)

    @property
    def g(self) -> int:
        return self.partition.g

    @property
    def k_max(self) -> int:
        return self.k_per_group[0]

    @property
    def k_min(self) -> int:
        return self.k_per_group[-1]


class AdaptiveBloom:
    """Shared-array filter probing group j's queries K_j times; zero FNR."""

    __slots__ = ("bits", "params", "family", "model_bits")

    def __init__(self, bits: BitVector, params: AdaptiveParams, family: HashFamily,
                 model_bits: int = 0):
        self.bits = bits
        self.params = params
        self.family = family
        self.model_bits = model_bits

    @property
    def size_bits(self) -> int:
        return self.bits.length_bits

    @property
    def bitmap_bits(self) -> int:
        return self.bits.length_bits

    def alpha(self) -> float:
        """Analytical load from the realized per-group key counts."""
        return alpha_load(self.size_bits, self.params.partition.n_per_group,
                          self.params.k_per_group)

    def load_observed(self) -> float:
        """Realized fraction of set bits, for cross-checking ``alpha``."""
        return self.bits.load_fraction()

    def contains(self, item: bytes | str, score: float) -> bool:
        j = self.params.partition.group_index(score)
        k = self.params.k_per_group[j]
        return self.bits.test_bits(self.family.indices(item, k, self.size_bits))

    def contains_batch(self, base_a: np.ndarray, base_b: np.ndarray,
                       scores: np.ndarray) -> np.ndarray:
        a, b = self.family.remix_pairs(base_a, base_b)
        groups = self.params.partition.group_indices(np.asarray(scores))
        out = np.ones(len(scores), dtype=bool)
        for j, k in enumerate(self.params.k_per_group):
            if k == 0:
                continue
            mask = groups == j
            if mask.any():
                out[mask] = self.bits.test_hashed(a[mask], b[mask], k)
        return out

    def expected_fpr(self) -> float | None:
        p_hat = self.params.partition.p_hat
        if p_hat is None:
            return None
        return expected_fpr_ada(p_hat, self.params.k_per_group, self.alpha())


def build_ada(dataset: ScoredDataset, bitmap_bits: int, params: AdaptiveParams,
              seed: int, model_bits: int = 0) -> AdaptiveBloom:
    """Insert each key with its group's hash count into one shared array.

    Groups with K_j = 0 write nothing: their members are accepted on
    score alone and must not contribute to the array load.
    """
    if bitmap_bits < 1:
        raise ValueError(f"bitmap_bits must be >= 1, got {bitmap_bits}")
    family = HashFamily(seed)
    bits = BitVector(bitmap_bits)
    if dataset.n:
        base_a, base_b = dataset.key_pairs(seed)
        a, b = family.remix_pairs(base_a, base_b)
        groups = params.partition.group_indices(dataset.key_scores)
        for j, k in enumerate(params.k_per_group):
            if k == 0:
                continue
            mask = groups == j
            if mask.any():
                bits.set_hashed(a[mask], b[mask], k)
    bits.freeze()
    return AdaptiveBloom(bits, params, family, model_bits)


def query_ada(filt: AdaptiveBloom, item: bytes | str, score: float) -> bool:
    return filt.contains(item, score)


def alpha_load(r: int, n_per_group, k_per_group) -> float:
    """Probability a given bit is set: 1 - (1 - 1/R)^(sum_t n_t K_t)."""
    if r < 1:
        raise ValueError(f"filter size r must be >= 1, got {r}")
    if len(n_per_group) != len(k_per_group):
        raise ValueError(
            f"group count mismatch: {len(n_per_group)} key counts vs {len(k_per_group)} hash counts")
    total = sum(int(n) * int(k) for n, k in zip(n_per_group, k_per_group))
    if total == 0:
        return 0.0
    return -math.expm1(total * math.log1p(-1.0 / r))


def expected_fpr_ada(p, k_per_group, alpha: float) -> float:
    """Overall false positive rate sum_j p_j alpha^K_j."""
    if len(p) != len(k_per_group):
        raise ValueError(f"group count mismatch: {len(p)} probabilities vs {len(k_per_group)} hash counts")
    total = math.fsum(p)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"group probabilities must sum to 1, got {total}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return math.fsum(pj * alpha ** kj for pj, kj in zip(p, k_per_group))


def fpr_upper_bound(c: float, alpha: float, g: int, k_max: int) -> float:
    """Closed-form bound on the overall FPR under geometric group ratios.

    Equals the direct sum exactly when p_j / p_{j+1} = c for all j and
    K_j steps down by one from k_max; dominates it when the ratios are
    at least c. The c*alpha = 1 singularity is handled by its limit.
    """
    if c <= 1.0:
        raise ValueError(f"ratio c must be > 1, got {c}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if g < 1:
        raise ValueError(f"group count g must be >= 1, got {g}")
    ca = c * alpha
    if abs(ca - 1.0) < _CA_BRANCH_TOL:
        return g * (1.0 - c) / (1.0 - c**g) * alpha ** (k_max - g + 1)
    return ((1.0 - c) * (1.0 - ca**g)
            / ((1.0 / alpha - c) * (alpha**g - ca**g))
            * alpha**k_max)


def kmax_from_lbf(k_lbf: int, g: int) -> tuple[int, int]:
    """Hash-count range making g adaptive groups beat a K-probe threshold filter.

    Returns (k_max, k_min) with k_max = floor(K + g/2 - 1) and
    k_min = k_max - g + 1; requires g <= 2K so the range stays
    non-negative.
    """
    if g < 2:
        raise ValueError(f"group count g must be >= 2, got {g}")
    if k_lbf < 1:
        raise ValueError(f"k_lbf must be >= 1, got {k_lbf}")
    if g > 2 * k_lbf:
        raise ValueError(f"group count g={g} violates g <= 2*K = {2 * k_lbf}")
    k_max = int(math.floor(k_lbf + g / 2.0 - 1.0))
    k_min = k_max - g + 1
    if k_min < 0:
        logger.warning("k_min=%d clamped to 0 for (K=%d, g=%d)", k_min, k_lbf, g)
        k_min = 0
    return k_max, k_min
