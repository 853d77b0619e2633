"""Disjoint adaptive filter: independent per-group Bloom filters.

Instead of varying hash counts on one shared array, this variant gives
each score group its own Bloom filter of R_j bits and equalizes the
expected number of false positives across groups. A filter holding n_j
keys in R_j bits, hashed optimally, has FPR mu^(R_j / n_j) with
mu = 0.5^ln2, so equal false positive counts m_j mu^(R_j/n_j) under the
geometric ratio m_j / m_{j+1} = c pin down the bit shares:

    R_j / n_j - R_1 / n_1 = (j - 1) * ln(c) / ln(mu)

which together with sum R_j = R is a linear system in R_1 / n_1. The
top group gets R_g = 0 by default: its queries are accepted on score
alone. Tight budgets can drive tail shares negative; those groups are
clamped to zero bits (never re-entering) and the system is re-solved
over the rest, so the realized shares always sum to the budget exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bits import BitVector, HashFamily
from .scores import ScoredDataset, ScorePartition, partition_by_ratio
from .standard import (
    OPTIMAL_FPR_BASE,
    StandardBloom,
    _insert_pairs,
    expected_fpr_standard,
    optimal_k,
)

__all__ = [
    "DisjointParams",
    "DisjointBloom",
    "InfeasibleBudgetError",
    "allocate_disjoint",
    "build_disjoint",
    "build_disjoint_from_partition",
    "query_disjoint",
]


class InfeasibleBudgetError(ValueError):
    """No group can receive a workable bit share under this budget."""


def _group_family(seed: int, group_index: int) -> HashFamily:
    # distinct lane per group keeps the per-group filters independent
    return HashFamily(seed, lane=group_index + 1)


def _solve_shares(bitmap_bits: int, n_per_group, eta: float, active: list[int]) -> dict[int, float]:
    """Real-valued bit shares over ``active`` groups, clamping negatives.

    ``active`` holds 0-based group indices; the equalization offset of
    group i is i * eta regardless of which groups remain active.
    """
    active = list(active)
    while active:
        s0 = sum(n_per_group[i] for i in active)
        s1 = sum(i * n_per_group[i] for i in active)
        base = (bitmap_bits - eta * s1) / s0  # R_1 / n_1
        shares = {i: n_per_group[i] * (base + i * eta) for i in active}
        negative = [i for i in active if shares[i] < 0.0]
        if not negative:
            return shares
        active = [i for i in active if i not in negative]
    raise InfeasibleBudgetError(
        f"no feasible bit shares for budget {bitmap_bits} over groups {list(n_per_group)}")


def _round_to_budget(shares: dict[int, float], bitmap_bits: int, g: int) -> list[int]:
    """Nearest-integer shares, remainder pushed onto the lowest-index groups."""
    out = [0] * g
    for i, share in shares.items():
        out[i] = int(np.rint(share))
    diff = bitmap_bits - sum(out)
    order = sorted(shares)
    pos = 0
    while diff != 0 and order:
        i = order[pos % len(order)]
        if diff > 0:
            out[i] += 1
            diff -= 1
        elif out[i] > 0:
            out[i] -= 1
            diff += 1
        pos += 1
    return out


def allocate_disjoint(bitmap_bits: int, n_per_group, c: float, g: int) -> list[int]:
    """Bit budget per group solving the equal-false-positive-count system.

    Group g is fixed at zero bits. Returns integer shares summing to
    ``bitmap_bits`` exactly.
    """
    if bitmap_bits < 0:
        raise ValueError(f"bitmap_bits must be >= 0, got {bitmap_bits}")
    if c <= 1.0:
        raise ValueError(f"ratio c must be > 1, got {c}")
    if g < 1:
        raise ValueError(f"group count g must be >= 1, got {g}")
    if len(n_per_group) != g:
        raise ValueError(f"need {g} key counts, got {len(n_per_group)}")
    if any(n < 1 for n in n_per_group[: g - 1]):
        raise ValueError(f"groups 1..g-1 must hold at least one key, got {list(n_per_group)}")
    if g == 1:
        if bitmap_bits:
            raise InfeasibleBudgetError("single-group structure has no filtered group to take bits")
        return [0]
    eta = math.log(c) / math.log(OPTIMAL_FPR_BASE)
    shares = _solve_shares(bitmap_bits, n_per_group, eta, list(range(g - 1)))
    return _round_to_budget(shares, bitmap_bits, g)


@dataclass(frozen=True)
class DisjointParams:
    partition: ScorePartition
    c: float
    r_per_group: tuple[int, ...]
    k_per_group: tuple[int, ...]

    @property
    def g(self) -> int:
        return self.partition.g


class DisjointBloom:
    """One independent Bloom filter per score group; zero FNR.

    A group with R_j = 0 has no filter and accepts everything in its
    score range (by default only the top group, whose members the score
    model already vouches for).
    """

    __slots__ = ("filters", "params", "model_bits", "seed")

    def __init__(self, filters: tuple[StandardBloom | None, ...], params: DisjointParams,
                 seed: int, model_bits: int = 0):
        self.filters = filters
        self.params = params
        self.seed = seed
        self.model_bits = model_bits

    @property
    def bitmap_bits(self) -> int:
        return sum(self.params.r_per_group)

    def contains(self, item: bytes | str, score: float) -> bool:
        j = self.params.partition.group_index(score)
        filt = self.filters[j]
        return True if filt is None else filt.contains(item)

    def contains_batch(self, base_a: np.ndarray, base_b: np.ndarray,
                       scores: np.ndarray) -> np.ndarray:
        groups = self.params.partition.group_indices(np.asarray(scores))
        out = np.ones(len(scores), dtype=bool)
        for j, filt in enumerate(self.filters):
            if filt is None:
                continue
            mask = groups == j
            if mask.any():
                out[mask] = filt.contains_batch(base_a[mask], base_b[mask])
        return out

    def expected_fpr(self) -> float | None:
        p_hat = self.params.partition.p_hat
        if p_hat is None:
            return None
        total = 0.0
        for p, r, n, k in zip(p_hat, self.params.r_per_group,
                              self.params.partition.n_per_group, self.params.k_per_group):
            total += p * (1.0 if r == 0 else expected_fpr_standard(r, n, k))
        return total


def build_disjoint_from_partition(dataset: ScoredDataset, bitmap_bits: int,
                                  partition: ScorePartition, c: float, seed: int,
                                  model_bits: int = 0) -> DisjointBloom:
    """Disjoint filter over an existing partition.

    Groups below the top with no keys take one reject-all bit (nothing
    inserted, one probe) instead of entering the equalization, which
    would otherwise divide by their key count.
    """
    g = partition.g
    n_per_group = partition.n_per_group
    empty = [i for i in range(g - 1) if n_per_group[i] == 0]
    reserve = len(empty)
    if bitmap_bits < reserve:
        raise InfeasibleBudgetError(
            f"budget {bitmap_bits} cannot cover {reserve} keyless groups")
    if g == 1:
        r_per_group = [0]
        if bitmap_bits:
            raise InfeasibleBudgetError("single-group structure has no filtered group to take bits")
    else:
        eta = math.log(c) / math.log(OPTIMAL_FPR_BASE)
        occupied = [i for i in range(g - 1) if i not in empty]
        if not occupied and bitmap_bits > reserve:
            raise InfeasibleBudgetError("no keyed groups below the top to take the budget")
        shares = _solve_shares(bitmap_bits - reserve, n_per_group, eta, occupied) if occupied else {}
        r_per_group = _round_to_budget(shares, bitmap_bits - reserve, g)
        for i in empty:
            r_per_group[i] = 1

    k_per_group = []
    for i in range(g):
        r_i, n_i = r_per_group[i], n_per_group[i]
        if r_i == 0:
            k_per_group.append(0)
        elif n_i == 0:
            k_per_group.append(1)
        else:
            k_per_group.append(max(1, optimal_k(r_i, n_i)))

    params = DisjointParams(partition, c, tuple(r_per_group), tuple(k_per_group))
    groups = partition.group_indices(dataset.key_scores) if dataset.n else None
    base = dataset.key_pairs(seed) if dataset.n else None
    filters: list[StandardBloom | None] = []
    for i in range(g):
        if r_per_group[i] == 0:
            filters.append(None)
            continue
        bloom = StandardBloom(BitVector(r_per_group[i]), k_per_group[i],
                              _group_family(seed, i), 0)
        if groups is not None:
            mask = groups == i
            if mask.any():
                _insert_pairs(bloom, base[0][mask], base[1][mask])
                bloom.n_inserted = int(mask.sum())
        bloom.bits.freeze()
        filters.append(bloom)
    return DisjointBloom(tuple(filters), params, seed, model_bits)


def build_disjoint(dataset: ScoredDataset, bitmap_bits: int, g: int, c: float, seed: int,
                   model_bits: int = 0) -> DisjointBloom:
    """Geometric partition with ratio c, then per-group filters."""
    partition = partition_by_ratio(dataset, g, c)
    return build_disjoint_from_partition(dataset, bitmap_bits, partition, c, seed, model_bits)


def query_disjoint(filt: DisjointBloom, item: bytes | str, score: float) -> bool:
    return filt.contains(item, score)
