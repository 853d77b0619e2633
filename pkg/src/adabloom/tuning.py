"""Hyper-parameter search for every filter variant, with memory accounting.

Threshold filters sweep tau over non-key score percentiles; the
adaptive filter sweeps (k_max, c) with k_min fixed at 0 (so g = k_max + 1);
the disjoint filter sweeps (g, c). Every candidate is built at the full
bit budget and scored by empirical FPR on the dataset's own non-keys,
argmin wins. Candidates whose partition or allocation is infeasible are
skipped with a diagnostic and recorded in the candidate log, so a
report never has silent gaps.

Memory accounting follows the benchmark convention that a learned
method's budget includes its score model: total = bitmap + model bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adaptive import AdaptiveParams, build_ada
from .disjoint import InfeasibleBudgetError, build_disjoint
from .learned import build_lbf, build_sandwiched
from .scores import InsufficientDataError, ScoredDataset, partition_by_ratio

__all__ = [
    "TuneResult",
    "NoFeasibleCandidateError",
    "DEFAULT_C_GRID",
    "DEFAULT_KMAX_GRID",
    "DEFAULT_G_GRID",
    "default_tau_grid",
    "tune_lbf",
    "tune_sandwiched",
    "tune_ada",
    "tune_disjoint",
    "account_memory",
]

DEFAULT_C_GRID = tuple(round(1.2 + 0.2 * i, 1) for i in range(10))  # 1.2 .. 3.0
DEFAULT_KMAX_GRID = tuple(range(2, 13))
DEFAULT_G_GRID = tuple(range(2, 13))


class NoFeasibleCandidateError(ValueError):
    """Every candidate in the grid was infeasible for this dataset."""


@dataclass
class TuneResult:
    method: str
    params: dict
    fpr: float
    bitmap_bits: int
    model_bits: int
    filter: object
    candidates: list[dict] = field(default_factory=list)
    grids: dict = field(default_factory=dict)

    @property
    def total_bits(self) -> int:
        return account_memory(self.bitmap_bits, self.model_bits, True)


def account_memory(bitmap_bits: int, model_bits: int, include_model: bool) -> int:
    """Total budget charged to a method; learned methods pay for the model."""
    if bitmap_bits < 0 or model_bits < 0:
        raise ValueError("bit counts must be >= 0")
    return bitmap_bits + (model_bits if include_model else 0)


def default_tau_grid(dataset: ScoredDataset) -> tuple[float, ...]:
    """Percentiles 1..99 of the non-key scores and of the key scores, merged.

    Non-key percentiles alone stop near the top of the non-key
    distribution, capping tau below the threshold filter's optimum at
    generous budgets; the key percentiles supply resolution in the
    high-score region where that optimum lives.
    """
    if dataset.m == 0:
        raise ValueError("cannot derive a tau grid without non-keys")
    qs = np.percentile(dataset.nonkey_scores, np.arange(1, 100))
    if dataset.n:
        qs = np.concatenate([qs, np.percentile(dataset.key_scores, np.arange(1, 100))])
    return tuple(float(t) for t in np.unique(qs))


def _measure(filt, dataset: ScoredDataset, seed: int, subset=None) -> float:
    """Empirical FPR over the dataset's non-keys (batch path)."""
    if dataset.m == 0:
        raise ValueError("cannot measure FPR without non-keys")
    a, b = dataset.nonkey_pairs(seed)
    scores = dataset.nonkey_scores
    if subset is not None:
        a, b, scores = a[subset], b[subset], scores[subset]
        if len(scores) == 0:
            raise ValueError("empty evaluation split")
    hits = filt.contains_batch(a, b, scores)
    return float(hits.mean())


def _holdout_split(dataset: ScoredDataset, fraction: float, seed: int):
    """(tune mask, holdout mask) over non-keys, deterministic per seed."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"holdout fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng((seed, 0x401D))
    holdout = np.zeros(dataset.m, dtype=bool)
    count = int(round(dataset.m * fraction))
    holdout[rng.permutation(dataset.m)[:count]] = True
    return ~holdout, holdout


def _finish(method: str, best, dataset: ScoredDataset, bitmap_bits: int, seed: int,
            model_bits: int, candidates, holdout, grids) -> TuneResult:
    fpr, params, filt = best
    if holdout is not None:
        fpr = _measure(filt, dataset, seed, subset=holdout)
    return TuneResult(method, dict(params), fpr, bitmap_bits, model_bits, filt,
                      candidates, grids)


def _sweep_tau(method: str, build, dataset: ScoredDataset, bitmap_bits: int,
               tau_grid, seed: int, model_bits: int, holdout_fraction: float) -> TuneResult:
    if tau_grid is None:
        tau_grid = default_tau_grid(dataset)
    taus = [float(t) for t in tau_grid]
    if not taus:
        raise ValueError("tau grid must be non-empty")
    tune_on = holdout = None
    if holdout_fraction:
        tune_on, holdout = _holdout_split(dataset, holdout_fraction, seed)
    best = None
    candidates = []
    for tau in taus:
        filt = build(dataset, bitmap_bits, tau, seed, model_bits)
        fpr = _measure(filt, dataset, seed, subset=tune_on)
        candidates.append({"params": {"tau": tau}, "fpr": fpr, "status": "ok"})
        # ties break toward larger tau (smaller backup filter)
        if best is None or fpr <= best[0]:
            best = (fpr, {"tau": tau}, filt)
    return _finish(method, best, dataset, bitmap_bits, seed, model_bits, candidates,
                   holdout, {"tau_grid": taus})


def tune_lbf(dataset: ScoredDataset, bitmap_bits: int, tau_grid=None, seed: int = 0,
             model_bits: int = 0, holdout_fraction: float = 0.0) -> TuneResult:
    """Pick the tau minimizing empirical FPR for the learned filter.

    With ``holdout_fraction`` set, that share of the non-keys is held
    out of the sweep and the returned FPR is re-measured on it.
    """
    return _sweep_tau("lbf", build_lbf, dataset, bitmap_bits, tau_grid, seed, model_bits,
                      holdout_fraction)


def tune_sandwiched(dataset: ScoredDataset, bitmap_bits: int, tau_grid=None, seed: int = 0,
                    model_bits: int = 0, holdout_fraction: float = 0.0) -> TuneResult:
    """Same tau sweep for the sandwiched filter (allocation is per tau)."""
    return _sweep_tau("sandwich", build_sandwiched, dataset, bitmap_bits, tau_grid, seed,
                      model_bits, holdout_fraction)


def _grid_search(method: str, dataset: ScoredDataset, bitmap_bits: int, axis_pairs,
                 build_candidate, seed: int, model_bits: int,
                 holdout_fraction: float, grids: dict) -> TuneResult:
    tune_on = holdout = None
    if holdout_fraction:
        tune_on, holdout = _holdout_split(dataset, holdout_fraction, seed)
    best = None
    candidates = []
    for params in axis_pairs:
        try:
            filt = build_candidate(params)
        except (InsufficientDataError, InfeasibleBudgetError) as exc:
            candidates.append({"params": params, "fpr": None, "status": f"skipped: {exc}"})
            continue
        fpr = _measure(filt, dataset, seed, subset=tune_on)
        candidates.append({"params": params, "fpr": fpr, "status": "ok"})
        # first strict improvement wins: grids iterate smallest-first, so
        # ties resolve toward the smaller parameter values
        if best is None or fpr < best[0]:
            best = (fpr, params, filt)
    if best is None:
        raise NoFeasibleCandidateError(f"no feasible {method} candidate (all skipped)")
    return _finish(method, best, dataset, bitmap_bits, seed, model_bits, candidates,
                   holdout, grids)


def tune_ada(dataset: ScoredDataset, bitmap_bits: int, kmax_grid=None, c_grid=None,
             seed: int = 0, model_bits: int = 0, holdout_fraction: float = 0.0) -> TuneResult:
    """Full (k_max, c) grid with k_min = 0, so each k_max implies g = k_max + 1."""
    kmax_grid = DEFAULT_KMAX_GRID if kmax_grid is None else tuple(kmax_grid)
    c_grid = DEFAULT_C_GRID if c_grid is None else tuple(c_grid)
    if not kmax_grid or not c_grid:
        raise ValueError("grids must be non-empty")

    def build_candidate(params):
        g = params["k_max"] + 1
        partition = partition_by_ratio(dataset, g, params["c"])
        ada_params = AdaptiveParams.from_ratio(partition, params["k_max"], 0, params["c"])
        return build_ada(dataset, bitmap_bits, ada_params, seed, model_bits)

    axis = [{"k_max": k, "c": c} for k in sorted(kmax_grid) for c in sorted(c_grid)]
    return _grid_search("ada", dataset, bitmap_bits, axis, build_candidate, seed,
                        model_bits, holdout_fraction,
                        {"kmax_grid": list(kmax_grid), "c_grid": list(c_grid)})


def tune_disjoint(dataset: ScoredDataset, bitmap_bits: int, g_grid=None, c_grid=None,
                  seed: int = 0, model_bits: int = 0, holdout_fraction: float = 0.0) -> TuneResult:
    """Full (g, c) grid with the top group fixed at zero bits."""
    g_grid = DEFAULT_G_GRID if g_grid is None else tuple(g_grid)
    c_grid = DEFAULT_C_GRID if c_grid is None else tuple(c_grid)
    if not g_grid or not c_grid:
        raise ValueError("grids must be non-empty")

    def build_candidate(params):
        return build_disjoint(dataset, bitmap_bits, params["g"], params["c"], seed, model_bits)

    axis = [{"g": g, "c": c} for g in sorted(g_grid) for c in sorted(c_grid)]
    return _grid_search("disjoint", dataset, bitmap_bits, axis, build_candidate, seed,
                        model_bits, holdout_fraction,
                        {"g_grid": list(g_grid), "c_grid": list(c_grid)})
