"""Approximate subset-sum solvers and counters over random ensembles.

A target ``z`` is *hit* by an index set ``S`` when the achieved sum lands in
the closed infinity-norm box ``[z - eps, z + eps]``; boundary hits count.

Strategies
----------
``EXHAUSTIVE``
    Enumerates every admissible subset (budget-capped). A miss is a proof
    that no admissible subset exists.
``MEET_IN_THE_MIDDLE``
    Exact for the 1-D any-cardinality problem. Hard capacity limit n <= 63
    (table addressing); the enumeration budget caps the practical range.
``GREEDY_SWAP``
    Fixed-cardinality d-dimensional local search: greedy build toward the
    target, then best-improvement single swaps, with seeded random restarts.
    A miss proves nothing and is reported as "not-found", never as
    "proven-infeasible".

Determinism: among equal-residual candidates the lexicographically smallest
index set wins, and greedy restarts draw from an explicit :class:`SeedSpec`.

The 1-D cover question ("is every grid point hit by some subset sum?") is
answered exactly for any n by :func:`inflated_sum_intervals`, which maintains
the union of ``[s - eps, s + eps]`` over all subset sums s as a sorted list of
disjoint closed intervals: start from the empty subset's interval and fold in
one value at a time (union of the shifted and unshifted families). Interval
merging is exact, so membership agrees with full enumeration up to the usual
one-ulp reassociation caveat at exact box boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import BudgetError, CapacityError, ParameterError
from .sampling import NsnEnsemble, SeedSpec, _generator

__all__ = [
    "DEFAULT_ENUMERATION_BUDGET",
    "CardinalityMode",
    "Strategy",
    "SolverParams",
    "SubsetSolution",
    "SearchOutcome",
    "dimension_constant",
    "verify_solution",
    "solve_rssp_1d",
    "solve_mrss",
    "search_subsets",
    "subset_sum_number",
    "partition_boost",
    "BoostResult",
    "GroupAttempt",
    "cover_targets",
    "CoverReport",
    "inflated_sum_intervals",
]

DEFAULT_ENUMERATION_BUDGET = 5_000_000
_MITM_MAX_N = 63


class CardinalityMode(Enum):
    EXACT = "exact"
    AT_MOST = "at_most"


class Strategy(Enum):
    EXHAUSTIVE = "exhaustive"
    MEET_IN_THE_MIDDLE = "mitm"
    GREEDY_SWAP = "greedy_swap"


def dimension_constant(d: int) -> float:
    """``min(1/d^2, 1/16)``; recomputed on demand so it can never go stale."""
    if d < 1:
        raise ParameterError("dimension must be >= 1")
    return min(1.0 / (d * d), 1.0 / 16.0)


@dataclass(frozen=True)
class SolverParams:
    """Knobs for the fixed-cardinality multidimensional search."""

    epsilon: float
    k: int
    mode: CardinalityMode = CardinalityMode.EXACT
    strategy: Strategy = Strategy.EXHAUSTIVE
    restarts: int = 8
    max_iters: int = 200
    enumeration_budget: int = DEFAULT_ENUMERATION_BUDGET
    seed: SeedSpec = field(default_factory=lambda: SeedSpec(0, 0))

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ParameterError("epsilon must be positive")
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        if self.restarts < 0 or self.max_iters < 1:
            raise ParameterError("restarts must be >= 0 and max_iters >= 1")
        if self.enumeration_budget < 1:
            raise ParameterError("enumeration_budget must be >= 1")


@dataclass(frozen=True, eq=False)
class SubsetSolution:
    """Witness for a hit (or the best near-miss a search could find)."""

    indices: tuple[int, ...]
    achieved: np.ndarray  # (d,)
    residual_inf: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        achieved = np.atleast_1d(np.asarray(self.achieved, dtype=np.float64))
        object.__setattr__(self, "achieved", achieved)
        object.__setattr__(self, "residual_inf", float(self.residual_inf))


def _sum_of(vectors: np.ndarray, indices) -> np.ndarray:
    """Ascending-index sequential sum; the canonical achieved value."""
    total = np.zeros(vectors.shape[1], dtype=np.float64)
    for i in indices:
        total = total + vectors[i]
    return total


def _make_solution(vectors: np.ndarray, indices, target: np.ndarray) -> SubsetSolution:
    achieved = _sum_of(vectors, sorted(int(i) for i in indices))
    residual = float(np.abs(achieved - target).max()) if target.size else 0.0
    return SubsetSolution(tuple(sorted(int(i) for i in indices)), achieved, residual)


def verify_solution(
    solution: SubsetSolution, vectors: np.ndarray, target, atol: float = 1e-12
) -> bool:
    """Recompute the witness from the raw ensemble and check the stored fields."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    achieved = _sum_of(vectors, solution.indices)
    if np.abs(achieved - solution.achieved).max(initial=0.0) > atol:
        return False
    residual = float(np.abs(achieved - target).max()) if target.size else 0.0
    return abs(residual - solution.residual_inf) <= atol


@dataclass(frozen=True)
class SearchOutcome:
    """Result of a subset search, keeping the best near-miss for reporting."""

    solution: SubsetSolution | None  # within tolerance, else None
    best: SubsetSolution | None  # best subset seen regardless of tolerance
    exhaustive: bool  # whole family enumerated?

    @property
    def status(self) -> str:
        if self.solution is not None:
            return "hit"
        return "proven-infeasible" if self.exhaustive else "not-found"


# ---------------------------------------------------------------------------
# 1-D any-cardinality solver
# ---------------------------------------------------------------------------


def _all_subset_sums(xs: np.ndarray) -> np.ndarray:
    """All 2^n subset sums; entry m sums the set bits of m in ascending index order."""
    sums = np.zeros(1, dtype=np.float64)
    for x in xs:
        sums = np.concatenate([sums, sums + x])
    return sums


def _mask_indices(mask: int, offset: int = 0) -> tuple[int, ...]:
    out = []
    bit = 0
    while mask:
        if mask & 1:
            out.append(offset + bit)
        mask >>= 1
        bit += 1
    return tuple(out)


def _lex_best_masks(masks, to_indices) -> tuple[int, ...]:
    return min(to_indices(m) for m in masks)


def solve_rssp_1d(
    xs,
    target: float,
    epsilon: float,
    strategy: Strategy = Strategy.MEET_IN_THE_MIDDLE,
    enumeration_budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> SubsetSolution | None:
    """Any-cardinality 1-D subset sum within ``epsilon`` of ``target``.

    Both strategies are exact: ``None`` means no subset (including the empty
    one) lands in the closed interval.
    """
    xs = np.ascontiguousarray(np.asarray(xs, dtype=np.float64))
    if xs.ndim != 1:
        raise ParameterError("xs must be a 1-D array")
    if not epsilon > 0.0:
        raise ParameterError("epsilon must be positive")
    if not np.isfinite(target):
        raise ParameterError("target must be finite")
    n = xs.size
    target = float(target)
    vectors = xs[:, None]
    tvec = np.array([target])

    if strategy is Strategy.EXHAUSTIVE:
        if 2**n > enumeration_budget:
            raise BudgetError(f"2^{n} subsets exceed the enumeration budget")
        sums = _all_subset_sums(xs)
        residuals = np.abs(sums - target)
        best = residuals.min()
        ties = np.flatnonzero(residuals == best)
        indices = _lex_best_masks(ties.tolist(), _mask_indices)
        solution = _make_solution(vectors, indices, tvec)
        return solution if solution.residual_inf <= epsilon else None

    if strategy is not Strategy.MEET_IN_THE_MIDDLE:
        raise ParameterError(f"unsupported 1-D strategy {strategy}")
    if n > _MITM_MAX_N:
        raise CapacityError(f"meet-in-the-middle table needs n <= {_MITM_MAX_N}, got {n}")
    n_left = (n + 1) // 2
    if 2**n_left > enumeration_budget:
        raise BudgetError(f"meet-in-the-middle half-table 2^{n_left} exceeds the budget")

    left = _all_subset_sums(xs[:n_left])
    right = _all_subset_sums(xs[n_left:])
    order = np.argsort(right, kind="stable")
    right_sorted = right[order]
    need = target - left
    pos = np.searchsorted(right_sorted, need)
    lo = np.clip(pos - 1, 0, right_sorted.size - 1)
    hi = np.clip(pos, 0, right_sorted.size - 1)
    res_lo = np.abs(left + right_sorted[lo] - target)
    res_hi = np.abs(left + right_sorted[hi] - target)
    best = min(res_lo.min(), res_hi.min())

    def pair_indices(left_mask: int, right_rank: int) -> tuple[int, ...]:
        right_mask = int(order[right_rank])
        return tuple(sorted(_mask_indices(left_mask) + _mask_indices(right_mask, n_left)))

    candidates = [
        pair_indices(int(i), int(lo[i])) for i in np.flatnonzero(res_lo == best)
    ] + [pair_indices(int(i), int(hi[i])) for i in np.flatnonzero(res_hi == best)]
    solution = _make_solution(vectors, min(candidates), tvec)
    return solution if solution.residual_inf <= epsilon else None


# ---------------------------------------------------------------------------
# Fixed-cardinality d-dimensional search
# ---------------------------------------------------------------------------

def _family_size(n: int, cardinalities) -> int:
    return sum(math.comb(n, k) for k in cardinalities)


def _colex_sum_layers(vectors: np.ndarray, k_max: int) -> list[np.ndarray]:
    """Subset sums of every cardinality up to k_max, colexicographic order.

    In colex order the (j-1)-subsets with maximum element below L are exactly
    the first C(L, j-1) rows of layer j-1, so layer j is a concatenation of
    prefix slices plus one vector each: no per-subset Python work. Within a
    subset the additions happen in ascending index order (the canonical order).
    Memory is O(total family size x d).
    """
    m, d = vectors.shape
    layers = [np.zeros((1, d))]
    for j in range(1, k_max + 1):
        prev = layers[j - 1]
        parts = [prev[: math.comb(last, j - 1)] + vectors[last] for last in range(j - 1, m)]
        layers.append(np.concatenate(parts) if parts else np.empty((0, d)))
    return layers


def _colex_decode(rank: int, j: int) -> tuple[int, ...]:
    """Indices of the rank-th j-subset in colex order (combinatorial number system)."""
    out = []
    remaining = int(rank)
    for size in range(j, 0, -1):
        last = size - 1
        while math.comb(last + 1, size) <= remaining:
            last += 1
        out.append(last)
        remaining -= math.comb(last, size)
    return tuple(reversed(out))


_TIE_DECODE_CAP = 1024


def _enumerate_best(
    vectors: np.ndarray, target: np.ndarray, cardinalities, budget: int
) -> tuple[tuple[int, ...], float]:
    n = vectors.shape[0]
    if _family_size(n, cardinalities) > budget:
        raise BudgetError(
            f"{_family_size(n, cardinalities)} subsets exceed the enumeration budget {budget}"
        )
    layers = _colex_sum_layers(vectors, max(cardinalities))
    best_res = math.inf
    best_indices: tuple[int, ...] | None = None
    for j in cardinalities:
        sums = layers[j]
        if sums.shape[0] == 0:
            continue
        residuals = np.abs(sums - target).max(axis=1) if target.size else np.zeros(len(sums))
        res = float(residuals.min())
        if res > best_res:
            continue
        # exact-tie resolution; the cap keeps degenerate inputs from exploding
        ties = np.flatnonzero(residuals == res)[:_TIE_DECODE_CAP]
        decoded = min(_colex_decode(int(r), j) for r in ties)
        if res < best_res or best_indices is None or decoded < best_indices:
            best_res, best_indices = res, decoded
    assert best_indices is not None
    return best_indices, best_res


def _greedy_build(vectors: np.ndarray, target: np.ndarray, k: int) -> list[int]:
    n = vectors.shape[0]
    chosen: list[int] = []
    current = np.zeros(vectors.shape[1])
    available = np.ones(n, dtype=bool)
    for _ in range(k):
        residuals = np.abs((current + vectors) - target).max(axis=1)
        residuals[~available] = np.inf
        pick = int(np.argmin(residuals))
        available[pick] = False
        chosen.append(pick)
        current = current + vectors[pick]
    return sorted(chosen)


def _swap_descent(
    vectors: np.ndarray, target: np.ndarray, start: list[int], max_iters: int
) -> tuple[tuple[int, ...], float]:
    n = vectors.shape[0]
    inside = sorted(start)
    in_set = np.zeros(n, dtype=bool)
    in_set[inside] = True
    current = vectors[inside].sum(axis=0) if inside else np.zeros(vectors.shape[1])
    residual = float(np.abs(current - target).max())
    for _ in range(max_iters):
        outside = np.flatnonzero(~in_set)
        if not inside or outside.size == 0:
            break
        trial = (
            current[None, None, :]
            - vectors[inside][:, None, :]
            + vectors[outside][None, :, :]
        )
        trial_res = np.abs(trial - target).max(axis=2)
        flat = int(np.argmin(trial_res))
        best = float(trial_res.reshape(-1)[flat])
        if not best < residual:
            break
        out_pos, in_pos = divmod(flat, outside.size)
        leaving, entering = inside[out_pos], int(outside[in_pos])
        in_set[leaving] = False
        in_set[entering] = True
        inside = sorted(np.flatnonzero(in_set).tolist())
        current = vectors[inside].sum(axis=0)
        residual = float(np.abs(current - target).max())
    return tuple(inside), residual


def _greedy_swap_best(
    vectors: np.ndarray, target: np.ndarray, k: int, params: SolverParams
) -> tuple[tuple[int, ...], float]:
    n = vectors.shape[0]
    best_indices, best_res = _swap_descent(
        vectors, target, _greedy_build(vectors, target, k), params.max_iters
    )
    for restart in range(1, params.restarts + 1):
        rng = _generator(params.seed.substream(restart))
        start = sorted(int(i) for i in rng.permutation(n)[:k])
        indices, res = _swap_descent(vectors, target, start, params.max_iters)
        if res < best_res or (res == best_res and indices < best_indices):
            best_indices, best_res = indices, res
    return best_indices, best_res


def search_subsets(vectors, target, params: SolverParams) -> SearchOutcome:
    """Search raw vectors for a subset hitting the box around ``target``.

    Returns the best subset found either way, so callers can report near
    misses; :attr:`SearchOutcome.exhaustive` says whether a miss is a proof.
    """
    vectors = np.atleast_2d(np.ascontiguousarray(np.asarray(vectors, dtype=np.float64)))
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    if not np.isfinite(target).all():
        raise ParameterError("target must be finite")
    if vectors.ndim != 2 or vectors.shape[1] != target.size:
        raise ParameterError(
            f"vectors of dimension {vectors.shape[1]} vs target of dimension {target.size}"
        )
    n = vectors.shape[0]
    if params.mode is CardinalityMode.EXACT:
        if params.k > n:
            return SearchOutcome(None, None, exhaustive=True)  # no k-subsets exist
        cardinalities: list[int] = [params.k]
    else:
        cardinalities = list(range(0, min(params.k, n) + 1))

    if params.strategy is Strategy.EXHAUSTIVE:
        indices, residual = _enumerate_best(
            vectors, target, cardinalities, params.enumeration_budget
        )
        exhaustive = True
    elif params.strategy is Strategy.GREEDY_SWAP:
        best: tuple[tuple[int, ...], float] | None = None
        for k in cardinalities:
            if k == 0:
                cand = ((), float(np.abs(target).max()))
            else:
                cand = _greedy_swap_best(vectors, target, k, params)
            if best is None or cand[1] < best[1] or (cand[1] == best[1] and cand[0] < best[0]):
                best = cand
        assert best is not None
        indices, residual = best
        exhaustive = False
    else:
        raise ParameterError(f"strategy {params.strategy} is 1-D only")

    solution = _make_solution(vectors, indices, target)
    hit = solution if solution.residual_inf <= params.epsilon else None
    return SearchOutcome(hit, solution, exhaustive)


def solve_mrss(ensemble: NsnEnsemble, target, params: SolverParams) -> SubsetSolution | None:
    """Fixed-cardinality multidimensional solve over an NSN ensemble.

    ``None`` from the exhaustive strategy proves infeasibility within the
    cardinality family; ``None`` from greedy-swap only means "not found".
    """
    if params.mode is CardinalityMode.EXACT and params.k > ensemble.n:
        raise ParameterError(f"k={params.k} exceeds ensemble size n={ensemble.n}")
    return search_subsets(ensemble.vectors, target, params).solution


def subset_sum_number(
    ensemble: NsnEnsemble,
    target,
    k: int,
    epsilon: float,
    enumeration_budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> int:
    """Exact count of k-subsets whose sum lands in the closed box around target."""
    if not epsilon >= 0.0:
        raise ParameterError("epsilon must be nonnegative")
    if not 0 <= k <= ensemble.n:
        raise ParameterError(f"k must be in [0, {ensemble.n}]")
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    total = math.comb(ensemble.n, k)
    if total > enumeration_budget:
        raise BudgetError(f"C({ensemble.n},{k})={total} exceeds the enumeration budget")
    if k == 0:
        return int(np.abs(target).max(initial=0.0) <= epsilon)
    sums = _colex_sum_layers(ensemble.vectors, k)[k]
    return int((np.abs(sums - target).max(axis=1) <= epsilon).sum())


# ---------------------------------------------------------------------------
# Group boosting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupAttempt:
    group: int
    status: str  # hit / not-found / proven-infeasible / skipped
    residual_inf: float | None


@dataclass(frozen=True)
class BoostResult:
    target_index: int
    solution: SubsetSolution | None  # indices are global into the full ensemble
    attempts: tuple[GroupAttempt, ...]


def partition_boost(
    ensemble: NsnEnsemble,
    targets,
    params: SolverParams,
    group_size: int,
) -> list[BoostResult]:
    """Try each target against disjoint vector groups until one group hits.

    The ensemble is split into consecutive disjoint groups of ``group_size``
    (the last group absorbs any remainder). Groups are attempted in order and
    the first hit wins, so success probability can only improve with the
    number of groups. Per-group attempt records support success-rate
    estimation.
    """
    if group_size < params.k * params.k:
        raise ParameterError("group_size must be at least k^2")
    if ensemble.n < group_size:
        raise ParameterError("ensemble smaller than one group")
    starts = list(range(0, ensemble.n - group_size + 1, group_size))
    bounds = [(s, s + group_size) for s in starts]
    bounds[-1] = (bounds[-1][0], ensemble.n)  # remainder joins the last group

    results: list[BoostResult] = []
    for t_index, target in enumerate(targets):
        attempts: list[GroupAttempt] = []
        chosen: SubsetSolution | None = None
        for g, (lo, hi) in enumerate(bounds):
            if chosen is not None:
                attempts.append(GroupAttempt(g, "skipped", None))
                continue
            outcome = search_subsets(ensemble.vectors[lo:hi], target, params)
            residual = outcome.best.residual_inf if outcome.best is not None else None
            attempts.append(GroupAttempt(g, outcome.status, residual))
            if outcome.solution is not None:
                shifted = tuple(i + lo for i in outcome.solution.indices)
                chosen = SubsetSolution(
                    shifted, outcome.solution.achieved, outcome.solution.residual_inf
                )
        results.append(BoostResult(t_index, chosen, tuple(attempts)))
    return results


# ---------------------------------------------------------------------------
# Cover reports ("for all z" on a finite grid)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoverReport:
    """Per-target hit flags for a grid; ``excess`` is the distance beyond the
    epsilon box (0.0 exactly when the target is covered)."""

    targets: np.ndarray
    covered: np.ndarray
    excess: np.ndarray
    epsilon: float

    @property
    def success(self) -> bool:
        return bool(self.covered.all())

    @property
    def min_excess(self) -> float:
        return float(self.excess.min()) if self.excess.size else 0.0

    @property
    def max_excess(self) -> float:
        return float(self.excess.max()) if self.excess.size else 0.0


def _coalesce(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    cummax = np.maximum.accumulate(hi)
    fresh = np.empty(lo.size, dtype=bool)
    fresh[0] = True
    fresh[1:] = lo[1:] > cummax[:-1]
    starts = np.flatnonzero(fresh)
    ends = np.append(starts[1:], lo.size) - 1
    return lo[starts], cummax[ends]


def inflated_sum_intervals(xs, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint sorted closed intervals whose union is exactly
    ``{ y : some subset sum s of xs has |s - y| <= epsilon }``.

    Folding in one value doubles the family (keep or add the value) and the
    merge of overlapping intervals is exact, so this answers cover queries for
    any n without enumerating 2^n sums.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    if not epsilon >= 0.0:
        raise ParameterError("epsilon must be nonnegative")
    lo = np.array([-epsilon])
    hi = np.array([epsilon])
    for x in xs:
        lo, hi = _coalesce(np.concatenate([lo, lo + x]), np.concatenate([hi, hi + x]))
    return lo, hi


def _interval_excess(lo: np.ndarray, hi: np.ndarray, targets: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(lo, targets, side="right") - 1
    inside = (idx >= 0) & (targets <= hi[np.clip(idx, 0, hi.size - 1)])
    gap_right = np.where(idx >= 0, targets - hi[np.clip(idx, 0, hi.size - 1)], np.inf)
    nxt = np.clip(idx + 1, 0, lo.size - 1)
    gap_left = np.where(idx + 1 < lo.size, lo[nxt] - targets, np.inf)
    return np.where(inside, 0.0, np.minimum(gap_right, gap_left))


def cover_targets(source, targets, epsilon: float, params: SolverParams | None = None) -> CoverReport:
    """Evaluate the universal quantifier on a finite target grid.

    * 1-D array source: exact any-cardinality cover via the interval union.
    * :class:`NsnEnsemble` source: one fixed-cardinality solve per target
      using ``params`` (required); excess is measured from the best subset
      the strategy found.
    """
    if isinstance(source, NsnEnsemble):
        if params is None:
            raise ParameterError("params are required for ensemble cover")
        grid = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        covered = np.zeros(grid.shape[0], dtype=bool)
        excess = np.zeros(grid.shape[0], dtype=np.float64)
        for i, z in enumerate(grid):
            outcome = search_subsets(source.vectors, z, params)
            covered[i] = outcome.solution is not None
            if outcome.best is None:
                excess[i] = np.inf
            else:
                excess[i] = max(0.0, outcome.best.residual_inf - params.epsilon)
        return CoverReport(grid, covered, excess, params.epsilon)

    xs = np.asarray(source, dtype=np.float64).ravel()
    grid = np.asarray(targets, dtype=np.float64).ravel()
    lo, hi = inflated_sum_intervals(xs, epsilon)
    excess = _interval_excess(lo, hi, grid)
    return CoverReport(grid, excess == 0.0, excess, epsilon)
