"""Multi-objective next release problem.

A release candidate is a bit vector over features. Its value is the sum of
the selected features' weighted stakeholder scores (maximized) and its cost
is the sum of the selected features' costs (minimized). Internally every
search works on the bi-minimization pair ``(-value, cost)``.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

WEIGHT_TOLERANCE = 1e-9
MAX_EXACT_FEATURES = 20


class InstanceError(ValueError):
    pass


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MonrpInstance:
    """Stakeholder weights, value matrix (stakeholders x features) and costs."""

    weights: np.ndarray
    value: np.ndarray
    cost: np.ndarray
    stakeholder_ids: tuple[str, ...] = ()
    feature_ids: tuple[str, ...] = ()

    def __post_init__(self):
        w = _frozen(self.weights)
        v = _frozen(self.value)
        c = _frozen(self.cost)
        if w.ndim != 1 or w.size < 1:
            raise InstanceError("weights must be a non-empty vector")
        if c.ndim != 1 or c.size < 1:
            raise InstanceError("cost must be a non-empty vector")
        m, n = w.size, c.size
        if v.shape != (m, n):
            raise InstanceError(
                f"value matrix has shape {v.shape}, expected ({m}, {n}) "
                f"for {m} stakeholders and {n} features"
            )
        for name, arr in (("weights", w), ("value", v), ("cost", c)):
            if not np.all(np.isfinite(arr)):
                raise InstanceError(f"{name} contains non-finite entries")
            if np.any(arr < 0):
                raise InstanceError(f"{name} contains negative entries")
        if np.any(w > 1):
            raise InstanceError("weights must lie in [0, 1]")
        total = float(w.sum())
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise InstanceError(f"weights sum {total:g} != 1")
        sids = tuple(self.stakeholder_ids) or tuple(f"s{j + 1}" for j in range(m))
        fids = tuple(self.feature_ids) or tuple(f"f{i + 1}" for i in range(n))
        if len(sids) != m or len(fids) != n:
            raise InstanceError("label count does not match instance dimensions")
        if len(set(sids)) != m or len(set(fids)) != n:
            raise InstanceError("labels must be unique")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "cost", c)
        object.__setattr__(self, "stakeholder_ids", sids)
        object.__setattr__(self, "feature_ids", fids)

    @property
    def m(self) -> int:
        return self.weights.size

    @property
    def n(self) -> int:
        return self.cost.size

    def __eq__(self, other):
        if not isinstance(other, MonrpInstance):
            return NotImplemented
        return (
            self.stakeholder_ids == other.stakeholder_ids
            and self.feature_ids == other.feature_ids
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.value, other.value)
            and np.array_equal(self.cost, other.cost)
        )

    __hash__ = None


@dataclass(frozen=True)
class ReleaseCandidate:
    x: tuple[int, ...]
    value_total: float
    cost_total: float

    @property
    def bits(self) -> str:
        return "".join(str(b) for b in self.x)


@dataclass(frozen=True)
class SearchParams:
    population: int = 100
    generations: int = 250
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None means 1/n
    seed: int = 0

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be even and >= 4")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")


@dataclass(frozen=True)
class ParetoFront:
    candidates: tuple[ReleaseCandidate, ...]
    provenance: str  # "Exact" or "Metaheuristic"
    params: SearchParams | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def objective_pairs(self) -> set[tuple[float, float]]:
        return {(c.value_total, c.cost_total) for c in self.candidates}


def scores(inst: MonrpInstance) -> np.ndarray:
    """Weighted stakeholder value per feature."""
    return inst.weights @ inst.value


def _objectives(inst: MonrpInstance, X: np.ndarray, score: np.ndarray | None = None):
    # Single evaluation path for every caller so equal bit vectors give
    # bit-identical objective values.
    if score is None:
        score = scores(inst)
    Xf = X.astype(float)
    return (Xf * score).sum(axis=1), (Xf * inst.cost).sum(axis=1)


def evaluate(inst: MonrpInstance, x: Sequence[int]) -> tuple[float, float]:
    """Return ``(value, cost)`` of decision vector ``x``."""
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size != inst.n:
        raise InstanceError(f"decision vector has length {arr.size}, expected {inst.n}")
    if not np.all((arr == 0) | (arr == 1)):
        raise InstanceError("decision vector must be binary")
    f1, f2 = _objectives(inst, arr[None, :])
    return float(f1[0]), float(f2[0])


def candidate(inst: MonrpInstance, x: Sequence[int]) -> ReleaseCandidate:
    f1, f2 = evaluate(inst, x)
    return ReleaseCandidate(tuple(int(b) for b in x), f1, f2)


def dominates(a: ReleaseCandidate, b: ReleaseCandidate) -> bool:
    """True if ``a`` is at least as good as ``b`` in both objectives and better in one."""
    if a.value_total < b.value_total or a.cost_total > b.cost_total:
        return False
    return a.value_total > b.value_total or a.cost_total < b.cost_total


def _sort_key(c: ReleaseCandidate):
    return (c.cost_total, -c.value_total, c.x)


def _front_from_matrix(inst, X, provenance, params=None, meta=None) -> ParetoFront:
    f1, f2 = _objectives(inst, X)
    objs = np.column_stack([-f1, f2])
    rank0 = np.flatnonzero(_nondominated_mask(objs))
    seen = set()
    cands = []
    for i in rank0:
        x = tuple(int(b) for b in X[i])
        if x in seen:
            continue
        seen.add(x)
        cands.append(ReleaseCandidate(x, float(f1[i]), float(f2[i])))
    cands.sort(key=_sort_key)
    return ParetoFront(tuple(cands), provenance, params, dict(meta or {}))


def _dominance_matrix(objs: np.ndarray) -> np.ndarray:
    """``dom[i, j]`` is True when row i dominates row j (minimization)."""
    k = objs.shape[0]
    le = np.ones((k, k), dtype=bool)
    lt = np.zeros((k, k), dtype=bool)
    for col in objs.T:
        a, b = col[:, None], col[None, :]
        le &= a <= b
        lt |= a < b
    return le & lt


def _nondominated_mask(objs: np.ndarray) -> np.ndarray:
    """Mask of rows not dominated by any other row (minimization)."""
    return ~_dominance_matrix(objs).any(axis=0)


def all_decision_vectors(n: int) -> np.ndarray:
    """Every bit vector of length ``n`` as rows, in binary counting order."""
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8).reshape(-1, n)


def brute_force_front(inst: MonrpInstance) -> ParetoFront:
    """Exact front by enumerating all 2**n release candidates."""
    if inst.n > MAX_EXACT_FEATURES:
        raise InstanceError(
            f"exact enumeration limited to n <= {MAX_EXACT_FEATURES}, got n={inst.n}"
        )
    X = all_decision_vectors(inst.n)
    f1, f2 = _objectives(inst, X)
    # Sweep instead of the pairwise mask: 2**20 rows do not fit a square matrix.
    order = np.lexsort((-f1, f2))
    keep = []
    best_value = -np.inf
    i = 0
    while i < order.size:
        j = i
        c = f2[order[i]]
        while j < order.size and f2[order[j]] == c:
            j += 1
        group = order[i:j]
        top = f1[group].max()
        if top > best_value:
            keep.extend(g for g in group if f1[g] == top)
            best_value = top
        i = j
    X = X[np.array(keep, dtype=int)]
    return _front_from_matrix(inst, X, "Exact")


def fast_nondominated_sort(objs: np.ndarray) -> np.ndarray:
    """Front index per row (0 = non-dominated), minimization."""
    dom = _dominance_matrix(objs)
    count = dom.sum(axis=0)
    rank = np.full(objs.shape[0], -1, dtype=int)
    current = np.flatnonzero(count == 0)
    r = 0
    while current.size:
        rank[current] = r
        count -= dom[current].sum(axis=0)
        count[current] = -1
        current = np.flatnonzero(count == 0)
        r += 1
    return rank


def crowding_distance(objs: np.ndarray) -> np.ndarray:
    """Crowding distance of each row within one front; boundaries are infinite."""
    k, d = objs.shape
    dist = np.zeros(k)
    if k <= 2:
        dist[:] = np.inf
        return dist
    for j in range(d):
        order = np.argsort(objs[:, j], kind="stable")
        col = objs[order, j]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = col[-1] - col[0]
        if span == 0:
            continue
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def _rank_and_crowding(objs):
    rank = fast_nondominated_sort(objs)
    crowd = np.empty(objs.shape[0])
    for r in range(rank.max() + 1):
        idx = np.flatnonzero(rank == r)
        crowd[idx] = crowding_distance(objs[idx])
    return rank, crowd


def nsga2_search(inst: MonrpInstance, params: SearchParams | None = None) -> ParetoFront:
    """Approximate the front with a non-dominated sorting genetic algorithm.

    Uniform crossover and independent bit-flip mutation; elitist survival over
    parents plus offspring by front index, then crowding distance. All
    randomness comes from one generator seeded with ``params.seed`` and is
    drawn in a fixed order, so results are a pure function of the inputs.
    """
    params = params or SearchParams()
    n = inst.n
    N = params.population
    pm = params.mutation_rate if params.mutation_rate is not None else 1.0 / n
    rng = np.random.default_rng(params.seed)
    score = scores(inst)

    def objectives(X):
        f1, f2 = _objectives(inst, X, score)
        return np.column_stack([-f1, f2])

    pop = (rng.random((N, n)) < 0.5).astype(np.int8)
    objs = objectives(pop)
    rank, crowd = _rank_and_crowding(objs)

    for _ in range(params.generations):
        # binary tournament on (rank, -crowding), coin flip on full ties
        pairs = rng.integers(0, N, size=(N, 2))
        coins = rng.random(N) < 0.5
        a, b = pairs[:, 0], pairs[:, 1]
        a_better = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] > crowd[b]))
        b_better = (rank[b] < rank[a]) | ((rank[a] == rank[b]) & (crowd[b] > crowd[a]))
        winner = np.where(a_better, a, np.where(b_better, b, np.where(coins, a, b)))
        parents = pop[winner]

        p1, p2 = parents[0::2], parents[1::2]
        do_cross = rng.random(N // 2) < params.crossover_rate
        mask = (rng.random((N // 2, n)) < 0.5) & do_cross[:, None]
        c1 = np.where(mask, p2, p1)
        c2 = np.where(mask, p1, p2)
        children = np.empty_like(parents)
        children[0::2], children[1::2] = c1, c2
        flips = rng.random((N, n)) < pm
        children = children ^ flips.astype(np.int8)

        union = np.vstack([pop, children])
        uobjs = np.vstack([objs, objectives(children)])
        # Repeated bit vectors survive only when unique ones run out.
        _, first = np.unique(union, axis=0, return_index=True)
        first.sort()
        urank = np.empty(len(union), dtype=int)
        ucrowd = np.zeros(len(union))
        r, c = _rank_and_crowding(uobjs[first])
        urank[:] = r.max() + 1
        urank[first], ucrowd[first] = r, c
        order = np.lexsort((-ucrowd, urank))[:N]
        pop, objs = union[order], uobjs[order]
        rank, crowd = urank[order], ucrowd[order]

    X = pop[rank == 0]
    return _front_from_matrix(
        inst, X, "Metaheuristic", params, {"seed": params.seed, "mutation_rate": pm}
    )


def hypervolume(front: ParetoFront | Iterable[ReleaseCandidate], inst: MonrpInstance) -> float:
    """Area dominated by the front in ``(total score - value, cost)`` space.

    The reference point sits at 1.01 times the full-release totals.
    """
    cands = list(front)
    if not cands:
        raise ValueError("hypervolume of an empty front is undefined")
    total_score = float(scores(inst).sum())
    total_cost = float(inst.cost.sum())
    ra, rb = 1.01 * total_score, 1.01 * total_cost
    pts = sorted((total_score - c.value_total, c.cost_total) for c in cands)
    hv = 0.0
    prev_b = rb
    for a, b in pts:
        if a >= ra or b >= prev_b:
            continue
        hv += (ra - a) * (prev_b - b)
        prev_b = b
    return hv


def random_instance(
    m: int,
    n: int,
    seed: int,
    cost_range: tuple[float, float] = (1.0, 10.0),
    value_range: tuple[float, float] = (1.0, 10.0),
    interest_prob: float = 0.5,
) -> MonrpInstance:
    if m < 1 or n < 1:
        raise InstanceError("m and n must be >= 1")
    for name, (lo, hi) in (("cost_range", cost_range), ("value_range", value_range)):
        if not (0 < lo <= hi) or not np.isfinite(hi):
            raise InstanceError(f"{name} must satisfy 0 < low <= high")
    if not 0.0 <= interest_prob <= 1.0:
        raise InstanceError("interest_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.0, 1.0, m) + 1e-12
    weights = raw / raw.sum()
    interested = rng.random((m, n)) < interest_prob
    value = np.where(interested, rng.uniform(*value_range, (m, n)), 0.0)
    cost = rng.uniform(*cost_range, n)
    return MonrpInstance(weights, value, cost)


# -- CSV formats -----------------------------------------------------------


def instance_to_csv(inst: MonrpInstance) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(inst.stakeholder_ids)
    w.writerow(repr(float(x)) for x in inst.weights)
    for row in inst.value:
        w.writerow(repr(float(x)) for x in row)
    w.writerow(repr(float(x)) for x in inst.cost)
    w.writerow(inst.feature_ids)
    return buf.getvalue()


def instance_from_csv(text: str) -> MonrpInstance:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if len(rows) < 5:
        raise InstanceError("instance CSV needs at least 5 rows")
    sids = tuple(s.strip() for s in rows[0])
    m = len(sids)
    if len(rows) != m + 4:
        raise InstanceError(f"instance CSV has {len(rows)} rows, expected {m + 4} for {m} stakeholders")
    try:
        weights = [float(x) for x in rows[1]]
        value = [[float(x) for x in r] for r in rows[2 : m + 2]]
        cost = [float(x) for x in rows[m + 2]]
    except ValueError as exc:
        raise InstanceError(f"non-numeric entry in instance CSV: {exc}") from None
    fids = tuple(s.strip() for s in rows[m + 3])
    if any(len(r) != len(cost) for r in value):
        raise InstanceError("value rows must have one entry per feature")
    return MonrpInstance(weights, value, cost, sids, fids)


def write_instance_csv(inst: MonrpInstance, path) -> None:
    Path(path).write_text(instance_to_csv(inst), encoding="utf-8")


def read_instance_csv(path) -> MonrpInstance:
    return instance_from_csv(Path(path).read_text(encoding="utf-8"))


def front_to_csv(front: ParetoFront) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["candidate_id", "value_total", "cost_total", "x_bits"])
    for i, c in enumerate(front.candidates):
        w.writerow([i, repr(c.value_total), repr(c.cost_total), c.bits])
    return buf.getvalue()


def front_to_plot_data(front: ParetoFront) -> str:
    """Two-column ``cost value`` data, readable by gnuplot with a comma separator."""
    lines = ["# cost_total,value_total"]
    lines += [f"{c.cost_total!r},{c.value_total!r}" for c in front.candidates]
    return "\n".join(lines) + "\n"


def front_from_csv(text: str, provenance: str = "Exact") -> ParetoFront:
    rows = list(csv.DictReader(io.StringIO(text)))
    cands = tuple(
        ReleaseCandidate(
            tuple(int(b) for b in r["x_bits"]),
            float(r["value_total"]),
            float(r["cost_total"]),
        )
        for r in rows
    )
    return ParetoFront(cands, provenance)
