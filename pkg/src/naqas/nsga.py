"""Variable-depth NSGA-II over circuit genomes with a global Pareto archive.

Fitness is a pair (E, C) to minimize: E is the task objective of the
fine-tuned architecture (validation loss), C its hardware cost.  The
usual NSGA-II machinery (fast non-dominated sort, crowding distance,
binary tournaments, simulated binary crossover, polynomial mutation) is
extended with structural layer moves -- insert, delete, replace -- so
genome length can drift within the allowed depth range.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .data import Dataset, TaskSpec
from .sim import NoiseSpec
from .space import SearchSpaceDef, cost_of, random_genome
from .training import SharedParameters, fine_tune


@dataclass
class Individual:
    genome: tuple
    fitness: Optional[tuple[float, float]] = None
    rank: int = 0
    crowding: float = 0.0
    metrics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EvoConfig:
    pop_size: int = 40
    generations: int = 30
    p_crossover: float = 0.9
    p_mutation: Optional[float] = None     # None -> 1/len(genome)
    p_add: float = 0.1
    p_del: float = 0.1
    p_rep: float = 0.1
    tournament_k: int = 2
    eta_crossover: float = 15.0
    eta_mutation: float = 20.0

    def __post_init__(self):
        for name in ("p_crossover", "p_add", "p_del", "p_rep"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.p_mutation is not None and not 0.0 <= self.p_mutation <= 1.0:
            raise ValueError(f"p_mutation must be in [0, 1], got {self.p_mutation}")
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError(f"pop_size must be even and >= 2, got {self.pop_size}")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if self.tournament_k < 2:
            raise ValueError(f"tournament size must be >= 2, got {self.tournament_k}")


def dominates(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """True iff a is no worse in both objectives and better in one."""
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


def fast_non_dominated_sort(pop: Sequence[Individual]) -> list[list[Individual]]:
    """Deb's O(MN^2) front assignment; tags each individual's rank (1-based)."""
    n = len(pop)
    dominated_by = [[] for _ in range(n)]
    dom_count = [0] * n
    fronts = [[]]
    for p in range(n):
        fp = pop[p].fitness
        for q in range(n):
            if p == q:
                continue
            if dominates(fp, pop[q].fitness):
                dominated_by[p].append(q)
            elif dominates(pop[q].fitness, fp):
                dom_count[p] += 1
        if dom_count[p] == 0:
            pop[p].rank = 1
            fronts[0].append(p)
    i = 0
    while fronts[i]:
        nxt = []
        for p in fronts[i]:
            for q in dominated_by[p]:
                dom_count[q] -= 1
                if dom_count[q] == 0:
                    pop[q].rank = i + 2
                    nxt.append(q)
        i += 1
        fronts.append(nxt)
    fronts.pop()
    return [[pop[i] for i in front] for front in fronts]


def crowding_distance(front: Sequence[Individual]):
    """Assign Deb's crowding distance within one front.

    Boundary individuals per objective get +inf; interior ones accumulate
    normalized neighbor gaps.  An objective with zero range contributes
    nothing.
    """
    if not front:
        raise ValueError("empty front")
    for ind in front:
        ind.crowding = 0.0
    n = len(front)
    for m in range(2):
        order = sorted(range(n), key=lambda i: front[i].fitness[m])
        front[order[0]].crowding = math.inf
        front[order[-1]].crowding = math.inf
        span = front[order[-1]].fitness[m] - front[order[0]].fitness[m]
        if span <= 0.0:
            continue
        for pos in range(1, n - 1):
            if math.isinf(front[order[pos]].crowding):
                continue
            gap = front[order[pos + 1]].fitness[m] - front[order[pos - 1]].fitness[m]
            front[order[pos]].crowding += gap / span


def _crowded_better(a: Individual, b: Individual, ia: int, ib: int) -> bool:
    """Crowded-comparison: lower rank, then higher crowding, then lower index."""
    if a.rank != b.rank:
        return a.rank < b.rank
    if a.crowding != b.crowding:
        return a.crowding > b.crowding
    return ia < ib


def tournament_select(pop: Sequence[Individual], k: int,
                      rng: np.random.Generator) -> Individual:
    """Draw k without replacement; winner by crowded comparison."""
    if len(pop) < k:
        raise ValueError(f"population of {len(pop)} too small for k={k}")
    picks = rng.choice(len(pop), size=k, replace=False)
    best = int(picks[0])
    for i in picks[1:]:
        if _crowded_better(pop[int(i)], pop[best], int(i), best):
            best = int(i)
    return pop[best]


# ---------------------------------------------------------------------------
# variation operators
# ---------------------------------------------------------------------------

def _sbx_pair(x: float, y: float, eta: float, u: float) -> tuple[float, float]:
    if u <= 0.5:
        beta = (2.0 * u) ** (1.0 / (eta + 1.0))
    else:
        beta = (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0))
    c1 = 0.5 * ((1.0 + beta) * x + (1.0 - beta) * y)
    c2 = 0.5 * ((1.0 - beta) * x + (1.0 + beta) * y)
    return c1, c2


def sbx_crossover(parent_a: Sequence[int], parent_b: Sequence[int], p_crossover: float,
                  eta: float, space: SearchSpaceDef, rng: np.random.Generator):
    """Simulated binary crossover on the aligned gene prefix.

    Gene values are treated as reals in [0, M-1], recombined, rounded and
    clamped; the longer parent's tail passes through unchanged, so child
    lengths equal parent lengths.
    """
    a, b = list(parent_a), list(parent_b)
    if rng.random() >= p_crossover:
        return tuple(a), tuple(b)
    hi = space.layer_count - 1
    for i in range(min(len(a), len(b))):
        c1, c2 = _sbx_pair(float(a[i]), float(b[i]), eta, rng.random())
        a[i] = int(min(max(round(c1), 0), hi))
        b[i] = int(min(max(round(c2), 0), hi))
    return tuple(a), tuple(b)


def _poly_perturb(x: float, lo: float, hi: float, eta: float, u: float) -> float:
    span = hi - lo
    d1 = (x - lo) / span
    d2 = (hi - x) / span
    if u < 0.5:
        dq = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)) ** (1.0 / (eta + 1.0)) - 1.0
    else:
        dq = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)) ** (1.0 / (eta + 1.0))
    return x + dq * span


def mutate(genome: Sequence[int], cfg: EvoConfig, space: SearchSpaceDef,
           rng: np.random.Generator) -> tuple:
    """Per-gene polynomial mutation, then at most one structural move.

    The structural chain mirrors insert -> delete -> replace with
    mutually exclusive draws: a successful insert draw at maximum depth
    is a no-op, a delete at minimum depth falls through to replace.
    """
    genes = list(genome)
    hi = space.layer_count - 1
    p_m = cfg.p_mutation if cfg.p_mutation is not None else 1.0 / max(len(genes), 1)
    for i in range(len(genes)):
        if rng.random() < p_m:
            value = _poly_perturb(float(genes[i]), 0.0, float(hi), cfg.eta_mutation, rng.random())
            genes[i] = int(min(max(round(value), 0), hi))
    if rng.random() < cfg.p_add:
        if len(genes) < space.max_layers:
            pos = int(rng.integers(len(genes) + 1))
            genes.insert(pos, int(rng.integers(space.layer_count)))
    elif rng.random() < cfg.p_del and len(genes) > space.min_layers:
        genes.pop(int(rng.integers(len(genes))))
    elif rng.random() < cfg.p_rep:
        genes[int(rng.integers(len(genes)))] = int(rng.integers(space.layer_count))
    return tuple(genes)


# ---------------------------------------------------------------------------
# archive and search loop
# ---------------------------------------------------------------------------

class ParetoArchive:
    """Global set of non-dominated (genome, fitness) records.

    Dominated entries are pruned on every insert; duplicate genomes
    collapse to one record, while distinct genomes with equal fitness
    are all kept.
    """

    def __init__(self):
        self._members: list[Individual] = []
        self._genomes: set = set()

    def __len__(self):
        return len(self._members)

    def __iter__(self):
        return iter(self._members)

    @property
    def members(self) -> list[Individual]:
        return list(self._members)

    def add(self, ind: Individual) -> bool:
        if ind.genome in self._genomes:
            return False
        if any(dominates(m.fitness, ind.fitness) for m in self._members):
            return False
        survivors = [m for m in self._members if not dominates(ind.fitness, m.fitness)]
        self._genomes = {m.genome for m in survivors}
        record = Individual(ind.genome, ind.fitness, metrics=dict(ind.metrics))
        survivors.append(record)
        self._members = survivors
        self._genomes.add(record.genome)
        return True

    def fitness_points(self) -> list[tuple[float, float]]:
        return [m.fitness for m in self._members]


def hypervolume(points: Sequence[tuple[float, float]], ref: tuple[float, float]) -> float:
    """Area dominated by a 2-d minimization front up to a reference point."""
    pts = [p for p in points if p[0] <= ref[0] and p[1] <= ref[1]]
    front = [p for p in pts if not any(dominates(q, p) for q in pts if q != p)]
    front = sorted(set(front))
    area = 0.0
    prev_c = ref[1]
    for e, c in front:
        area += (ref[0] - e) * (prev_c - c)
        prev_c = c
    return area


@dataclass
class EvalResult:
    """Objective values and bookkeeping for one evaluated genome."""
    objective: float
    cost: float
    n_cnot: int = 0
    n_depth: int = 0
    val_accuracy: float = math.nan


class EvaluationError(RuntimeError):
    def __init__(self, genome, cause):
        super().__init__(f"evaluation failed for genome {list(genome)}: {cause}")
        self.genome = tuple(genome)


@dataclass
class GenerationStats:
    generation: int
    best_e: float
    mean_e: float
    archive_size: int


@dataclass
class SearchResult:
    archive: ParetoArchive
    stats: list[GenerationStats]
    archive_history: list[list[tuple[float, float]]]
    best_e_by_depth: dict
    evaluations: int


Evaluator = Callable[[tuple], EvalResult]


def run_search(evaluator: Evaluator, space: SearchSpaceDef, cfg: EvoConfig,
               rng: np.random.Generator, workers: int = 1) -> SearchResult:
    """Core mu+lambda loop over a pluggable genome evaluator.

    Evaluations are memoized per genome and may run in a process pool;
    results are consumed in submission order so the outcome does not
    depend on the worker count.
    """
    memo: dict[tuple, EvalResult] = {}
    best_by_depth: dict[int, float] = {}
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        def evaluate_all(inds: list[Individual]):
            fresh = []
            seen = set()
            for ind in inds:
                if ind.genome not in memo and ind.genome not in seen:
                    seen.add(ind.genome)
                    fresh.append(ind.genome)
            if fresh:
                if pool is not None:
                    futures = [(g, pool.submit(evaluator, g)) for g in fresh]
                    for g, fut in futures:
                        try:
                            memo[g] = fut.result()
                        except Exception as exc:
                            raise EvaluationError(g, exc) from exc
                else:
                    for g in fresh:
                        try:
                            memo[g] = evaluator(g)
                        except Exception as exc:
                            raise EvaluationError(g, exc) from exc
            for ind in inds:
                res = memo[ind.genome]
                ind.fitness = (res.objective, res.cost)
                ind.metrics = {"n_cnot": res.n_cnot, "n_depth": res.n_depth,
                               "val_accuracy": res.val_accuracy}
                depth = len(ind.genome)
                if res.objective < best_by_depth.get(depth, math.inf):
                    best_by_depth[depth] = res.objective

        population = [Individual(random_genome(space, rng)) for _ in range(cfg.pop_size)]
        evaluate_all(population)
        fronts = fast_non_dominated_sort(population)
        for front in fronts:
            crowding_distance(front)

        archive = ParetoArchive()
        stats: list[GenerationStats] = []
        history: list[list[tuple[float, float]]] = []

        def record(generation: int, fronts):
            for ind in fronts[0]:
                archive.add(ind)
            values = [ind.fitness[0] for ind in population]
            stats.append(GenerationStats(generation, min(values),
                                         float(np.mean(values)), len(archive)))
            history.append(archive.fitness_points())

        record(0, fronts)
        for gen in range(1, cfg.generations + 1):
            offspring = []
            while len(offspring) < cfg.pop_size:
                pa = tournament_select(population, cfg.tournament_k, rng)
                pb = tournament_select(population, cfg.tournament_k, rng)
                ca, cb = sbx_crossover(pa.genome, pb.genome, cfg.p_crossover,
                                       cfg.eta_crossover, space, rng)
                offspring.append(Individual(mutate(ca, cfg, space, rng)))
                offspring.append(Individual(mutate(cb, cfg, space, rng)))
            evaluate_all(offspring)
            combined = population + offspring
            fronts = fast_non_dominated_sort(combined)
            survivors = []
            for front in fronts:
                crowding_distance(front)
                if len(survivors) + len(front) <= cfg.pop_size:
                    survivors.extend(front)
                else:
                    room = cfg.pop_size - len(survivors)
                    survivors.extend(sorted(front, key=lambda ind: -ind.crowding)[:room])
                    break
            population = survivors
            record(gen, fronts)
    finally:
        if pool is not None:
            pool.shutdown()
    return SearchResult(archive=archive, stats=stats, archive_history=history,
                        best_e_by_depth=best_by_depth, evaluations=len(memo))


def evaluate_architecture(genome: tuple, params: SharedParameters, dataset: Dataset,
                          spec: TaskSpec, noise: NoiseSpec, space: SearchSpaceDef,
                          steps: int, alpha: float, beta: float,
                          head_refit_steps: int = 500) -> EvalResult:
    """Production evaluator: T-step fine-tune for E, gate counting for C."""
    result = fine_tune(genome, params, dataset, spec, noise, steps, space=space,
                       head_refit_steps=head_refit_steps)
    metrics = cost_of(genome, space, alpha, beta)
    return EvalResult(objective=result.val_loss, cost=metrics.cost,
                      n_cnot=metrics.n_cnot, n_depth=metrics.n_depth,
                      val_accuracy=result.val_accuracy)


def evolve(dataset: Dataset, spec: TaskSpec, space: SearchSpaceDef,
           params: SharedParameters, noise: NoiseSpec, cfg: EvoConfig,
           rng: np.random.Generator, fine_tune_steps: int = 20,
           alpha: float = 1.0, beta: float = 1.0, workers: int = 1,
           head_refit_steps: int = 500) -> SearchResult:
    """Search the architecture space against pretrained shared parameters."""
    evaluator = functools.partial(evaluate_architecture, params=params, dataset=dataset,
                                  spec=spec, noise=noise, space=space,
                                  steps=fine_tune_steps, alpha=alpha, beta=beta,
                                  head_refit_steps=head_refit_steps)
    return run_search(evaluator, space, cfg, rng, workers=workers)
