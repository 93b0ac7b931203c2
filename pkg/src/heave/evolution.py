"""Evolving hierarchy (or ordering) genotypes over the constrained-VAR objective.

Each genotype induces a constraint matrix; its score is the pooled in-sample
fit of the best VAR(1) respecting that matrix. Reproduction is full
generational replacement with rank-proportional parent selection.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import (
    InvalidInputError,
    canonicalize,
    constraint_from_hierarchy,
    constraint_from_ordering,
    validate_ordering,
)
from .metrics import f1_score, h_score
from .var import (
    CausalNetwork,
    LaggedDesign,
    TimeSeriesPanel,
    fit_var,
    network_from_coefficients,
)

VARIANTS = ("floating", "bounded", "canonical", "ordered")
HIERARCHY_VARIANTS = ("floating", "bounded", "canonical")

# per-child RNG substreams are keyed on (seed, generation, child); init uses this tag
_INIT_TAG = 0


@dataclass(frozen=True)
class Genotype:
    variant: str
    payload: np.ndarray

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"unknown variant {self.variant!r}")
        p = np.asarray(self.payload, dtype=np.int64)
        if self.variant == "ordered":
            validate_ordering(p)
        elif self.variant == "bounded" and ((p < 1) | (p > p.size)).any():
            raise InvalidInputError("bounded hierarchy levels must lie in [1, N]")
        p.setflags(write=False)
        object.__setattr__(self, "payload", p)

    def levels(self) -> np.ndarray:
        """Hierarchy inducing the same constraint; orderings map to distinct levels."""
        if self.variant != "ordered":
            return self.payload
        n = self.payload.size
        levels = np.empty(n, dtype=np.int64)
        levels[self.payload] = n - np.arange(n)
        return levels

    def constraint(self) -> np.ndarray:
        if self.variant == "ordered":
            return constraint_from_ordering(self.payload)
        return constraint_from_hierarchy(self.payload)

    def __eq__(self, other):
        return (isinstance(other, Genotype) and self.variant == other.variant
                and np.array_equal(self.payload, other.payload))

    def __hash__(self):
        return hash((self.variant, self.payload.tobytes()))


@dataclass
class EAConfig:
    population_size: int = 30
    mutation_prob: float = 0.10
    mean_step: float | None = None  # None: max(1, N / 10)
    generations: int | None = None  # None: max(150, 5 N)
    alpha: float = 0.05
    seed: int = 0
    variant: str = "floating"
    threads: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"variant must be one of {VARIANTS}")
        if self.population_size < 2:
            raise InvalidInputError("population_size must be at least 2")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise InvalidInputError("mutation_prob must lie in [0, 1]")
        if self.mean_step is not None and self.mean_step < 1.0:
            raise InvalidInputError("mean_step must be at least 1")
        if self.generations is not None and self.generations < 1:
            raise InvalidInputError("generations must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError("alpha must lie in (0, 1)")

    def step_size(self, n: int) -> float:
        return self.mean_step if self.mean_step is not None else max(1.0, n / 10)

    def n_generations(self, n: int) -> int:
        return self.generations if self.generations is not None else max(150, 5 * n)

    def resolved(self, n: int) -> dict:
        d = asdict(self)
        d["mean_step"] = self.step_size(n)
        d["generations"] = self.n_generations(n)
        return d


@dataclass
class Population:
    members: list[Genotype]
    scores: np.ndarray | None = None
    networks: list[np.ndarray] | None = None
    f_stars: np.ndarray | None = None
    h_scores: np.ndarray | None = None
    f1_scores: np.ndarray | None = None
    fits: list | None = None

    def __len__(self):
        return len(self.members)

    def best_index(self) -> int:
        return int(np.argmax(self.scores))


@dataclass(frozen=True)
class GenerationTrace:
    generation: int
    mean_fstar: float
    best_fstar: float
    mean_hscore: float | None = None
    mean_f1: float | None = None


def child_rng(seed: int, generation: int, child: int) -> np.random.Generator:
    return np.random.default_rng([seed, generation, child])


def random_genotype(variant: str, n: int, rng: np.random.Generator) -> Genotype:
    if variant == "ordered":
        return Genotype(variant, rng.permutation(n))
    return Genotype(variant, rng.integers(1, n + 1, size=n))


def init_population(n_nodes: int, cfg: EAConfig, rng: np.random.Generator | None = None) -> Population:
    """Uniform levels in {1..N} for hierarchy variants, uniform permutations otherwise.

    Without an explicit ``rng`` each member uses its own seeded substream.
    """
    if n_nodes < 2:
        raise InvalidInputError("need at least 2 nodes")
    members = []
    for k in range(cfg.population_size):
        r = rng if rng is not None else child_rng(cfg.seed, _INIT_TAG, k)
        members.append(random_genotype(cfg.variant, n_nodes, r))
    return Population(members)


def rank_fitness(scores) -> np.ndarray:
    """Mid-rank reproductive fitness; ties (including self) count one half."""
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise InvalidInputError("scores must be a non-empty list")
    if not np.isfinite(s).all():
        raise InvalidInputError("scores must be finite")
    less = (s[None, :] < s[:, None]).sum(axis=1)
    equal = (s[None, :] == s[:, None]).sum(axis=1)
    return less + 0.5 * equal + 1.0


def selection_probabilities(scores) -> np.ndarray:
    r = rank_fitness(scores)
    return r / r.sum()


def select_parents(pop: Population, rng: np.random.Generator) -> tuple[Genotype, Genotype]:
    i, j = rng.choice(len(pop), size=2, replace=True, p=selection_probabilities(pop.scores))
    return pop.members[i], pop.members[j]


def _check_pair(a: Genotype, b: Genotype) -> None:
    if a.variant != b.variant or a.payload.size != b.payload.size:
        raise InvalidInputError("parents must share variant and length")


def crossover_hierarchy(a: Genotype, b: Genotype, rng: np.random.Generator, indicator=None) -> Genotype:
    """Uniform crossover: each level taken from ``a`` or ``b`` with probability 1/2."""
    _check_pair(a, b)
    if a.variant == "ordered":
        raise InvalidInputError("use crossover_ordering for orderings")
    take_a = rng.random(a.payload.size) < 0.5 if indicator is None else np.asarray(indicator, dtype=bool)
    return Genotype(a.variant, np.where(take_a, a.payload, b.payload))


def crossover_ordering(a: Genotype, b: Genotype, rng: np.random.Generator, indicator=None) -> Genotype:
    """Copy a random half of ``a``'s positions; fill the gaps in ``b``'s order."""
    _check_pair(a, b)
    if a.variant != "ordered":
        raise InvalidInputError("crossover_ordering needs ordering genotypes")
    take_a = rng.random(a.payload.size) < 0.5 if indicator is None else np.asarray(indicator, dtype=bool)
    child = np.where(take_a, a.payload, -1)
    used = set(a.payload[take_a].tolist())
    fill = iter(x for x in b.payload.tolist() if x not in used)
    for k in np.flatnonzero(~take_a):
        child[k] = next(fill)
    return Genotype(a.variant, child)


def crossover(a: Genotype, b: Genotype, rng: np.random.Generator) -> Genotype:
    if a.variant == "ordered":
        return crossover_ordering(a, b, rng)
    return crossover_hierarchy(a, b, rng)


def _signed_steps(n: int, cfg: EAConfig, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    sign = np.where(u < cfg.mutation_prob / 2, -1, np.where(u < cfg.mutation_prob, 1, 0))
    steps = rng.geometric(1.0 / cfg.step_size(n), size=n)
    return sign * steps


def mutate_hierarchy(x: Genotype, cfg: EAConfig, rng: np.random.Generator, steps=None) -> Genotype:
    """Shift each level by a signed geometric step with probability ``p``.

    The bounded variant clamps to [1, N]; the others are left unbounded.
    """
    n = x.payload.size
    s = _signed_steps(n, cfg, rng) if steps is None else np.asarray(steps)
    levels = x.payload + s
    if x.variant == "bounded":
        levels = np.clip(levels, 1, n)
    return Genotype(x.variant, levels)


def mutate_ordering(x: Genotype, cfg: EAConfig, rng: np.random.Generator, steps=None) -> Genotype:
    """Displace selected elements left to right, clamped at the ends."""
    n = x.payload.size
    s = _signed_steps(n, cfg, rng) if steps is None else np.asarray(steps)
    order = x.payload.tolist()
    for element, shift in zip(x.payload.tolist(), s.tolist()):
        if shift == 0:
            continue
        pos = order.index(element)
        order.pop(pos)
        order.insert(min(max(pos + shift, 0), n - 1), element)
    return Genotype(x.variant, np.array(order))


def mutate(x: Genotype, cfg: EAConfig, rng: np.random.Generator) -> Genotype:
    if x.variant == "ordered":
        return mutate_ordering(x, cfg, rng)
    return mutate_hierarchy(x, cfg, rng)


class Objective:
    """Scores genotypes on one panel; caches the design and the unconstrained fit."""

    def __init__(self, panel: TimeSeriesPanel, alpha: float = 0.05, threads: int = 1,
                 truth_network=None):
        self.panel = panel
        self.design = LaggedDesign(panel)
        self.unconstrained = fit_var(panel)
        self.f_var = self.unconstrained.fit_score
        if self.f_var <= 0:
            raise InvalidInputError("unconstrained fit score is not positive; f* is undefined")
        self.alpha = alpha
        self.threads = threads
        self.truth_network = None if truth_network is None else np.asarray(truth_network)
        self.truth_levels = None if truth_network is None else canonicalize(truth_network)

    def evaluate(self, members: list[Genotype]) -> Population:
        try:
            fits = self.design.fit_many_levels([m.levels() for m in members], self.threads)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"fit failed within population: {exc}") from exc
        scores = np.array([f.fit_score for f in fits])
        networks = [network_from_coefficients(f.coefficients, f.std_errors, self.alpha)[0] for f in fits]
        pop = Population(list(members), scores, networks, scores / self.f_var, fits=fits)
        if self.truth_network is not None:
            pop.h_scores = np.array([h_score(g, self.truth_levels) for g in networks])
            pop.f1_scores = np.array([f1_score(g, self.truth_network) for g in networks])
        return pop


def recanonicalize(pop: Population) -> Population:
    """Replace each hierarchy by the canonical hierarchy of its significant network."""
    members = [Genotype(m.variant, canonicalize(g)) for m, g in zip(pop.members, pop.networks)]
    return Population(members, pop.scores, pop.networks, pop.f_stars, pop.h_scores,
                      pop.f1_scores, pop.fits)


def trace_of(pop: Population, generation: int) -> GenerationTrace:
    return GenerationTrace(
        generation,
        float(pop.f_stars.mean()),
        float(pop.f_stars.max()),
        None if pop.h_scores is None else float(pop.h_scores.mean()),
        None if pop.f1_scores is None else float(pop.f1_scores.mean()),
    )


def breed(pop: Population, cfg: EAConfig, generation: int) -> list[Genotype]:
    children = []
    for k in range(cfg.population_size):
        rng = child_rng(cfg.seed, generation, k)
        a, b = select_parents(pop, rng)
        children.append(mutate(crossover(a, b, rng), cfg, rng))
    return children


def step_generation(pop: Population, objective: Objective, cfg: EAConfig,
                    generation: int) -> tuple[Population, GenerationTrace]:
    """One full replacement: breed, score, and (canonical variant) re-canonicalize."""
    children = objective.evaluate(breed(pop, cfg, generation))
    if cfg.variant == "canonical":
        children = recanonicalize(children)
    return children, trace_of(children, generation)


@dataclass
class RunResult:
    traces: list[GenerationTrace]
    population: Population
    best_network: CausalNetwork
    best_hierarchy: np.ndarray
    best_genotype: Genotype
    history: list[Population] = field(default_factory=list)
    f_var: float = float("nan")
    config: dict = field(default_factory=dict)


def run(panel: TimeSeriesPanel, cfg: EAConfig, truth_network=None, keep_last: int = 5,
        objective: Objective | None = None, progress=None) -> RunResult:
    """Run the EA for the configured number of generations.

    ``history`` holds the scored populations of the final ``keep_last``
    generations. Deterministic given ``cfg.seed``.
    """
    n = panel.n_nodes
    if objective is None:
        objective = Objective(panel, cfg.alpha, cfg.threads, truth_network)
    pop = objective.evaluate(init_population(n, cfg).members)
    if cfg.variant == "canonical":
        pop = recanonicalize(pop)
    traces, history = [], []
    total = cfg.n_generations(n)
    for g in range(1, total + 1):
        pop, tr = step_generation(pop, objective, cfg, g)
        traces.append(tr)
        if g > total - keep_last:
            history.append(pop)
        if progress is not None:
            progress(tr)
    best = pop.best_index()
    fit = pop.fits[best]
    graph, t = network_from_coefficients(fit.coefficients, fit.std_errors, cfg.alpha)
    network = CausalNetwork(graph, cfg.alpha, t)
    return RunResult(traces, pop, network, canonicalize(graph), pop.members[best],
                     history, objective.f_var, cfg.resolved(n))
