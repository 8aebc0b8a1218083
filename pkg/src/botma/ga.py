"""Binary-chromosome genetic algorithm over (x0, y0, course, speed).

Each parameter occupies a fixed-width unsigned segment of the bit string,
most significant bit first. The segment width ``m`` for a parameter with
span ``max - min`` at decimal precision ``p`` is the smallest integer with

    2**(m - 1) < (max - min) * 10**p < 2**m - 1

so 20000 m at p=7 takes 38 bits, 360 deg takes 32 and 25 m/s takes 28.

One TMAGA run (one "outer" Monte Carlo sample) repeats ``inner_runs``
times: a short GA epoch on the full box, a narrowing of the box around
its best, then a long epoch on a re-laid-out chromosome over the
narrowed box. The inner bests are merged by a fitness-weighted average.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .objective import XY_BOUNDS, BearingObjectiveXY, CandidateXY, SearchBounds

# decoding sums bit weights in float64, exact up to 2**53
MAX_SEGMENT_BITS = 53


def bit_width(max_value: float, min_value: float, p: int) -> int:
    """Smallest segment width resolving ``max_value - min_value`` to ``p`` decimals."""
    if not max_value > min_value:
        raise ValueError("bit_width needs max > min")
    if p < 0:
        raise ValueError("precision must be >= 0")
    scaled = (Fraction(max_value) - Fraction(min_value)) * 10**p
    # smallest m with scaled < 2**m - 1; the estimate may be off by one either way
    m = max(1, math.floor(math.log2(scaled + 1)) - 1)
    while m > 1 and scaled < 2 ** (m - 1) - 1:
        m -= 1
    while not scaled < 2**m - 1:
        m += 1
    if not (2 ** (m - 1) < scaled < 2**m - 1):
        raise ValueError(
            f"no bit width satisfies 2^(m-1) < {float(scaled):g} < 2^m - 1 for span "
            f"{max_value - min_value} at precision {p}"
        )
    return m


@dataclass(frozen=True)
class ChromosomeLayout:
    bounds: SearchBounds
    precision: int
    widths: tuple[int, ...]

    @classmethod
    def for_bounds(cls, bounds: SearchBounds, precision: int = 7) -> "ChromosomeLayout":
        widths = tuple(
            bit_width(float(hi), float(lo), precision) for lo, hi in zip(bounds.lows, bounds.highs)
        )
        too_wide = [n for n, w in zip(bounds.names, widths) if w > MAX_SEGMENT_BITS]
        if too_wide:
            raise ValueError(f"segments wider than {MAX_SEGMENT_BITS} bits: {', '.join(too_wide)}")
        return cls(bounds, precision, widths)

    @property
    def total_bits(self) -> int:
        return sum(self.widths)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(np.cumsum((0,) + self.widths[:-1]).tolist())

    @property
    def steps(self) -> np.ndarray:
        """Quantization step per parameter."""
        return self.bounds.widths / (2.0 ** np.array(self.widths) - 1.0)

    def decode_rows(self, bits: np.ndarray) -> np.ndarray:
        bits = np.atleast_2d(bits)
        out = np.empty((bits.shape[0], len(self.widths)))
        for i, (off, m) in enumerate(zip(self.offsets, self.widths)):
            weights = 2.0 ** np.arange(m - 1, -1, -1)
            q = bits[:, off:off + m] @ weights
            out[:, i] = self.bounds.lows[i] + q * (self.bounds.widths[i] / (2.0**m - 1.0))
        return out

    def encode_rows(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if not all(self.bounds.contains(v) for v in values):
            raise ValueError("candidate lies outside the layout bounds")
        bits = np.empty((values.shape[0], self.total_bits), dtype=np.uint8)
        for i, (off, m) in enumerate(zip(self.offsets, self.widths)):
            frac = (values[:, i] - self.bounds.lows[i]) / self.bounds.widths[i]
            q = np.rint(frac * (2.0**m - 1.0)).astype(np.int64)
            shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
            bits[:, off:off + m] = (q[:, None] >> shifts[None, :]) & 1
        return bits


@dataclass(frozen=True)
class Chromosome:
    bits: np.ndarray
    layout: ChromosomeLayout

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.shape != (self.layout.total_bits,):
            raise ValueError(f"chromosome needs {self.layout.total_bits} bits, got {bits.shape}")
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other):
        return isinstance(other, Chromosome) and self.layout == other.layout and np.array_equal(self.bits, other.bits)


def encode(c: CandidateXY, layout: ChromosomeLayout) -> Chromosome:
    return Chromosome(layout.encode_rows(c.as_array())[0], layout)


def decode(ch: Chromosome) -> CandidateXY:
    return CandidateXY(*(float(v) for v in ch.layout.decode_rows(ch.bits)[0]))


def fitness_from_cost(cost):
    return 1.0 / (1.0 + np.asarray(cost, dtype=float))


def _roulette(fitnesses: np.ndarray, size, rng: np.random.Generator) -> np.ndarray:
    f = np.asarray(fitnesses, dtype=float)
    if np.any(f < 0):
        raise ValueError("fitnesses must be nonnegative")
    total = f.sum()
    if total <= 0:
        return rng.integers(0, len(f), size=size)
    return rng.choice(len(f), size=size, p=f / total)


def select_pair(population, fitnesses, rng: np.random.Generator):
    """Two independent fitness-proportional draws (the same parent may repeat).

    All-zero fitness falls back to uniform sampling.
    """
    i, j = _roulette(fitnesses, 2, rng)
    return population[i], population[j]


def _crossover_rows(a: np.ndarray, b: np.ndarray, cuts: np.ndarray):
    """Swap the middle segment ``[cut0, cut1)`` between row pairs."""
    idx = np.arange(a.shape[1])[None, :]
    middle = (idx >= cuts[:, 0:1]) & (idx < cuts[:, 1:2])
    return np.where(middle, b, a), np.where(middle, a, b)


def _draw_cuts(n_pairs: int, total_bits: int, rng: np.random.Generator) -> np.ndarray:
    return np.sort(rng.integers(1, total_bits, size=(n_pairs, 2)), axis=1)


def crossover_two_piece(a: Chromosome, b: Chromosome, rng: np.random.Generator | None = None, cuts=None):
    """Two-point crossover; the bits between the cut points are exchanged.

    ``cuts`` overrides the random draw, which otherwise takes two points in
    ``(0, total_bits)`` independently and sorts them.
    """
    if a.layout != b.layout:
        raise ValueError("parents use different layouts")
    if cuts is None:
        cuts = _draw_cuts(1, a.layout.total_bits, rng)[0]
    cuts = np.sort(np.asarray(cuts, dtype=int)).reshape(1, 2)
    c1, c2 = _crossover_rows(a.bits[None, :], b.bits[None, :], cuts)
    return Chromosome(c1[0], a.layout), Chromosome(c2[0], a.layout)


def _mutate_rows(bits: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    flips = rng.random(bits.shape) < rate
    return bits ^ flips.astype(np.uint8)


def mutate_bitwise(ch: Chromosome, rate: float, rng: np.random.Generator) -> Chromosome:
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    return Chromosome(_mutate_rows(ch.bits[None, :], rate, rng)[0], ch.layout)


def narrow_space(bounds: SearchBounds, inner_bests, fraction: float, costs=None) -> SearchBounds:
    """Shrink ``bounds`` to ``fraction`` of its width around the inner bests.

    The window is centred on the mean of ``inner_bests``, weighted by
    ``1 / (1 + cost)`` when ``costs`` are given, and clipped to ``bounds``.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    pts = np.atleast_2d([b.as_array() if hasattr(b, "as_array") else b for b in inner_bests])
    if pts.size == 0:
        raise ValueError("narrow_space needs at least one inner best")
    w = np.ones(len(pts)) if costs is None else fitness_from_cost(costs)
    center = np.clip((w[:, None] * pts).sum(axis=0) / w.sum(), bounds.lows, bounds.highs)
    half = fraction * bounds.widths / 2.0
    lo = np.maximum(center - half, bounds.lows)
    hi = np.minimum(center + half, bounds.highs)
    return SearchBounds({n: (float(a), float(b)) for n, a, b in zip(bounds.names, lo, hi)})


def run_ga_epoch(
    objective: BearingObjectiveXY,
    layout: ChromosomeLayout,
    generations: int,
    pop_size: int,
    rng: np.random.Generator,
    mutation_rate: float | None = None,
    crossover_rate: float = 1.0,
    elitism: bool = True,
    seeds: list[CandidateXY] | None = None,
    history: list | None = None,
) -> tuple[CandidateXY, float]:
    """Generational GA on ``layout``; returns the best individual ever evaluated.

    Every generation evaluates the whole population once, so the epoch
    consumes exactly ``pop_size * generations`` objective calls. ``seeds``
    replace the first members of the random initial population. The
    best-so-far cost after each generation is appended to ``history``.
    """
    if generations < 1 or pop_size < 2:
        raise ValueError("need generations >= 1 and pop_size >= 2")
    nbits = layout.total_bits
    rate = 1.0 / nbits if mutation_rate is None else mutation_rate
    pop = rng.integers(0, 2, size=(pop_size, nbits), dtype=np.uint8)
    if seeds:
        pop[: len(seeds)] = layout.encode_rows([s.as_array() for s in seeds])[:pop_size]
    n_elite = 1 if elitism else 0
    n_pairs = (pop_size - n_elite + 1) // 2
    best_bits, best_cost = None, math.inf
    for _ in range(generations):
        costs = objective.batch(layout.decode_rows(pop))
        g = int(np.argmin(costs))
        if costs[g] < best_cost:
            best_cost, best_bits = float(costs[g]), pop[g].copy()
        if history is not None:
            history.append(best_cost)
        parents = _roulette(fitness_from_cost(costs), (n_pairs, 2), rng)
        a, b = pop[parents[:, 0]], pop[parents[:, 1]]
        cuts = _draw_cuts(n_pairs, nbits, rng)
        if crossover_rate < 1.0:
            skip = rng.random(n_pairs) >= crossover_rate
            cuts[skip] = 0
        c1, c2 = _crossover_rows(a, b, cuts)
        children = _mutate_rows(np.concatenate((c1, c2)), rate, rng)
        pop = np.concatenate((best_bits[None, :], children))[:pop_size] if n_elite else children[:pop_size]
    best = CandidateXY(*(float(v) for v in layout.decode_rows(best_bits)[0]))
    return best, best_cost


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 50
    narrowing_generations: int = 200
    main_generations: int = 500
    inner_runs: int = 20
    outer_runs: int = 20
    mutation_rate: float | None = None  # None: 1 / total_bits of the active layout
    narrowing_fraction: float = 0.2
    precision: int = 7
    crossover_rate: float = 1.0
    elitism: bool = True
    bounds: SearchBounds = XY_BOUNDS

    def __post_init__(self):
        for name in ("population_size", "narrowing_generations", "main_generations", "inner_runs", "outer_runs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if not 0.0 < self.narrowing_fraction < 1.0:
            raise ValueError("narrowing_fraction must lie in (0, 1)")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")

    def fevals_per_run(self) -> int:
        return self.population_size * (self.narrowing_generations + self.main_generations) * self.inner_runs

    def fevals_total(self) -> int:
        return self.fevals_per_run() * self.outer_runs

    def with_(self, **changes) -> "GaConfig":
        return replace(self, **changes)


@dataclass
class GaReport:
    best: CandidateXY
    best_cost: float
    fevals: int
    inner_bests: list[tuple[CandidateXY, float]] = field(default_factory=list)
    weighted_average: CandidateXY | None = None
    narrowed_bounds: list[SearchBounds] = field(default_factory=list)


def weighted_average(bests: list[CandidateXY], costs) -> CandidateXY:
    """Mean of ``bests`` weighted by ``1 / (1 + cost)``, normalized."""
    w = fitness_from_cost(costs)
    pts = np.array([b.as_array() for b in bests])
    return CandidateXY(*(float(v) for v in (w[:, None] * pts).sum(axis=0) / w.sum()))


def run_tmaga(observed, obs_track, config: GaConfig, rng: np.random.Generator,
              objective: BearingObjectiveXY | None = None) -> GaReport:
    """One outer TMAGA run: ``inner_runs`` narrowing + main GA passes, then merge."""
    if objective is None:
        objective = BearingObjectiveXY(observed, obs_track)
    before = objective.evaluations
    full_layout = ChromosomeLayout.for_bounds(config.bounds, config.precision)
    inner, narrowed = [], []
    for _ in range(config.inner_runs):
        coarse, coarse_cost = run_ga_epoch(
            objective, full_layout, config.narrowing_generations, config.population_size, rng,
            mutation_rate=config.mutation_rate, crossover_rate=config.crossover_rate,
            elitism=config.elitism,
        )
        box = narrow_space(config.bounds, [coarse], config.narrowing_fraction, [coarse_cost])
        narrowed.append(box)
        layout = ChromosomeLayout.for_bounds(box, config.precision)
        seeds = [CandidateXY(*box.clip(coarse.as_array()))] if config.elitism else None
        best, cost = run_ga_epoch(
            objective, layout, config.main_generations, config.population_size, rng,
            mutation_rate=config.mutation_rate, crossover_rate=config.crossover_rate,
            elitism=config.elitism, seeds=seeds,
        )
        inner.append((best, cost))
    bests = [b for b, _ in inner]
    costs = [c for _, c in inner]
    k = int(np.argmin(costs))
    return GaReport(
        best=bests[k],
        best_cost=float(costs[k]),
        fevals=objective.evaluations - before,
        inner_bests=inner,
        weighted_average=weighted_average(bests, costs),
        narrowed_bounds=narrowed,
    )
