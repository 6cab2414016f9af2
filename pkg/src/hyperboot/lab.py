"""Experiment harness: seeded trial sweeps around the critical size,
aggregation, decay scans across graph sizes, and comparison against the
deterministic analytics.

Every trial's randomness is derived from the master seed by a fixed 64-bit
mixing rule, so results are reproducible bit-for-bit regardless of worker
count or scheduling order.
"""

import dataclasses
import math
from dataclasses import dataclass, field, replace
from multiprocessing import Pool

import numpy as np

from .analytics import SUBCRITICAL, fixed_point_classify
from .model import (
    EdgeBudgetError,
    ModelParams,
    critical_size,
    sample_hypergraph,
    sample_initial_set,
)
from .percolation import run_bootstrap

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

SMALL = "small"
NEAR_FULL = "near_full"
INTERMEDIATE = "intermediate"
FAILED = "failed"


def splitmix64(x: int) -> int:
    """One SplitMix64 step; the standard finalizer constants."""
    x = (x + _GOLDEN) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def mix_seed(master: int, *indices: int) -> int:
    """Fold indices into a master seed, one SplitMix64 round per index.

    This is the documented splitting rule: the seed of trial t at grid point
    i is mix_seed(master, i, t), and within a trial the hypergraph and the
    initial set use mix_seed(trial_seed, 1) and mix_seed(trial_seed, 2).
    """
    x = splitmix64(master & _MASK64)
    for idx in indices:
        x = splitmix64(x ^ ((idx & _MASK64) * _GOLDEN & _MASK64))
    return x


def trial_seeds(master_seed: int, point_index: int, trial_index: int) -> tuple[int, int, int]:
    """(trial_seed, hypergraph_seed, initial_set_seed) for one trial."""
    trial_seed = mix_seed(master_seed, point_index, trial_index)
    return trial_seed, mix_seed(trial_seed, 1), mix_seed(trial_seed, 2)


@dataclass(frozen=True)
class GridPoint:
    index: int
    a_over_b: float
    a: int


@dataclass
class ExperimentConfig:
    """One sweep: a parameter set, grid points for the initial size (as
    multiples of the critical size b, or absolute via ``a_grid``), and the
    finite-n surrogates for the asymptotic outcome classes -- final size at
    most small_multiple * b counts as "small", at least
    (1 - near_full_fraction) * n as "near_full".
    """

    params: ModelParams
    trials_per_point: int
    master_seed: int
    a_over_b_grid: list[float] | None = None
    a_grid: list[int] | None = None
    near_full_fraction: float = 0.1
    small_multiple: float = 10.0
    epsilon: float = 0.2
    snapshot: bool = False
    p_exponent: float | None = None
    workers: int = 1
    max_expected_edges: float = 5e7

    def __post_init__(self):
        if (self.a_over_b_grid is None) == (self.a_grid is None):
            raise ValueError("exactly one of a_over_b_grid / a_grid must be given")
        if self.trials_per_point < 1:
            raise ValueError("need at least one trial per point")
        if not 0.0 < self.near_full_fraction < 1.0:
            raise ValueError("near_full_fraction must lie in (0, 1)")
        grid = self.a_over_b_grid if self.a_over_b_grid is not None else self.a_grid
        if any(x < 0 for x in grid):
            raise ValueError("grid values must be nonnegative")

    def resolve_points(self, b: float) -> list[GridPoint]:
        if self.a_over_b_grid is not None:
            return [
                GridPoint(i, float(x), int(round(x * b)))
                for i, x in enumerate(self.a_over_b_grid)
            ]
        return [GridPoint(i, a / b, int(a)) for i, a in enumerate(self.a_grid)]


@dataclass
class TrialRow:
    point: int
    a_over_b: float
    a: int
    trial: int
    seed: int
    final_infected: int
    stopping_time: int
    outcome_class: str
    rounds: list[int] = field(default_factory=list, repr=False)
    class_sizes: list[tuple[int, ...]] | None = field(default=None, repr=False)


@dataclass
class PointSummary:
    point: int
    a_over_b: float
    a: int
    trials: int
    failed: int
    frac_small: float
    frac_near_full: float
    frac_intermediate: float
    mean_final: float
    se_final: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    b: float
    rows: list[TrialRow]
    points: list[PointSummary]

    def to_csv(self) -> str:
        c = self.config
        p = c.params
        grid = (
            f"a_over_b={list(map(float, c.a_over_b_grid))!r}"
            if c.a_over_b_grid is not None
            else f"a={list(map(int, c.a_grid))!r}"
        )
        head = (
            f"# hyperboot sweep n={p.n} k={p.k} r={p.r} p={p.p!r} {grid}"
            f" trials={c.trials_per_point} master_seed={c.master_seed}"
            f" near_full_fraction={c.near_full_fraction!r} small_multiple={c.small_multiple!r}"
            f" epsilon={c.epsilon!r} snapshot={c.snapshot}"
            f" max_expected_edges={c.max_expected_edges!r}"
            f" b={self.b!r} regime_ok={p.regime_ok}"
        )
        lines = [head, "point,a_over_b,a,trial,seed,final_infected,T,class"]
        for row in self.rows:
            lines.append(
                f"{row.point},{row.a_over_b!r},{row.a},{row.trial},{row.seed},"
                f"{row.final_infected},{row.stopping_time},{row.outcome_class}"
            )
        return "\n".join(lines) + "\n"


def classify_outcome(
    final: int, n: int, b: float, near_full_fraction: float, small_multiple: float
) -> str:
    if final >= (1.0 - near_full_fraction) * n:
        return NEAR_FULL
    if final <= small_multiple * b:
        return SMALL
    return INTERMEDIATE


def _run_trial(args) -> TrialRow:
    (params, point, trial, master_seed, snapshot, budget, zeta, small_mult, b) = args
    trial_seed, graph_seed, init_seed = trial_seeds(master_seed, point.index, trial)
    try:
        h = sample_hypergraph(params, graph_seed, max_expected_edges=budget)
    except EdgeBudgetError:
        return TrialRow(
            point=point.index,
            a_over_b=point.a_over_b,
            a=point.a,
            trial=trial,
            seed=trial_seed,
            final_infected=-1,
            stopping_time=-1,
            outcome_class=FAILED,
        )
    initial = sample_initial_set(params.n, point.a, init_seed)
    out = run_bootstrap(h, initial, params.r, snapshot=snapshot)
    return TrialRow(
        point=point.index,
        a_over_b=point.a_over_b,
        a=point.a,
        trial=trial,
        seed=trial_seed,
        final_infected=out.final_infected,
        stopping_time=out.stopping_time,
        outcome_class=classify_outcome(
            out.final_infected, params.n, b, zeta, small_mult
        ),
        rounds=out.new_per_round,
        class_sizes=out.class_sizes,
    )


def run_sweep(config: ExperimentConfig) -> ExperimentResult:
    """Run trials_per_point fresh (hypergraph, initial set) trials at every
    grid point and aggregate outcome-class fractions per point.

    Sampler budget rejections are recorded as 'failed' rows and excluded from
    the per-point fractions; they never abort the sweep.
    """
    params = config.params
    b = critical_size(params).value
    points = config.resolve_points(b)
    tasks = [
        (
            params,
            point,
            trial,
            config.master_seed,
            config.snapshot,
            config.max_expected_edges,
            config.near_full_fraction,
            config.small_multiple,
            b,
        )
        for point in points
        for trial in range(config.trials_per_point)
    ]
    if config.workers > 1:
        with Pool(processes=config.workers) as pool:
            rows = pool.map(_run_trial, tasks, chunksize=1)
    else:
        rows = [_run_trial(t) for t in tasks]
    rows.sort(key=lambda r: (r.point, r.trial))
    summaries = [_summarize(point, rows) for point in points]
    return ExperimentResult(config=config, b=b, rows=rows, points=summaries)


def _summarize(point: GridPoint, rows: list[TrialRow]) -> PointSummary:
    mine = [r for r in rows if r.point == point.index]
    ok = [r for r in mine if r.outcome_class != FAILED]
    failed = len(mine) - len(ok)
    if ok:
        finals = np.array([r.final_infected for r in ok], dtype=float)
        mean = float(finals.mean())
        se = float(finals.std(ddof=1) / math.sqrt(len(ok))) if len(ok) > 1 else 0.0
        fractions = {
            cls: sum(1 for r in ok if r.outcome_class == cls) / len(ok)
            for cls in (SMALL, NEAR_FULL, INTERMEDIATE)
        }
    else:
        mean, se = math.nan, math.nan
        fractions = {SMALL: 0.0, NEAR_FULL: 0.0, INTERMEDIATE: 0.0}
    return PointSummary(
        point=point.index,
        a_over_b=point.a_over_b,
        a=point.a,
        trials=len(mine),
        failed=failed,
        frac_small=fractions[SMALL],
        frac_near_full=fractions[NEAR_FULL],
        frac_intermediate=fractions[INTERMEDIATE],
        mean_final=mean,
        se_final=se,
    )


@dataclass
class DecayRow:
    n: int
    p: float
    b: float
    point: int
    a_over_b: float
    a: int
    trials: int
    failed_samples: int
    misclassified: int
    failure_fraction: float
    std_error: float


@dataclass
class DecayScan:
    rows: list[DecayRow]
    results: list[ExperimentResult]
    config: ExperimentConfig
    n_grid: list[int]

    def to_csv(self) -> str:
        c = self.config
        lines = [
            f"# hyperboot decay n_grid={list(map(int, self.n_grid))!r}"
            f" k={c.params.k} r={c.params.r} p_exponent={c.p_exponent!r}"
            f" a_over_b={list(map(float, c.a_over_b_grid))!r}"
            f" trials={c.trials_per_point} master_seed={c.master_seed}"
            f" near_full_fraction={c.near_full_fraction!r}"
            f" small_multiple={c.small_multiple!r} epsilon={c.epsilon!r}"
            f" max_expected_edges={c.max_expected_edges!r}",
            "n,p,b,point,a_over_b,a,trials,failed_samples,misclassified,"
            "failure_fraction,std_error",
        ]
        for row in self.rows:
            lines.append(
                f"{row.n},{row.p!r},{row.b!r},{row.point},{row.a_over_b!r},{row.a},"
                f"{row.trials},{row.failed_samples},{row.misclassified},"
                f"{row.failure_fraction!r},{row.std_error!r}"
            )
        return "\n".join(lines) + "\n"


def failure_decay_scan(config: ExperimentConfig, n_grid: list[int]) -> DecayScan:
    """Sweep the same a/b ratios at increasing graph sizes (k = 2 only, with
    p = n^-p_exponent so the critical size grows along the grid) and report
    the misclassification fraction per size.

    Each size gets its own master seed, mix_seed(master, n), so the trials at
    different sizes are statistically unrelated.  Only the qualitative decay
    of the failure fraction is meaningful at desk scale.
    """
    if config.params.k != 2:
        raise ValueError("decay scan is defined for k = 2 only")
    if config.p_exponent is None:
        raise ValueError("decay scan needs p_exponent (p = n^-c) to move along n")
    if config.a_over_b_grid is None:
        raise ValueError("decay scan needs ratio grid points")
    eps = config.epsilon
    for x in config.a_over_b_grid:
        if abs(x - 1.0) < eps:
            raise ValueError(
                f"ratio {x} has no expected outcome within epsilon={eps} of the threshold"
            )
    rows: list[DecayRow] = []
    results: list[ExperimentResult] = []
    for n in n_grid:
        p = float(n) ** (-config.p_exponent)
        params = replace(config.params, n=int(n), p=p)
        sub = replace(
            config, params=params, master_seed=mix_seed(config.master_seed, int(n))
        )
        result = run_sweep(sub)
        results.append(result)
        for point in result.points:
            expected = SMALL if point.a_over_b <= 1.0 - eps else NEAR_FULL
            mine = [r for r in result.rows if r.point == point.point]
            ok = [r for r in mine if r.outcome_class != FAILED]
            bad = sum(1 for r in ok if r.outcome_class != expected)
            frac = bad / len(ok) if ok else math.nan
            se = (
                math.sqrt(frac * (1.0 - frac) / len(ok))
                if ok and not math.isnan(frac)
                else math.nan
            )
            rows.append(
                DecayRow(
                    n=int(n),
                    p=p,
                    b=result.b,
                    point=point.point,
                    a_over_b=point.a_over_b,
                    a=point.a,
                    trials=len(ok),
                    failed_samples=len(mine) - len(ok),
                    misclassified=bad,
                    failure_fraction=frac,
                    std_error=se,
                )
            )
    return DecayScan(rows=rows, results=results, config=config, n_grid=[int(n) for n in n_grid])


@dataclass
class SubcriticalComparison:
    point: int
    a: int
    trials: int
    empirical_mean_final: float
    predicted_fixed_point: float | None
    relative_error: float | None


@dataclass
class EndgameSummary:
    point: int
    a: int
    trials: int
    saturation_size: float
    rounds_after_saturation: list[int | None]

    def fraction_within(self, max_rounds: int) -> float:
        if not self.rounds_after_saturation:
            return math.nan
        good = sum(
            1 for x in self.rounds_after_saturation if x is not None and x <= max_rounds
        )
        return good / len(self.rounds_after_saturation)


@dataclass
class ComparisonReport:
    subcritical: list[SubcriticalComparison]
    supercritical: list[EndgameSummary]

    def to_json_obj(self) -> dict:
        return {
            "subcritical": [dataclasses.asdict(s) for s in self.subcritical],
            "supercritical": [
                {
                    **{k: v for k, v in dataclasses.asdict(s).items()},
                    "fraction_within_3": s.fraction_within(3),
                }
                for s in self.supercritical
            ],
        }


def rounds_after_saturation(row: TrialRow, saturation: float) -> int | None:
    """Rounds between the infected count first passing the saturation size and
    the end of the run; None when it never passes."""
    cum = row.a
    for t, fresh in enumerate(row.rounds, start=1):
        cum += fresh
        if cum > saturation:
            return row.stopping_time - t
    return None


def compare_to_analytics(
    result: ExperimentResult, params: ModelParams | None = None
) -> ComparisonReport:
    """Join a sweep against the deterministic predictions.

    Grid points at ratio <= 1 - epsilon are compared to the fixed point of the
    infected-class map (predicted final size); points at ratio >= 1 + epsilon
    get the endgame statistic: how many rounds the run needed after the
    infected count first passed the saturation size 1/(n^{k-2} p).
    """
    params = params or result.config.params
    eps = result.config.epsilon
    sub: list[SubcriticalComparison] = []
    sup: list[EndgameSummary] = []
    for point in result.points:
        ok = [
            r
            for r in result.rows
            if r.point == point.point and r.outcome_class != FAILED
        ]
        if point.a_over_b <= 1.0 - eps:
            cls = fixed_point_classify(params, float(point.a))
            predicted = cls.fixed_point if cls.label == SUBCRITICAL else None
            mean = (
                float(np.mean([r.final_infected for r in ok])) if ok else math.nan
            )
            if predicted is None:
                rel = None
            elif predicted == 0.0:
                rel = abs(mean - 0.0)
            else:
                rel = abs(mean - predicted) / predicted
            sub.append(
                SubcriticalComparison(
                    point=point.point,
                    a=point.a,
                    trials=len(ok),
                    empirical_mean_final=mean,
                    predicted_fixed_point=predicted,
                    relative_error=rel,
                )
            )
        elif point.a_over_b >= 1.0 + eps:
            sat = params.saturation_size
            sup.append(
                EndgameSummary(
                    point=point.point,
                    a=point.a,
                    trials=len(ok),
                    saturation_size=sat,
                    rounds_after_saturation=[
                        rounds_after_saturation(r, sat) for r in ok
                    ],
                )
            )
    return ComparisonReport(subcritical=sub, supercritical=sup)
