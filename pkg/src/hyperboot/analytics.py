"""Deterministic approximations of the infection dynamics and their
diagnostics.

Vertices are partitioned by their number of distinct infected neighbours:
class i (0 <= i < r) holds the uninfected vertices with exactly i of them,
class r the infected vertices.  Writing rate = C(n, k-2) p for the expected
number of edges joining a fixed pair, the expected class sizes a_i(t) obey

    closed form:   a_i(t+1) = a_r(t)^i / i! * n * rate^i + a_i(0)
    incremental:   a_i(t+1) - a_i(t) =
                     sum_{j=1..i} (a_r(t) - a_r(t-1))^j / j! * a_{i-j}(t) * rate^j

with a_0(t) = n held fixed.  Both are valid while a_r stays well below the
saturation size 1/(n^{k-2} p).  The infected-class map x -> a + n rate^r
x^r / r! either converges to a finite fixed point (subcritical) or escapes to
the saturation scale (supercritical); the boundary initial size reproduces
the critical-size formula, up to the 2k-3 multiplicity factor when r = 2.
After the increments have become small, the residual infection tail is
dominated by a subcritical multitype-binomial Galton-Watson process, which is
estimated here by Monte Carlo and checked against Wald's identity.
"""

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import ModelParams, critical_size

_MASK64 = (1 << 64) - 1

SUBCRITICAL = "subcritical"
SUPERCRITICAL = "supercritical"


@dataclass
class Trajectory:
    """Deterministic class-size sequences.

    ``a[t, i]`` approximates |A_i(t)|; ``deltas[t] = a[t+1, r] - a[t, r]`` is
    the per-round growth of the infected class.  ``cutoff_round`` is the first
    round at which the infected class reached the saturation size (None if it
    never did within the horizon): rows beyond it are not computed because the
    approximation has no validity there.
    """

    variant: str  # "closed_form" | "incremental"
    params: ModelParams
    initial_size: float
    a: np.ndarray
    deltas: np.ndarray
    cutoff_round: int | None
    cutoff_value: float

    def to_csv(self) -> str:
        r = self.params.r
        head = "# trajectory variant=%s n=%d k=%d r=%d p=%r a=%r cutoff_round=%s" % (
            self.variant,
            self.params.n,
            self.params.k,
            self.params.r,
            self.params.p,
            self.initial_size,
            self.cutoff_round,
        )
        cols = "t," + ",".join(f"a_{i}" for i in range(r + 1)) + ",delta"
        lines = [head, cols]
        for t in range(self.a.shape[0]):
            delta = repr(float(self.deltas[t])) if t < self.deltas.size else ""
            lines.append(
                f"{t}," + ",".join(repr(float(x)) for x in self.a[t]) + f",{delta}"
            )
        return "\n".join(lines) + "\n"


def _iterate_trajectory(params: ModelParams, initial_size: float, t_max: int, step):
    n, r = params.n, params.r
    cutoff = params.saturation_size
    row0 = np.zeros(r + 1)
    row0[0] = float(n)
    row0[r] = float(initial_size)
    rows = [row0]
    cutoff_round = None
    for t in range(1, t_max + 1):
        if rows[-1][r] >= cutoff:
            cutoff_round = t - 1
            break
        rows.append(step(rows, t))
    a = np.vstack(rows)
    deltas = np.diff(a[:, r])
    return a, deltas, cutoff_round


def trajectory_closed_form(
    params: ModelParams, initial_size: float, t_max: int = 400
) -> Trajectory:
    """Iterate the closed-form recurrence a_i(t+1) = a_r(t)^i/i! n rate^i + a_i(0)."""
    if initial_size < 0:
        raise ValueError("initial size must be nonnegative")
    n, r = params.n, params.r
    rate = params.link_rate
    a0 = np.zeros(r + 1)
    a0[0] = float(n)
    a0[r] = float(initial_size)

    def step(rows, t):
        ar = rows[-1][r]
        new = np.empty(r + 1)
        new[0] = float(n)
        for i in range(1, r + 1):
            new[i] = ar**i / math.factorial(i) * n * rate**i + a0[i]
        return new

    a, deltas, cutoff_round = _iterate_trajectory(params, initial_size, t_max, step)
    return Trajectory(
        "closed_form", params, float(initial_size), a, deltas, cutoff_round,
        params.saturation_size,
    )


def trajectory_incremental(
    params: ModelParams, initial_size: float, t_max: int = 400
) -> Trajectory:
    """Iterate the per-round increment form of the recurrence.

    The class-i gain from class i-j is (fresh infections)^j / j! * a_{i-j}(t)
    * rate^j: each of the j new infected neighbours independently reaches the
    vertex through an edge of its own.  Negative corrections (vertices leaving
    a class) are dropped, matching the closed form at the first step exactly.
    """
    if initial_size < 0:
        raise ValueError("initial size must be nonnegative")
    n, r = params.n, params.r
    rate = params.link_rate

    def step(rows, t):
        cur = rows[-1]
        prev_ar = rows[-2][r] if len(rows) >= 2 else 0.0
        fresh = cur[r] - prev_ar
        new = cur.copy()
        new[0] = float(n)
        for i in range(1, r + 1):
            gain = 0.0
            for j in range(1, i + 1):
                gain += fresh**j / math.factorial(j) * cur[i - j] * rate**j
            new[i] = cur[i] + gain
        return new

    a, deltas, cutoff_round = _iterate_trajectory(params, initial_size, t_max, step)
    return Trajectory(
        "incremental", params, float(initial_size), a, deltas, cutoff_round,
        params.saturation_size,
    )


@dataclass
class RegimeClassification:
    """Outcome of iterating the infected-class map from a given initial size:
    either it converged (subcritical, with its fixed point) or it crossed the
    divergence cutoff (supercritical, with the crossing round and the round
    from which the increments kept doubling)."""

    label: str
    fixed_point: float | None = None
    divergence_round: int | None = None
    doubling_onset: int | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "label": self.label,
                "a_star": self.fixed_point,
                "divergence_round": self.divergence_round,
                "t2": self.doubling_onset,
            }
        )


def _doubling_onset(deltas: list[float]) -> int | None:
    """Smallest index from which every consecutive increment more than
    doubles, through the end of the sequence."""
    if len(deltas) < 2:
        return None
    onset = None
    for t in range(len(deltas) - 2, -1, -1):
        if deltas[t + 1] > 2.0 * deltas[t]:
            onset = t
        else:
            break
    return onset


def fixed_point_classify(
    params: ModelParams,
    initial_size: float,
    tol: float = 1e-9,
    max_iter: int = 1_000_000,
) -> RegimeClassification:
    """Classify an initial size by iterating x <- a + n rate^r x^r / r!.

    Subcritical when successive iterates get within ``tol * max(1, b)`` of
    each other (b the critical size); supercritical when the iterate exceeds
    max(3 x*, saturation size), where x* is the size at which the map's
    derivative reaches one -- past either value divergence is certain.
    """
    if initial_size < 0:
        raise ValueError("initial size must be nonnegative")
    n, r = params.n, params.r
    rate = params.link_rate
    coeff = n * rate**r / math.factorial(r)
    if coeff > 0:
        x_star = (1.0 / (r * coeff)) ** (1.0 / (r - 1))
        cutoff = max(3.0 * x_star, params.saturation_size)
        scale = max(1.0, critical_size(params).value)
    else:
        cutoff = math.inf
        scale = 1.0
    x = float(initial_size)
    deltas: list[float] = []
    for t in range(1, max_iter + 1):
        try:
            x_new = initial_size + coeff * x**r
        except OverflowError:
            x_new = math.inf
        deltas.append(x_new - x)
        if x_new > cutoff:
            return RegimeClassification(
                SUPERCRITICAL,
                divergence_round=t,
                doubling_onset=_doubling_onset(deltas),
            )
        if abs(x_new - x) < tol * scale:
            return RegimeClassification(SUBCRITICAL, fixed_point=x_new)
        x = x_new
    # neither converged nor escaped within the iteration budget: the iterate
    # is still trapped below the cutoff, which is the subcritical signature
    return RegimeClassification(SUBCRITICAL, fixed_point=x)


class CriticalEstimate(NamedTuple):
    """Recurrence-based critical size: ``raw`` is the supremum initial size
    whose map still has a fixed point; ``corrected`` divides out the 2k-3
    multiplicity for r = 2 (the plain recurrence counts one infection per
    pair-of-edges event, the process infects 2k-3)."""

    raw: float
    corrected: float


def empirical_critical_size(params: ModelParams, bisect_iters: int = 30) -> CriticalEstimate:
    """Locate the subcritical/supercritical boundary of the recurrence by
    bisection on the initial size, over [0, 10 b]."""
    b = critical_size(params).value
    lo, hi = 0.0, 10.0 * b
    guard = 0
    while fixed_point_classify(params, hi).label == SUBCRITICAL:
        hi *= 2.0  # r = 2 with large k pushes the boundary past 10 b
        guard += 1
        if guard > 10:
            raise RuntimeError("could not bracket the critical size")
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        if fixed_point_classify(params, mid).label == SUBCRITICAL:
            lo = mid
        else:
            hi = mid
    raw = 0.5 * (lo + hi)
    mult = infection_multiplicity(params.k, params.r)
    return CriticalEstimate(raw=raw, corrected=raw / mult)


class DeltaDiagnostics(NamedTuple):
    tau: int | None
    doubling_onset: int | None


def increment_diagnostics(
    traj: Trajectory, scale: float, eta: float = 0.01
) -> DeltaDiagnostics:
    """Landmark rounds of a trajectory's increment sequence.

    ``tau`` is the first round whose increment drops to eta * scale (the point
    from which the branching-process coupling takes over on subcritical runs);
    ``doubling_onset`` is the round from which increments more than double
    every step up to the saturation cutoff, and is only reported for
    trajectories that actually reached the cutoff.  Either landmark may be
    absent; absence is reported, not raised.
    """
    deltas = traj.deltas
    tau = None
    hits = np.flatnonzero(deltas <= eta * scale)
    if hits.size:
        tau = int(hits[0])
    onset = _doubling_onset(list(deltas)) if traj.cutoff_round is not None else None
    return DeltaDiagnostics(tau=tau, doubling_onset=onset)


def infection_multiplicity(k: int, r: int) -> int:
    """Vertices infected per pair-of-intersecting-edges event: 2k-3 when
    r = 2 (the two edges overlap in one vertex, everything else catches), one
    otherwise."""
    if k < 2 or r < 2:
        raise ValueError("requires k >= 2 and r >= 2")
    return 2 * k - 3 if r == 2 else 1


@dataclass
class BranchingSpec:
    """Multitype-binomial Galton-Watson upper coupling of the late subcritical
    tail.

    Every node's offspring count is sum_{j=1..r-1} Bin(trials[j-1],
    success_probs[j-1]): a newly infected vertex reaches a class-(r-j) vertex
    (which needs j more neighbours) through one fresh edge, while the other
    j-1 arrivals come from the delta * a_r recently infected pool, each
    through an edge of its own.  trials[j-1] is the (1+delta)-inflated size of
    class r-j, rounded to an integer for the binomial draw.
    """

    roots: int
    class_sizes: np.ndarray  # (1+delta)-scaled a_0..a_r
    trials: np.ndarray  # integer Binomial trial counts, index j-1 for j=1..r-1
    success_probs: np.ndarray  # q_j, index j-1
    delta: float
    mean_offspring: float

    @property
    def subcritical(self) -> bool:
        return self.mean_offspring < 1.0


def branching_spec(
    params: ModelParams,
    class_sizes,
    delta: float,
    roots: int = 1,
) -> BranchingSpec:
    """Materialize the coupling from class sizes (a_0..a_r, e.g. a trajectory
    row at tau) and an inflation margin delta > 0.

    The per-class success probabilities are
        q_j = rate * (delta a_r)^(j-1) / (j-1)! * rate^(r-j-1),   j = 1..r-1,
    with rate = C(n, k-2) p.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    sizes = np.asarray(class_sizes, dtype=float)
    r = params.r
    if sizes.shape != (r + 1,):
        raise ValueError(f"expected {r + 1} class sizes, got shape {sizes.shape}")
    if (sizes < 0).any():
        raise ValueError("class sizes must be nonnegative")
    rate = params.link_rate
    pool = delta * sizes[r]
    probs = np.array(
        [
            rate * pool ** (j - 1) / math.factorial(j - 1) * rate ** (r - j - 1)
            for j in range(1, r)
        ]
    )
    if (probs > 1.0).any():
        raise ValueError("success probability above one; spec is outside coupling range")
    scaled = (1.0 + delta) * sizes
    trials = np.rint([scaled[r - j] for j in range(1, r)]).astype(np.int64)
    mu = float((trials * probs).sum())
    return BranchingSpec(
        roots=int(roots),
        class_sizes=scaled,
        trials=trials,
        success_probs=probs,
        delta=float(delta),
        mean_offspring=mu,
    )


@dataclass
class ProgenyResult:
    """Monte Carlo total-progeny summary: sample mean (over completed trials),
    its standard error, empirical exceedance fractions for the requested
    thresholds, and the number of trials aborted at the node cap."""

    mean: float
    std_error: float
    exceed: dict[float, float]
    totals: np.ndarray
    overflowed: int


def simulate_total_progeny(
    spec: BranchingSpec,
    trials: int,
    seed: int,
    thresholds=(),
    node_cap: int = 10_000_000,
) -> ProgenyResult:
    """Estimate the distribution of the branching process's total size
    (roots included) by Monte Carlo.

    Only subcritical specs are accepted: with mean offspring >= 1 the total
    size is infinite with positive probability.  The sample mean must agree
    with Wald's identity roots / (1 - mean_offspring); trials whose total
    passes ``node_cap`` are aborted and excluded from the mean (they still
    count as exceeding every threshold).
    """
    if not spec.subcritical:
        raise ValueError(
            f"mean offspring {spec.mean_offspring:.4g} >= 1: total size diverges"
        )
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed & _MASK64)
    alive = np.full(trials, spec.roots, dtype=np.int64)
    totals = alive.copy()
    overflow = np.zeros(trials, dtype=bool)
    while alive.any():
        nxt = np.zeros(trials, dtype=np.int64)
        for n_trials, q in zip(spec.trials, spec.success_probs):
            if n_trials > 0 and q > 0:
                nxt += rng.binomial(alive * n_trials, q)
        totals += nxt
        newly_over = (totals > node_cap) & ~overflow
        overflow |= newly_over
        nxt[overflow] = 0
        alive = nxt
    ok = ~overflow
    mean = float(totals[ok].mean()) if ok.any() else math.nan
    if ok.sum() > 1:
        std_error = float(totals[ok].std(ddof=1) / math.sqrt(int(ok.sum())))
    else:
        std_error = math.nan
    exceed = {float(th): float((totals > th).mean()) for th in thresholds}
    return ProgenyResult(
        mean=mean,
        std_error=std_error,
        exceed=exceed,
        totals=totals,
        overflowed=int(overflow.sum()),
    )
