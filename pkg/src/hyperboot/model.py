"""Model parameters, the critical initial-set size, and sparse sampling of
binomial k-uniform random hypergraphs.

A hypergraph is sampled edge-sparsely: instead of tossing a coin for each of
the C(n,k) possible k-sets, the edge count m is drawn from Binomial(C(n,k), p)
and then m distinct k-sets are drawn uniformly by rejection.  This keeps the
cost proportional to the number of edges actually present.
"""

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Finite-n surrogates for the asymptotic window n^{-1} << n^{k-2} p << n^{-1/r}.
# Tunable; violations are flagged, never fatal.
REGIME_MIN_GROWTH = 10.0  # n^{k-1} p must be at least this
REGIME_MAX_SPREAD = 0.1   # n^{k-2+1/r} p must be at most this

_MASK64 = (1 << 64) - 1


class EdgeBudgetError(ValueError):
    """Raised when the expected edge count exceeds the configured memory budget."""


def binom_float(n: int, m: int) -> float:
    """Binomial coefficient C(n, m) as a float, via log-gamma when the exact
    integer would overflow float range."""
    if m < 0 or m > n:
        return 0.0
    if m <= 1:
        return 1.0 if m == 0 else float(n)
    try:
        return float(math.comb(n, m))
    except OverflowError:
        lg = math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)
        return math.exp(lg)


@dataclass(frozen=True)
class ModelParams:
    """The model tuple (n, k, r, p): n vertices, k-uniform edges each present
    independently with probability p, infection threshold r."""

    n: int
    k: int
    r: int
    p: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"vertex count must be positive, got {self.n}")
        if self.k < 2:
            raise ValueError(f"edge uniformity k must be >= 2, got {self.k}")
        if self.r < 2:
            raise ValueError(f"infection threshold r must be >= 2, got {self.r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"edge probability must lie in [0, 1], got {self.p}")

    @property
    def link_rate(self) -> float:
        """Expected number of edges containing a fixed pair of vertices,
        C(n, k-2) * p.  The coupling constant of all the recurrences."""
        return binom_float(self.n, self.k - 2) * self.p

    @property
    def saturation_size(self) -> float:
        """Infected-set size at which a vertex's expected number of infected
        neighbours reaches order one, 1 / (n^{k-2} p).  The deterministic
        recurrences are only valid below this scale."""
        if self.p <= 0:
            return math.inf
        return 1.0 / (float(self.n) ** (self.k - 2) * self.p)

    @property
    def regime_ok(self) -> bool:
        """Whether (n, k, r, p) sits inside the operational sparse window.

        Checked as n^{k-1} p >= REGIME_MIN_GROWTH and
        n^{k-2+1/r} p <= REGIME_MAX_SPREAD.  Out-of-window parameter sets are
        allowed everywhere; this flag is only echoed into result files.
        """
        n = float(self.n)
        growth = n ** (self.k - 1) * self.p
        spread = n ** (self.k - 2 + 1.0 / self.r) * self.p
        # inclusive boundaries up to float rounding (p = n^-c hits them exactly)
        return (
            growth >= REGIME_MIN_GROWTH * (1.0 - 1e-9)
            and spread <= REGIME_MAX_SPREAD * (1.0 + 1e-9)
        )


@dataclass(frozen=True)
class Threshold:
    """Critical initial-set size separating the almost-no-spread and
    near-complete-spread regimes."""

    value: float
    regime_label: str  # "r_equals_2" | "r_greater_2"


def critical_size(params: ModelParams) -> Threshold:
    """Critical number of initially infected vertices for (n, k, r, p).

    For r > 2 this is (1 - 1/r) * ((r-1)! / (n * (C(n,k-2) p)^r))^(1/(r-1));
    for r = 2 it is 1 / (2 (2k-3) n (C(n,k-2) p)^2), the extra 1/(2k-3)
    factor accounting for the pair-of-intersecting-edges event that infects
    2k-3 vertices at once.
    """
    if params.p <= 0:
        raise ValueError("critical size is undefined for p = 0")
    n, r = params.n, params.r
    rate = params.link_rate
    if r == 2:
        value = 1.0 / (2.0 * (2 * params.k - 3) * n * rate**2)
        return Threshold(value=value, regime_label="r_equals_2")
    value = (1.0 - 1.0 / r) * (math.factorial(r - 1) / (n * rate**r)) ** (1.0 / (r - 1))
    return Threshold(value=value, regime_label="r_greater_2")


def expected_edge_count(params: ModelParams) -> float:
    """C(n, k) * p, computed in log space when C(n, k) overflows."""
    if params.p == 0:
        return 0.0
    lg = (
        math.lgamma(params.n + 1)
        - math.lgamma(params.k + 1)
        - math.lgamma(params.n - params.k + 1)
    )
    return math.exp(lg + math.log(params.p))


class Hypergraph:
    """k-uniform hypergraph on vertices [0, n) with canonically sorted edges.

    Edges are stored as an (m, k) int64 array; every row is strictly
    increasing and rows are sorted lexicographically, so two hypergraphs are
    equal iff their edge arrays are bit-identical.  The vertex-to-edge
    incidence index is built lazily in CSR form (edge-id based; hyperedges are
    never expanded into a pairwise neighbour graph, which could square the
    memory footprint).
    """

    def __init__(self, n: int, k: int, edges: np.ndarray, meta: dict | None = None):
        edges = np.asarray(edges, dtype=np.int64)
        if edges.size == 0:
            edges = edges.reshape(0, k)
        if edges.ndim != 2 or edges.shape[1] != k:
            raise ValueError(f"edge array must have shape (m, {k})")
        self.n = int(n)
        self.k = int(k)
        self.edges = edges
        self.meta = dict(meta) if meta else {}

    @property
    def m(self) -> int:
        return self.edges.shape[0]

    def validate(self):
        """Check the structural invariants; raises ValueError on violation."""
        e = self.edges
        if e.size:
            if e.min() < 0 or e.max() >= self.n:
                raise ValueError("vertex id out of range")
            if not np.all(e[:, 1:] > e[:, :-1]):
                raise ValueError("edge rows must be strictly increasing")
            order = np.lexsort(e.T[::-1])
            if not np.array_equal(order, np.arange(self.m)):
                raise ValueError("edges must be sorted lexicographically")
            if self.m > 1:
                dup = np.all(e[1:] == e[:-1], axis=1)
                if dup.any():
                    raise ValueError("duplicate edges")

    @cached_property
    def _incidence(self) -> tuple[np.ndarray, np.ndarray]:
        # CSR index: _incidence[1][_incidence[0][v]:_incidence[0][v+1]] are the
        # ids of the edges containing v.
        flat = self.edges.ravel()
        order = np.argsort(flat, kind="stable")
        edge_ids = order // self.k
        counts = np.bincount(flat, minlength=self.n) if flat.size else np.zeros(self.n, dtype=np.int64)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, edge_ids.astype(np.int64)

    def incident_edge_ids(self, v: int) -> np.ndarray:
        if not 0 <= v < self.n:
            raise ValueError(f"vertex id {v} out of range")
        indptr, edge_ids = self._incidence
        return edge_ids[indptr[v] : indptr[v + 1]]

    def incident_edges_of(self, vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gather incident edge ids for a batch of vertices.

        Returns (edge_ids, owners) where owners[i] is the vertex whose
        incidence list contributed edge_ids[i].
        """
        indptr, edge_ids = self._incidence
        vertices = np.asarray(vertices, dtype=np.int64)
        starts = indptr[vertices]
        lens = indptr[vertices + 1] - starts
        total = int(lens.sum())
        if total == 0:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        offsets = np.cumsum(lens) - lens
        pos = np.repeat(starts - offsets, lens) + np.arange(total)
        return edge_ids[pos], np.repeat(vertices, lens)

    def degree(self, v: int) -> int:
        return int(self.incident_edge_ids(v).size)

    def to_text(self) -> str:
        """Serialize as 'n k m' header plus one sorted edge per line."""
        lines = [f"{self.n} {self.k} {self.m}"]
        lines.extend(" ".join(str(x) for x in row) for row in self.edges)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Hypergraph":
        head, _, body = text.partition("\n")
        n, k, m = (int(x) for x in head.split())
        if m == 0:
            return cls(n, k, np.empty((0, k), dtype=np.int64))
        values = np.array(body.split(), dtype=np.int64)
        if values.size != m * k:
            raise ValueError(f"expected {m * k} vertex ids, found {values.size}")
        return cls(n, k, values.reshape(m, k))

    def __eq__(self, other):
        return (
            isinstance(other, Hypergraph)
            and self.n == other.n
            and self.k == other.k
            and np.array_equal(self.edges, other.edges)
        )


def _keys_fit_int64(n: int, k: int) -> bool:
    return n**k < 2**63


def _row_keys(rows: np.ndarray, n: int) -> np.ndarray:
    # positional encoding; monotone in lexicographic row order
    keys = rows[:, 0].astype(np.int64)
    for j in range(1, rows.shape[1]):
        keys = keys * n + rows[:, j]
    return keys


def _first_distinct(rows: np.ndarray, n: int) -> np.ndarray:
    """Indices of the first occurrence of each distinct row, in row order."""
    if _keys_fit_int64(n, rows.shape[1]):
        _, first = np.unique(_row_keys(rows, n), return_index=True)
    else:
        _, first = np.unique(rows, axis=0, return_index=True)
    return np.sort(first)


def _sample_distinct_ksets(rng: np.random.Generator, n: int, k: int, m: int) -> np.ndarray:
    """Draw m distinct k-subsets of [0, n) uniformly, by rejection.

    Equivalent to repeatedly drawing uniform k-sets and discarding repeats
    until m distinct ones have appeared; cheap because m << C(n, k) in the
    sparse regime.
    """
    if m == 0:
        return np.empty((0, k), dtype=np.int64)
    chunks: list[np.ndarray] = []
    distinct = 0
    attempt = 0
    while distinct < m:
        attempt += 1
        size = int((m - distinct) * (1.15 + 0.25 * attempt)) + 16
        raw = rng.integers(0, n, size=(size, k), dtype=np.int64)
        raw.sort(axis=1)
        ok = np.all(raw[:, 1:] > raw[:, :-1], axis=1) if k > 1 else np.ones(size, bool)
        chunks.append(raw[ok])
        stream = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
        first = _first_distinct(stream, n)
        distinct = first.size
    edges = stream[first[:m]]
    # canonical order: lexicographic across rows
    if _keys_fit_int64(n, k):
        edges = edges[np.argsort(_row_keys(edges, n))]
    else:
        edges = edges[np.lexsort(edges.T[::-1])]
    return edges


def sample_hypergraph(
    params: ModelParams,
    seed: int,
    max_expected_edges: float = 5e7,
) -> Hypergraph:
    """Sample H_k(n, p): every k-set of vertices is an edge independently with
    probability p.

    The edge count is drawn from Binomial(C(n,k), p) when C(n,k) fits in 64
    bits, otherwise from the Poisson(C(n,k) p) approximation (recorded in
    ``meta['edge_count_law']``).  Deterministic given ``seed``.

    Raises EdgeBudgetError when the expected edge count C(n,k) p exceeds
    ``max_expected_edges``.
    """
    n, k, p = params.n, params.k, params.p
    mean = expected_edge_count(params)
    if mean > max_expected_edges:
        raise EdgeBudgetError(
            f"expected edge count {mean:.3g} exceeds budget {max_expected_edges:.3g}"
        )
    rng = np.random.default_rng(seed & _MASK64)
    total = math.comb(n, k)
    meta = {"seed": int(seed), "expected_edges": mean}
    if p == 0.0:
        meta["edge_count_law"] = "binomial"
        return Hypergraph(n, k, np.empty((0, k), dtype=np.int64), meta)
    if p == 1.0:
        meta["edge_count_law"] = "binomial"
        edges = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
        return Hypergraph(n, k, edges, meta)
    if total <= 2**63 - 1:
        m = int(rng.binomial(total, p))
        meta["edge_count_law"] = "binomial"
    else:
        m = int(rng.poisson(mean))
        meta["edge_count_law"] = "poisson"
    edges = _sample_distinct_ksets(rng, n, k, m)
    return Hypergraph(n, k, edges, meta)


def sample_initial_set(n: int, a: int, seed: int) -> np.ndarray:
    """Uniformly random a-subset of [0, n), returned as a sorted int64 array.

    Uses a partial Fisher-Yates shuffle over a sparse map, so memory is O(a)
    rather than O(n).  Deterministic given ``seed``.
    """
    if not 0 <= a <= n:
        raise ValueError(f"initial set size {a} outside [0, {n}]")
    if a == 0:
        return np.empty(0, dtype=np.int64)
    rng = np.random.default_rng(seed & _MASK64)
    draws = rng.integers(np.arange(a), n)
    touched: dict[int, int] = {}
    out = np.empty(a, dtype=np.int64)
    for i in range(a):
        j = int(draws[i])
        vi = touched.get(i, i)
        vj = touched.get(j, j)
        touched[i] = vj
        touched[j] = vi
        out[i] = vj
    out.sort()
    return out
