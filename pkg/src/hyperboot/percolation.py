"""Synchronous bootstrap percolation on a concrete hypergraph.

Two vertices are neighbours when some edge contains both.  In every round,
each uninfected vertex with at least r *distinct* infected neighbours becomes
infected; infection is permanent.  The engine is incremental: when a vertex
becomes infected its incident edges are scanned once, and (infected, target)
pairs are de-duplicated so that a neighbour sharing several edges with the
target is still counted only once.  A slow reference implementation that
recounts every vertex every round is kept alongside as the correctness
oracle.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .model import Hypergraph


@dataclass
class InfectionState:
    """Engine state after some round: membership flags, the distinct
    infected-neighbour count of every still-uninfected vertex, and the round
    index.  Counts of infected vertices are frozen at their infection round;
    the per-pair distinctness bookkeeping happens at update time, round by
    round."""

    infected: np.ndarray
    infected_neighbor_count: np.ndarray
    round: int


@dataclass
class PercolationOutcome:
    """Result of one bootstrap run.

    ``new_per_round[t-1]`` is the number of vertices infected in round t; the
    list carries no trailing zeros, so ``stopping_time == len(new_per_round)``
    is the last round in which anything happened (0 if nothing ever does).
    ``class_sizes``, present when snapshots were requested, holds for each
    round t the tuple (|A_0(t)|, ..., |A_{r-1}(t)|, |A_r(t)|): uninfected
    vertices by their distinct infected-neighbour count, then the infected
    count.
    """

    final_infected: int
    stopping_time: int
    new_per_round: list[int] = field(default_factory=list)
    class_sizes: list[tuple[int, ...]] | None = None

    def to_json(self) -> str:
        obj = {
            "final_infected": self.final_infected,
            "T": self.stopping_time,
            "rounds": self.new_per_round,
        }
        if self.class_sizes is not None:
            obj["class_sizes"] = [list(c) for c in self.class_sizes]
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> "PercolationOutcome":
        obj = json.loads(text)
        cs = obj.get("class_sizes")
        return cls(
            final_infected=obj["final_infected"],
            stopping_time=obj["T"],
            new_per_round=list(obj["rounds"]),
            class_sizes=[tuple(c) for c in cs] if cs is not None else None,
        )


def _check_initial(n: int, initial) -> np.ndarray:
    init = np.unique(np.asarray(list(initial), dtype=np.int64)) if not isinstance(
        initial, np.ndarray
    ) else np.unique(initial.astype(np.int64))
    if init.size and (init[0] < 0 or init[-1] >= n):
        raise ValueError("initial vertex id out of range")
    return init


def run_bootstrap(
    h: Hypergraph,
    initial,
    r: int,
    snapshot: bool = False,
    return_state: bool = False,
):
    """Run the synchronous process to completion.

    Round t+1 infects exactly the uninfected vertices whose distinct
    infected-neighbour count under the end-of-round-t state is at least r;
    the process stops the first time a round infects nobody.
    """
    if r < 1:
        raise ValueError(f"infection threshold must be >= 1, got {r}")
    n, k = h.n, h.k
    if n >= 3_000_000_000:
        raise ValueError("vertex count too large for pair encoding")
    init = _check_initial(n, initial)

    infected = np.zeros(n, dtype=bool)
    infected[init] = True
    counts = np.zeros(n, dtype=np.int64)
    frontier = init
    new_per_round: list[int] = []
    class_sizes: list[tuple[int, ...]] | None = None
    if snapshot:
        # round 0: no counting has happened yet, all uninfected sit in class 0
        class_sizes = [_snapshot(counts, infected, r)]

    while frontier.size:
        edge_ids, owners = h.incident_edges_of(frontier)
        if edge_ids.size:
            rows = h.edges[edge_ids]  # (L, k)
            w = rows.ravel()
            u = np.repeat(owners, k)
            mask = (w != u) & ~infected[w]
            # one increment per distinct (infected, target) pair, regardless of
            # how many edges the pair shares
            pairs = np.unique(u[mask] * n + w[mask])
            targets, gained = np.unique(pairs % n, return_counts=True)
            counts[targets] += gained
            newly = targets[counts[targets] >= r]
        else:
            newly = np.empty(0, dtype=np.int64)
        if newly.size == 0:
            break
        infected[newly] = True
        new_per_round.append(int(newly.size))
        if snapshot:
            class_sizes.append(_snapshot(counts, infected, r))
        frontier = newly

    outcome = PercolationOutcome(
        final_infected=int(infected.sum()),
        stopping_time=len(new_per_round),
        new_per_round=new_per_round,
        class_sizes=class_sizes,
    )
    if return_state:
        state = InfectionState(
            infected=infected,
            infected_neighbor_count=counts,
            round=len(new_per_round),
        )
        return outcome, state
    return outcome


def _snapshot(counts: np.ndarray, infected: np.ndarray, r: int) -> tuple[int, ...]:
    hist = np.bincount(counts[~infected], minlength=r)[:r]
    return tuple(int(x) for x in hist) + (int(infected.sum()),)


def count_distinct_infected_neighbors(h: Hypergraph, infected, v: int) -> int:
    """Number of distinct infected vertices sharing at least one edge with v.

    Reference implementation used as the oracle for the incremental engine.
    """
    if not 0 <= v < h.n:
        raise ValueError(f"vertex id {v} out of range")
    infected = set(int(x) for x in infected)
    seen = set()
    for eid in h.incident_edge_ids(v):
        for u in h.edges[eid]:
            u = int(u)
            if u != v and u in infected:
                seen.add(u)
    return len(seen)


def run_bootstrap_reference(
    h: Hypergraph,
    initial,
    r: int,
    snapshot: bool = False,
    return_state: bool = False,
):
    """Naive engine: recount every vertex's distinct infected neighbours every
    round.  Quadratic and only meant for small instances and cross-checks."""
    if r < 1:
        raise ValueError(f"infection threshold must be >= 1, got {r}")
    n = h.n
    init = _check_initial(n, initial)
    infected = set(int(x) for x in init)
    new_per_round: list[int] = []
    class_sizes: list[tuple[int, ...]] | None = None
    counts = {v: 0 for v in range(n)}
    if snapshot:
        class_sizes = [_snapshot_ref(counts, infected, n, r)]
    while True:
        counts = {
            v: count_distinct_infected_neighbors(h, infected, v)
            for v in range(n)
            if v not in infected
        }
        newly = [v for v, c in counts.items() if c >= r]
        if not newly:
            break
        infected.update(newly)
        new_per_round.append(len(newly))
        if snapshot:
            class_sizes.append(_snapshot_ref(counts, infected, n, r))
    outcome = PercolationOutcome(
        final_infected=len(infected),
        stopping_time=len(new_per_round),
        new_per_round=new_per_round,
        class_sizes=class_sizes,
    )
    if return_state:
        mask = np.zeros(n, dtype=bool)
        mask[list(infected)] = True
        cnt = np.zeros(n, dtype=np.int64)
        for v, c in counts.items():
            cnt[v] = c
        state = InfectionState(mask, cnt, len(new_per_round))
        return outcome, state
    return outcome


def _snapshot_ref(counts: dict, infected: set, n: int, r: int) -> tuple[int, ...]:
    hist = [0] * r
    for v, c in counts.items():
        if v not in infected:
            hist[c] += 1
    return tuple(hist) + (len(infected),)
