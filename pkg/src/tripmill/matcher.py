"""Assign trip points to roadway segments and cut matched trips into traversals.

Decoding is a hidden-state search over per-point snap candidates: emission
weight falls off with the squared snap distance, transition weight with the
gap between route distance and straight-line distance. The joint maximum is
found in log domain; ties resolve toward lower-ranked candidates, from the
final point backward. Points with no candidate in range, or separated by a
time gap, split the sequence into independently decoded stretches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geo import GeoPoint, haversine_distance
from .model import RawPointRecord, Trip
from .roadgraph import Candidate, RoadGraph

NEG_INF = float("-inf")


@dataclass(frozen=True, slots=True)
class MatchParams:
    sigma_gps: float = 5.0
    beta: float = 20.0
    candidate_radius: float = 50.0
    max_time_gap: float = 60.0
    max_route_ratio: float = 3.0

    def validate(self) -> None:
        for name in ("sigma_gps", "beta", "candidate_radius", "max_time_gap", "max_route_ratio"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_route_ratio < 1.0:
            raise ValueError("max_route_ratio must be >= 1")


@dataclass(frozen=True, slots=True)
class MatchedPoint:
    source: RawPointRecord
    way_id: str
    snapped_point: GeoPoint
    distance_along: float
    perpendicular_distance: float


@dataclass(frozen=True, slots=True)
class UnmatchedPoint:
    source: RawPointRecord


@dataclass(frozen=True, slots=True)
class Traversal:
    journey_id: str
    way_id: str
    run_index: int
    points: tuple[MatchedPoint, ...]
    entry_time: int
    exit_time: int


def emission_log_weight(candidate: Candidate, params: MatchParams) -> float:
    return -(candidate.perpendicular_distance**2) / (2.0 * params.sigma_gps**2)


def transition_log_weight(
    graph: RoadGraph,
    prev_point: GeoPoint,
    cur_point: GeoPoint,
    prev_cand: Candidate,
    cur_cand: Candidate,
    params: MatchParams,
) -> float:
    """Log transition weight, NEG_INF when no route fits the bounded search."""

    gc = haversine_distance(prev_point, cur_point)
    cutoff = params.max_route_ratio * gc + 1e-9
    route = graph.route_distance(prev_cand, cur_cand, cutoff)
    if route is None:
        return NEG_INF
    return -abs(route - gc) / params.beta


class ViterbiLattice:
    """Incremental max-product decoder over per-step candidate lists.

    Scores accumulate left to right as ((e0 + t01) + e1) + ...; argmax scans
    keep the first (lowest-index) maximum, so the decoded path is the
    reversed-lexicographically smallest among all optima.
    """

    def __init__(self, emissions: list[float]):
        self.scores = list(emissions)
        self.backptrs: list[list[int]] = []

    def step(self, transitions: list[list[float]], emissions: list[float]) -> bool:
        """Advance one point; False when no candidate is reachable (broken)."""

        new_scores: list[float] = []
        back: list[int] = []
        for j, emis in enumerate(emissions):
            best = NEG_INF
            best_i = -1
            for i, score in enumerate(self.scores):
                if score == NEG_INF:
                    continue
                t = transitions[i][j]
                if t == NEG_INF:
                    continue
                cand = score + t
                if cand > best:
                    best = cand
                    best_i = i
            if best_i < 0:
                new_scores.append(NEG_INF)
                back.append(-1)
            else:
                new_scores.append(best + emis)
                back.append(best_i)
        if all(s == NEG_INF for s in new_scores):
            return False
        self.scores = new_scores
        self.backptrs.append(back)
        return True

    def best_path(self) -> list[int]:
        best = NEG_INF
        last = -1
        for j, score in enumerate(self.scores):
            if score > best:
                best = score
                last = j
        path = [last]
        for back in reversed(self.backptrs):
            last = back[last]
            path.append(last)
        path.reverse()
        return path


def match_trip(
    trip: Trip, graph: RoadGraph, params: MatchParams
) -> list[MatchedPoint | UnmatchedPoint]:
    """Decode one trip against the graph, in trip point order.

    Points with no candidate within candidate_radius come back unmatched and
    split the decode; so do time gaps over max_time_gap. A stretch whose
    every transition is ruled out restarts decoding at the offending point.
    """

    points = list(trip.points)
    positions = [p.position() for p in points]
    candidates = [graph.nearest_candidates(pos, params.candidate_radius) for pos in positions]
    output: list[MatchedPoint | UnmatchedPoint | None] = [None] * len(points)
    gap_ms = params.max_time_gap * 1000.0

    block: list[int] = []
    for idx, point in enumerate(points):
        if not candidates[idx]:
            _decode_block(block, points, positions, candidates, graph, params, output)
            block = []
            output[idx] = UnmatchedPoint(point)
            continue
        if block and point.timestamp - points[block[-1]].timestamp > gap_ms:
            _decode_block(block, points, positions, candidates, graph, params, output)
            block = []
        block.append(idx)
    _decode_block(block, points, positions, candidates, graph, params, output)
    assert all(el is not None for el in output)
    return output  # type: ignore[return-value]


def _decode_block(
    block: list[int],
    points: list[RawPointRecord],
    positions: list[GeoPoint],
    candidates: list[list[Candidate]],
    graph: RoadGraph,
    params: MatchParams,
    output: list,
) -> None:
    if not block:
        return
    start = 0
    lattice = ViterbiLattice([emission_log_weight(c, params) for c in candidates[block[0]]])
    for k in range(1, len(block)):
        prev_idx, cur_idx = block[k - 1], block[k]
        transitions = [
            [
                transition_log_weight(graph, positions[prev_idx], positions[cur_idx], a, b, params)
                for b in candidates[cur_idx]
            ]
            for a in candidates[prev_idx]
        ]
        emissions = [emission_log_weight(c, params) for c in candidates[cur_idx]]
        if not lattice.step(transitions, emissions):
            _emit_path(block[start:k], lattice, candidates, points, output)
            start = k
            lattice = ViterbiLattice(emissions)
    _emit_path(block[start:], lattice, candidates, points, output)


def _emit_path(indices: list[int], lattice: ViterbiLattice, candidates, points, output) -> None:
    if not indices:
        return
    for idx, choice in zip(indices, lattice.best_path()):
        cand = candidates[idx][choice]
        output[idx] = MatchedPoint(
            source=points[idx],
            way_id=cand.way_id,
            snapped_point=cand.snapped_point,
            distance_along=cand.distance_along,
            perpendicular_distance=cand.perpendicular_distance,
        )


def segment_traversals(
    matched: list[MatchedPoint | UnmatchedPoint], max_time_gap: float = 60.0
) -> list[Traversal]:
    """Cut a matched sequence into maximal same-way runs.

    Runs break on way change, unmatched points, and time gaps over
    max_time_gap; re-entering a way later starts a new traversal. run_index
    counts completed runs in trip order from 0.
    """

    gap_ms = max_time_gap * 1000.0
    traversals: list[Traversal] = []
    run: list[MatchedPoint] = []

    def flush() -> None:
        nonlocal run
        if run:
            traversals.append(
                Traversal(
                    journey_id=run[0].source.journey_id,
                    way_id=run[0].way_id,
                    run_index=len(traversals),
                    points=tuple(run),
                    entry_time=run[0].source.timestamp,
                    exit_time=run[-1].source.timestamp,
                )
            )
            run = []

    for el in matched:
        if isinstance(el, UnmatchedPoint):
            flush()
            continue
        if run and (
            el.way_id != run[-1].way_id
            or el.source.timestamp - run[-1].source.timestamp > gap_ms
        ):
            flush()
        run.append(el)
    flush()
    return traversals
