"""Refinement loop: test every face, refine where a test fails, repeat."""
from __future__ import annotations

import enum
import heapq
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .criterion import FaceCertificate, FaceTester, FailedFace, TestParams, TildeP
from .minnorm import DEFAULT_TOL
from .poly import PolySystem
from .simplex import Decomposition, choose_refinement_edge, initial_decomposition, refine

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveParams:
    max_splits: int = 32
    max_refinements: int = 10_000
    tol: float = DEFAULT_TOL
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in ("max_splits", "max_refinements", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


class Status(enum.Enum):
    CERTIFIED = "certified"
    BUDGET_EXHAUSTED = "budget-exhausted"


@dataclass
class SolveStats:
    faces_tested: int = 0
    refinements: int = 0
    nodes: int = 0
    wall_time: float = 0.0
    max_depth: int = 0

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class SolveOutcome:
    status: Status
    ps: PolySystem
    decomposition: Decomposition
    tilde: TildeP
    certificates: dict
    stats: SolveStats = field(default_factory=SolveStats)
    failed: FailedFace | None = None

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED

    @property
    def simplices(self) -> int:
        return len(self.decomposition.cones)


def _order(face):
    return (-len(face), face), face


def main_loop(dec: Decomposition, ps: PolySystem, params: SolveParams, tilde: TildeP | None = None) -> SolveOutcome:
    """Certify every face, refining the decomposition on each failure.

    Faces are visited by decreasing dimension, then vertex ids.  The first
    failing face in that order triggers a refinement of its longest edge;
    only faces whose coface sets changed are re-queued.  With
    ``threads > 1`` pending faces are tested ahead of time on the current
    snapshot; results are consumed in the same order as the sequential
    schedule, so the outcome is identical.
    """
    start = time.perf_counter()
    tilde = tilde or TildeP.interpolate(dec, ps)
    tester = FaceTester(ps, TestParams(params.max_splits, params.tol))
    stats = SolveStats()
    certs: dict = {}
    heap = [_order(f) for f in dec.faces]
    heapq.heapify(heap)
    queued = set(dec.faces)
    pool = ThreadPoolExecutor(params.threads) if params.threads > 1 else None
    futures: dict = {}
    if pool is not None:
        for f in dec.faces:
            futures[f] = pool.submit(tester.test_face, dec, tilde, f)
    failed = None
    try:
        while heap:
            face = heapq.heappop(heap)[1]
            queued.discard(face)
            if face not in dec.faces:
                continue
            fut = futures.pop(face, None)
            res = fut.result() if fut is not None else tester.test_face(dec, tilde, face)
            stats.faces_tested += 1
            if isinstance(res, FaceCertificate):
                certs[face] = res
                continue
            if stats.refinements >= params.max_refinements:
                failed = res
                break
            edge = choose_refinement_edge(dec, face)
            rr = refine(dec, edge)
            dec = rr.dec
            tilde = tilde.extended(dec, ps, rr.new_vertices)
            stats.refinements += 1
            log.debug("face %s failed at depth %d; refined edge %s -> %d cones", face, res.depth, edge, len(dec.cones))
            # faces whose coface sets are unchanged keep their results
            for f in rr.dirty | rr.removed_faces:
                certs.pop(f, None)
                stale = futures.pop(f, None)
                if stale is not None:
                    stale.cancel()
            requeue = set(rr.dirty)
            if face in dec.faces:
                requeue.add(face)
            for f in requeue:
                if f not in queued:
                    queued.add(f)
                    heapq.heappush(heap, _order(f))
                if pool is not None:
                    futures[f] = pool.submit(tester.test_face, dec, tilde, f)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    stats.nodes = tester.nodes
    stats.wall_time = time.perf_counter() - start
    stats.max_depth = max((c.depth for c in certs.values()), default=0)
    status = Status.CERTIFIED if failed is None and len(certs) == len(dec.faces) else Status.BUDGET_EXHAUSTED
    return SolveOutcome(status, ps, dec, tilde, certs, stats, failed)


def solve(ps: PolySystem, params: SolveParams | None = None) -> SolveOutcome:
    """Start from the orthant decomposition and run :func:`main_loop`."""
    params = params or SolveParams()
    dec = initial_decomposition(ps.nvars - 1)
    tilde = TildeP.interpolate(dec, ps)
    return main_loop(dec, ps, params, tilde)
