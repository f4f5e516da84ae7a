"""Antipodally symmetric decompositions of R^{n+1} into simplicial cones.

Rays are rational vectors scaled so that their largest coordinate in absolute
value is 1 (exact); each vertex also carries its binary64 unit vector.
Keeping rays on the unit cube makes the ray sum of an edge a near-bisector
of the angle, so repeated splits towards a vertex halve the distance.  A :class:`Decomposition` is an immutable snapshot;
:func:`refine` returns a new snapshot plus the set of faces whose coface
sets changed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .linalg import det, inverse

Face = tuple  # sorted vertex ids


@dataclass(frozen=True)
class Vertex:
    id: int
    ray: tuple
    unit: tuple
    antipode: int


def _normalize(ray) -> tuple:
    """Rescale a nonzero rational vector to max-abs-coordinate 1."""
    ray = [Fraction(v) for v in ray]
    top = max(abs(v) for v in ray)
    if top == 0:
        raise ValueError("zero ray")
    return tuple(v / top for v in ray)


def _unit(ray) -> tuple:
    arr = np.array([float(v) for v in ray])
    return tuple(float(v) for v in arr / np.linalg.norm(arr))


@dataclass(frozen=True)
class Decomposition:
    n: int
    vertices: dict  # id -> Vertex
    cones: dict  # id -> sorted vertex tuple
    faces: dict  # sorted vertex tuple -> sorted tuple of cone ids
    generation: int = 0
    next_vertex: int = 0
    next_cone: int = 0
    _ray_index: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def nvars(self) -> int:
        return self.n + 1

    def ray(self, vid):
        return self.vertices[vid].ray

    def cofaces(self, face) -> tuple:
        return self.faces[tuple(face)]

    def vertex_for_ray(self, ray):
        return self._ray_index.get(_normalize(ray))

    def antipodal_face(self, face) -> Face:
        return tuple(sorted(self.vertices[v].antipode for v in face))

    def __len__(self):
        return len(self.cones)


def _faces_of(verts):
    for r in range(1, len(verts) + 1):
        yield from itertools.combinations(verts, r)


def _build_faces(cones):
    faces: dict = {}
    for cid, verts in cones.items():
        for f in _faces_of(verts):
            faces.setdefault(f, []).append(cid)
    return {f: tuple(sorted(c)) for f, c in faces.items()}


def initial_decomposition(n: int) -> Decomposition:
    """The 2^{n+1} coordinate orthants over the rays ``+-e_i``.

    Vertex ``2i`` is ``+e_i`` and ``2i + 1`` is ``-e_i``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    n1 = n + 1
    vertices = {}
    for i in range(n1):
        for s, vid in ((1, 2 * i), (-1, 2 * i + 1)):
            ray = tuple(Fraction(s * int(j == i)) for j in range(n1))
            vertices[vid] = Vertex(vid, ray, tuple(float(v) for v in ray), vid ^ 1)
    cones = {}
    for cid, signs in enumerate(itertools.product((0, 1), repeat=n1)):
        cones[cid] = tuple(2 * i + s for i, s in enumerate(signs))
    return Decomposition(
        n=n,
        vertices=vertices,
        cones=cones,
        faces=_build_faces(cones),
        generation=0,
        next_vertex=2 * n1,
        next_cone=len(cones),
        _ray_index={v.ray: v.id for v in vertices.values()},
    )


def faces_iter(dec: Decomposition) -> Iterator[tuple[Face, tuple]]:
    """Every face with its cofaces, ordered by dimension then vertex ids."""
    for f in sorted(dec.faces, key=lambda f: (len(f), f)):
        yield f, dec.faces[f]


def face_matrix(dec: Decomposition, face) -> list[list[int]]:
    """``(n+1) x (k+1)`` integer matrix whose columns are the face's rays."""
    face = tuple(face)
    if face not in dec.faces:
        raise KeyError(f"unknown face {face}")
    cols = [dec.vertices[v].ray for v in face]
    return [[c[i] for c in cols] for i in range(dec.nvars)]


@dataclass(frozen=True)
class RefineResult:
    dec: Decomposition
    new_vertices: tuple
    removed_cones: tuple
    added_cones: tuple
    dirty: frozenset
    removed_faces: frozenset = frozenset()


def refine(dec: Decomposition, edge) -> RefineResult:
    """Split ``edge`` and its antipodal edge at the ray sum of their endpoints.

    Every cone containing either edge is replaced by two cones, one per
    endpoint swapped for the new vertex.
    """
    edge = tuple(sorted(edge))
    if len(edge) != 2 or edge not in dec.faces:
        raise KeyError(f"edge {edge} not found")
    anti = dec.antipodal_face(edge)
    vertices = dict(dec.vertices)
    ray_index = dict(dec._ray_index)
    cones = dict(dec.cones)
    faces = dict(dec.faces)  # shared tuples; only touched entries are rebuilt
    work: dict = {}
    nv, nc = dec.next_vertex, dec.next_cone

    a, b = edge
    ray = _normalize([x + y for x, y in zip(dec.ray(a), dec.ray(b))])
    neg = tuple(-v for v in ray)
    vid, avid = nv, nv + 1
    nv += 2
    vertices[vid] = Vertex(vid, ray, _unit(ray), avid)
    vertices[avid] = Vertex(avid, neg, _unit(neg), vid)
    ray_index[ray] = vid
    ray_index[neg] = avid

    removed, added = [], []
    touched = set()
    for e, mid in ((edge, vid), (anti, avid)):
        for cid in dec.faces[e]:
            verts = cones.pop(cid)
            removed.append(cid)
            for f in _faces_of(verts):
                work.setdefault(f, set(faces[f])).discard(cid)
                touched.add(f)
            for drop in e:
                new = tuple(sorted([v for v in verts if v != drop] + [mid]))
                cones[nc] = new
                added.append(nc)
                for f in _faces_of(new):
                    if f not in work:
                        work[f] = set(faces.get(f, ()))
                    work[f].add(nc)
                    touched.add(f)
                nc += 1
    for f, c in work.items():
        if c:
            faces[f] = tuple(sorted(c))
        else:
            faces.pop(f, None)
    dirty = frozenset(f for f in touched if f in faces)
    new = Decomposition(
        n=dec.n,
        vertices=vertices,
        cones=cones,
        faces=faces,
        generation=dec.generation + 1,
        next_vertex=nv,
        next_cone=nc,
        _ray_index=ray_index,
    )
    gone = frozenset(f for f in touched if f not in faces)
    return RefineResult(new, (vid, avid), tuple(removed), tuple(added), dirty, gone)


def _unit_dist2(dec, a, b):
    ua, ub = dec.vertices[a].unit, dec.vertices[b].unit
    return sum((x - y) ** 2 for x, y in zip(ua, ub))


def choose_refinement_edge(dec: Decomposition, failed_face) -> Face:
    """Longest edge (unit-vector distance) of the face, smallest id pair on ties.

    A vertex has no edge of its own; it uses the longest edge incident to it,
    so that repeated failures shrink its star towards it.
    """
    face = tuple(sorted(failed_face))
    if len(face) >= 2:
        edges = list(itertools.combinations(face, 2))
    else:
        (v,) = face
        nbrs = {w for cid in dec.faces[face] for w in dec.cones[cid] if w != v}
        edges = sorted(tuple(sorted((v, w))) for w in nbrs)
    best, best_d = None, -1.0
    for e in edges:
        d = _unit_dist2(dec, *e)
        if d > best_d * (1 + 1e-12):
            best, best_d = e, d
        elif abs(d - best_d) <= 1e-12 * best_d and e < best:
            best = e
    return best


def cone_diameter(dec: Decomposition, cid) -> float:
    """Largest great-circle distance between vertices of a cone."""
    verts = dec.cones[cid]
    best = 0.0
    for a, b in itertools.combinations(verts, 2):
        c = float(np.clip(np.dot(dec.vertices[a].unit, dec.vertices[b].unit), -1.0, 1.0))
        best = max(best, math.acos(c))
    return best


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    kind: str = ""
    cones: tuple = ()
    message: str = ""

    def __bool__(self):
        return self.ok


def _cone_rows(dec, cid):
    return [list(dec.vertices[v].ray) for v in dec.cones[cid]]


def validate(dec: Decomposition, samples: int = 1000, seed: int = 0) -> ValidationReport:
    """Check the decomposition invariants, reporting the first violation.

    Checks, in order: vertex data and antipode involution, full rank of
    every cone, antipodal closure of the cone set, each facet shared by
    exactly two cones lying on opposite sides of it, and exact coverage of
    ``samples`` random directions (no gaps, no interior overlaps).
    """
    for vid, v in dec.vertices.items():
        if not any(v.ray):
            return ValidationReport(False, "vertex", (), f"vertex {vid} has a zero ray")
        anti = dec.vertices.get(v.antipode)
        if anti is None or anti.antipode != vid or anti.ray != tuple(-x for x in v.ray):
            return ValidationReport(False, "antipode", (), f"vertex {vid} antipode broken")
    n1 = dec.nvars
    dets = {}
    for cid, verts in dec.cones.items():
        if len(verts) != n1:
            return ValidationReport(False, "rank", (cid,), f"cone {cid} has {len(verts)} vertices")
        d = det(_cone_rows(dec, cid))
        if d == 0:
            return ValidationReport(False, "rank", (cid,), f"cone {cid} rays are dependent")
        dets[cid] = d
    cone_sets = {verts: cid for cid, verts in dec.cones.items()}
    for cid, verts in dec.cones.items():
        if dec.antipodal_face(verts) not in cone_sets:
            return ValidationReport(False, "symmetry", (cid,), f"antipode of cone {cid} missing")
    for f, cof in dec.faces.items():
        if len(f) != n1 - 1:
            continue
        if len(cof) != 2:
            return ValidationReport(False, "facet", cof, f"facet {f} has {len(cof)} cofaces")
        sides = []
        for cid in cof:
            apex = next(v for v in dec.cones[cid] if v not in f)
            rows = [list(dec.vertices[v].ray) for v in f] + [list(dec.vertices[apex].ray)]
            sides.append(det(rows) > 0)
        if sides[0] == sides[1]:
            return ValidationReport(False, "overlap", cof, f"cones {cof} lie on the same side of {f}")
    if samples:
        rep = _coverage(dec, samples, seed)
        if not rep.ok:
            return rep
    return ValidationReport(True)


def _coverage(dec, samples, seed):
    rng = np.random.default_rng(seed)
    ids = sorted(dec.cones)
    R = np.array([[list(dec.vertices[v].ray) for v in dec.cones[c]] for c in ids], dtype=float)
    inv = np.linalg.inv(np.transpose(R, (0, 2, 1)))
    exact_inv = {}
    for _ in range(samples):
        u = rng.standard_normal(dec.nvars)
        lam = inv @ u
        scale = np.abs(lam).max(axis=1) + 1.0
        cand = [ids[i] for i in np.nonzero(lam.min(axis=1) > -1e-9 * scale)[0]]
        uq = [Fraction(x) for x in u]
        inside, interior = [], []
        for cid in cand:
            if cid not in exact_inv:
                exact_inv[cid] = inverse([list(r) for r in zip(*_cone_rows(dec, cid))])
            coords = [sum(a * b for a, b in zip(row, uq)) for row in exact_inv[cid]]
            if min(coords) >= 0:
                inside.append(cid)
                if min(coords) > 0:
                    interior.append(cid)
        if not inside:
            return ValidationReport(False, "gap", (), f"direction {u.tolist()} is in no cone")
        if len(interior) > 1:
            return ValidationReport(False, "overlap", tuple(interior), "interiors intersect")
    return ValidationReport(True)


# ---------------------------------------------------------------------------
# text dump


def _fmt(v) -> str:
    return str(Fraction(v))


def dump(dec: Decomposition) -> str:
    lines = [f"v {vid} " + " ".join(_fmt(x) for x in dec.vertices[vid].ray) for vid in sorted(dec.vertices)]
    lines += [f"c {cid} " + " ".join(str(v) for v in dec.cones[cid]) for cid in sorted(dec.cones)]
    return "\n".join(lines) + "\n"


def load(text: str, n: int | None = None) -> Decomposition:
    """Rebuild a decomposition from :func:`dump` output (antipodes by ray lookup)."""
    rays, cones = {}, {}
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            rays[int(parts[1])] = tuple(Fraction(x) for x in parts[2:])
        elif parts[0] == "c":
            cones[int(parts[1])] = tuple(sorted(int(x) for x in parts[2:]))
        else:
            raise ValueError(f"bad decomposition line: {line!r}")
    return from_rays(rays, cones)


def from_rays(rays: dict, cones: dict) -> Decomposition:
    """Assemble a decomposition from explicit rays and cones (no validation)."""
    if not rays:
        raise ValueError("no vertices")
    prim = {vid: _normalize(r) for vid, r in rays.items()}  # canonical scale
    if len(set(prim.values())) != len(prim):
        raise ValueError("duplicate vertex rays")
    index = {r: vid for vid, r in prim.items()}
    vertices = {}
    for vid, r in prim.items():
        anti = index.get(tuple(-x for x in r))
        if anti is None:
            raise ValueError(f"vertex {vid} has no antipode")
        vertices[vid] = Vertex(vid, r, _unit(r), anti)
    n1 = len(next(iter(prim.values())))
    return Decomposition(
        n=n1 - 1,
        vertices=vertices,
        cones=dict(cones),
        faces=_build_faces(cones),
        generation=0,
        next_vertex=max(vertices) + 1,
        next_cone=max(cones, default=-1) + 1,
        _ray_index=index,
    )
