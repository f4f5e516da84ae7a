"""Zero set of the interpolant as a cell complex, its components and Z/2 homology.

On a cone with rays ``R`` and vertex values ``V`` (one row per ``p_i``) the
interpolant is ``p~(R lam) = V lam``, so on the spherical simplex its zero
set is the polytope ``{lam >= 0, sum lam = 1, V lam = 0}``.  Its vertices
have support on at most ``m + 1`` rays and are found by solving small
rational systems, one per candidate support.  A vertex with support ``S``
belongs to every face containing ``S``; the cell of a face is the hull of
the vertices it contains.  All coordinates are exact, so cells from
neighbouring cones are glued by plain equality.

Homology is computed on the order complex of the cell poset (the
barycentric subdivision) with GF(2) coefficients; rows of the boundary
matrices are Python ints used as bitsets.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .linalg import matrix_rank
from .linalg import solve as solve_linear
from .simplex import Decomposition, _normalize


@dataclass(frozen=True)
class Cell:
    dim: int
    verts: frozenset  # point ids
    face: tuple  # smallest decomposition face containing the cell


@dataclass
class PLCellComplex:
    nvars: int
    points: list  # point id -> exact direction (max-abs 1)
    cells: list  # Cell, sorted by (dim, sorted verts)
    top: int  # expected top dimension n - m
    antipode: list | None = None  # cell id -> cell id of its antipodal image
    projective: bool = False
    # cell id -> ids of cells of dimension dim-1 contained in it
    facets: dict = field(default_factory=dict)
    barycentric: dict = field(default_factory=dict)  # point id -> (cone id, lambda)

    def count(self, k: int) -> int:
        n = sum(1 for c in self.cells if c.dim == k)
        return n // 2 if self.projective else n

    @property
    def dimension(self) -> int:
        return max((c.dim for c in self.cells), default=-1)

    def euler_cells(self) -> int:
        return sum((-1) ** k * self.count(k) for k in range(self.dimension + 1))


@dataclass(frozen=True)
class TopoReport:
    components: int
    betti: tuple
    euler: int
    projective: bool
    component_betti: tuple = ()

    def as_dict(self):
        return {
            "components": self.components,
            "betti": list(self.betti),
            "euler": self.euler,
            "projective": self.projective,
            "component_betti": [list(b) for b in self.component_betti],
        }


# ---------------------------------------------------------------------------
# extraction


def _support_point(dec, tilde, support, m):
    """The zero of the interpolant with barycentric support exactly ``support``, or None."""
    k = len(support)
    A = [[tilde.values[v][i] for v in support] for i in range(m)]
    A.append([Fraction(1)] * k)
    b = [Fraction(0)] * m + [Fraction(1)]
    lam = solve_linear(A, b) if k <= m + 1 else None
    if lam is None or any(x <= 0 for x in lam):
        return None
    x = [sum(l * dec.vertices[v].ray[i] for l, v in zip(lam, support)) for i in range(dec.nvars)]
    return tuple(lam), _normalize(x)


def extract(dec: Decomposition, tilde) -> PLCellComplex:
    """Cells of ``{p~ = 0}`` on the sphere, one per distinct face intersection."""
    m = tilde.m
    n1 = dec.nvars
    faces = sorted(dec.faces, key=lambda f: (len(f), f))
    # points, keyed by minimal support
    point_of_support: dict = {}
    key_to_id: dict = {}
    points, bary = [], {}
    for f in faces:
        if len(f) > m + 1:
            continue
        vals = [tilde.values[v] for v in f]
        if any(all(v[i] > 0 for v in vals) or all(v[i] < 0 for v in vals) for i in range(m)):
            continue
        res = _support_point(dec, tilde, f, m)
        if res is None:
            continue
        lam, key = res
        pid = key_to_id.get(key)
        if pid is None:
            pid = key_to_id[key] = len(points)
            points.append(key)
            bary[pid] = (dec.faces[f][0], dict(zip(f, lam)))
        point_of_support[f] = pid
    by_vertex: dict = {}
    for s, pid in point_of_support.items():
        by_vertex.setdefault(s[0], []).append((s, pid))

    seen: dict = {}
    for f in faces:
        fs = set(f)
        verts = set()
        for v in f:
            for s, pid in by_vertex.get(v, ()):
                if fs.issuperset(s):
                    verts.add(pid)
        if not verts:
            continue
        key = frozenset(verts)
        if key in seen:
            continue
        dim = matrix_rank([list(points[p]) for p in verts]) - 1
        seen[key] = Cell(dim, key, f)
    cells = sorted(seen.values(), key=lambda c: (c.dim, sorted(c.verts)))
    cc = PLCellComplex(n1, points, cells, top=(n1 - 1) - m, barycentric=bary)
    _link(cc)
    cc.antipode = _antipode_map(cc)
    return cc


def _link(cc: PLCellComplex):
    containing: dict = {}
    for cid, c in enumerate(cc.cells):
        for p in c.verts:
            containing.setdefault(p, []).append(cid)
    cc.facets = {}
    for cid, c in enumerate(cc.cells):
        cand = {j for p in c.verts for j in containing[p] if cc.cells[j].dim == c.dim - 1}
        cc.facets[cid] = sorted(j for j in cand if cc.cells[j].verts < c.verts)


def _antipode_map(cc: PLCellComplex):
    key_to_id = {p: i for i, p in enumerate(cc.points)}
    neg = []
    for p in cc.points:
        j = key_to_id.get(tuple(-x for x in p))
        if j is None:
            return None
        neg.append(j)
    cell_index = {c.verts: i for i, c in enumerate(cc.cells)}
    out = []
    for c in cc.cells:
        j = cell_index.get(frozenset(neg[p] for p in c.verts))
        if j is None:
            return None
        out.append(j)
    return out


def projective_quotient(cc: PLCellComplex) -> PLCellComplex:
    """Identify every cell with its antipodal image (x ~ -x)."""
    if cc.projective:
        return cc
    if cc.antipode is None or any(cc.antipode[i] == i for i in range(len(cc.cells))):
        raise ValueError("complex is not antipodally symmetric")
    return PLCellComplex(
        cc.nvars, cc.points, cc.cells, cc.top, cc.antipode, True, cc.facets, cc.barycentric
    )


def check_vanishing(cc: PLCellComplex, dec: Decomposition, tilde) -> bool:
    """Every cell vertex is an exact zero of the interpolant on its cone."""
    for pid, (cone, lam) in cc.barycentric.items():
        verts = dec.cones[cone]
        if any(v not in verts for v in lam):
            return False
        for i in range(tilde.m):
            if sum(l * tilde.values[v][i] for v, l in lam.items()) != 0:
                return False
        x = [sum(l * dec.vertices[v].ray[k] for v, l in lam.items()) for k in range(dec.nvars)]
        if _normalize(x) != cc.points[pid]:
            return False
    return True


# ---------------------------------------------------------------------------
# components


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _component_labels(cc: PLCellComplex) -> list[int]:
    uf = _UnionFind(len(cc.cells))
    for cid, fs in cc.facets.items():
        for j in fs:
            uf.union(cid, j)
    if cc.projective:
        for i, j in enumerate(cc.antipode):
            uf.union(i, j)
    roots = {}
    return [roots.setdefault(uf.find(i), len(roots)) for i in range(len(cc.cells))]


def components(cc: PLCellComplex) -> int:
    """Number of connected components (of the quotient when ``cc`` is projective)."""
    labels = _component_labels(cc)
    return len(set(labels))


# ---------------------------------------------------------------------------
# homology


def _flags(cc: PLCellComplex, cells=None):
    """Chains c_0 < ... < c_k of the cell poset, grouped by k."""
    allowed = None if cells is None else set(cells)
    order = sorted(range(len(cc.cells)), key=lambda i: cc.cells[i].dim)
    # the poset is graded, so "below" is the closure of the facet relation
    below: dict = {}
    for i in order:
        acc = set(cc.facets[i])
        for j in cc.facets[i]:
            acc |= below[j]
        below[i] = acc
    out: dict = {}
    ends: dict = {}
    for i in order:
        if allowed is not None and i not in allowed:
            continue
        chains = [(i,)]
        for j in sorted(below[i]):
            for ch in ends.get(j, ()):
                chains.append(ch + (i,))
        ends[i] = chains
        for ch in chains:
            out.setdefault(len(ch) - 1, []).append(ch)
    return out


def _gf2_rank(rows: list[int]) -> int:
    pivots: dict = {}
    rank = 0
    for r in rows:
        while r:
            top = r.bit_length() - 1
            p = pivots.get(top)
            if p is None:
                pivots[top] = r
                rank += 1
                break
            r ^= p
    return rank


def _betti_from_flags(flags: dict, canon) -> list[int]:
    """Betti numbers of the chain complex spanned by ``canon``-classes of flags."""
    if not flags:
        return []
    top = max(flags)
    basis = {}
    for k in range(top + 1):
        reps = sorted({canon(ch) for ch in flags.get(k, ())})
        basis[k] = {ch: i for i, ch in enumerate(reps)}
    ranks = {0: 0}
    for k in range(1, top + 1):
        rows = []
        idx = basis[k - 1]
        for ch in basis[k]:
            r = 0
            for drop in range(len(ch)):
                r ^= 1 << idx[canon(ch[:drop] + ch[drop + 1:])]
            rows.append(r)
        ranks[k] = _gf2_rank(rows)
    ranks[top + 1] = 0
    return [len(basis[k]) - ranks[k] - ranks[k + 1] for k in range(top + 1)]


def _canon(cc: PLCellComplex):
    if not cc.projective:
        return lambda ch: ch
    anti = cc.antipode

    def canon(ch):
        other = tuple(anti[i] for i in ch)
        return min(ch, other)

    return canon


def betti_z2(cc: PLCellComplex, cells=None) -> list[int]:
    """Z/2 Betti numbers ``b_0..b_top`` of the barycentric subdivision."""
    flags = _flags(cc, cells)
    b = _betti_from_flags(flags, _canon(cc))
    top = max(cc.top, cc.dimension, 0)
    return (b + [0] * (top + 1))[: top + 1] if b else [0] * (top + 1)


def analyse(cc: PLCellComplex) -> TopoReport:
    """Components, Betti numbers (total and per component) and the Euler check."""
    labels = _component_labels(cc)
    ncomp = len(set(labels))
    betti = betti_z2(cc)
    per = []
    for comp in range(ncomp):
        cells = [i for i, lab in enumerate(labels) if lab == comp]
        per.append(tuple(betti_z2(cc, cells)))
    euler = sum((-1) ** k * b for k, b in enumerate(betti))
    if euler != cc.euler_cells():
        raise AssertionError(f"Euler characteristic mismatch: {euler} from Betti, {cc.euler_cells()} from cells")
    return TopoReport(ncomp, tuple(betti), euler, cc.projective, tuple(per))


# ---------------------------------------------------------------------------
# export


def _unit(p):
    a = np.array([float(x) for x in p])
    return a / np.linalg.norm(a)


def _polygon_order(cc, cid):
    """Cyclic vertex order of a 2-cell from its edges."""
    edges = [sorted(cc.cells[e].verts) for e in cc.facets[cid]]
    adj: dict = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    start = min(adj)
    order, prev, cur = [start], None, start
    while True:
        nxt = [v for v in sorted(adj[cur]) if v != prev]
        if not nxt or nxt[0] == start:
            break
        prev, cur = cur, nxt[0]
        order.append(cur)
        if len(order) > len(adj):
            break
    return order


def export_off(cc: PLCellComplex, path) -> list[str]:
    """Write the spherical complex as OFF; returns the paths written.

    Surfaces: one polygon per 2-cell.  Curves: each 1-cell becomes a
    two-vertex face ``2 a b`` and the same segments are listed in a sidecar
    ``<path>.edges`` file as ``e a b`` lines.  Coordinates are unit floats;
    four-variable systems get a ``4OFF`` header.
    """
    path = os.fspath(path)
    if cc.cells and cc.top not in (1, 2):
        raise ValueError(f"OFF export supports curves and surfaces, not dimension {cc.top}")
    used = sorted({p for c in cc.cells for p in c.verts})
    remap = {p: i for i, p in enumerate(used)}
    faces = []
    if cc.top == 2:
        for cid, c in enumerate(cc.cells):
            if c.dim == 2:
                faces.append([remap[p] for p in _polygon_order(cc, cid)])
    else:
        for c in cc.cells:
            if c.dim == 1:
                faces.append([remap[p] for p in sorted(c.verts)])
    # Geomview header: plain OFF for 3-space, 4OFF or nOFF above
    header = {3: ["OFF"], 4: ["4OFF"]}.get(cc.nvars, ["nOFF", str(cc.nvars)])
    lines = header + [f"{len(used)} {len(faces)} 0"]
    for p in used:
        lines.append(" ".join(f"{x:.17g}" for x in _unit(cc.points[p])))
    for f in faces:
        lines.append(f"{len(f)} " + " ".join(map(str, f)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    written = [path]
    if cc.top == 1 or not cc.cells:
        with open(path + ".edges", "w", encoding="utf-8") as fh:
            for f in faces:
                fh.write(f"e {f[0]} {f[1]}\n")
        written.append(path + ".edges")
    return written


def read_off(path):
    """Parse an OFF file back into (vertices array, list of faces)."""
    with open(path, encoding="utf-8") as fh:
        toks = [ln.split() for ln in fh if ln.strip() and not ln.startswith("#")]
    head = toks[0][0] if toks else ""
    if head == "OFF":
        dim, at = 3, 1
    elif head == "4OFF":
        dim, at = 4, 1
    elif head == "nOFF":
        dim, at = int(toks[1][0]), 2
    else:
        raise ValueError("not an OFF file")
    nv, nf = int(toks[at][0]), int(toks[at][1])
    body = toks[at + 1 :]
    verts = np.array([[float(x) for x in t] for t in body[:nv]]).reshape(nv, dim)
    faces = [[int(x) for x in t[1 : 1 + int(t[0])]] for t in body[nv : nv + nf]]
    return verts, faces
