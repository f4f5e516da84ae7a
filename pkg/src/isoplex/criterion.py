"""Per-face test: sign exclusion or strongly-full-rank gradients, with bisection.

A face ``F`` with ray matrix ``M`` is examined through charts ``C = M W``
where ``W`` holds barycentric weights of the sub-simplex corners with
respect to the face rays (the identity at the root).  At each chart:

1. if some ``p_i`` has Bernstein coefficients all of one strict sign and
   the interpolant ``p~_i`` has that same strict sign at every corner, the
   chart misses ``K(p)``: leaf ``sign``;
2. otherwise the generator set is pooled: Bernstein coefficients of
   ``grad p_i(C y)`` (row ``i``) and row ``i`` of the interpolant gradient
   on every cone containing ``F``.  If for every sign vector the signed
   rows can be separated from 0, the chart passes: leaf ``sep`` with one
   witness per sign orbit;
3. otherwise the chart is bisected at the midpoint of its longest edge
   and both halves are tested, up to ``max_splits`` levels.

Only binary64 is used here; :mod:`isoplex.verify` replays the tree in exact
arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linalg import inverse, matmul
from .minnorm import DEFAULT_TOL, separate, sign_vectors
from .poly import DenseTensor, PolySystem, _blossom_selectors
from .simplex import Decomposition, face_matrix

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# interpolant


class TildeP:
    """Exact values of every ``p_i`` at every vertex ray (the PL interpolant)."""

    __slots__ = ("values", "float_values", "m")

    def __init__(self, values: dict, m: int):
        self.values = values
        self.float_values = {v: np.array([float(x) for x in vals]) for v, vals in values.items()}
        self.m = m

    @classmethod
    def interpolate(cls, dec: Decomposition, ps: PolySystem) -> "TildeP":
        return cls({vid: _vertex_values(ps, v.ray) for vid, v in dec.vertices.items()}, ps.m)

    def extended(self, dec: Decomposition, ps: PolySystem, new_vertices) -> "TildeP":
        values = dict(self.values)
        for vid in new_vertices:
            values[vid] = _vertex_values(ps, dec.vertices[vid].ray)
        out = TildeP.__new__(TildeP)
        out.values = values
        out.float_values = dict(self.float_values)
        for vid in new_vertices:
            out.float_values[vid] = np.array([float(x) for x in values[vid]])
        out.m = self.m
        return out

    def restricted(self, vids) -> "TildeP":
        return TildeP({v: self.values[v] for v in vids}, self.m)

    def __eq__(self, other):
        return isinstance(other, TildeP) and self.values == other.values


def _vertex_values(ps, ray):
    return tuple(p.eval_exact(ray) for p in ps)


def grad_of_tilde(dec: Decomposition, tilde: TildeP, cone) -> list[list[Fraction]]:
    """The ``m x (n+1)`` matrix ``G`` with ``G r = p~(r)`` for every ray of the cone."""
    verts = dec.cones[cone] if not isinstance(cone, tuple) else cone
    R = [[dec.vertices[v].ray[i] for v in verts] for i in range(dec.nvars)]
    V = [[tilde.values[v][i] for v in verts] for i in range(tilde.m)]
    return matmul(V, inverse(R))


# ---------------------------------------------------------------------------
# certificate trees


@dataclass(frozen=True)
class SignLeaf:
    index: int
    sign: int


@dataclass(frozen=True)
class SepLeaf:
    # sigma (orbit representative, sigma_0 = +1) -> witness as floats
    witnesses: tuple

    def witness_map(self) -> dict:
        return dict(self.witnesses)


@dataclass(frozen=True)
class SplitNode:
    edge: tuple  # local column indices (a, b), a < b
    left: object
    right: object


def tree_depth(node) -> int:
    if isinstance(node, SplitNode):
        return 1 + max(tree_depth(node.left), tree_depth(node.right))
    return 0


def tree_leaves(node):
    if isinstance(node, SplitNode):
        yield from tree_leaves(node.left)
        yield from tree_leaves(node.right)
    else:
        yield node


@dataclass(frozen=True)
class FaceCertificate:
    face: tuple
    root: object

    @property
    def depth(self) -> int:
        return tree_depth(self.root)


@dataclass(frozen=True)
class FailedFace:
    face: tuple
    depth: int
    path: tuple  # split choices ('L'/'R') leading to the failing chart

    def __bool__(self):
        return False


def split_chart(W, edge):
    """Children of a chart: left keeps corner ``a`` and moves ``b`` to the midpoint."""
    a, b = edge
    mid = [(W[i][a] + W[i][b]) / 2 for i in range(len(W))]
    left = [row[:b] + [mid[i]] + row[b + 1:] for i, row in enumerate(W)]
    right = [row[:a] + [mid[i]] + row[a + 1:] for i, row in enumerate(W)]
    return left, right


# ---------------------------------------------------------------------------
# float search


@dataclass
class TestParams:
    max_splits: int = 32
    tol: float = DEFAULT_TOL


class FaceTester:
    """Holds per-system float data so that repeated face tests stay cheap."""

    def __init__(self, ps: PolySystem, params: TestParams | None = None):
        self.ps = ps
        self.params = params or TestParams()
        self.tensors = [DenseTensor(p) for p in ps]
        self.abs_tensors = [np.abs(t.tensor) for t in self.tensors]
        self._cone_grads: dict = {}
        self.nodes = 0

    # interpolant gradients are constants per cone
    def cone_gradient(self, dec, tilde, verts) -> np.ndarray:
        key = (verts, tuple(tilde.values[v] for v in verts))
        g = self._cone_grads.get(key)
        if g is None:
            exact = grad_of_tilde(dec, tilde, verts)
            g = np.array([[float(x) for x in row] for row in exact])
            self._cone_grads[key] = g
        return g

    def test_face(self, dec: Decomposition, tilde: TildeP, face) -> FaceCertificate | FailedFace:
        face = tuple(face)
        M = np.array(face_matrix(dec, face), dtype=float)
        Vf = np.array([tilde.float_values[v] for v in face]).T  # m x k1
        cones = dec.faces[face]
        tgrads = np.stack([self.cone_gradient(dec, tilde, dec.cones[c]) for c in cones])  # L x m x n1
        k1 = len(face)
        W = np.eye(k1)
        result = self._recurse(M, Vf, tgrads, W, 0, ())
        if isinstance(result, FailedFace):
            return FailedFace(face, result.depth, result.path)
        return FaceCertificate(face, result)

    def _recurse(self, M, Vf, tgrads, W, depth, path):
        self.nodes += 1
        C = M @ W
        leaf = self._sign_leaf(C, Vf @ W, np.abs(Vf) @ np.abs(W))
        if leaf is None:
            leaf = self._sep_leaf(C, tgrads)
        if leaf is not None:
            return leaf
        k1 = W.shape[1]
        if k1 == 1 or depth >= self.params.max_splits:
            return FailedFace((), depth, path)
        edge = _longest_edge(C)
        Wl, Wr = _split_float(W, edge)
        left = self._recurse(M, Vf, tgrads, Wl, depth + 1, path + ("L",))
        if isinstance(left, FailedFace):
            return left
        right = self._recurse(M, Vf, tgrads, Wr, depth + 1, path + ("R",))
        if isinstance(right, FailedFace):
            return right
        return SplitNode(edge, left, right)

    def _sign_leaf(self, C, tvals, tbound):
        absC = np.abs(C)
        for i, (T, absT) in enumerate(zip(self.tensors, self.abs_tensors)):
            tv = tvals[i]
            tslack = 4 * C.shape[1] * _EPS * tbound[i]
            if np.all(tv > tslack):
                s = 1
            elif np.all(tv < -tslack):
                s = -1
            else:
                continue
            q = T.bernstein(C)
            slack = _slack(T.degree, self.tensors[0].nvars) * _abs_bernstein(absT, absC, T.degree)
            if np.all(s * q > slack):
                return SignLeaf(i, s)
        return None

    def _sep_leaf(self, C, tgrads):
        absC = np.abs(C)
        rows, slacks = [], []
        for i, (T, absT) in enumerate(zip(self.tensors, self.abs_tensors)):
            G = T.gradient_bernstein(C)
            if T.degree > 1:
                err = _slack(T.degree, T.nvars) * T.degree * _abs_grad(absT, absC, T.degree)
            else:
                err = np.zeros_like(G)
            rows.append(np.concatenate([G, tgrads[:, i, :]]))
            slacks.append(np.concatenate([np.linalg.norm(err, axis=1), np.zeros(tgrads.shape[0])]))
        norms = [np.linalg.norm(r, axis=1) for r in rows]
        if any(np.any(n <= s) for n, s in zip(norms, slacks)):
            return None
        unit = [r / n[:, None] for r, n in zip(rows, norms)]
        rel = [s / n for s, n in zip(slacks, norms)]
        witnesses = []
        for sigma in sign_vectors(len(rows), orbits_only=True):
            gens = np.concatenate([s * u for s, u in zip(sigma, unit)])
            res = separate(gens, self.params.tol)
            if not res.separated:
                return None
            N = res.witness
            nN = np.linalg.norm(N)
            margin = gens @ N - np.concatenate(rel) * nN - 64 * _EPS * nN
            if np.any(margin <= 0):
                return None
            witnesses.append((sigma, tuple(float(x) for x in N)))
        return SepLeaf(tuple(witnesses))


def _slack(degree, nvars):
    return 8.0 * (degree + 1) * nvars * _EPS


def _abs_bernstein(absT, absC, d):
    B = absT
    for _ in range(d):
        B = np.tensordot(B, absC, axes=([0], [0]))
    return _select(B, absC.shape[1], d)


def _abs_grad(absT, absC, d):
    B = absT
    for _ in range(d - 1):
        B = np.tensordot(B, absC, axes=([1], [0]))
    return B.reshape(absT.shape[0], -1)[:, _blossom_selectors(absC.shape[1], d - 1)].T


def _select(B, k1, d):
    if d == 0:
        return np.array([float(B)])
    return B.reshape(-1)[_blossom_selectors(k1, d)]


def _longest_edge(C):
    """Longest chart edge measured between unit-normalised corners; ties -> lowest pair."""
    U = C / np.linalg.norm(C, axis=0)
    k1 = C.shape[1]
    best, best_d = (0, 1), -1.0
    for a in range(k1):
        for b in range(a + 1, k1):
            d = float(np.sum((U[:, a] - U[:, b]) ** 2))
            if d > best_d * (1 + 1e-12):
                best, best_d = (a, b), d
    return best


def _split_float(W, edge):
    a, b = edge
    mid = (W[:, a] + W[:, b]) / 2
    Wl = W.copy()
    Wl[:, b] = mid
    Wr = W.copy()
    Wr[:, a] = mid
    return Wl, Wr


def test_face(dec, ps, tilde, face, params: TestParams | None = None):
    """One-off face test (builds a throwaway :class:`FaceTester`)."""
    return FaceTester(ps, params).test_face(dec, tilde, face)
