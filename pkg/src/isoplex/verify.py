"""Certificate files and their exact replay.

A certificate stores the decomposition, the interpolant values and one
tree per face.  :func:`check_certificate` re-derives every chart from the
face rays and the split path, recomputes the cited Bernstein coefficients
and interpolant data in exact arithmetic, and checks each leaf's claim.
No float code is involved.

All checks are sign checks, so every object may be multiplied by a
positive constant first: chart columns and the polynomials are scaled to
integers, and dyadic witnesses are scaled to integer vectors.  The
Bernstein coefficient of ``(d!/a!) y^a`` differs from the monomial
coefficient of ``y^a`` by the positive factor ``a!/d!``, so monomial
coefficients of ``p(C y)`` carry the signs directly.

File layout (UTF-8 text)::

    [header]
    nvars 3
    m 1
    degrees 2
    poly x0^2 + x1^2 - x2^2
    [vertices]
    v <id> <ray coordinates as num/den>
    [cones]
    c <id> <vertex ids>
    [tilde]
    t <vertex id> <p_1(ray)> ... <p_m(ray)>
    [face <vertex ids>]
    <tree>

Trees are S-expressions: ``(split a-b L R)`` with local column indices of
the face, ``(sign i +)``, and ``(sep (<sigma> (<N>)) ...)`` with ``sigma``
written as a string of ``+``/``-`` (first entry ``+``).
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .criterion import FaceCertificate, SepLeaf, SignLeaf, SplitNode, split_chart
from .linalg import inverse, matmul
from .poly import HomogeneousPoly, PolySystem, _dict_mul, _linear_forms, multi_indices, parse_polys
from .simplex import Decomposition, _normalize, dump, from_rays, validate

MAX_TREE_DEPTH = 256


class CertificateFormatError(ValueError):
    """The file is not a well-formed certificate (distinct from a mathematical Reject)."""


@dataclass(frozen=True)
class Accept:
    faces: int = 0
    leaves: int = 0

    def __bool__(self):
        return True


@dataclass(frozen=True)
class Reject:
    face: tuple | None
    path: str
    reason: str

    def __bool__(self):
        return False

    def __str__(self):
        where = "structure" if self.face is None else f"face {list(self.face)} path '{self.path}'"
        return f"REJECT at {where}: {self.reason}"


@dataclass
class CertificateFile:
    nvars: int
    m: int
    degrees: tuple
    polys: str  # polynomial text (may be empty)
    rays: dict  # vid -> tuple of Fractions
    cones: dict  # cid -> sorted vertex tuple
    tilde: dict  # vid -> tuple of Fractions
    trees: dict  # face -> tree


# ---------------------------------------------------------------------------
# writing


def _q(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _sigma_text(sigma) -> str:
    return "".join("+" if s > 0 else "-" for s in sigma)


def tree_to_sexpr(node) -> str:
    if isinstance(node, SplitNode):
        a, b = node.edge
        return f"(split {a}-{b} {tree_to_sexpr(node.left)} {tree_to_sexpr(node.right)})"
    if isinstance(node, SignLeaf):
        return f"(sign {node.index} {'+' if node.sign > 0 else '-'})"
    if isinstance(node, SepLeaf):
        # floats convert exactly to dyadic rationals
        parts = [f"({_sigma_text(s)} ({' '.join(_q(Fraction(x)) for x in w)}))" for s, w in node.witnesses]
        return "(sep " + " ".join(parts) + ")"
    raise TypeError(f"not a certificate node: {node!r}")


def write_certificate(ps: PolySystem, dec: Decomposition, tilde, certificates: dict) -> str:
    """Serialize a certified run; faces appear in dimension-then-id order."""
    out = ["[header]", f"nvars {ps.nvars}", f"m {ps.m}", "degrees " + " ".join(map(str, ps.degrees))]
    out += [f"poly {p.to_text()}" for p in ps]
    out.append("[vertices]")
    out += [ln for ln in dump(dec).splitlines() if ln.startswith("v ")]
    out.append("[cones]")
    out += [ln for ln in dump(dec).splitlines() if ln.startswith("c ")]
    out.append("[tilde]")
    for vid in sorted(dec.vertices):
        out.append(f"t {vid} " + " ".join(_q(x) for x in tilde.values[vid]))
    for face in sorted(certificates, key=lambda f: (len(f), f)):
        cert = certificates[face]
        root = cert.root if isinstance(cert, FaceCertificate) else cert
        out.append("[face " + " ".join(map(str, face)) + "]")
        out.append(tree_to_sexpr(root))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _parse_rational(tok: str, where: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise CertificateFormatError(f"{where}: bad rational {tok!r}") from None


def _parse_int(tok: str, where: str) -> int:
    if not re.fullmatch(r"-?\d+", tok):
        raise CertificateFormatError(f"{where}: bad integer {tok!r}")
    return int(tok)


def _read_sexpr(tokens, pos, depth, where):
    if depth > MAX_TREE_DEPTH + 4:
        raise CertificateFormatError(f"{where}: tree too deep")
    if pos >= len(tokens):
        raise CertificateFormatError(f"{where}: unexpected end of tree")
    tok = tokens[pos]
    if tok == ")":
        raise CertificateFormatError(f"{where}: unexpected ')'")
    if tok != "(":
        return tok, pos + 1
    items = []
    pos += 1
    while True:
        if pos >= len(tokens):
            raise CertificateFormatError(f"{where}: unbalanced parentheses")
        if tokens[pos] == ")":
            return items, pos + 1
        item, pos = _read_sexpr(tokens, pos, depth + 1, where)
        items.append(item)


def _build_tree(expr, where, depth=0):
    if depth > MAX_TREE_DEPTH:
        raise CertificateFormatError(f"{where}: tree deeper than {MAX_TREE_DEPTH}")
    if not isinstance(expr, list) or not expr or not isinstance(expr[0], str):
        raise CertificateFormatError(f"{where}: expected a tagged list")
    tag = expr[0]
    if tag == "split":
        if len(expr) != 4 or not isinstance(expr[1], str) or not re.fullmatch(r"\d+-\d+", expr[1]):
            raise CertificateFormatError(f"{where}: bad split node")
        a, b = (int(x) for x in expr[1].split("-"))
        return SplitNode((a, b), _build_tree(expr[2], where, depth + 1), _build_tree(expr[3], where, depth + 1))
    if tag == "sign":
        if len(expr) != 3 or expr[2] not in ("+", "-") or not isinstance(expr[1], str):
            raise CertificateFormatError(f"{where}: bad sign leaf")
        return SignLeaf(_parse_int(expr[1], where), 1 if expr[2] == "+" else -1)
    if tag == "sep":
        wits = []
        for item in expr[1:]:
            if (
                not isinstance(item, list)
                or len(item) != 2
                or not isinstance(item[0], str)
                or not re.fullmatch(r"[+-]+", item[0])
                or not isinstance(item[1], list)
                or not all(isinstance(x, str) for x in item[1])
            ):
                raise CertificateFormatError(f"{where}: bad sep entry")
            sigma = tuple(1 if c == "+" else -1 for c in item[0])
            wits.append((sigma, tuple(_parse_rational(x, where) for x in item[1])))
        return SepLeaf(tuple(wits))
    raise CertificateFormatError(f"{where}: unknown node {tag!r}")


def parse_tree(text: str, where: str = "tree"):
    tokens = _TOKEN.findall(text)
    expr, pos = _read_sexpr(tokens, 0, 0, where)
    if pos != len(tokens):
        raise CertificateFormatError(f"{where}: trailing tokens after tree")
    return _build_tree(expr, where)


def parse_certificate(text: str) -> CertificateFile:
    sections: list[tuple[str, int, list]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            sections.append((line[1:-1].strip(), lineno, []))
        elif not sections:
            raise CertificateFormatError(f"line {lineno}: content before the first section")
        else:
            sections[-1][2].append((lineno, line))
    names = [s[0] for s in sections]
    for required in ("header", "vertices", "cones", "tilde"):
        if names.count(required) != 1:
            raise CertificateFormatError(f"need exactly one [{required}] section")

    header = {}
    polys = []
    rays, cones, tilde, trees = {}, {}, {}, {}
    for name, start, lines in sections:
        if name == "header":
            for lineno, line in lines:
                key, _, rest = line.partition(" ")
                if key == "poly":
                    polys.append(rest)
                elif key in ("nvars", "m", "degrees") and key not in header:
                    header[key] = [_parse_int(t, f"line {lineno}") for t in rest.split()]
                else:
                    raise CertificateFormatError(f"line {lineno}: unexpected header entry {key!r}")
        elif name == "vertices":
            for lineno, line in lines:
                parts = line.split()
                if parts[0] != "v" or len(parts) < 3:
                    raise CertificateFormatError(f"line {lineno}: expected 'v <id> <coords>'")
                vid = _parse_int(parts[1], f"line {lineno}")
                if vid in rays:
                    raise CertificateFormatError(f"line {lineno}: duplicate vertex {vid}")
                rays[vid] = tuple(_parse_rational(t, f"line {lineno}") for t in parts[2:])
        elif name == "cones":
            for lineno, line in lines:
                parts = line.split()
                if parts[0] != "c" or len(parts) < 3:
                    raise CertificateFormatError(f"line {lineno}: expected 'c <id> <vertex ids>'")
                cid = _parse_int(parts[1], f"line {lineno}")
                if cid in cones:
                    raise CertificateFormatError(f"line {lineno}: duplicate cone {cid}")
                cones[cid] = tuple(_parse_int(t, f"line {lineno}") for t in parts[2:])
        elif name == "tilde":
            for lineno, line in lines:
                parts = line.split()
                if parts[0] != "t" or len(parts) < 3:
                    raise CertificateFormatError(f"line {lineno}: expected 't <id> <values>'")
                vid = _parse_int(parts[1], f"line {lineno}")
                if vid in tilde:
                    raise CertificateFormatError(f"line {lineno}: duplicate tilde entry {vid}")
                tilde[vid] = tuple(_parse_rational(t, f"line {lineno}") for t in parts[2:])
        elif name.startswith("face"):
            where = f"line {start}"
            face = tuple(_parse_int(t, where) for t in name.split()[1:])
            if not face:
                raise CertificateFormatError(f"{where}: face section without vertices")
            if face in trees:
                raise CertificateFormatError(f"{where}: duplicate face {list(face)}")
            trees[face] = parse_tree(" ".join(line for _, line in lines), where)
        else:
            raise CertificateFormatError(f"line {start}: unknown section [{name}]")
    for key in ("nvars", "m", "degrees"):
        if key not in header:
            raise CertificateFormatError(f"header lacks {key}")
    if len(header["nvars"]) != 1 or len(header["m"]) != 1:
        raise CertificateFormatError("nvars and m take one integer each")
    return CertificateFile(
        nvars=header["nvars"][0],
        m=header["m"][0],
        degrees=tuple(header["degrees"]),
        polys="\n".join(polys),
        rays=rays,
        cones=cones,
        tilde=tilde,
        trees=trees,
    )


def certificate_polys(cert: CertificateFile) -> PolySystem:
    """The polynomial system embedded in the header."""
    if not cert.polys:
        raise CertificateFormatError("certificate carries no polynomials")
    try:
        return parse_polys(cert.polys, nvars=cert.nvars)
    except ValueError as exc:
        raise CertificateFormatError(f"header polynomials: {exc}") from None


# ---------------------------------------------------------------------------
# exact checking


def _lcm_den(values) -> int:
    out = 1
    for v in values:
        d = Fraction(v).denominator
        out = out * d // math.gcd(out, d)
    return out


def _int_vector(values) -> list[int]:
    """Positive multiple of a rational vector with integer entries."""
    s = _lcm_den(values)
    return [int(Fraction(v) * s) for v in values]


def _int_terms(p: HomogeneousPoly) -> dict:
    s = _lcm_den(p.terms.values())
    return {a: int(c * s) for a, c in p.terms.items()}


class _SystemData:
    """Integer multiples of every ``p_i`` and of their partial derivatives."""

    def __init__(self, ps: PolySystem):
        self.ps = ps
        self.terms = [_int_terms(p) for p in ps]
        self.grads = []
        for p in ps:
            # one common scale, so that gradient vectors keep their direction
            parts = p.gradient()
            s = _lcm_den(c for g in parts for c in g.terms.values())
            self.grads.append([{a: int(c * s) for a, c in g.terms.items()} for g in parts])


def _compose(term_sets, C, k1):
    """``p(C y)`` for each term dict, as ``{beta: int}``; powers are shared."""
    forms = _linear_forms(C, k1)
    unit = {(0,) * k1: 1}
    powers = [[unit] for _ in C]

    def power(i, e):
        cache = powers[i]
        while len(cache) <= e:
            cache.append(_dict_mul(cache[-1], forms[i]))
        return cache[e]

    outs = []
    for terms in term_sets:
        out: dict = {}
        for alpha, c in terms.items():
            acc = {(0,) * k1: c}
            for i, a in enumerate(alpha):
                if a:
                    acc = _dict_mul(acc, power(i, a))
            for b, v in acc.items():
                out[b] = out.get(b, 0) + v
        outs.append(out)
    return outs


def _chart_columns(M, W):
    """Integer positive rescaling of each column of ``M W``."""
    C = matmul(M, W)
    cols = []
    for j in range(len(W[0])):
        col = _int_vector([row[j] for row in C])
        g = 0
        for v in col:
            g = math.gcd(g, v)
        cols.append([v // g for v in col] if g else col)
    return [[cols[j][i] for j in range(len(cols))] for i in range(len(M))]


class _Rejected(Exception):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class _FaceChecker:
    def __init__(self, data: _SystemData, dec: Decomposition, tilde: dict, cone_grads: dict, face):
        self.data = data
        self.face = face
        self.m = len(data.terms)
        self.M = [[dec.vertices[v].ray[i] for v in face] for i in range(dec.nvars)]
        self.Vf = [[tilde[v][i] for v in face] for i in range(self.m)]
        self.tgrads = [cone_grads[dec.cones[c]] for c in dec.faces[face]]
        self.leaves = 0

    def leaf(self, node, W, path):
        k1 = len(W[0])
        self.leaves += 1
        C = _chart_columns(self.M, W)
        if isinstance(node, SignLeaf):
            self._check_sign(node, C, W, k1, path)
        elif isinstance(node, SepLeaf):
            self._check_sep(node, C, k1, path)
        else:
            raise _Rejected(f"unknown node at '{path}'")

    def _check_sign(self, leaf, C, W, k1, path):
        i, s = leaf.index, leaf.sign
        if not 0 <= i < self.m:
            raise _Rejected(f"sign leaf cites polynomial {i} of {self.m}")
        (q,) = _compose([self.data.terms[i]], C, k1)
        d = self.data.ps[i].degree
        for beta in multi_indices(k1, d):
            if s * q.get(beta, 0) <= 0:
                raise _Rejected(f"Bernstein coefficient {beta} of p_{i} is not strictly {'+' if s > 0 else '-'}")
        corners = matmul([self.Vf[i]], W)[0]
        for j, v in enumerate(corners):
            if s * v <= 0:
                raise _Rejected(f"interpolant value at corner {j} is not strictly {'+' if s > 0 else '-'}")

    def _check_sep(self, leaf, C, k1, path):
        m = self.m
        wits = {}
        for sigma, N in leaf.witnesses:
            if len(sigma) != m or sigma[0] != 1:
                raise _Rejected(f"sign vector {_sigma_text(sigma)} is not an orbit representative")
            if len(N) != len(C):
                raise _Rejected("witness has the wrong length")
            if sigma in wits:
                raise _Rejected(f"duplicate witness for {_sigma_text(sigma)}")
            wits[sigma] = _int_vector(N)
        for tail in itertools.product((1, -1), repeat=m - 1):
            if (1,) + tail not in wits:
                raise _Rejected(f"missing witness for sign vector {_sigma_text((1,) + tail)}")
        rows_per_poly = []
        for i in range(m):
            d = self.data.ps[i].degree
            comp = _compose(self.data.grads[i], C, k1)
            rows = [[comp[j].get(beta, 0) for j in range(len(C))] for beta in multi_indices(k1, d - 1)]
            rows += [g[i] for g in self.tgrads]
            rows_per_poly.append(rows)
        # the mirror -sigma uses -N, which gives the same products
        for sigma, N in wits.items():
            for i, rows in enumerate(rows_per_poly):
                for r in rows:
                    if sigma[i] * sum(a * b for a, b in zip(N, r)) <= 0:
                        raise _Rejected(f"witness for {_sigma_text(sigma)} fails on a row of p_{i}")


def _structure(cert: CertificateFile, ps: PolySystem):
    """Rebuild and validate the decomposition; returns it or a reason string."""
    n1 = cert.nvars
    if ps.nvars != n1 or ps.m != cert.m or tuple(ps.degrees) != tuple(cert.degrees):
        return "header does not match the polynomial system"
    for vid, ray in cert.rays.items():
        if len(ray) != n1:
            return f"vertex {vid} has {len(ray)} coordinates"
        if not any(ray):
            return f"vertex {vid} has a zero ray"
        if tuple(_normalize(ray)) != tuple(ray):
            return f"vertex {vid} ray is not in canonical scale"
    for cid, verts in cert.cones.items():
        if len(verts) != n1 or len(set(verts)) != n1 or list(verts) != sorted(verts):
            return f"cone {cid} needs {n1} distinct sorted vertex ids"
        if any(v not in cert.rays for v in verts):
            return f"cone {cid} uses an unknown vertex"
    try:
        dec = from_rays(cert.rays, cert.cones)
    except ValueError as exc:
        return str(exc)
    rep = validate(dec, samples=0)
    if not rep:
        return f"decomposition invalid ({rep.kind}): {rep.message}"
    reason = _single_cover(dec)
    if reason:
        return reason
    if set(cert.tilde) != set(cert.rays):
        return "tilde values do not cover exactly the vertices"
    for vid, vals in cert.tilde.items():
        if len(vals) != ps.m:
            return f"tilde entry for vertex {vid} has {len(vals)} values"
        exact = tuple(p.eval_exact(dec.vertices[vid].ray) for p in ps)
        if tuple(vals) != exact:
            return f"tilde value at vertex {vid} differs from the polynomial value"
    if set(cert.trees) != set(dec.faces):
        missing = sorted(set(dec.faces) - set(cert.trees), key=lambda f: (len(f), f))
        extra = sorted(set(cert.trees) - set(dec.faces), key=lambda f: (len(f), f))
        if missing:
            return f"no certificate for face {list(missing[0])}"
        return f"certificate for unknown face {list(extra[0])}"
    return dec


def _single_cover(dec: Decomposition):
    """Exactly one cone contains a generic rational point in its interior.

    With every facet shared by two cones on opposite sides, the cones cover
    the sphere a constant number of times; one point settles that number.
    """
    n1 = dec.nvars
    for shift in range(1, 50):
        u = [Fraction(1, shift + 3 * i * i + 2 * i + 1) * (-1) ** i for i in range(n1)]
        inside, boundary = 0, False
        for cid, verts in dec.cones.items():
            R = [[dec.vertices[v].ray[i] for v in verts] for i in range(n1)]
            lam = matmul(inverse(R), [[x] for x in u])
            lam = [row[0] for row in lam]
            if min(lam) > 0:
                inside += 1
            elif min(lam) == 0 and max(lam) > 0 and all(x >= 0 for x in lam):
                boundary = True
                break
        if boundary:
            continue
        if inside != 1:
            return f"a generic direction lies in {inside} cones"
        return None
    return "could not find a generic test direction"


def check_certificate(ps: PolySystem, cert: CertificateFile | str) -> Accept | Reject:
    """Replay a certificate exactly; :class:`Accept` iff every claim holds."""
    if isinstance(cert, str):
        cert = parse_certificate(cert)
    dec = _structure(cert, ps)
    if isinstance(dec, str):
        return Reject(None, "", dec)
    data = _SystemData(ps)
    cone_grads = {}
    for verts in dec.cones.values():
        R = [[dec.vertices[v].ray[i] for v in verts] for i in range(dec.nvars)]
        V = [[cert.tilde[v][i] for v in verts] for i in range(ps.m)]
        G = matmul(V, inverse(R))
        cone_grads[verts] = [_int_vector(row) for row in G]
    leaves = 0
    for face in sorted(cert.trees, key=lambda f: (len(f), f)):
        checker = _FaceChecker(data, dec, cert.tilde, cone_grads, face)
        k1 = len(face)
        W = [[Fraction(int(i == j)) for j in range(k1)] for i in range(k1)]
        path = [""]
        try:
            _walk(checker, cert.trees[face], W, path)
        except _Rejected as exc:
            return Reject(face, path[0], exc.reason)
        leaves += checker.leaves
    return Accept(len(cert.trees), leaves)


def _walk(checker, node, W, path):
    # explicit stack; path[0] always names the node being checked
    stack = [(node, W, "")]
    while stack:
        node, W, p = stack.pop()
        path[0] = p
        if isinstance(node, SplitNode):
            k1 = len(W[0])
            a, b = node.edge
            if not (0 <= a < b < k1):
                raise _Rejected(f"split edge {a}-{b} out of range for {k1} corners")
            left, right = split_chart(W, (a, b))
            stack.append((node.right, right, p + "R"))
            stack.append((node.left, left, p + "L"))
        else:
            checker.leaf(node, W, p)


def certificate_text_for(outcome) -> str:
    """Certificate of a certified :class:`~isoplex.driver.SolveOutcome`."""
    if not outcome.certified:
        raise ValueError("only certified outcomes have certificates")
    return write_certificate(outcome.ps, outcome.decomposition, outcome.tilde, outcome.certificates)


def decomposition_of(cert: CertificateFile) -> Decomposition:
    return from_rays(cert.rays, cert.cones)
