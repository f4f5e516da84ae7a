"""Homogeneous polynomials with exact rational coefficients, and their
Bernstein forms over simplices.

Multi-indices of degree ``d`` in ``k+1`` variables are stored densely in
colexicographic order: ``a`` precedes ``b`` when ``reversed(a) < reversed(b)``
lexicographically.  For two variables and degree 2 this gives
``(2,0), (1,1), (0,2)``.  :func:`rank` computes the position directly.

The Bernstein basis of degree ``d`` is ``(d!/alpha!) x^alpha``; a monomial
coefficient ``c_alpha`` becomes the Bernstein coefficient
``c_alpha * alpha! / d!``.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "HomogeneousPoly",
    "PolySystem",
    "BernsteinForm",
    "PolyParseError",
    "multi_indices",
    "rank",
    "variables",
    "substitute_linear",
    "to_bernstein",
    "from_bernstein",
    "de_casteljau",
    "elevate",
    "gradient_bernstein",
    "DenseTensor",
    "parse_polys",
]


class PolyParseError(ValueError):
    def __init__(self, message, line=0, column=0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@lru_cache(maxsize=None)
def multi_indices(nvars: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """All exponent tuples of length ``nvars`` summing to ``degree``, colex order."""
    if nvars == 0:
        return ((),) if degree == 0 else ()
    out = []
    for last in range(degree + 1):
        for head in multi_indices(nvars - 1, degree - last):
            out.append(head + (last,))
    return tuple(out)


@lru_cache(maxsize=None)
def _index_map(nvars: int, degree: int) -> dict[tuple[int, ...], int]:
    return {a: i for i, a in enumerate(multi_indices(nvars, degree))}


def rank(alpha: Sequence[int]) -> int:
    """Position of ``alpha`` in :func:`multi_indices` order.

    Walking from the last coordinate down, every smaller value ``t`` of
    coordinate ``j`` skips ``C(r - t + j - 1, j - 1)`` tuples, where ``r``
    is the degree still unassigned.
    """
    r = sum(alpha)
    pos = 0
    for j in range(len(alpha) - 1, 0, -1):
        for t in range(alpha[j]):
            pos += math.comb(r - t + j - 1, j - 1)
        r -= alpha[j]
    return pos


def _alpha_factorial(alpha) -> int:
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        if not math.isfinite(c):
            raise ValueError("non-finite coefficient")
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


class HomogeneousPoly:
    """Sparse homogeneous polynomial ``sum c_alpha x^alpha`` over Q.

    ``float_terms`` mirrors ``terms`` rounded to binary64.  Instances are
    immutable; arithmetic operators return new polynomials.
    """

    __slots__ = ("nvars", "degree", "terms", "float_terms")

    def __init__(self, nvars: int, terms: dict, degree: int | None = None):
        clean = {}
        for alpha, c in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != nvars:
                raise ValueError(f"exponent {alpha} has wrong length for {nvars} variables")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            c = _as_fraction(c)
            if c != 0:
                clean[alpha] = clean.get(alpha, Fraction(0)) + c
                if clean[alpha] == 0:
                    del clean[alpha]
        degrees = {sum(a) for a in clean}
        if len(degrees) > 1:
            raise ValueError("non-homogeneous polynomial: degrees " + str(sorted(degrees)))
        if degree is None:
            if not degrees:
                raise ValueError("zero polynomial needs an explicit degree")
            degree = degrees.pop()
        elif degrees and degrees.pop() != degree:
            raise ValueError("terms do not match the requested degree")
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "terms", dict(sorted(clean.items(), key=lambda kv: rank(kv[0]))))
        object.__setattr__(self, "float_terms", {a: float(c) for a, c in self.terms.items()})

    def __setattr__(self, name, value):
        raise AttributeError("HomogeneousPoly is immutable")

    @classmethod
    def monomial(cls, nvars, alpha, coeff=1):
        return cls(nvars, {tuple(alpha): coeff}, degree=sum(alpha))

    @classmethod
    def zero(cls, nvars, degree):
        return cls(nvars, {}, degree=degree)

    @classmethod
    def parse(cls, text: str, nvars: int | None = None) -> "HomogeneousPoly":
        return parse_polys(text, nvars=nvars).polys[0]

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, HomogeneousPoly):
            return NotImplemented
        return (self.nvars, self.degree, self.terms) == (other.nvars, other.degree, other.terms)

    def __hash__(self):
        return hash((self.nvars, self.degree, tuple(self.terms.items())))

    def __repr__(self):
        return f"HomogeneousPoly({self.to_text()!r}, nvars={self.nvars})"

    # arithmetic -------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, HomogeneousPoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        c = _as_fraction(other)
        return HomogeneousPoly(self.nvars, {(0,) * self.nvars: c}, degree=0)

    def __add__(self, other):
        other = self._coerce(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if other.degree != self.degree:
            raise ValueError(f"adding degree {self.degree} and {other.degree} is not homogeneous")
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms.get(a, 0) + c
        return HomogeneousPoly(self.nvars, terms, degree=self.degree)

    __radd__ = __add__

    def __neg__(self):
        return HomogeneousPoly(self.nvars, {a: -c for a, c in self.terms.items()}, degree=self.degree)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        terms: dict = {}
        for a, c in self.terms.items():
            for b, e in other.terms.items():
                ab = tuple(x + y for x, y in zip(a, b))
                terms[ab] = terms.get(ab, 0) + c * e
        return HomogeneousPoly(self.nvars, terms, degree=self.degree + other.degree)

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = _as_fraction(other)
        return HomogeneousPoly(self.nvars, {a: v / c for a, v in self.terms.items()}, degree=self.degree)

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative power")
        out = HomogeneousPoly(self.nvars, {(0,) * self.nvars: 1}, degree=0)
        for _ in range(e):
            out = out * self
        return out

    # evaluation -------------------------------------------------------

    def __call__(self, x):
        if all(isinstance(v, (int, Fraction)) for v in x):
            return self.eval_exact(x)
        return self.eval_float(x)

    def eval_exact(self, x) -> Fraction:
        if len(x) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates, got {len(x)}")
        x = [_as_fraction(v) for v in x]
        total = Fraction(0)
        for alpha, c in self.terms.items():
            t = c
            for v, a in zip(x, alpha):
                if a:
                    t *= v**a
            total += t
        return total

    def eval_float(self, x) -> float:
        if len(x) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates, got {len(x)}")
        x = [float(v) for v in x]
        total = 0.0
        for alpha, c in self.float_terms.items():
            t = c
            for v, a in zip(x, alpha):
                if a:
                    t *= v**a
            total += t
        return total

    def coefficient_norm1(self) -> Fraction:
        return sum((abs(c) for c in self.terms.values()), Fraction(0))

    def gradient(self) -> list["HomogeneousPoly"]:
        """Partial derivatives in every variable (degree ``d - 1``)."""
        out = []
        for i in range(self.nvars):
            terms = {}
            for alpha, c in self.terms.items():
                if alpha[i]:
                    b = list(alpha)
                    b[i] -= 1
                    terms[tuple(b)] = c * alpha[i]
            out.append(HomogeneousPoly(self.nvars, terms, degree=max(self.degree - 1, 0)))
        return out

    def substitute_linear(self, M) -> "HomogeneousPoly":
        return substitute_linear(self, M)

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for alpha, c in self.terms.items():
            mono = " ".join(
                f"x{i}" if a == 1 else f"x{i}^{a}" for i, a in enumerate(alpha) if a
            )
            coef = str(abs(c))
            sign = "-" if c < 0 else "+"
            if not mono:
                body = coef
            elif abs(c) == 1:
                body = mono
            else:
                body = f"{coef} * {mono}"
            parts.append((sign, body))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text


def variables(nvars: int) -> list[HomogeneousPoly]:
    """The coordinate forms ``x0, ..., x_{nvars-1}``."""
    return [
        HomogeneousPoly.monomial(nvars, tuple(int(i == j) for j in range(nvars)))
        for i in range(nvars)
    ]


@dataclass(frozen=True)
class PolySystem:
    polys: tuple

    def __init__(self, polys: Iterable[HomogeneousPoly]):
        polys = tuple(polys)
        if not polys:
            raise ValueError("empty polynomial system")
        nvars = polys[0].nvars
        if any(p.nvars != nvars for p in polys):
            raise ValueError("all polynomials must share the variable count")
        if any(p.degree < 1 for p in polys):
            raise ValueError("polynomials must have degree >= 1")
        if not 1 <= len(polys) <= nvars - 1:
            raise ValueError(f"need 1 <= m <= nvars - 1, got m={len(polys)}, nvars={nvars}")
        object.__setattr__(self, "polys", polys)

    @property
    def nvars(self) -> int:
        return self.polys[0].nvars

    @property
    def m(self) -> int:
        return len(self.polys)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(p.degree for p in self.polys)

    def __iter__(self):
        return iter(self.polys)

    def __len__(self):
        return len(self.polys)

    def __getitem__(self, i):
        return self.polys[i]

    def to_text(self) -> str:
        return f"nvars: {self.nvars}\n" + "".join(p.to_text() + "\n" for p in self.polys)


# ---------------------------------------------------------------------------
# linear substitution and Bernstein forms


def _linear_forms(M, k1):
    """Row ``i`` of ``M`` as a polynomial dict in ``k1`` variables."""
    forms = []
    for row in M:
        if len(row) != k1:
            raise ValueError("ragged substitution matrix")
        forms.append({tuple(int(i == j) for i in range(k1)): v for j, v in enumerate(row) if v != 0})
    return forms


def _dict_mul(a, b):
    out = {}
    for x, c in a.items():
        for y, e in b.items():
            xy = tuple(p + q for p, q in zip(x, y))
            out[xy] = out.get(xy, 0) + c * e
    return out


def substitute_linear(p: HomogeneousPoly, M, exact: bool | None = None) -> HomogeneousPoly | dict:
    """Return ``q(y) = p(M y)`` for an ``nvars x (k+1)`` matrix ``M``.

    Variables are replaced one at a time by their linear forms, reusing
    cached powers.  With rational ``M`` the result is an exact
    :class:`HomogeneousPoly`; with float entries the float mirror is used
    and a plain ``{alpha: float}`` dict is returned.
    """
    rows = [list(r) for r in M]
    if len(rows) != p.nvars:
        raise ValueError(f"substitution matrix needs {p.nvars} rows, got {len(rows)}")
    k1 = len(rows[0]) if rows else 0
    if exact is None:
        exact = all(isinstance(v, (int, Fraction)) for r in rows for v in r)
    if exact:
        rows = [[_as_fraction(v) for v in r] for r in rows]
        terms = p.terms
        one = Fraction(1)
    else:
        rows = [[float(v) for v in r] for r in rows]
        terms = p.float_terms
        one = 1.0
    forms = _linear_forms(rows, k1)
    unit = {(0,) * k1: one}
    powers = [[unit] for _ in range(p.nvars)]

    def power(i, e):
        cache = powers[i]
        while len(cache) <= e:
            cache.append(_dict_mul(cache[-1], forms[i]))
        return cache[e]

    out: dict = {}
    for alpha, c in terms.items():
        acc = {(0,) * k1: c}
        for i, a in enumerate(alpha):
            if a:
                acc = _dict_mul(acc, power(i, a))
        for b, v in acc.items():
            out[b] = out.get(b, 0) + v
    if exact:
        return HomogeneousPoly(k1, out, degree=p.degree)
    return {b: v for b, v in out.items() if v != 0}


@dataclass(frozen=True)
class BernsteinForm:
    """Dense Bernstein coefficients over the unit simplex with ``dim`` vertices.

    ``coeffs[rank(alpha)]`` is the coefficient of ``(d!/alpha!) x^alpha``.
    Entries are scalars, vectors or matrices; ``coeffs`` is a numpy array
    whose leading axis runs over multi-indices (dtype ``object`` holds
    exact rationals).
    """

    dim: int
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        n = math.comb(self.degree + self.dim - 1, self.dim - 1)
        if len(self.coeffs) != n:
            raise ValueError(f"expected {n} coefficients, got {len(self.coeffs)}")

    @property
    def entry_kind(self) -> str:
        return ("scalar", "vector", "matrix")[self.coeffs.ndim - 1]

    @property
    def indices(self):
        return multi_indices(self.dim, self.degree)

    def __getitem__(self, alpha):
        return self.coeffs[rank(alpha)]

    def items(self):
        return zip(self.indices, self.coeffs)


def _dense(values, kind_shape=()):
    arr = np.empty((len(values),) + kind_shape, dtype=object)
    for i, v in enumerate(values):
        arr[i] = v
    return arr


def to_bernstein(q: HomogeneousPoly | dict, nvars: int | None = None, degree: int | None = None) -> BernsteinForm:
    """Bernstein coefficients ``c_alpha * alpha! / d!`` of ``q``.

    Exact for a :class:`HomogeneousPoly`; a float ``{alpha: c}`` dict (as
    produced by float-mode :func:`substitute_linear`) needs ``nvars`` and
    ``degree`` and gives float coefficients.
    """
    if isinstance(q, HomogeneousPoly):
        nvars, degree, terms = q.nvars, q.degree, q.terms
        df = math.factorial(degree)
        coeffs = np.empty(math.comb(degree + nvars - 1, nvars - 1), dtype=object)
        coeffs[:] = Fraction(0)
        for alpha, c in terms.items():
            coeffs[rank(alpha)] = c * _alpha_factorial(alpha) / df
        return BernsteinForm(nvars, degree, coeffs)
    df = math.factorial(degree)
    coeffs = np.zeros(math.comb(degree + nvars - 1, nvars - 1))
    for alpha, c in q.items():
        coeffs[rank(alpha)] = c * _alpha_factorial(alpha) / df
    return BernsteinForm(nvars, degree, coeffs)


def from_bernstein(b: BernsteinForm) -> HomogeneousPoly:
    df = math.factorial(b.degree)
    terms = {alpha: _as_fraction(c) * df / _alpha_factorial(alpha) for alpha, c in b.items()}
    return HomogeneousPoly(b.dim, terms, degree=b.degree)


def _check_barycentric(lam):
    if all(isinstance(v, (int, Fraction)) for v in lam):
        if any(v < 0 for v in lam) or sum(lam) != 1:
            raise ValueError("point is not in the unit simplex")
        return [Fraction(v) for v in lam]
    lam = [float(v) for v in lam]
    if any(v < 0 for v in lam) or abs(sum(lam) - 1.0) > 1e-12:
        raise ValueError("point is not in the unit simplex")
    return lam


def de_casteljau(b: BernsteinForm, lam) -> object:
    """Evaluate ``b`` at the barycentric point ``lam`` by repeated convex blending."""
    if len(lam) != b.dim:
        raise ValueError(f"expected {b.dim} barycentric coordinates")
    lam = _check_barycentric(lam)
    level = {alpha: c for alpha, c in b.items()}
    for r in range(b.degree - 1, -1, -1):
        nxt = {}
        for alpha in multi_indices(b.dim, r):
            acc = None
            for j, w in enumerate(lam):
                if not w:
                    continue
                up = alpha[:j] + (alpha[j] + 1,) + alpha[j + 1:]
                term = level[up] * w
                acc = term if acc is None else acc + term
            nxt[alpha] = acc
        level = nxt
    return level[(0,) * b.dim]


def elevate(b: BernsteinForm, times: int = 1) -> BernsteinForm:
    """Raise the degree by ``times``; new coefficients are convex blends of old ones."""
    coeffs = b.coeffs
    degree = b.degree
    exact = coeffs.dtype == object
    for _ in range(times):
        new_idx = multi_indices(b.dim, degree + 1)
        old = _index_map(b.dim, degree)
        shape = (len(new_idx),) + coeffs.shape[1:]
        out = np.empty(shape, dtype=object) if exact else np.zeros(shape)
        for i, beta in enumerate(new_idx):
            acc = 0
            for j in range(b.dim):
                if beta[j]:
                    src = beta[:j] + (beta[j] - 1,) + beta[j + 1:]
                    w = Fraction(beta[j], degree + 1) if exact else beta[j] / (degree + 1)
                    acc = acc + coeffs[old[src]] * w
            out[i] = acc
        coeffs = out
        degree += 1
    return BernsteinForm(b.dim, degree, coeffs)


def gradient_bernstein(ps: PolySystem, M) -> BernsteinForm:
    """Bernstein coefficients of ``y -> grad p(M y)`` as ``m x (n+1)`` matrices.

    Gradients are taken in the ambient coordinates, then composed with
    ``M``.  Rows of lower degree are elevated to the common degree
    ``max(d_i) - 1``.  Exact for rational ``M``, float otherwise.
    """
    rows = [list(r) for r in M]
    if len(rows) != ps.nvars:
        raise ValueError(f"substitution matrix needs {ps.nvars} rows, got {len(rows)}")
    k1 = len(rows[0])
    exact = all(isinstance(v, (int, Fraction)) for r in rows for v in r)
    top = max(ps.degrees) - 1
    n1 = ps.nvars
    per_row = []
    for p in ps:
        comps = []
        for g in p.gradient():
            if exact:
                form = to_bernstein(substitute_linear(g, rows))
            else:
                form = to_bernstein(substitute_linear(g, rows, exact=False), k1, g.degree)
            comps.append(form.coeffs)
        stacked = np.empty((len(comps[0]), n1), dtype=object if exact else float)
        for j, c in enumerate(comps):
            stacked[:, j] = c
        form = BernsteinForm(k1, p.degree - 1, stacked)
        per_row.append(elevate(form, top - form.degree).coeffs)
    count = len(per_row[0])
    out = np.empty((count, ps.m, n1), dtype=object if exact else float)
    for i, c in enumerate(per_row):
        out[:, i, :] = c
    return BernsteinForm(k1, top, out)


# ---------------------------------------------------------------------------
# dense symmetric tensors for the float search


class DenseTensor:
    """Symmetric tensor ``T`` with ``p(x) = T(x, ..., x)`` (binary64).

    The Bernstein coefficient of ``p(C y)`` at ``alpha`` is the blossom
    ``T(c_0^{alpha_0}, ..., c_k^{alpha_k})`` of the chart columns, so one
    tensor contraction per axis yields every coefficient at once.  Used by
    the float search only; exact checks go through :func:`substitute_linear`.
    """

    def __init__(self, p: HomogeneousPoly):
        self.nvars = p.nvars
        self.degree = p.degree
        d = p.degree
        T = np.zeros((p.nvars,) * d) if d else np.zeros(())
        for alpha, c in p.float_terms.items():
            slots = [i for i, a in enumerate(alpha) for _ in range(a)]
            perms = set(itertools.permutations(slots))
            share = c / len(perms)
            for idx in perms:
                T[idx] = share
        self.tensor = T

    def _selectors(self, k1, degree):
        return _blossom_selectors(k1, degree)

    def bernstein(self, C: np.ndarray) -> np.ndarray:
        """Coefficients of ``y -> p(C y)`` in colex order."""
        d = self.degree
        k1 = C.shape[1]
        B = self.tensor
        for _ in range(d):
            B = np.tensordot(B, C, axes=([0], [0]))
        if d == 0:
            return np.array([float(B)])
        return B.reshape(-1)[self._selectors(k1, d)]

    def gradient_bernstein(self, C: np.ndarray) -> np.ndarray:
        """Coefficient vectors ``d * T(., c^alpha)`` of ``y -> grad p(C y)``, shape ``(N, nvars)``."""
        d = self.degree
        k1 = C.shape[1]
        B = self.tensor
        for _ in range(d - 1):
            B = np.tensordot(B, C, axes=([1], [0])) if B.ndim > 1 else B
        # B now has shape (nvars, k1, ..., k1)
        if d == 1:
            return (self.tensor * 1.0)[None, :]
        flat = B.reshape(self.nvars, -1)
        return d * flat[:, self._selectors(k1, d - 1)].T


@lru_cache(maxsize=None)
def _blossom_selectors(k1, degree):
    sel = []
    for alpha in multi_indices(k1, degree):
        idx = [j for j, a in enumerate(alpha) for _ in range(a)]
        flat = 0
        for j in idx:
            flat = flat * k1 + j
        sel.append(flat)
    return np.array(sel, dtype=np.intp)


# ---------------------------------------------------------------------------
# text format

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+|\.\d*(?:[eE][-+]?\d+)?|[eE][-+]?\d+)?)"
    r"|(?P<var>x(?P<idx>\d+)(?:\^(?P<exp>\d+))?)|(?P<op>[-+*]))"
)


def _parse_line(line: str, lineno: int):
    terms: list[tuple[Fraction, dict]] = []
    pos = 0
    sign = 1
    coef: Fraction | None = None
    mono: dict = {}
    expect_term = True
    started = False

    def flush(col):
        nonlocal coef, mono, started
        if not started:
            raise PolyParseError("empty term", lineno, col)
        terms.append((sign * (coef if coef is not None else Fraction(1)), mono))
        coef, mono, started = None, {}, False

    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m or m.end() == pos:
            if line[pos:].strip() == "":
                break
            col = pos + 1 + (len(line[pos:]) - len(line[pos:].lstrip()))
            raise PolyParseError(f"unexpected character {line[col - 1]!r}", lineno, col)
        col = m.start() + 1 + (len(m.group(0)) - len(m.group(0).lstrip()))
        if m.group("num") is not None:
            if coef is not None or mono:
                raise PolyParseError("misplaced coefficient", lineno, col)
            coef = Fraction(m.group("num"))
            started = True
        elif m.group("var") is not None:
            i = int(m.group("idx"))
            e = int(m.group("exp") or 1)
            mono[i] = mono.get(i, 0) + e
            started = True
        else:
            op = m.group("op")
            if op == "*":
                if not started:
                    raise PolyParseError("'*' without a left operand", lineno, col)
            elif started:
                flush(col)
                sign = 1 if op == "+" else -1
            else:
                if terms or expect_term is False:
                    raise PolyParseError(f"dangling {op!r}", lineno, col)
                sign = sign * (1 if op == "+" else -1)
        expect_term = False
        pos = m.end()
    if started:
        flush(len(line))
    elif terms or not expect_term:
        raise PolyParseError("expression ends with an operator", lineno, len(line))
    return terms


def parse_polys(text: str, nvars: int | None = None) -> PolySystem:
    """Parse one polynomial per line.

    Terms look like ``3/2 * x0^2 x1`` or ``-x2^4``; ``#`` starts a comment
    and a ``nvars: N`` line fixes the variable count (otherwise the largest
    variable index plus one).  Non-homogeneous input is rejected with the
    offending monomials listed.
    """
    parsed = []
    declared = nvars
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        head = line.strip()
        if head.startswith("nvars"):
            m = re.fullmatch(r"nvars\s*:?\s*(\d+)", head)
            if not m:
                raise PolyParseError("malformed nvars line", lineno, 1)
            declared = int(m.group(1))
            continue
        terms = _parse_line(line, lineno)
        if not terms:
            continue
        parsed.append((lineno, terms))
    if not parsed:
        raise PolyParseError("no polynomial found", 0, 0)
    used = 1 + max((i for _, ts in parsed for _, mono in ts for i in mono), default=0)
    nv = declared if declared is not None else used
    if used > nv:
        raise PolyParseError(f"variable x{used - 1} exceeds nvars={nv}", 0, 0)
    polys = []
    for lineno, ts in parsed:
        terms: dict = {}
        for c, mono in ts:
            alpha = tuple(mono.get(i, 0) for i in range(nv))
            terms[alpha] = terms.get(alpha, 0) + c
        terms = {a: c for a, c in terms.items() if c != 0}
        degs = {}
        for a in terms:
            degs.setdefault(sum(a), []).append(a)
        if len(degs) > 1:
            top = max(degs, key=lambda d: len(degs[d]))
            bad = [a for d, al in degs.items() if d != top for a in al]
            listing = ", ".join(" ".join(f"x{i}^{e}" for i, e in enumerate(a) if e) or "1" for a in bad)
            raise PolyParseError(
                f"non-homogeneous polynomial (dominant degree {top}); offending monomials: {listing}",
                lineno,
                1,
            )
        if not terms:
            raise PolyParseError("polynomial is identically zero", lineno, 1)
        polys.append(HomogeneousPoly(nv, terms))
    return PolySystem(polys)
