"""Is 0 in the convex hull of a finite point set?  If not, find a witness.

:func:`separate` minimises ``|N|^2`` over the hull by alternating two
steps: a descent step towards a generator ``v`` with ``N.v <= 0``, and a
linear step that jumps to the min-norm point of the affine hull of the
current support (pulled back to the hull when some weight would turn
negative, which drops that generator).  A generator dropped by the last
linear step is not picked for the next descent unless nothing else
qualifies.  When no generator satisfies ``N.v <= 0`` any more, ``N`` is a
separating witness.
"""
from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linalg import rref

log = logging.getLogger(__name__)

DEFAULT_TOL = 2.0**-30


class Verdict(enum.Enum):
    SEPARATED = "separated"
    INSIDE = "inside"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SeparationResult:
    verdict: Verdict
    witness: np.ndarray | None = None
    coeffs: np.ndarray | None = None
    min_norm_sq: float = 0.0
    iterations: int = 0

    @property
    def separated(self) -> bool:
        return self.verdict is Verdict.SEPARATED

    def mirrored(self) -> "SeparationResult":
        """Result for the negated generator set."""
        w = None if self.witness is None else -self.witness
        return SeparationResult(self.verdict, w, self.coeffs, self.min_norm_sq, self.iterations)


def _affine_min_norm(V):
    """Weights ``mu`` (summing to 1) of the min-norm point of aff(rows of V).

    Solved as least squares on the differences ``v_i - v_0`` rather than
    through the Gram matrix, which would square the condition number when
    two generators nearly coincide.
    """
    k = V.shape[0]
    if k == 1:
        return np.ones(1)
    D = (V[1:] - V[0]).T
    c = np.linalg.lstsq(D, -V[0], rcond=None)[0]
    mu = np.empty(k)
    mu[0] = 1.0 - c.sum()
    mu[1:] = c
    return mu


def separate(A, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> SeparationResult:
    """Decide ``0 in H(A)`` for the rows of ``A``.

    ``tol`` is relative to the largest generator norm: the search reports
    INSIDE once ``|N| < tol * max|v|``.  A SEPARATED witness satisfies
    ``N.v > (tol/16) |N| |v|`` for every row, so that rounding it to a
    rational keeps every inequality strict.  The iteration cap defaults to
    ``10 * len(A) * dim`` and ends in INCONCLUSIVE; so does an iteration
    that fails to decrease ``|N|^2`` (the float floor has been reached).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] == 0:
        raise ValueError("need a nonempty list of vectors")
    if not np.all(np.isfinite(A)):
        raise ValueError("non-finite input")
    count, dim = A.shape
    norms = np.linalg.norm(A, axis=1)
    scale = norms.max()
    if norms.min() == 0.0:
        coeffs = np.zeros(count)
        coeffs[int(np.argmin(norms))] = 1.0
        return SeparationResult(Verdict.INSIDE, None, coeffs, 0.0, 0)
    if max_iter is None:
        max_iter = 10 * count * dim
    stop2 = (tol * scale) ** 2
    margin = tol / 16.0
    noise = 8.0 * count * np.finfo(float).eps * scale

    j = int(np.argmin(norms))
    alpha = np.zeros(count)
    alpha[j] = 1.0
    x = A[j].copy()
    blocked: set[int] = set()
    nx2 = float(x @ x)
    for it in range(1, max_iter + 1):
        if nx2 <= stop2:
            return SeparationResult(Verdict.INSIDE, None, alpha, nx2, it)
        dots = A @ x
        bad = np.nonzero(dots <= margin * np.sqrt(nx2) * norms)[0]
        if bad.size == 0:
            return SeparationResult(Verdict.SEPARATED, x, alpha, nx2, it)
        free = [i for i in bad if i not in blocked]
        pool = free if free else list(bad)
        i = min(pool, key=lambda k: (dots[k] / norms[k], k))

        # descent towards A[i]
        d = x - A[i]
        dd = float(d @ d)
        t = float(x @ d) / dd if dd > 0 else 0.0
        t = min(max(t, 0.0), 1.0)
        alpha *= 1.0 - t
        alpha[i] += t
        x = alpha @ A
        prev = nx2
        nx2 = float(x @ x)

        # linear step over the support
        blocked = set()
        while True:
            support = np.nonzero(alpha > 0)[0]
            mu = _affine_min_norm(A[support])
            if np.all(mu > 0):
                trial = np.zeros(count)
                trial[support] = mu
                tx = trial @ A
                if float(tx @ tx) <= nx2:
                    alpha, x, nx2 = trial, tx, float(tx @ tx)
                break
            a = alpha[support]
            neg = mu <= 0
            theta = float(np.min(a[neg] / (a[neg] - mu[neg])))
            new = (1.0 - theta) * a + theta * mu
            drop = neg & (new <= 1e-15 * max(1.0, new.max()))
            if not drop.any():
                drop[np.argmin(np.where(neg, new, np.inf))] = True
            new[drop] = 0.0
            new = np.maximum(new, 0.0)
            new /= new.sum()
            trial = np.zeros(count)
            trial[support] = new
            tx = trial @ A
            if float(tx @ tx) > nx2 * (1 + 1e-12) + 1e-300:
                break
            blocked.update(int(s) for s in support[drop])
            alpha, x, nx2 = trial, tx, float(tx @ tx)
        # N = alpha @ A carries an absolute error of about count * eps * scale
        if nx2 > prev + noise * np.sqrt(prev) + noise**2:
            raise AssertionError("min-norm search increased |N|^2")
        if nx2 >= prev and nx2 > stop2:
            return SeparationResult(Verdict.INCONCLUSIVE, None, alpha, nx2, it)
    return SeparationResult(Verdict.INCONCLUSIVE, None, alpha, nx2, max_iter)


def sign_vectors(m: int, orbits_only: bool = False):
    """All sigma in {-1,+1}^m; with ``orbits_only`` only those with sigma_0 = +1."""
    for tail in itertools.product((1, -1), repeat=m - 1):
        yield (1,) + tail
    if not orbits_only:
        for tail in itertools.product((1, -1), repeat=m - 1):
            yield (-1,) + tuple(-s for s in tail)


def signed_rows(Ms, sigma) -> np.ndarray:
    """The set ``{sigma_i * row_i(M)}`` over all matrices, stacked."""
    Ms = np.asarray(Ms, dtype=float)
    s = np.asarray(sigma, dtype=float)
    return (Ms * s[None, :, None]).reshape(-1, Ms.shape[-1])


def strongly_full_rank(Ms, tol: float = DEFAULT_TOL, short_circuit: bool = False) -> dict:
    """Run :func:`separate` on the signed rows for every sign vector.

    Only the ``2^(m-1)`` orbit representatives (``sigma_0 = +1``) are
    searched; the mirror ``-sigma`` reuses the witness negated.  With
    ``short_circuit`` the scan stops at the first non-separated orbit and
    the returned map is partial.
    """
    Ms = np.asarray(Ms, dtype=float)
    if Ms.ndim != 3 or Ms.shape[0] == 0:
        raise ValueError("need a nonempty stack of m x (n+1) matrices")
    m = Ms.shape[1]
    out = {}
    for sigma in sign_vectors(m, orbits_only=True):
        res = separate(signed_rows(Ms, sigma), tol)
        out[sigma] = res
        out[tuple(-s for s in sigma)] = res.mirrored()
        if short_circuit and not res.separated:
            break
    return out


def all_separated(results: dict) -> bool:
    return bool(results) and all(r.separated for r in results.values())


# ---------------------------------------------------------------------------
# exact oracle for tests

ORACLE_MAX_POINTS = 12
ORACLE_MAX_DIM = 8


def lp_oracle(A) -> Verdict:
    """Exact feasibility of ``0 in H(A)`` by enumerating basic solutions.

    A point of the hull is a convex combination of affinely independent
    generators (Caratheodory), so it suffices to solve
    ``sum mu_j v_j = 0, sum mu_j = 1`` on every affinely independent subset
    of at most ``dim + 1`` rows and look for ``mu >= 0``.
    """
    rows = [[Fraction(x) for x in r] for r in A]
    if not rows:
        raise ValueError("empty set")
    dim = len(rows[0])
    if len(rows) > ORACLE_MAX_POINTS or dim > ORACLE_MAX_DIM:
        raise ValueError("instance exceeds the oracle size limit")
    for size in range(1, min(len(rows), dim + 1) + 1):
        for sub in itertools.combinations(range(len(rows)), size):
            # columns: lifted generators (v, 1); unknowns: mu
            mat = [[rows[j][i] for j in sub] + [Fraction(0)] for i in range(dim)]
            mat.append([Fraction(1)] * size + [Fraction(1)])
            red, piv = rref(mat)
            if size in piv or len(piv) != size:
                continue
            mu = [red[r][-1] for r in range(size)]
            if all(v >= 0 for v in mu):
                return Verdict.INSIDE
    return Verdict.SEPARATED
