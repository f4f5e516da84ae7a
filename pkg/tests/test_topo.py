import itertools
import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_form
from isoplex import PolySystem, parse_polys, solve
from isoplex.topo import (
    Cell,
    PLCellComplex,
    _link,
    analyse,
    betti_z2,
    check_vanishing,
    components,
    export_off,
    extract,
    projective_quotient,
    read_off,
)

F = Fraction


def cofacet_counts(cc, dim):
    """For each (dim-1)-cell, how many dim-cells contain it."""
    cnt = Counter()
    for cid, c in enumerate(cc.cells):
        if c.dim == dim:
            cnt.update(cc.facets[cid])
    return [cnt[i] for i, c in enumerate(cc.cells) if c.dim == dim - 1]


def polygon_complex(cycles):
    """Hand-built curve complex: each cycle is a list of point ids."""
    npts = max(max(c) for c in cycles) + 1
    points = [(F(i),) for i in range(npts)]
    cells = [Cell(0, frozenset([p]), ()) for p in range(npts)]
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            cells.append(Cell(1, frozenset([a, b]), ()))
    cells.sort(key=lambda c: (c.dim, sorted(c.verts)))
    cc = PLCellComplex(3, points, cells, top=1)
    _link(cc)
    return cc


# -- constructed complexes --------------------------------------------------------

def test_empty_complex():
    cc = PLCellComplex(3, [], [], top=1, antipode=[])
    assert components(cc) == 0
    assert betti_z2(cc) == [0, 0]
    assert analyse(projective_quotient(cc)).components == 0


def test_two_disjoint_cycles():
    cc = polygon_complex([[0, 1, 2], [3, 4, 5, 6]])
    assert components(cc) == 2
    rep = analyse(cc)
    assert rep.betti == (2, 2) and rep.euler == 0
    assert rep.component_betti == ((1, 1), (1, 1))


def test_circle_homology():
    assert betti_z2(polygon_complex([[0, 1, 2, 3]])) == [1, 1]


def test_quotient_rejects_asymmetric():
    with pytest.raises(ValueError):
        projective_quotient(polygon_complex([[0, 1, 2]]))


# -- extracted complexes -----------------------------------------------------------

def test_positive_form_empty(sphere_outcome):
    cc = extract(sphere_outcome.decomposition, sphere_outcome.tilde)
    assert not cc.cells and components(cc) == 0
    rep = analyse(projective_quotient(cc))
    assert rep.components == 0 and rep.betti == (0, 0)


def test_conic_is_closed_cycle_pair(conic_outcome):
    out = conic_outcome
    cc = extract(out.decomposition, out.tilde)
    assert check_vanishing(cc, out.decomposition, out.tilde)
    assert set(cofacet_counts(cc, 1)) == {2}
    sph = analyse(cc)
    assert sph.components == 2 and sph.betti == (2, 2)
    pq = projective_quotient(cc)
    rep = analyse(pq)
    assert rep.components == 1 and rep.betti == (1, 1) and rep.projective
    for k in (0, 1):
        assert 2 * pq.count(k) == cc.count(k)
    assert 2 * pq.euler_cells() == cc.euler_cells()


def test_peps_half_four_components(peps_half_outcome):
    out = peps_half_outcome
    cc = extract(out.decomposition, out.tilde)
    rep = analyse(projective_quotient(cc))
    assert rep.components == 4 and rep.betti == (4, 4)
    assert rep.component_betti == ((1, 1),) * 4
    assert analyse(cc).components == 8


def test_line_is_projective_circle():
    out = solve(parse_polys("x0 + 2 * x1 - x2"))
    rep = analyse(projective_quotient(extract(out.decomposition, out.tilde)))
    assert rep.components == 1 and rep.betti == (1, 1)


def test_codim2_single_cycle():
    ps = parse_polys("x0^2 + x1^2 - x2^2\nx3", nvars=4)
    out = solve(ps)
    cc = extract(out.decomposition, out.tilde)
    assert cc.top == 1
    assert check_vanishing(cc, out.decomposition, out.tilde)
    assert set(cofacet_counts(cc, 1)) == {2}
    rep = analyse(projective_quotient(cc))
    assert rep.components == 1 and rep.betti == (1, 1)


@pytest.fixture(scope="module")
def quadric_surface():
    out = solve(parse_polys("x0^2 + x1^2 + x2^2 - x3^2"))
    assert out.certified
    return out


def test_surface_sphere_betti(quadric_surface):
    out = quadric_surface
    cc = extract(out.decomposition, out.tilde)
    assert check_vanishing(cc, out.decomposition, out.tilde)
    assert set(cofacet_counts(cc, 2)) == {2}
    pq = projective_quotient(cc)
    rep = analyse(pq)
    assert rep.components == 1 and rep.betti == (1, 0, 1) and rep.euler == 2
    for k in range(3):
        assert 2 * pq.count(k) == cc.count(k)


def test_surface_off_watertight(quadric_surface, tmp_path):
    out = quadric_surface
    cc = extract(out.decomposition, out.tilde)
    (path,) = export_off(cc, tmp_path / "s.off")
    verts, faces = read_off(path)
    assert verts.shape[1] == 4
    assert open(path).readline().strip() == "4OFF"
    edges = Counter()
    for f in faces:
        assert len(f) >= 3
        for a, b in zip(f, f[1:] + f[:1]):
            edges[frozenset((a, b))] += 1
    assert set(edges.values()) == {2}
    # each sphere of the double cover is a 2-sphere: V - E + F = 2 per sheet
    assert len(verts) - len(edges) + len(faces) == 4


def test_curve_off_parse_back(conic_outcome, tmp_path):
    cc = extract(conic_outcome.decomposition, conic_outcome.tilde)
    paths = export_off(cc, tmp_path / "c.off")
    assert [p.rsplit(".", 1)[-1] for p in paths] == ["off", "edges"]
    verts, faces = read_off(paths[0])
    assert all(len(f) == 2 for f in faces)
    deg = Counter(v for f in faces for v in f)
    assert set(deg.values()) == {2} and len(deg) == len(verts)
    with open(paths[1]) as fh:
        sidecar = [tuple(map(int, ln.split()[1:])) for ln in fh]
    assert sidecar == [tuple(f) for f in faces]
    assert abs(abs(verts).max() - 1) < 1 and all(abs((v * v).sum() - 1) < 1e-12 for v in verts)


def test_empty_off(sphere_outcome, tmp_path):
    cc = extract(sphere_outcome.decomposition, sphere_outcome.tilde)
    paths = export_off(cc, tmp_path / "e.off")
    verts, faces = read_off(paths[0])
    assert len(verts) == 0 and faces == []


def test_export_rejects_high_dimension():
    cc = PLCellComplex(5, [(F(1),)], [Cell(0, frozenset([0]), ())], top=3)
    with pytest.raises(ValueError):
        export_off(cc, "/nonexistent/never-written.off")


@settings(max_examples=12)
@given(st.integers(0, 2**32))
def test_random_curves_euler_and_manifold(seed):
    rng = random.Random(seed)
    ps = PolySystem([random_form(rng, 3, rng.choice([2, 3, 4]), lo=-9, hi=9, den=1)])
    out = solve(ps)
    assert out.certified
    cc = extract(out.decomposition, out.tilde)
    assert check_vanishing(cc, out.decomposition, out.tilde)
    if cc.cells:
        assert set(cofacet_counts(cc, 1)) == {2}
    pq = projective_quotient(cc)
    for c in (cc, pq):
        rep = analyse(c)  # raises on an Euler mismatch
        assert rep.euler == sum((-1) ** k * b for k, b in enumerate(rep.betti))
        assert rep.euler == c.euler_cells() == 0
    # odd degree curves have a pseudo-line, so they are never empty
    if ps.degrees[0] % 2:
        assert analyse(pq).components >= 1
