import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from isoplex.linalg import matrix_rank
from isoplex.simplex import (
    choose_refinement_edge,
    cone_diameter,
    dump,
    face_matrix,
    faces_iter,
    from_rays,
    initial_decomposition,
    load,
    refine,
    validate,
)

F = Fraction


def symmetric(dec):
    cones = set(dec.cones.values())
    return all(dec.antipodal_face(c) in cones for c in cones)


@pytest.mark.parametrize("n,cones,verts", [(1, 4, 4), (2, 8, 6), (3, 16, 8)])
def test_initial_counts(n, cones, verts):
    dec = initial_decomposition(n)
    assert len(dec.cones) == cones and len(dec.vertices) == verts
    assert validate(dec, samples=300)
    assert symmetric(dec)


def test_initial_rejects_n0():
    with pytest.raises(ValueError):
        initial_decomposition(0)


@pytest.mark.parametrize("n,counts", [(1, [4, 4]), (2, [6, 12, 8]), (3, [8, 24, 32, 16])])
def test_face_counts_of_cross_polytope(n, counts):
    # faces of the boundary of the cross-polytope: C(n+1, k+1) 2^(k+1)
    dec = initial_decomposition(n)
    by_dim = [0] * (n + 1)
    for f, cof in faces_iter(dec):
        by_dim[len(f) - 1] += 1
        assert cof and all(set(f) <= set(dec.cones[c]) for c in cof)
    assert by_dim == counts
    assert by_dim == [math.comb(n + 1, k + 1) * 2 ** (k + 1) for k in range(n + 1)]


def test_faces_iter_order_is_dimension_major():
    keys = [f for f, _ in faces_iter(initial_decomposition(2))]
    assert keys == sorted(keys, key=lambda f: (len(f), f))


def test_face_matrix_examples():
    dec = initial_decomposition(2)
    assert face_matrix(dec, (0,)) == [[1], [0], [0]]
    assert face_matrix(dec, (0, 2)) == [[1, 0], [0, 1], [0, 0]]
    rr = refine(dec, (0, 2))
    v = rr.new_vertices[0]
    assert dec.vertices.get(v) is None
    assert [r[0] for r in face_matrix(rr.dec, (v,))] == [1, 1, 0]
    with pytest.raises(KeyError):
        face_matrix(dec, (0, 1))


def test_refine_quadrants():
    rr = refine(initial_decomposition(1), (0, 2))
    assert len(rr.dec.cones) == 6 and len(rr.dec.vertices) == 6
    assert rr.dec.generation == 1
    assert symmetric(rr.dec) and validate(rr.dec, samples=200)
    assert set(rr.removed_cones) and set(rr.added_cones)


def test_refine_unknown_edge():
    with pytest.raises(KeyError):
        refine(initial_decomposition(2), (0, 1))


def test_validate_flags_dependent_ray():
    dec = initial_decomposition(2)
    rays = {vid: v.ray for vid, v in dec.vertices.items()}
    cones = dict(dec.cones)
    cones[0] = (0, 1, 2)  # +e0, -e0, +e1: rank 2
    bad = from_rays(rays, cones)
    rep = validate(bad, samples=0)
    assert not rep and rep.kind == "rank" and 0 in rep.cones


def test_validate_flags_gap():
    dec = initial_decomposition(2)
    cones = dict(dec.cones)
    c = cones.pop(0)
    anti = dec.antipodal_face(c)
    cones = {k: v for k, v in cones.items() if v != anti}
    rep = validate(from_rays({v: x.ray for v, x in dec.vertices.items()}, cones), samples=100)
    assert not rep


def test_choose_edge_longest():
    rays = {0: (1, 0, 0), 1: (0, 1, 0), 2: (1, 1, 1), 3: (-1, 0, 0), 4: (0, -1, 0), 5: (-1, -1, -1)}
    dec = from_rays(rays, {0: (0, 1, 2), 1: (3, 4, 5)})
    # |u0-u1| = 1.41, |u0-u2| = |u1-u2| = 0.92
    assert choose_refinement_edge(dec, (0, 1, 2)) == (0, 1)


def test_choose_edge_tie_uses_smallest_pair():
    dec = initial_decomposition(2)
    assert choose_refinement_edge(dec, (1, 3, 5)) == (1, 3)
    assert choose_refinement_edge(dec, (0, 2)) == (0, 2)


def test_choose_edge_for_vertex_uses_incident_edge():
    dec = refine(initial_decomposition(2), (0, 2)).dec
    e = choose_refinement_edge(dec, (0,))
    assert 0 in e and e in dec.faces


def test_diameter_decays():
    dec = initial_decomposition(2)
    history = [max(cone_diameter(dec, c) for c in dec.cones)]
    for _ in range(10):
        top = history[-1]
        while True:
            worst = [c for c in dec.cones if cone_diameter(dec, c) >= top - 1e-12]
            if not worst:
                break
            dec = refine(dec, choose_refinement_edge(dec, dec.cones[worst[0]])).dec
        history.append(max(cone_diameter(dec, c) for c in dec.cones))
    assert all(b < a for a, b in zip(history, history[1:]))
    assert history[-1] < history[0] / 2


def test_refine_fuzz_200_keeps_invariants():
    rng = random.Random(11)
    dec = initial_decomposition(2)
    for step in range(200):
        edges = sorted(f for f in dec.faces if len(f) == 2)
        rr = refine(dec, rng.choice(edges))
        old = dec
        dec = rr.dec
        # faces outside the dirty set keep their cofaces
        for f, cof in old.faces.items():
            if f not in rr.dirty and f not in rr.removed_faces:
                assert dec.faces[f] == cof
        assert len(dec.vertices) == len(old.vertices) + 2
        if step % 20 == 19:
            assert validate(dec, samples=200, seed=step), validate(dec, samples=200, seed=step).message
    assert symmetric(dec)
    for f in dec.faces:
        assert matrix_rank(face_matrix(dec, f)) == len(f)


@settings(max_examples=25)
@given(st.integers(0, 2**32), st.integers(1, 3))
def test_random_refinements_valid(seed, n):
    rng = random.Random(seed)
    dec = initial_decomposition(n)
    for _ in range(rng.randint(1, 15)):
        dec = refine(dec, rng.choice(sorted(f for f in dec.faces if len(f) == 2))).dec
    rep = validate(dec, samples=100, seed=seed % 1000)
    assert rep, rep.message
    assert symmetric(dec)
    for v in dec.vertices.values():
        assert max(abs(x) for x in v.ray) == 1
        assert sum(u * u for u in v.unit) == pytest.approx(1.0)
        assert dec.vertices[v.antipode].antipode == v.id


def test_dump_load_round_trip():
    rng = random.Random(3)
    dec = initial_decomposition(2)
    for _ in range(10):
        dec = refine(dec, rng.choice(sorted(f for f in dec.faces if len(f) == 2))).dec
    back = load(dump(dec))
    assert back.cones == dec.cones
    assert {v: x.ray for v, x in back.vertices.items()} == {v: x.ray for v, x in dec.vertices.items()}
    assert back.faces == dec.faces
