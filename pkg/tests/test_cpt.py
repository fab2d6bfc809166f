import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from hybridbell.core import Scenario, SymmetryGroup, from_class_vector
from hybridbell.cpt import (Cone, dd_facets, enumerate_facets, lift_check,
                            load_vectors, project_symmetric, save_vectors)
from hybridbell.models import extremal_matrix
from hybridbell import linalg


def test_project_all_plus_one_behavior():
    sc = Scenario(4)
    model = extremal_matrix(sc, (1, 1, 1, 1))
    rays, classes = project_symmetric(model)
    assert len(classes) == 5  # multisets over {1,2} of size 4
    assert rays.shape[1] == 6  # n + 2 including homogenization
    target = (1, 1, 4, 6, 4, 1)
    assert any(tuple(int(x) for x in r) == target for r in rays)


def test_projection_collapses_vertices():
    sc = Scenario(4)
    model = extremal_matrix(sc, (1, 1, 1, 1))
    rays, _ = project_symmetric(model)
    assert rays.shape[0] < model.count  # 32 full vertices collapse


def test_dd_on_simplicial_cones():
    c2 = Cone(2, np.array([[1, 0], [0, 1]]))
    normals = {f.normal for f in dd_facets(c2)}
    assert normals == {(1, 0), (0, 1)}

    c3 = Cone(3, np.eye(3, dtype=int))
    assert len(dd_facets(c3)) == 3

    # a non-simplicial 3D cone: square base pyramid has 4 facets
    sq = Cone(3, np.array([[1, 1, 1], [1, -1, 1], [-1, 1, 1], [-1, -1, 1]]))
    assert len(dd_facets(sq)) == 4


def test_dd_rejects_degenerate_cone():
    flat = Cone(3, np.array([[1, 0, 0], [0, 1, 0], [1, 1, 0]]))
    with pytest.raises(ValueError, match="full-dimensional"):
        dd_facets(flat)


def brute_force_facets(rays):
    """Oracle: exhaustive (dim-1)-subsets of rays -> exact nullspace -> validity."""
    N, d = rays.shape
    found = set()
    for subset in itertools.combinations(range(N), d - 1):
        sub = [rays[i] for i in subset]
        if linalg.rank_exact(sub) != d - 1:
            continue
        null = linalg.nullspace_exact(sub, d)
        if len(null) != 1:
            continue
        w = np.array(null[0], dtype=np.int64)
        vals = rays @ w
        if vals.min() >= 0:
            found.add(tuple(int(x) for x in w))
        elif vals.max() <= 0:
            found.add(tuple(int(-x) for x in w))
    return found


@pytest.mark.parametrize("h", [(1, 1, 1), (2, 1)])
def test_dd_matches_bruteforce_on_three_party_cones(h):
    model = extremal_matrix(Scenario(3), h)
    rays, _ = project_symmetric(model)
    cone = Cone(rays.shape[1], rays)
    dd = {f.normal for f in dd_facets(cone)}
    assert dd == brute_force_facets(rays)


def test_dd_insertion_order_invariance():
    model = extremal_matrix(Scenario(3), (2, 1))
    rays, _ = project_symmetric(model)
    base = {f.normal for f in dd_facets(Cone(rays.shape[1], rays))}
    rng = np.random.default_rng(11)
    for _ in range(3):
        perm = rng.permutation(rays.shape[0])
        shuffled = {f.normal for f in dd_facets(Cone(rays.shape[1], rays[perm]))}
        assert shuffled == base


def test_three_party_local_catalog_contains_mermin():
    entries = enumerate_facets(Scenario(3), (1, 1, 1))
    canon = {e.canonical.key() for e in entries}
    # Mermin: 2 - (112) + (222) >= 0 in some relabeling
    mermin = from_class_vector(3, 2, [0, -1, 0, 1])
    from hybridbell.core import canonicalize
    assert canonicalize(mermin).key() in canon
    assert len(entries) == 2


def test_three_party_hybrid_catalog_is_svetlichny_plus_one():
    entries = enumerate_facets(Scenario(3), (2, 1))
    assert len(entries) == 2
    from hybridbell.core import canonicalize
    svet = from_class_vector(3, 4, [1, -1, -1, 1])
    assert canonicalize(svet).key() in {e.canonical.key() for e in entries}


def test_lift_check_accepts_hypercube_facet_on_local_cone():
    model = extremal_matrix(Scenario(3), (1, 1, 1))
    full = np.hstack([np.ones((model.count, 1), dtype=np.int64),
                      model.matrix.astype(np.int64)])
    cone = Cone(full.shape[1], full)
    # 1 + corr(1,1,1) >= 0: full vector with coefficient on the (1,1,1) slot
    w = np.zeros(9, dtype=np.int64)
    w[0] = 1
    w[1] = 1  # tuples are lexicographic; (1,1,1) is first
    ok, cert = lift_check(w, cone, return_certificate=True)
    assert ok and cert.rank_found == 8
    assert len(cert.witness_rows) == 8


def test_lift_check_rejects_sum_of_facets():
    model = extremal_matrix(Scenario(3), (1, 1, 1))
    full = np.hstack([np.ones((model.count, 1), dtype=np.int64),
                      model.matrix.astype(np.int64)])
    cone = Cone(full.shape[1], full)
    tuples = Scenario(3).full_tuples()
    i111 = tuples.index((1, 1, 1))
    i222 = tuples.index((2, 2, 2))
    # sum of two distinct hypercube facets is valid but not a facet
    w = np.zeros(9, dtype=np.int64)
    w[0] = 2
    w[1 + i111] = 1
    w[1 + i222] = 1
    ok, cert = lift_check(w, cone, return_certificate=True)
    assert not ok
    assert cert.reject_vector  # exact second orthogonal vector as witness
    witness = np.array(cert.reject_vector, dtype=np.int64)
    sat = full[(full @ w) == 0]
    assert (sat @ witness == 0).all()


def test_catalog_entries_are_valid_and_tight_everywhere():
    entries = enumerate_facets(Scenario(4), (2, 2))
    model = extremal_matrix(Scenario(4), (2, 2))
    from hybridbell.models import classical_bound
    for e in entries:
        assert e.classical == e.inequality.constant
        assert classical_bound(e.inequality, model) == e.inequality.constant
        assert e.projected_rank == 6 - 1


def test_catalog_counts_four_party():
    expected = {(1, 1, 1, 1): 5, (2, 2): 7, (3, 1): 6}
    for h, count in expected.items():
        entries = enumerate_facets(Scenario(4), h, run_lift=False)
        assert len(entries) == count, h


def test_catalog_211_certified_count_is_nine():
    # exact enumeration gives 9 canonical classes for the 4-party (2,1,1) model
    # (one more than the original catalog count of 8); every class here is an
    # exactly verified facet, see also the brute-force cross-check above
    entries = enumerate_facets(Scenario(4), (2, 1, 1), run_lift=False)
    assert len(entries) == 9
    canon = {e.canonical.key() for e in entries}
    from hybridbell.core import canonicalize
    displayed = from_class_vector(4, 4, [0, -1, 0, 1, 0])
    assert canonicalize(displayed).key() in canon


def test_vector_file_roundtrip(tmp_path):
    rays = np.array([[1, 2, -3], [0, 1, 4]], dtype=np.int64)
    path = tmp_path / "rays.txt"
    save_vectors(path, rays)
    back = load_vectors(path)
    assert (back == rays).all()
