"""Cone projection: symmetric-subspace projection, exact double description,
and full-cone facet certificates.

The pipeline turns the extremal behaviors of a hybrid model into rays of a
homogenized cone, projects them onto the party-symmetric coordinates, and
enumerates the facets of the projected cone with an exact double description
run.  Every facet normal is certified: validity is asserted on every ray, and
the saturating-ray rank is verified exactly.  A separate lift check records
whether a projected facet is also a facet of the full (unprojected) cone.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np

from . import linalg
from .core import (BehaviorSpace, Scenario, SymmetricInequality, SymmetryGroup,
                   canonicalize, from_class_vector, multiset_of)
from .models import HybridModel, classical_bound, extremal_matrix


@dataclass
class Cone:
    """A homogenized cone given by integer rays (homogenizing coordinate first)."""

    dim: int
    rays: np.ndarray  # (nrays, dim) int64

    def __post_init__(self):
        self.rays = np.asarray(self.rays, dtype=np.int64)
        if self.rays.ndim != 2 or self.rays.shape[1] != self.dim:
            raise ValueError("ray matrix shape does not match dim")
        if (self.rays == 0).all(axis=1).any():
            raise ValueError("zero ray")

    def rank(self) -> int:
        return linalg.rank_int(self.rays)


@dataclass
class FacetCandidate:
    """A facet of the projected cone: integer normal plus saturating-ray data."""

    normal: tuple
    tight_rays: list     # indices into the projected ray list
    rank: int            # exact rank of the tight rays (== dim-1 for a facet)


def project_symmetric(model_or_matrix, scenario: Scenario | None = None):
    """Project full-correlation behaviors onto symmetric coordinates.

    Output rays are (1, s_0, ..., s_n) for m=2, where s_l sums the correlators
    over all setting tuples whose multiset has l entries equal to 2; duplicates
    are merged.  General m uses one coordinate per setting multiset.
    """
    if isinstance(model_or_matrix, HybridModel):
        if model_or_matrix.space is not BehaviorSpace.FULL_CORRELATION:
            raise ValueError("projection expects full-correlation behaviors")
        mat = model_or_matrix.matrix
        scenario = model_or_matrix.scenario
    else:
        mat = np.asarray(model_or_matrix)
        if scenario is None:
            raise ValueError("scenario required with a bare matrix")
    tuples = scenario.full_tuples()
    classes = sorted({multiset_of(t) for t in tuples})
    class_index = {mu: i for i, mu in enumerate(classes)}
    P = np.zeros((len(tuples), len(classes)), dtype=np.int64)
    for j, t in enumerate(tuples):
        P[j, class_index[multiset_of(t)]] = 1
    S = mat.astype(np.int64) @ P
    H = np.hstack([np.ones((S.shape[0], 1), dtype=np.int64), S])
    return np.unique(H, axis=0), classes


def _initial_basis(rays):
    """Greedy lexicographic scan for dim independent rays (incremental exact echelon)."""
    dim = rays.shape[1]
    chosen = []
    basis = []  # reduced Fraction echelon rows
    pivots = []
    for i in range(rays.shape[0]):
        r = [Fraction(int(x)) for x in rays[i]]
        for b, p in zip(basis, pivots):
            if r[p] != 0:
                f = r[p]
                r = [a - f * c for a, c in zip(r, b)]
        lead = next((j for j, x in enumerate(r) if x != 0), None)
        if lead is None:
            continue
        basis.append([x / r[lead] for x in r])
        pivots.append(lead)
        chosen.append(i)
        if len(chosen) == dim:
            return chosen
    raise ValueError(f"cone is not full-dimensional: ray rank {len(chosen)} < {dim}")


def _combine(rp, rm, vp, vm):
    """New ray on the hyperplane: vp*rm - vm*rp with vp > 0 > vm; gcd-reduced."""
    w = [int(vp) * int(b) - int(vm) * int(a) for a, b in zip(rp, rm)]
    return linalg.gcd_reduce(w)


_BAREISS_GUARD = 1 << 58


def _rank_at_least(rows, target):
    """Exact test rank(rows) >= target via fraction-free integer elimination.

    Falls back to Fraction elimination if intermediate values grow beyond the
    int64 guard (cannot happen for the small projected-ray entries used here,
    but the guard keeps the routine honest on other inputs).
    """
    if target <= 0:
        return True
    A = np.array(rows, dtype=np.int64, copy=True)
    nrows, ncols = A.shape
    if nrows < target:
        return False
    prev = 1
    r = 0
    for c in range(ncols):
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        if np.abs(A).max() > _BAREISS_GUARD // max(1, int(np.abs(A[r]).max())):
            return linalg.rank_exact(list(rows), limit=target) >= target
        below = A[r + 1:]
        A[r + 1:] = (A[r, c] * below - np.outer(below[:, c], A[r])) // prev
        prev = int(A[r, c])
        r += 1
        if r >= target:
            return True
        if r == nrows:
            break
    return r >= target


def dd_facets(cone: Cone) -> list:
    """Facet normals of a full-dimensional cone via the double description method.

    The rays of `cone` act as the inequality constraints of the polar cone and
    are inserted in lexicographic order; the extreme rays of the polar are the
    facet normals of `cone`.  Adjacency of extreme rays uses the algebraic
    rank test (rank of the commonly tight constraints == dim-2, exact integer
    arithmetic).  Every returned normal carries an exact validity and rank
    certificate against the complete ray list.
    """
    rays = np.unique(cone.rays, axis=0)  # unique sorts lexicographically
    dim = cone.dim
    rank = linalg.rank_int(rays)
    if rank != dim:
        raise ValueError(f"cone is not full-dimensional: rank {rank} < {dim}")

    basis_idx = _initial_basis(rays)
    B = [[int(x) for x in rays[i]] for i in basis_idx]
    dual = []
    for j in range(dim):  # columns of B^{-1}: simplicial starting cone
        rhs = [1 if i == j else 0 for i in range(dim)]
        sol = linalg.solve_upper_int(B, rhs)
        den = 1
        for x in sol:
            den = den * x.denominator // gcd(den, x.denominator)
        dual.append(linalg.gcd_reduce([int(x * den) for x in sol]))

    processed = list(basis_idx)
    remaining = [i for i in range(rays.shape[0]) if i not in set(basis_idx)]

    def exact_dots(mat, vec):
        big = max((abs(int(x)) for x in vec), default=0)
        if big and big < (1 << 40):
            return (mat @ np.asarray(vec, dtype=np.int64)).tolist()
        return (mat.astype(object) @ np.array(vec, dtype=object)).tolist()

    def tight_vector(vec):
        return np.array([v == 0 for v in exact_dots(rays[processed], vec)], dtype=bool)

    tight = [tight_vector(r) for r in dual]

    for ci in remaining:
        a = rays[ci]
        vals = [sum(int(x) * int(y) for x, y in zip(a, r)) for r in dual]
        if all(v >= 0 for v in vals):
            processed.append(ci)
            for i, v in enumerate(vals):
                tight[i] = np.append(tight[i], v == 0)
            continue
        pos = [i for i, v in enumerate(vals) if v > 0]
        zero = [i for i, v in enumerate(vals) if v == 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        proc_mat = rays[processed]
        new_rays = []
        for ip in pos:
            for im in neg:
                commons = np.nonzero(tight[ip] & tight[im])[0]
                if commons.size < dim - 2:
                    continue
                if dim > 2 and not _rank_at_least(proc_mat[commons], dim - 2):
                    continue
                new_rays.append(_combine(dual[ip], dual[im], vals[ip], vals[im]))
        keep = pos + zero
        dual = [dual[i] for i in keep] + new_rays
        new_tight = [np.append(tight[i], vals[i] == 0) for i in keep]
        processed.append(ci)
        new_tight += [tight_vector(r) for r in new_rays]
        tight = new_tight

    # final exact validity + facet-rank certificates against all rays
    facets = []
    seen = set()
    for r in dual:
        key = tuple(linalg.gcd_reduce(r))
        if key in seen:
            continue
        seen.add(key)
        vals = exact_dots(rays, list(key))
        if min(vals) < 0:
            raise AssertionError(f"double description produced an invalid normal {key}")
        tight_idx = [i for i, v in enumerate(vals) if v == 0]
        if not _rank_at_least(rays[tight_idx], dim - 1):
            raise AssertionError(f"double description normal {key} is not facet-defining")
        facets.append(FacetCandidate(normal=key, tight_rays=tight_idx, rank=dim - 1))
    facets.sort(key=lambda f: f.normal)
    return facets


# ---------------------------------------------------------------------------
# lift check against the full cone


@dataclass
class LiftCertificate:
    is_facet: bool
    rank_found: int
    witness_rows: list = field(default_factory=list)  # row indices of independent tight rays
    reject_vector: tuple = ()  # second vector orthogonal to all tight rays


def _expand_to_full(normal, scenario, classes):
    """Lift a symmetric normal (c0, c_mu...) to the full homogenized coefficient vector."""
    tuples = scenario.full_tuples()
    class_index = {mu: i for i, mu in enumerate(classes)}
    w = np.empty(len(tuples) + 1, dtype=np.int64)
    w[0] = normal[0]
    for j, t in enumerate(tuples):
        w[1 + j] = normal[1 + class_index[multiset_of(t)]]
    return w


def lift_check(candidate, full_cone: Cone, scenario: Scenario | None = None,
               classes=None, return_certificate=False):
    """True iff the full-space rays saturating the lifted inequality have rank d-1.

    Accepts either a FacetCandidate (with `scenario` and `classes` to expand
    the symmetric normal) or a ready full-space integer vector.  The accept
    path verifies a modular independent subset exactly; the reject path
    produces a second exact orthogonal vector, so both answers are certified.
    """
    if isinstance(candidate, FacetCandidate):
        if scenario is None or classes is None:
            raise ValueError("scenario and classes are required to lift a FacetCandidate")
        w = _expand_to_full(candidate.normal, scenario, classes)
    else:
        w = np.asarray(candidate, dtype=np.int64)
    d = full_cone.dim
    vals = full_cone.rays @ w
    if int(vals.min()) < 0:
        raise ValueError("candidate is not valid on the full cone")
    sat_idx = np.nonzero(vals == 0)[0]
    sat = full_cone.rays[sat_idx]
    if sat.shape[0] == 0:
        cert = LiftCertificate(False, 0)
        return (False, cert) if return_certificate else False

    # rows independent mod p are independent over Q, so modular pivot rows give
    # an exact lower-bound certificate; only an undercount needs repair below.
    # A small prefix usually already has full rank, so try cheap subsets first.
    r_mod, piv = 0, []
    for size in sorted({min(4 * d, sat.shape[0]), min(64 * d, sat.shape[0]), sat.shape[0]}):
        r_mod, piv = linalg.rank_mod_p(sat[:size], return_pivot_rows=True)
        if r_mod >= d - 1:
            break
    if r_mod >= d - 1:
        cert = LiftCertificate(True, d - 1,
                               witness_rows=[int(sat_idx[i]) for i in piv[:d - 1]])
        return (True, cert) if return_certificate else True

    # r_mod < d-1: grow an exactly-independent row set until its exact nullspace
    # is either orthogonal to every saturating ray (certified reject via a second
    # orthogonal vector) or shrinks to multiples of the candidate (facet).
    span_rows = list(piv)
    while True:
        null = linalg.nullspace_exact([sat[i] for i in span_rows], d)
        grew = False
        witness = None
        for v in null:
            resid = _exact_matvec(sat, v)
            bad = next((i for i, x in enumerate(resid) if int(x) != 0), None)
            if bad is not None:
                span_rows.append(bad)  # strictly increases the exact span rank
                grew = True
                break
            if not _is_multiple(v, [int(x) for x in w]):
                witness = v
                break
        if grew:
            continue
        if witness is not None:
            cert = LiftCertificate(False, len(span_rows), reject_vector=tuple(witness))
            return (False, cert) if return_certificate else False
        # nullspace is exactly the line spanned by the candidate: rank d-1
        cert = LiftCertificate(True, d - 1, witness_rows=[int(sat_idx[i]) for i in span_rows])
        return (True, cert) if return_certificate else True


def _is_multiple(v, w):
    """True if integer vectors v, w are proportional."""
    vr = linalg.gcd_reduce(v)
    wr = linalg.gcd_reduce(w)
    return vr == wr or [-x for x in vr] == wr


def _exact_matvec(mat_int, vec_ints):
    """Exact mat @ vec for an int matrix with small entries and arbitrary int vec."""
    big = max((abs(int(x)) for x in vec_ints), default=0)
    if big < (1 << 55) // max(1, mat_int.shape[1]):
        return mat_int @ np.asarray([int(x) for x in vec_ints], dtype=np.int64)
    vv = np.array([int(x) for x in vec_ints], dtype=object)
    chunks = [mat_int[s:s + 65536].astype(object) @ vv
              for s in range(0, mat_int.shape[0], 65536)]
    return np.concatenate(chunks)


# ---------------------------------------------------------------------------
# catalog pipeline


@dataclass
class CatalogEntry:
    """One symmetric inequality of a model catalog, with certificates."""

    inequality: SymmetricInequality
    canonical: SymmetricInequality
    h: tuple
    orbit_size: int
    projected_rank: int       # tight-ray rank in the projected cone (== proj dim - 1)
    tight_projected: int      # number of tight projected rays
    is_full_facet: bool       # survives the lift check to the full cone
    lift_rank: int
    classical: Fraction

    @property
    def bound_form(self):
        return self.inequality


def _is_trivial(normal):
    """Trivial hypercube-type facet: support on a single multiset coordinate."""
    support = [i for i, c in enumerate(normal[1:]) if c != 0]
    return len(support) <= 1


def enumerate_facets(scenario: Scenario, h, group: SymmetryGroup = SymmetryGroup(),
                     run_lift: bool = True, cap=None) -> list:
    """Full catalog pipeline for one hybrid model.

    extremal behaviors -> symmetric projection -> double description ->
    trivial-facet filter -> canonicalize/dedupe -> classical bounds and
    (optionally) full-cone lift certificates.

    The returned canonical classes are the model's optimal party-symmetric
    full-body correlation inequalities; the lift certificate records which of
    them are in addition facets of the unprojected cone (not required for
    membership in the catalog).
    """
    kwargs = {} if cap is None else {"cap": cap}
    model = extremal_matrix(scenario, h, BehaviorSpace.FULL_CORRELATION, **kwargs)
    projected, classes = project_symmetric(model)
    cone = Cone(projected.shape[1], projected)
    facets = dd_facets(cone)

    full_rays = np.hstack([np.ones((model.count, 1), dtype=np.int64),
                           model.matrix.astype(np.int64)])
    full_cone = Cone(full_rays.shape[1], full_rays)

    by_canonical = {}
    for f in facets:
        if _is_trivial(f.normal):
            continue
        coeffs = {mu: Fraction(int(c)) for mu, c in zip(classes, f.normal[1:]) if c != 0}
        ineq = SymmetricInequality(scenario, Fraction(int(f.normal[0])), coeffs)
        canon = canonicalize(ineq, group)
        rec = by_canonical.setdefault(canon, {"members": [], "facet": f})
        rec["members"].append((ineq, f))

    entries = []
    for canon, rec in by_canonical.items():
        ineq, f = rec["members"][0]
        cb = classical_bound(ineq, model)
        if cb != ineq.constant:
            raise AssertionError(f"facet {ineq} is not tight: bound {cb}")
        if run_lift:
            ok, cert = lift_check(f, full_cone, scenario, classes, return_certificate=True)
            lift_rank = cert.rank_found
        else:
            ok, lift_rank = False, -1
        entries.append(CatalogEntry(
            inequality=ineq, canonical=canon, h=tuple(h),
            orbit_size=len(rec["members"]),
            projected_rank=f.rank, tight_projected=len(f.tight_rays),
            is_full_facet=ok, lift_rank=lift_rank, classical=cb))
    entries.sort(key=lambda e: e.canonical.key())
    return entries


# ---------------------------------------------------------------------------
# plain-text matrix interchange (one integer vector per line)


def save_vectors(path, vectors):
    arr = [list(map(int, v)) for v in vectors]
    with open(path, "w") as fh:
        fh.write(f"{len(arr)} {len(arr[0]) if arr else 0}\n")
        for row in arr:
            fh.write(" ".join(str(x) for x in row) + "\n")


def load_vectors(path):
    with open(path) as fh:
        header = fh.readline().split()
        nrows, ncols = int(header[0]), int(header[1])
        rows = []
        for _ in range(nrows):
            row = [int(x) for x in fh.readline().split()]
            if len(row) != ncols:
                raise ValueError("malformed vector file")
            rows.append(row)
    return np.array(rows, dtype=np.int64)
