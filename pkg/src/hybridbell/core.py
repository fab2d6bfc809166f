"""Scenarios, behaviors and party-symmetric Bell expressions, all in exact arithmetic.

Conventions used throughout:

* settings are labelled 1..m; setting 0 denotes the trivial measurement that
  deterministically yields +1 (used by correlator spaces with marginals),
* a full-body correlator is indexed by a setting tuple in {1..m}^n,
* a symmetric expression is stored per setting *multiset*; the symmetrized
  correlator of a multiset is the sum over all distinct setting tuples with
  that multiset (each distinct arrangement appearing exactly once),
* inequalities are stored in the form  constant + sum_mu c_mu (mu) >= 0,
  i.e. with the classical bound folded into the constant term.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import comb, factorial, gcd

import numpy as np

from .linalg import gcd_reduce


class BehaviorSpace(Enum):
    FULL_CORRELATION = "full_correlation"
    WITH_MARGINALS = "with_marginals"
    PROBABILITY = "probability"


class MarginalConvention(Enum):
    """How a marginal of a signaling cell strategy is evaluated.

    UNIFORM_AVERAGE averages the party's outcome over the unspecified settings
    of its cell partners; PARTNER_SETTING_ONE fixes all unspecified partner
    settings to 1.
    """

    UNIFORM_AVERAGE = "uniform_average"
    PARTNER_SETTING_ONE = "partner_setting_one"


@dataclass(frozen=True)
class Scenario:
    """An n-party Bell experiment with m settings per party and +-1 outcomes."""

    n: int
    m: int = 2

    def __post_init__(self):
        if self.n < 2 or self.m < 2:
            raise ValueError(f"need n >= 2 and m >= 2, got n={self.n}, m={self.m}")

    @property
    def full_dim(self) -> int:
        """Dimension of the full-body correlator space."""
        return self.m ** self.n

    @property
    def marginal_dim(self) -> int:
        """Dimension of the correlator space including marginals (setting 0 excluded tuple (0,..,0))."""
        return (self.m + 1) ** self.n - 1

    def full_tuples(self):
        """All full-body setting tuples in lexicographic order."""
        return list(itertools.product(range(1, self.m + 1), repeat=self.n))

    def marginal_tuples(self):
        """All setting tuples over {0..m} except the all-trivial one, lexicographic."""
        return [t for t in itertools.product(range(0, self.m + 1), repeat=self.n)
                if any(x != 0 for x in t)]


def multiset_of(tup) -> tuple:
    """Canonical (sorted ascending) multiset key of a setting tuple."""
    return tuple(sorted(tup))


def tuples_of_multiset(mu, n=None) -> list:
    """All distinct setting tuples whose multiset equals mu."""
    return sorted(set(itertools.permutations(mu)))


def multiset_count(mu) -> int:
    """Number of distinct arrangements of the multiset: n! / prod(multiplicities!)."""
    n = len(mu)
    c = factorial(n)
    for s in set(mu):
        c //= factorial(mu.count(s))
    return c


@dataclass(frozen=True)
class Behavior:
    """A vector of expectation values (or probabilities) for one scenario.

    entries maps a setting tuple to an exact rational correlator, or in
    PROBABILITY space an (outcomes, settings) pair to an exact probability.
    """

    scenario: Scenario
    space: BehaviorSpace
    entries: dict

    def __post_init__(self):
        if self.space is BehaviorSpace.PROBABILITY:
            return
        for t, v in self.entries.items():
            if not -1 <= v <= 1:
                raise ValueError(f"correlator out of [-1, 1] at {t}: {v}")

    def correlator(self, tup) -> Fraction:
        tup = tuple(tup)
        if all(x == 0 for x in tup):
            return Fraction(1)
        return Fraction(self.entries[tup])

    def probability(self, outcomes, settings) -> Fraction:
        return Fraction(self.entries[(tuple(outcomes), tuple(settings))])


def behavior_from_vector(scenario, space, vec) -> Behavior:
    tuples = (scenario.full_tuples() if space is BehaviorSpace.FULL_CORRELATION
              else scenario.marginal_tuples())
    return Behavior(scenario, space, {t: Fraction(v) for t, v in zip(tuples, vec)})


@dataclass(frozen=True)
class SymmetryGroup:
    """Relabelings used when counting inequality classes.

    setting_permutations: permutations of the nontrivial settings applied to
    every party at once (for m=2 this is the global setting swap).
    outcome_flips: a global outcome flip of one setting applied to every party.
    negation: the map c -> -c with unchanged constant; valid for full-body
    spaces, where it is induced by flipping all outcomes of a single party
    (hybrid vertex sets are closed under that relabeling).
    """

    setting_permutations: bool = True
    outcome_flips: bool = True
    negation: bool = True


@dataclass(frozen=True)
class SymmetricInequality:
    """constant + sum_mu coeffs[mu] * (mu) >= 0 with exact rational data."""

    scenario: Scenario
    constant: Fraction
    coeffs: dict = field(hash=False)  # multiset tuple -> Fraction

    def __post_init__(self):
        object.__setattr__(self, "constant", Fraction(self.constant))
        clean = {}
        for mu, c in self.coeffs.items():
            mu = multiset_of(mu)
            if any(s < 0 or s > self.scenario.m for s in mu):
                raise ValueError(f"multiset {mu} has settings outside 0..{self.scenario.m}")
            if len(mu) != self.scenario.n:
                raise ValueError(f"multiset {mu} has wrong arity for n={self.scenario.n}")
            c = Fraction(c)
            if c != 0:
                clean[mu] = clean.get(mu, Fraction(0)) + c
        clean = {mu: c for mu, c in sorted(clean.items()) if c != 0}
        object.__setattr__(self, "coeffs", clean)

    @property
    def is_full_body(self) -> bool:
        return all(0 not in mu for mu in self.coeffs)

    def normalized(self) -> "SymmetricInequality":
        """Scale so all numbers are integers with overall gcd 1."""
        vals = [self.constant] + list(self.coeffs.values())
        den = 1
        for v in vals:
            den = den * v.denominator // gcd(den, v.denominator)
        ints = [int(v * den) for v in vals]
        ints = gcd_reduce(ints)
        return SymmetricInequality(
            self.scenario, Fraction(ints[0]),
            {mu: Fraction(c) for mu, c in zip(self.coeffs, ints[1:])})

    def class_vector(self):
        """For m=2 full-body inequalities: coefficients by ell = number of 2s, ell=0..n."""
        if self.scenario.m != 2 or not self.is_full_body:
            raise ValueError("class_vector is defined for m=2 full-body inequalities")
        out = [Fraction(0)] * (self.scenario.n + 1)
        for mu, c in self.coeffs.items():
            out[sum(1 for s in mu if s == 2)] = c
        return out

    def key(self):
        nrm = self.normalized()
        return (int(nrm.constant), tuple((mu, int(c)) for mu, c in sorted(nrm.coeffs.items())))

    def __hash__(self):
        return hash(self.key())

    def __eq__(self, other):
        return isinstance(other, SymmetricInequality) and self.key() == other.key()

    def __str__(self):
        return render_text(self)


def from_class_vector(n, constant, cvec) -> SymmetricInequality:
    """Build an m=2 full-body inequality from per-class coefficients (ell = #2s)."""
    coeffs = {}
    for ell, c in enumerate(cvec):
        if c:
            coeffs[tuple([1] * (n - ell) + [2] * ell)] = Fraction(c)
    return SymmetricInequality(Scenario(n, 2), Fraction(constant), coeffs)


# ---------------------------------------------------------------------------
# expansion and evaluation


def expand_symmetric(ineq: SymmetricInequality) -> dict:
    """Expand per-multiset coefficients to per-setting-tuple coefficients.

    Each multiset with multiplicities (k_0..k_m) contributes its coefficient to
    exactly n!/(k_0! ... k_m!) distinct tuples.
    """
    out = {}
    for mu, c in ineq.coeffs.items():
        for t in tuples_of_multiset(mu):
            out[t] = c
    return out


def expanded_int_vector(ineq: SymmetricInequality, tuples) -> np.ndarray:
    """Integer coefficient vector of the normalized expansion over the given tuple order."""
    nrm = ineq.normalized()
    exp = expand_symmetric(nrm)
    return np.array([int(exp.get(t, 0)) for t in tuples], dtype=np.int64)


def _marginal_from_probability(b: Behavior, tup, convention: MarginalConvention) -> Fraction:
    """Correlator of a possibly-marginal tuple from a full probability table."""
    sc = b.scenario
    free = [k for k in range(sc.n) if tup[k] == 0]
    if convention is MarginalConvention.PARTNER_SETTING_ONE:
        fills = [tuple([1] * len(free))]
    else:
        fills = list(itertools.product(range(1, sc.m + 1), repeat=len(free)))
    total = Fraction(0)
    for fill in fills:
        settings = list(tup)
        for k, s in zip(free, fill):
            settings[k] = s
        settings = tuple(settings)
        for outcomes in itertools.product((1, -1), repeat=sc.n):
            sign = 1
            for k in range(sc.n):
                if tup[k] != 0:
                    sign *= outcomes[k]
            total += sign * b.probability(outcomes, settings)
    return total / len(fills)


def evaluate(ineq: SymmetricInequality, b: Behavior,
             convention: MarginalConvention = MarginalConvention.UNIFORM_AVERAGE) -> Fraction:
    """Exact value of constant + sum c * corr on a behavior; >= 0 certifies non-violation."""
    if b.scenario != ineq.scenario:
        raise ValueError(f"scenario mismatch: {ineq.scenario} vs {b.scenario}")
    total = Fraction(ineq.constant)
    expansion = expand_symmetric(ineq)
    if b.space is BehaviorSpace.PROBABILITY:
        for t, c in expansion.items():
            total += c * _marginal_from_probability(b, t, convention)
        return total
    if b.space is BehaviorSpace.FULL_CORRELATION and not ineq.is_full_body:
        raise ValueError("inequality has marginal terms but behavior is full-correlation only")
    for t, c in expansion.items():
        total += c * b.correlator(t)
    return total


# ---------------------------------------------------------------------------
# canonicalization


def _apply_relabeling(n, m, coeffs, perm, flips):
    """Apply a global setting permutation and per-setting outcome flips to multiset coeffs."""
    out = {}
    for mu, c in coeffs.items():
        new_mu = tuple(sorted(perm[s] if s != 0 else 0 for s in mu))
        sign = 1
        for s in mu:
            if s != 0 and flips[s - 1]:
                sign = -sign
        out[new_mu] = out.get(new_mu, Fraction(0)) + sign * c
    return {mu: c for mu, c in out.items() if c != 0}


def orbit(ineq: SymmetricInequality, g: SymmetryGroup):
    """All images of the inequality under the group, as normalized inequalities."""
    sc = ineq.scenario
    perms = (list(itertools.permutations(range(1, sc.m + 1))) if g.setting_permutations
             else [tuple(range(1, sc.m + 1))])
    flipsets = (list(itertools.product((False, True), repeat=sc.m)) if g.outcome_flips
                else [(False,) * sc.m])
    negs = [False, True] if g.negation else [False]
    images = []
    base = ineq.normalized()
    for p in perms:
        perm = {s + 1: p[s] for s in range(sc.m)}
        for flips in flipsets:
            cc = _apply_relabeling(sc.n, sc.m, base.coeffs, perm, flips)
            for neg in negs:
                if neg:
                    if not base.is_full_body:
                        continue  # negation is only a model symmetry in full-body space
                    cc2 = {mu: -c for mu, c in cc.items()}
                else:
                    cc2 = cc
                images.append(SymmetricInequality(sc, base.constant, dict(cc2)))
    return images


def canonicalize(ineq: SymmetricInequality, g: SymmetryGroup = SymmetryGroup()) -> SymmetricInequality:
    """Lexicographically minimal representative of the orbit; two inequalities are
    equivalent under g iff their canonical forms are identical."""
    return min(orbit(ineq, g), key=lambda q: q.key())


# ---------------------------------------------------------------------------
# rendering and serialization


def _fmt_multiset(mu) -> str:
    # paper-style: ascending digits for pure full-body, descending when a
    # trivial setting appears (marginal terms)
    digits = sorted(mu, reverse=True) if 0 in mu else sorted(mu)
    return "(" + "".join(str(d) for d in digits) + ")"


def render_text(ineq: SymmetricInequality) -> str:
    """Plain-text form mirroring the tables, e.g. '+16 - (1112) -2 (1122) +3 (1222) +4 (2222)'."""
    nrm = ineq.normalized()
    parts = [f"+{nrm.constant}" if nrm.constant >= 0 else f"-{-nrm.constant}"]
    for mu, c in sorted(nrm.coeffs.items()):
        ci = int(c)
        sign = "+" if ci > 0 else "-"
        mag = abs(ci)
        coef = "" if mag == 1 else str(mag)
        parts.append(f"{sign}{coef} {_fmt_multiset(mu)}".replace("+ ", "+ ").strip())
    return " ".join(parts) + " >= 0"


def _frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def ineq_to_dict(ineq: SymmetricInequality, bounds=None, model=None) -> dict:
    d = {
        "n": ineq.scenario.n,
        "m": ineq.scenario.m,
        "constant": _frac_str(ineq.constant),
        "coeffs": [{"multiset": list(mu), "c": _frac_str(c)}
                   for mu, c in sorted(ineq.coeffs.items())],
    }
    if bounds:
        d["bounds"] = {k: (_frac_str(v) if isinstance(v, (int, Fraction)) else v)
                       for k, v in bounds.items()}
    if model is not None:
        d["model"] = "(" + ",".join(str(x) for x in model) + ")"
    return d


def ineq_from_dict(d: dict) -> SymmetricInequality:
    sc = Scenario(int(d["n"]), int(d["m"]))
    coeffs = {tuple(item["multiset"]): Fraction(item["c"]) for item in d["coeffs"]}
    return SymmetricInequality(sc, Fraction(d["constant"]), coeffs)


def ineq_to_json(ineq: SymmetricInequality, **kw) -> str:
    return json.dumps(ineq_to_dict(ineq, **kw), indent=2)


def ineq_from_json(s: str) -> SymmetricInequality:
    return ineq_from_dict(json.loads(s))
