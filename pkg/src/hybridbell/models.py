"""Hybrid hidden-variable models: partitions, extremal behaviors, classical bounds.

A hybrid model is labelled by a cardinality tuple h (sorted cell sizes).  Its
extremal behaviors are products of deterministic cell strategies over all
partitions with that cell-size profile; inside a cell each party's outcome may
depend on the joint settings of the whole cell (signaling within the cell).

For the full-body correlator space only the product of the outcomes within a
cell matters, so a cell of size s contributes an arbitrary sign function of
its m^s joint settings.  Deduplication therefore happens in correlator space,
never in strategy space.
"""

from __future__ import annotations

import itertools
import json
import struct
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, gcd

import numpy as np

from .core import (Behavior, BehaviorSpace, MarginalConvention, Scenario,
                   SymmetricInequality, expand_symmetric)

DEFAULT_STRATEGY_CAP = 2 ** 26


def normalize_h(n, h):
    """Validate and sort a cardinality tuple: positive cells summing to n, nonincreasing."""
    h = tuple(sorted((int(x) for x in h), reverse=True))
    if not h or any(x <= 0 for x in h):
        raise ValueError(f"cell sizes must be positive: {h}")
    if sum(h) != n:
        raise ValueError(f"cell sizes {h} do not sum to n={n}")
    return h


def partitions_of_type(n, h):
    """All set partitions of range(n) whose sorted cell sizes equal h.

    The count is n! / (prod_i h_i! * prod_s mult_s!) where mult_s counts cells
    of equal size s.
    """
    h = normalize_h(n, h)

    def rec(remaining, size_counter):
        if not remaining:
            yield []
            return
        anchor = remaining[0]
        rest = remaining[1:]
        for s in sorted(size_counter):
            if size_counter[s] == 0:
                continue
            size_counter[s] -= 1
            for others in itertools.combinations(rest, s - 1):
                cell = (anchor,) + others
                rem2 = tuple(x for x in rest if x not in others)
                for tail in rec(rem2, size_counter):
                    yield [cell] + tail
            size_counter[s] += 1

    return [tuple(p) for p in rec(tuple(range(n)), Counter(h))]


def partition_count(n, h):
    """Closed form for the number of partitions of a given type."""
    h = normalize_h(n, h)
    c = factorial(n)
    for s in h:
        c //= factorial(s)
    for mult in Counter(h).values():
        c //= factorial(mult)
    return c


def _sign_functions(npoints):
    """All 2^npoints sign vectors of length npoints, as an int8 array of +-1."""
    count = 1 << npoints
    bits = (np.arange(count)[:, None] >> np.arange(npoints)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def _cell_setting_index(tuples, cell, m):
    """Mixed-radix index of the cell's joint settings for every full setting tuple."""
    idx = np.zeros(tuples.shape[0], dtype=np.int64)
    for k in cell:
        idx = idx * m + tuples[:, k]
    return idx


@dataclass
class HybridModel:
    """A hybrid model with its deduplicated extremal behaviors.

    The behaviors are held as an integer matrix (`matrix`), one row per
    behavior, scaled by `denominator` so entries are exact integers.  For the
    full-correlation space the rows are +-1 and the denominator is 1.
    """

    scenario: Scenario
    h: tuple
    space: BehaviorSpace
    matrix: np.ndarray
    denominator: int = 1
    convention: MarginalConvention = MarginalConvention.UNIFORM_AVERAGE

    @property
    def count(self) -> int:
        return self.matrix.shape[0]

    def tuples(self):
        return (self.scenario.full_tuples() if self.space is BehaviorSpace.FULL_CORRELATION
                else self.scenario.marginal_tuples())

    def behaviors(self):
        """Iterate rows as Behavior objects (use the matrix directly for bulk work)."""
        tuples = self.tuples()
        den = self.denominator
        for row in self.matrix:
            yield Behavior(self.scenario, self.space,
                           {t: Fraction(int(v), den) for t, v in zip(tuples, row)})

    def __iter__(self):
        return self.behaviors()


def _enumerate_full_correlation(scenario, h, cap):
    n, m = scenario.n, scenario.m
    ntup = scenario.full_dim
    tuples = np.array(scenario.full_tuples(), dtype=np.int64) - 1
    if ntup <= 63:
        weights = (np.uint64(1) << np.arange(ntup, dtype=np.uint64))
    else:
        weights = None
    chunks_keys, chunks_rows = [], []
    for part in partitions_of_type(n, h):
        total = 1
        for cell in part:
            total *= 1 << (m ** len(cell))
        if total > cap:
            raise MemoryError(
                f"partition {part} needs {total} strategy products; cap is {cap}")
        block = np.ones((1, ntup), dtype=np.int8)
        for cell in part:
            idx = _cell_setting_index(tuples, cell, m)
            funs = _sign_functions(m ** len(cell))
            vals = funs[:, idx]
            block = (block[:, None, :] * vals[None, :, :]).reshape(-1, ntup)
        if weights is not None:
            keys = (block < 0).astype(np.uint64) @ weights
        else:
            keys = np.array([hash(r.tobytes()) for r in block], dtype=np.int64)
        keys, first = np.unique(keys, return_index=True)
        chunks_keys.append(keys)
        chunks_rows.append(block[first])
    keys = np.concatenate(chunks_keys)
    rows = np.concatenate(chunks_rows)
    _, first = np.unique(keys, return_index=True)
    rows = rows[np.sort(first)]
    return rows


def _party_function_tables(m, cell):
    """Outcome tables for one party in a cell: all +-1 functions of the cell's joint settings."""
    return _sign_functions(m ** len(cell))


def _enumerate_with_outcomes(scenario, h, space, convention, cap):
    """Marginal-space enumeration tracking per-party outcome functions.

    Sizes grow as 2^(|c| * m^|c|) per cell, so this path is meant for small
    scenarios (the generalization machinery has a dedicated factored path).
    """
    n, m = scenario.n, scenario.m
    tuples = scenario.marginal_tuples()
    rows = []
    seen = set()
    prob_rows = []
    for part in partitions_of_type(n, h):
        total = 1
        for cell in part:
            total *= (1 << (m ** len(cell))) ** len(cell)
        if total > cap:
            raise MemoryError(f"partition {part} needs {total} strategies; cap is {cap}")
        cell_of = {}
        for cell in part:
            for k in cell:
                cell_of[k] = cell
        spaces = [range(1 << (m ** len(cell_of[k]))) for k in range(n)]
        for combo in itertools.product(*spaces):
            # outcome of party k at a full setting tuple: bit of its function table
            def outcome(k, joint_idx):
                return 1 - 2 * ((combo[k] >> joint_idx) & 1)

            vec = []
            for t in tuples:
                # average outcome product over unspecified settings per convention
                free = [k for k in range(n) if t[k] == 0]
                if convention is MarginalConvention.PARTNER_SETTING_ONE:
                    fills = [tuple([1] * len(free))]
                else:
                    fills = list(itertools.product(range(1, m + 1), repeat=len(free)))
                acc = Fraction(0)
                for fill in fills:
                    full = list(t)
                    for k, s in zip(free, fill):
                        full[k] = s
                    prod = 1
                    for k in range(n):
                        if t[k] == 0:
                            continue
                        cell = cell_of[k]
                        jidx = 0
                        for kk in cell:
                            jidx = jidx * m + (full[kk] - 1)
                        prod *= outcome(k, jidx)
                    acc += prod
                vec.append(acc / len(fills))
            key = tuple(vec)
            if key in seen:
                continue
            seen.add(key)
            rows.append(vec)
    den = 1
    for d in {v.denominator for row in rows for v in row}:
        den = den * d // gcd(den, d)
    mat = np.array([[int(v * den) for v in row] for row in rows], dtype=np.int64)
    return mat, int(den)


def extremal_matrix(scenario, h, space=BehaviorSpace.FULL_CORRELATION,
                    convention=MarginalConvention.UNIFORM_AVERAGE,
                    cap=DEFAULT_STRATEGY_CAP) -> HybridModel:
    """Build the hybrid model M_h with its deduplicated extremal behavior matrix."""
    h = normalize_h(scenario.n, h)
    if space is BehaviorSpace.FULL_CORRELATION:
        mat = _enumerate_full_correlation(scenario, h, cap)
        return HybridModel(scenario, h, space, mat, 1, convention)
    if space is BehaviorSpace.PROBABILITY:
        raise NotImplementedError(
            "probability-space extremal listings are derived from WITH_MARGINALS rows; "
            "the lp module builds its own probability-space formulations")
    mat, den = _enumerate_with_outcomes(scenario, h, space, convention, cap)
    return HybridModel(scenario, h, space, mat, den, convention)


def extremal_behaviors(scenario, h, space=BehaviorSpace.FULL_CORRELATION,
                       convention=MarginalConvention.UNIFORM_AVERAGE,
                       cap=DEFAULT_STRATEGY_CAP):
    """Deduplicated extremal behaviors of M_h as Behavior objects."""
    return list(extremal_matrix(scenario, h, space, convention, cap).behaviors())


def classical_bound(ineq: SymmetricInequality, model: HybridModel) -> Fraction:
    """Tight constant for the model: max over extremal behaviors of -(sum c * corr).

    The stored inequality is valid for the model iff its constant >= this value,
    and tight iff equal.  The constant term of `ineq` plays no role here.
    """
    if model.count == 0:
        raise ValueError("model has no extremal behaviors")
    if ineq.scenario != model.scenario:
        raise ValueError("scenario mismatch")
    expansion = expand_symmetric(ineq)
    lcm = 1
    for c in expansion.values():
        lcm = lcm * c.denominator // gcd(lcm, c.denominator)
    tuples = model.tuples()
    w = np.array([int(expansion.get(t, Fraction(0)) * lcm) for t in tuples], dtype=np.int64)
    vals = model.matrix.astype(np.int64) @ w
    return Fraction(-int(vals.min()), lcm * model.denominator)


# ---------------------------------------------------------------------------
# import/export

_MAGIC = b"HBMX"


def save_matrix(model: HybridModel, path):
    """Binary export: header(magic, n, m, space, denominator, rows, cols), int32 data."""
    space_tag = {BehaviorSpace.FULL_CORRELATION: 0,
                 BehaviorSpace.WITH_MARGINALS: 1,
                 BehaviorSpace.PROBABILITY: 2}[model.space]
    rows, cols = model.matrix.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<6i", model.scenario.n, model.scenario.m, space_tag,
                             model.denominator, rows, cols))
        fh.write(np.ascontiguousarray(model.matrix, dtype=np.int32).tobytes())


def load_matrix(path) -> HybridModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not a behavior matrix file: magic={magic!r}")
        n, m, space_tag, den, rows, cols = struct.unpack("<6i", fh.read(24))
        data = np.frombuffer(fh.read(rows * cols * 4), dtype=np.int32).reshape(rows, cols)
    space = [BehaviorSpace.FULL_CORRELATION, BehaviorSpace.WITH_MARGINALS,
             BehaviorSpace.PROBABILITY][space_tag]
    return HybridModel(Scenario(n, m), (n,), space, data.astype(np.int64), den)


def model_to_json(model: HybridModel, limit=4096) -> str:
    if model.count > limit:
        raise ValueError(f"model too large for JSON export ({model.count} rows)")
    return json.dumps({
        "n": model.scenario.n, "m": model.scenario.m,
        "h": list(model.h), "space": model.space.value,
        "denominator": model.denominator,
        "behaviors": model.matrix.tolist(),
    })
