"""Scale-independent detection of exchangeable factors.

Two factors are exchangeable when ``phi1(r) == alpha * phi2(r permuted)`` for
some positive ``alpha`` and argument permutation. Detection groups table cells
into buckets (histograms of range values over same-range arguments), derives
``alpha`` from bucket maxima, narrows the admissible argument permutations from
matching potentials, and verifies each survivor by exact collinearity.

Permutation convention: ``perm[j] = i`` means argument ``j`` of ``phi2`` is
fed the value of argument ``i`` of ``phi1``, i.e.
``phi1(r_0, ..., r_{n-1}) == alpha * phi2(r_perm[0], ..., r_perm[n-1])``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .factor_graph import Factor, RandomVariable, _strides

MAX_BRUTE_FORCE_ARITY = 8

Bucket = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ExchangeabilityWitness:
    alpha: Fraction
    permutation: tuple[int, ...]

    def inverse(self) -> "ExchangeabilityWitness":
        inv = [0] * len(self.permutation)
        for j, i in enumerate(self.permutation):
            inv[i] = j
        return ExchangeabilityWitness(1 / self.alpha, tuple(inv))


@dataclass(frozen=True)
class BucketTable:
    """Buckets of a factor and the potentials each bucket is mapped to.

    ``groups`` lists the argument positions of each same-range group, ordered
    by the range tuple so that bucket keys are comparable across factors.
    """

    groups: tuple[tuple[int, ...], ...]
    cells: dict[Bucket, tuple[int, ...]]
    potentials: dict[Bucket, tuple[Fraction, ...]]

    @property
    def buckets(self) -> frozenset[Bucket]:
        return frozenset(self.cells)


def _check_lengths(v1: Sequence, v2: Sequence) -> None:
    if len(v1) != len(v2):
        raise ValueError(f"vector lengths differ: {len(v1)} != {len(v2)}")
    if not v1:
        raise ValueError("vectors must not be empty")


def same_domain(phi1: Factor, phi2: Factor) -> bool:
    return phi1.arity == phi2.arity and sorted(a.range for a in phi1.args) == sorted(
        a.range for a in phi2.args
    )


def cosine_distance(phi1: Factor, phi2: Factor) -> float:
    """One minus the cosine similarity of the two tables, in floating point."""
    if not same_domain(phi1, phi2):
        return math.inf
    a = [float(v) for v in phi1.table]
    b = [float(v) for v in phi2.table]
    dot = math.fsum(x * y for x, y in zip(a, b))
    norm = math.sqrt(math.fsum(x * x for x in a)) * math.sqrt(math.fsum(y * y for y in b))
    return max(0.0, 1.0 - dot / norm)


def collinear_exact(v1: Sequence, v2: Sequence) -> Fraction | None:
    """Return ``alpha`` with ``v1 == alpha * v2`` or None.

    The decision uses cross products ``v1[i] * v2[0] == v1[0] * v2[i]`` only.
    """
    _check_lengths(v1, v2)
    a0, b0 = v1[0], v2[0]
    for a, b in zip(v1, v2):
        if a * b0 != a0 * b:
            return None
    return Fraction(a0) / Fraction(b0)


def _integer_vector(v: Sequence) -> list[int]:
    # numerator times every other denominator: a common positive multiple
    qs = [Fraction(x) for x in v]
    prefix = [1]
    for q in qs:
        prefix.append(prefix[-1] * q.denominator)
    out, suffix = [0] * len(qs), 1
    for i in reversed(range(len(qs))):
        out[i] = qs[i].numerator * prefix[i] * suffix
        suffix *= qs[i].denominator
    return out


def approx_collinear(v1: Sequence, v2: Sequence, epsilon) -> bool:
    """Collinearity up to a relative deviation ``epsilon = p/q`` in [0, 1].

    Both vectors are rescaled to integers first (the check is homogeneous in
    each vector), so every comparison below is between integers.
    """
    _check_lengths(v1, v2)
    eps = Fraction(epsilon)
    if not 0 <= eps <= 1:
        raise ValueError(f"epsilon must lie in [0, 1], got {eps}")
    p, q = eps.numerator, eps.denominator
    a = _integer_vector(v1)
    b = _integer_vector(v2)
    a0, b0 = a[0], b[0]
    for ai, bi in zip(a, b):
        lhs = ai * b0 * q
        cross = a0 * bi
        if lhs < cross * q - cross * p or lhs > cross * q + cross * p:
            return False
    return True


def range_groups(args: Sequence[RandomVariable]) -> tuple[tuple[int, ...], ...]:
    by_range: dict[tuple[str, ...], list[int]] = {}
    for pos, rv in enumerate(args):
        by_range.setdefault(rv.range, []).append(pos)
    return tuple(tuple(by_range[r]) for r in sorted(by_range))


def _index_tuples(factor: Factor) -> Iterator[tuple[int, ...]]:
    return itertools.product(*(range(s) for s in factor.shape))


def buckets(phi: Factor) -> BucketTable:
    groups = range_groups(phi.args)
    sizes = [phi.args[g[0]].size for g in groups]
    cells: dict[Bucket, list[int]] = {}
    for cell, idx in enumerate(_index_tuples(phi)):
        key = []
        for group, size in zip(groups, sizes):
            hist = [0] * size
            for pos in group:
                hist[idx[pos]] += 1
            key.append(tuple(hist))
        cells.setdefault(tuple(key), []).append(cell)
    return BucketTable(
        groups=groups,
        cells={b: tuple(c) for b, c in cells.items()},
        potentials={b: tuple(phi.table[i] for i in c) for b, c in cells.items()},
    )


def rearranged_table(
    shape: Sequence[int], phi2: Factor, perm: Sequence[int]
) -> tuple[Fraction, ...]:
    """Table of ``r -> phi2(r_perm[0], ...)`` over a frame of the given shape."""
    strides2 = _strides(phi2.shape)
    n = len(perm)
    return tuple(
        phi2.table[sum(idx[perm[j]] * strides2[j] for j in range(n))]
        for idx in itertools.product(*(range(s) for s in shape))
    )


def permuted_table(phi1: Factor, phi2: Factor, perm: Sequence[int]) -> tuple[Fraction, ...]:
    """``phi2`` rearranged into ``phi1``'s argument frame via ``perm``."""
    return rearranged_table(phi1.shape, phi2, perm)


def reorder_args(phi: Factor, args: Sequence[RandomVariable]) -> Factor:
    """The same function as ``phi`` with its arguments listed in a new order."""
    pos = {rv.name: i for i, rv in enumerate(args)}
    if sorted(pos) != sorted(phi.arg_names) or len(pos) != phi.arity:
        raise ValueError("new argument order must be a permutation of the old one")
    perm = [pos[rv.name] for rv in phi.args]
    shape = [rv.size for rv in args]
    return Factor(phi.name, tuple(args), rearranged_table(shape, phi, perm))


def validate_witness(phi1: Factor, phi2: Factor, witness: ExchangeabilityWitness) -> bool:
    perm = witness.permutation
    if sorted(perm) != list(range(phi1.arity)) or phi2.arity != phi1.arity:
        return False
    if any(phi2.args[j].range != phi1.args[i].range for j, i in enumerate(perm)):
        return False
    table = permuted_table(phi1, phi2, perm)
    return all(a == witness.alpha * b for a, b in zip(phi1.table, table))


def brute_force_exchangeable(phi1: Factor, phi2: Factor) -> ExchangeabilityWitness | None:
    """Try every argument permutation in lexicographic order."""
    if phi1.arity > MAX_BRUTE_FORCE_ARITY:
        raise ValueError(f"arity {phi1.arity} too large for brute force")
    if phi1.arity != phi2.arity:
        return None
    for perm in itertools.permutations(range(phi1.arity)):
        if any(phi2.args[j].range != phi1.args[i].range for j, i in enumerate(perm)):
            continue
        alpha = collinear_exact(phi1.table, permuted_table(phi1, phi2, perm))
        if alpha is not None:
            return ExchangeabilityWitness(alpha, perm)
    return None


def candidate_swaps(
    phi1: Factor, phi2: Factor, t1: BucketTable, t2: BucketTable, top1: Fraction, top2: Fraction
) -> list[set[int]] | None:
    """Admissible ``phi1`` positions for each argument of ``phi2``.

    For every cell of ``phi1`` the matching cells of ``phi2`` (same bucket,
    potential equal up to ``top1 / top2``) restrict where each ``phi2``
    argument may draw its value from. Constraints are intersected over all
    cells and buckets.
    """
    n = phi1.arity
    idx1 = list(_index_tuples(phi1))
    idx2 = list(_index_tuples(phi2))
    allowed = [
        {i for i in range(n) if phi1.args[i].range == phi2.args[j].range} for j in range(n)
    ]
    for b, cells1 in t1.cells.items():
        cells2 = t2.cells[b]
        for c1 in cells1:
            v1 = phi1.table[c1]
            matches = [c2 for c2 in cells2 if v1 * top2 == top1 * phi2.table[c2]]
            if not matches:
                return None
            r = idx1[c1]
            for j in range(n):
                reach = set()
                for c2 in matches:
                    s_j = idx2[c2][j]
                    reach.update(i for i in range(n) if r[i] == s_j)
                allowed[j] &= reach
                if not allowed[j]:
                    return None
    return allowed


def _distinct_representatives(allowed: list[set[int]]) -> Iterator[tuple[int, ...]]:
    """Permutations choosing ``perm[j]`` from ``allowed[j]``, lexicographically."""
    n = len(allowed)
    options = [sorted(a) for a in allowed]
    perm: list[int] = []
    used = [False] * n

    def extend(j):
        if j == n:
            yield tuple(perm)
            return
        for i in options[j]:
            if not used[i]:
                used[i] = True
                perm.append(i)
                yield from extend(j + 1)
                perm.pop()
                used[i] = False

    yield from extend(0)


def detect_exchangeable(
    phi1: Factor, phi2: Factor, unit_scale: bool = False
) -> ExchangeabilityWitness | None:
    """Witness that ``phi1`` and ``phi2`` are exchangeable, or None.

    With ``unit_scale`` only witnesses with ``alpha == 1`` are accepted, which
    is the scale-sensitive test used by plain colour passing.
    """
    if phi1.arity != phi2.arity or not same_domain(phi1, phi2):
        return None
    t1, t2 = buckets(phi1), buckets(phi2)
    if t1.buckets != t2.buckets:
        return None
    top1 = top2 = None
    for b in sorted(t1.buckets):
        m1, m2 = max(t1.potentials[b]), max(t2.potentials[b])
        if top1 is None:
            top1, top2 = m1, m2
        elif m1 * top2 != top1 * m2:
            return None
        # cheap necessary condition: sorted multisets agree up to alpha
        if any(
            x * top2 != top1 * y
            for x, y in zip(sorted(t1.potentials[b]), sorted(t2.potentials[b]))
        ):
            return None
    if unit_scale and top1 != top2:
        return None
    allowed = candidate_swaps(phi1, phi2, t1, t2, top1, top2)
    if allowed is None:
        return None
    for perm in _distinct_representatives(allowed):
        alpha = collinear_exact(phi1.table, permuted_table(phi1, phi2, perm))
        if alpha is not None:
            return ExchangeabilityWitness(alpha, perm)
    return None


def is_commutative(phi: Factor, positions) -> bool:
    """Whether the potential is invariant under permuting values at ``positions``.

    Transpositions generate the symmetric group, so checking every
    transposition inside ``positions`` suffices.
    """
    positions = sorted(set(positions))
    if len({phi.args[p].range for p in positions}) > 1:
        raise ValueError("commutativity positions must share one range")
    return all(_swap_invariant(phi, i, j) for i, j in itertools.combinations(positions, 2))


def _swap_invariant(phi: Factor, i: int, j: int) -> bool:
    strides = _strides(phi.shape)
    for cell, idx in enumerate(_index_tuples(phi)):
        if idx[i] < idx[j]:
            other = cell + (idx[j] - idx[i]) * strides[i] + (idx[i] - idx[j]) * strides[j]
            if phi.table[cell] != phi.table[other]:
                return False
    return True


def commutative_sets(phi: Factor) -> list[tuple[int, ...]]:
    """Maximal commutative position sets of size at least two.

    Swap-invariance is transitive along shared positions, so the invariant
    transpositions form disjoint cliques; each clique is a maximal set.
    """
    result = []
    for group in range_groups(phi.args):
        parent = {p: p for p in group}

        def find(p):
            while parent[p] != p:
                parent[p] = parent[parent[p]]
                p = parent[p]
            return p

        for i, j in itertools.combinations(group, 2):
            if find(i) != find(j) and _swap_invariant(phi, i, j):
                parent[find(j)] = find(i)
        comps: dict[int, list[int]] = {}
        for p in group:
            comps.setdefault(find(p), []).append(p)
        result.extend(tuple(c) for c in comps.values() if len(c) > 1)
    return sorted(result)


def scale_invariant_key(phi: Factor) -> tuple:
    """Hashable key equal for all factors exchangeable with ``phi``.

    Built from permutation-invariant data only: arity, range multiset, bucket
    sizes and the potential multiset divided by its maximum.
    """
    top = max(phi.table)
    t = buckets(phi)
    profile = tuple(sorted(Counter(len(c) for c in t.cells.values()).items()))
    return (
        phi.arity,
        tuple(sorted(a.range for a in phi.args)),
        profile,
        tuple(sorted(v / top for v in phi.table)),
    )
