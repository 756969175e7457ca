"""Closed-form invariants one level up a (p, p)-cover.

Given the classification data of two generically disjoint degree-p
covers of the same boundary, the conductors, group schemes and
different degrees of the compositum over each intermediate cover follow
from a finite case table keyed by the pair of group tags.  Everything
here is exact integer arithmetic; the series machinery only enters
through the classification data handed in, and through the oracle that
cross-checks these tables on grids.

Conventions: conductor variables m (c = -m) as in the classification
layer; v(p) = e = r(p-1); levels live in 0 < n < r.  Pair order is
canonicalized to (Etale, Hn, MuP) and the results are swapped back, so
callers may present the pair either way.
"""

from dataclasses import dataclass
from math import gcd

from .dvr_core import RingDescriptor
from .torsor_norm import ETALE, MU_P, GroupTag, TorsorData, hn

__all__ = [
    "PPInput",
    "PPResult",
    "conductor_relation_check",
    "is_fiber_product_torsor",
    "level_data",
    "propagate",
    "special_different",
    "tower_propagate",
    "upper_differents",
]


@dataclass(frozen=True)
class PPInput:
    """A pair of degree-p covers over one boundary, by their invariants.

    Generic disjointness, ramification index 1 and reducedness of the
    composite special fibre are the caller's responsibility; the oracle
    can falsify them but this module assumes them.
    """

    g1: TorsorData
    g2: TorsorData
    ring: RingDescriptor

    def __post_init__(self):
        # conductors are taken as given integers; whether they are
        # realizable by a minimal equation is the classifier's concern
        r = self.ring.v_lambda
        for g in (self.g1, self.g2):
            tag = g.group_tag
            if tag.kind == "Hn" and not 0 < tag.n < r:
                raise ValueError(f"level {tag.n} outside 0 < n < {r}")


@dataclass(frozen=True)
class PPResult:
    """Invariants of the compositum over the two intermediate covers.

    The different block (g1p/g2p/d1p/d2p/delta_total) is None when the
    ring parameters make the different table non-integral; conductors
    and the special different never need that hypothesis.
    """

    m1p: int
    m2p: int
    c1p: int
    c2p: int
    g1p: GroupTag | None
    g2p: GroupTag | None
    d1p: int | None
    d2p: int | None
    ds: int
    delta_total: int | None


def special_different(c: int, cp: int, p: int) -> int:
    """Conductor jump contribution of one intermediate tower path."""
    return (c - 1) * p * (p - 1) + (cp - 1) * (p - 1)


def conductor_relation_check(c1: int, c2: int, c1p: int, c2p: int,
                             p: int) -> bool:
    return c2p - c1p == (c1 - c2) * p


def is_fiber_product_torsor(tags) -> bool:
    """The compositum is itself a torsor (under the product group) iff
    at most one of the covers is non-etale."""
    tags = list(tags)
    if len(tags) < 2:
        raise ValueError("need at least two covers")
    return sum(1 for t in tags if t.kind != "Etale") <= 1


def level_data(tag: GroupTag, m: int, ring: RingDescriptor) -> TorsorData:
    """Invariant-only record for a cover known by tag and conductor.

    Used for table-level work (towers, grids) where no equation has
    been classified; the series-bearing fields stay empty.
    """
    if tag.kind == "Etale":
        delta = 0
    elif tag.kind == "MuP":
        delta = ring.e
    else:
        delta = ring.e - tag.n * (ring.p - 1)
    return TorsorData(tag, m, -m, delta, None, None, None)


# ---------------------------------------------------------------------------
# the conductor case table
# ---------------------------------------------------------------------------

def _conductors_canonical(t1: GroupTag, t2: GroupTag, m1: int, m2: int,
                          p: int) -> tuple:
    """(m'_1, m'_2) for a pair already in canonical tag order."""
    kinds = (t1.kind, t2.kind)
    if kinds in (("Etale", "Etale"), ("MuP", "MuP")):
        if kinds[0] == "MuP" and m1 == 0 and m2 == 0:
            raise ValueError("use oracle (both conductors vanish; the "
                             "closed form needs at least one non-zero)")
        if m1 <= m2:
            return m2, m1 * p - m2 * (p - 1)
        return m2 * p - m1 * (p - 1), m1
    if kinds in (("Etale", "MuP"), ("Etale", "Hn"), ("Hn", "MuP")):
        return m2 * p - m1 * (p - 1), m1
    if kinds == ("Hn", "Hn"):
        a = (m2, m1 * p - m2 * (p - 1))
        b = (m2 * p - m1 * (p - 1), m1)
        if t1.n == t2.n and m1 == m2:
            # fully tied pair: both branches collapse to (m, m)
            assert a == b
            return a
        return a if t1.n < t2.n or (t1.n == t2.n and m1 < m2) else b
    raise AssertionError(f"uncovered tag pair {kinds}")


def _upper_differents_canonical(t1: GroupTag, t2: GroupTag,
                                ring: RingDescriptor) -> tuple:
    """(delta'_1, delta'_2) for a pair already in canonical tag order."""
    V = ring.e
    p = ring.p

    def row(x: int) -> int:
        if x % p:
            raise ValueError(
                "ring parameters incompatible with table: the level "
                f"combination {x} is not divisible by p={p}; choose r "
                "so it is")
        return V - (x // p) * (p - 1)

    kinds = (t1.kind, t2.kind)
    if kinds == ("Etale", "Etale"):
        return 0, 0
    if kinds == ("Etale", "MuP"):
        return V, 0
    if kinds == ("Etale", "Hn"):
        return V - t2.n * (p - 1), 0
    if kinds == ("Hn", "MuP"):
        n = t1.n
        return row(V - n * (p - 1)), row(V + n)
    if kinds == ("MuP", "MuP"):
        d = row(V)
        return d, d
    if kinds == ("Hn", "Hn"):
        n1, n2 = t1.n, t2.n
        if n1 <= n2:
            return row(V + n2), row(V + n1 * p - n2 * (p - 1))
        return row(V + n2 * p - n1 * (p - 1)), row(V + n1)
    raise AssertionError(f"uncovered tag pair {kinds}")


def _tag_from_different(dp: int, ring: RingDescriptor) -> GroupTag:
    if dp == 0:
        return ETALE
    if dp == ring.e:
        return MU_P
    num = ring.e - dp
    if num % (ring.p - 1) or not 0 < num // (ring.p - 1) < ring.v_lambda:
        raise AssertionError(f"table produced an illegal level from "
                             f"different degree {dp}")
    return hn(num // (ring.p - 1))


def upper_differents(inp: PPInput) -> tuple:
    """Different degrees of the compositum over each intermediate cover."""
    t1, t2 = inp.g1.group_tag, inp.g2.group_tag
    if t1.order() > t2.order():
        d2, d1 = _upper_differents_canonical(t2, t1, inp.ring)
        return d1, d2
    return _upper_differents_canonical(t1, t2, inp.ring)


def propagate(inp: PPInput) -> PPResult:
    """Level-two conductors, groups and differents for the pair.

    Cross-checks on every call: the two special differents agree, the
    conductor relation c'_2 - c'_1 = (c_1 - c_2)p holds, coprimality is
    preserved, and when the different block exists the total different
    is additive along both paths.
    """
    g1, g2 = inp.g1, inp.g2
    t1, t2 = g1.group_tag, g2.group_tag
    p = inp.ring.p
    if t1.order() > t2.order():
        m2p, m1p = _conductors_canonical(t2, t1, g2.m, g1.m, p)
    else:
        m1p, m2p = _conductors_canonical(t1, t2, g1.m, g2.m, p)
    c1p, c2p = -m1p, -m2p
    ds = special_different(g1.c, c1p, p)
    assert ds == special_different(g2.c, c2p, p), \
        "special differents disagree (case table bug)"
    assert conductor_relation_check(g1.c, g2.c, c1p, c2p, p), \
        "conductor relation violated (case table bug)"
    if g1.m % p and g2.m % p:
        assert gcd(m1p, p) == 1 and gcd(m2p, p) == 1, \
            "coprimality lost (case table bug)"
    try:
        d1p, d2p = upper_differents(inp)
    except ValueError:
        return PPResult(m1p, m2p, c1p, c2p, None, None, None, None, ds,
                        None)
    g1p = _tag_from_different(d1p, inp.ring)
    g2p = _tag_from_different(d2p, inp.ring)
    total = g1.delta + d1p
    assert total == g2.delta + d2p, \
        "different degree not additive (inputs inconsistent with tags)"
    return PPResult(m1p, m2p, c1p, c2p, g1p, g2p, d1p, d2p, ds, total)


def tower_propagate(levels, ring: RingDescriptor) -> dict:
    """Edge conductors of the compositum tower of three covers.

    The two adjacent pairs are propagated first; the top cover is then
    the compositum of the two intermediate covers over the shared
    middle one, which is again a (p, p) pair, now under the upper group
    tags.  Needs the different block of both pairs (the upper tags
    place the top pair in its conductor case).
    """
    levels = list(levels)
    if len(levels) == 2:
        return {"pairs": [propagate(PPInput(levels[0], levels[1], ring))]}
    if len(levels) != 3:
        raise ValueError("towers of height 2 or 3 only")
    r12 = propagate(PPInput(levels[0], levels[1], ring))
    r23 = propagate(PPInput(levels[1], levels[2], ring))
    for rr in (r12, r23):
        if rr.g1p is None:
            raise ValueError("tower needs the different block; "
                             "ring parameters incompatible with table")
    mid1 = level_data(r12.g2p, r12.m2p, ring)
    mid2 = level_data(r23.g1p, r23.m1p, ring)
    top = propagate(PPInput(mid1, mid2, ring))
    return {"pairs": [r12, r23], "top": top,
            "c_top": (top.c1p, top.c2p)}
