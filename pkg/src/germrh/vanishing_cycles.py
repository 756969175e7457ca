"""Genus bookkeeping for covers of formal germs.

A degree-p cover of germs relates the genus of the point upstairs to
the genus downstairs through the different of the generic fibre and a
special different summed over the boundaries of the germ; the (p, p)
version runs the same ledger with a per-boundary two-letter branching
pattern deciding which stage conductors contribute.  Everything here
is exact integer arithmetic on classification-level data.

Conventions: conductors use the c = -m normalization of the
classification layer, trivial torsors entering as c = 1.  A p-branched
stage splits its boundary, so its torsor is trivial and the conductor
is pinned to 1 at construction.  A negative or half-integral genus
means the data describes no actual cover; those inputs raise instead
of rounding.
"""

from collections.abc import Iterable
from dataclasses import dataclass

__all__ = [
    "BoundaryBranchData",
    "GermData",
    "RamificationData",
    "genus_point",
    "rh_degree_p",
    "rh_type_pp",
    "smooth_disc_genus",
    "smoothness_test",
]

# stage letters: U = boundary stays unibranched, P = splits into p
_PATTERNS = ("UU", "UP", "PU", "PP", "U", "P")


def genus_point(delta_x: int, r_x: int) -> int:
    """Genus of a closed point from its normalization data.

    delta_x is the length of the normalization quotient, r_x the number
    of branches; smooth and ordinary multiple points come out zero.
    """
    if delta_x < 0 or r_x < 1:
        raise ValueError(
            "invalid germ data: need delta >= 0 and at least one branch")
    g = delta_x - r_x + 1
    if g < 0:
        raise ValueError(
            f"invalid germ data: delta - branches + 1 = {g} is negative")
    return g


@dataclass(frozen=True)
class BoundaryBranchData:
    """Branching of one boundary through a cover, stage by stage.

    pattern is one letter per stage ("UP" = unibranched first, then
    p-branched; bare "U"/"P" for a single degree-p stage).  c1 and c1p
    are the stage conductors, defaulting to the trivial value 1; the
    pattern decides which of them the special different reads.
    """

    pattern: str
    c1: int = 1
    c1p: int = 1

    def __post_init__(self):
        if self.pattern not in _PATTERNS:
            raise ValueError(f"unknown branching pattern {self.pattern!r}")
        # a split stage carries the trivial torsor
        if self.pattern[0] == "P" and self.c1 != 1:
            raise ValueError(
                "first stage is p-branched; its conductor must be 1")
        second = self.pattern[1] if len(self.pattern) == 2 else None
        if second != "U" and self.c1p != 1:
            raise ValueError(
                "second stage is p-branched or absent; its conductor "
                "must be 1")

    def ds_term(self, p: int) -> int:
        """This boundary's summand of the special different.

        A first-stage conductor weighs p(p-1), a second-stage one
        (p-1); p-branched stages contribute nothing.
        """
        total = 0
        if self.pattern[0] == "U":
            weight = p * (p - 1) if len(self.pattern) == 2 else p - 1
            total += (self.c1 - 1) * weight
        if len(self.pattern) == 2 and self.pattern[1] == "U":
            total += (self.c1p - 1) * (p - 1)
        return total


@dataclass(frozen=True)
class GermData:
    """A closed point together with its boundary bookkeeping.

    The genus may be given directly or through the raw pair
    (delta_x, r_x); giving both is allowed when they agree.
    """

    g_x: int | None = None
    delta_x: int | None = None
    r_x: int | None = None
    boundaries: tuple[BoundaryBranchData, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        if self.delta_x is not None or self.r_x is not None:
            if self.delta_x is None or self.r_x is None:
                raise ValueError(
                    "invalid germ data: delta_x and r_x come as a pair")
            g = genus_point(self.delta_x, self.r_x)
            if self.g_x is None:
                object.__setattr__(self, "g_x", g)
            elif self.g_x != g:
                raise ValueError(
                    f"invalid germ data: genus {self.g_x} contradicts "
                    f"delta - branches + 1 = {g}")
        elif self.g_x is None:
            raise ValueError("invalid germ data: need g_x or (delta_x, r_x)")
        elif self.g_x < 0:
            raise ValueError("invalid germ data: genus is negative")


@dataclass(frozen=True)
class RamificationData:
    """Ramified-point counts of the generic fibre, stage by stage.

    r1 counts the ramified points of the first intermediate cover, r2
    those of the second stage; the composed cover then has r1*p + r2
    ramified points in total.
    """

    r1: int
    r2: int

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("ramified-point counts must be nonnegative")

    def total(self, p: int) -> int:
        return self.r1 * p + self.r2

    def d_eta(self, p: int) -> int:
        """Different degree of the composed generic fibre."""
        return (self.r1 + self.r2) * p * (p - 1)


def _half_genus(two_g_minus_2: int) -> int:
    # the doubled formula must land on an even, >= -2 value
    if two_g_minus_2 % 2:
        raise ValueError(
            f"inconsistent cover data: 2g - 2 = {two_g_minus_2} is odd")
    g = two_g_minus_2 // 2 + 1
    if g < 0:
        raise ValueError(
            f"inconsistent cover data: genus {g} is negative "
            "(no such cover)")
    return g


def rh_degree_p(g_x: int, d_eta: int, conductors: Iterable[int],
                p: int) -> int:
    """Genus upstairs in a degree-p cover of germs.

    conductors runs over the boundaries downstairs, trivial torsors
    entering as c = 1; d_eta is the different degree of the generic
    fibre.
    """
    if g_x < 0:
        raise ValueError("genus must be nonnegative")
    if d_eta < 0:
        raise ValueError("generic different degree must be nonnegative")
    if p < 2:
        raise ValueError("p must be at least 2")
    d_s = sum((c - 1) * (p - 1) for c in conductors)
    return _half_genus(p * (2 * g_x - 2) + d_eta - d_s)


def rh_type_pp(g_x: int, ram: RamificationData,
               boundaries: Iterable[BoundaryBranchData], p: int) -> int:
    """Genus upstairs in a (p, p)-cover, from per-boundary patterns."""
    if g_x < 0:
        raise ValueError("genus must be nonnegative")
    if p < 2:
        raise ValueError("p must be at least 2")
    boundaries = tuple(boundaries)
    for b in boundaries:
        if len(b.pattern) != 2:
            raise ValueError(
                f"pattern {b.pattern!r} has one stage; need two")
    d_s = sum(b.ds_term(p) for b in boundaries)
    return _half_genus(p * p * (2 * g_x - 2) + ram.d_eta(p) - d_s)


_CASE_PATTERN = {1: "UU", 2: "UP", 3: "PU", 4: "PP"}


def smooth_disc_genus(case: int, r1: int, r2: int, p: int,
                      c1: int = 1, c1p: int = 1) -> int:
    """Closed-form genus over a smooth disc with one boundary.

    case numbers the branching pattern (1 = UU, 2 = UP, 3 = PU,
    4 = PP); conductors the case does not read stay at their trivial
    default.  The staged formula is evaluated alongside and any
    disagreement is a bug, not bad input.
    """
    if case not in _CASE_PATTERN:
        raise ValueError(f"no branching case {case}; cases are 1..4")
    boundary = BoundaryBranchData(_CASE_PATTERN[case], c1=c1, c1p=c1p)
    general = rh_type_pp(0, RamificationData(r1, r2), (boundary,), p)
    s = r1 + r2
    if case == 1:
        doubled = (p * (s - c1 - 1) - c1p - 1) * (p - 1)
    elif case == 2:
        doubled = (p * (s - c1 - 1) - 2) * (p - 1)
    elif case == 3:
        doubled = (p * (s - 2) - c1p - 1) * (p - 1)
    else:
        doubled = (p * (s - 2) - 2) * (p - 1)
    if doubled != 2 * general:
        raise RuntimeError(
            f"internal error: case {case} closed form gives "
            f"{doubled}/2, staged formula gives {general}")
    return general


def smoothness_test(r1: int, r2: int, c1: int, c1p: int, p: int,
                    pattern: str) -> bool:
    """Whether the point upstairs is smooth.

    Requires the boundary to stay unibranched through both stages and
    the conductors to sit exactly on the genus-zero locus; any other
    pattern answers False.  Never raises.
    """
    if pattern != "UU":
        return False
    return p * (r1 + r2 - 1) == 1 + c1p + c1 * p
