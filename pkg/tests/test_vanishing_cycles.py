"""Exact checks for the genus formulas.

The degree-p formula applied stage by stage is the reference point:
the joint (p, p) formula, the smooth-disc closed forms and the
smoothness criterion must all reproduce it on grids.  Frozen examples
pin the conventions (trivial conductor 1, signed conductors, errors on
data describing no cover).
"""

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from germrh.pp_propagation import special_different
from germrh.vanishing_cycles import (
    BoundaryBranchData,
    GermData,
    RamificationData,
    genus_point,
    rh_degree_p,
    rh_type_pp,
    smooth_disc_genus,
    smoothness_test,
)

PATTERNS = ("UU", "UP", "PU", "PP")

CASES = {1: "UU", 2: "UP", 3: "PU", 4: "PP"}

# doubled genus of each smooth-disc case, kept separate from the
# implementation so the grid comparison is not circular
CLOSED = {
    1: lambda p, s, c1, c1p: (p * (s - c1 - 1) - c1p - 1) * (p - 1),
    2: lambda p, s, c1, c1p: (p * (s - c1 - 1) - 2) * (p - 1),
    3: lambda p, s, c1, c1p: (p * (s - 2) - c1p - 1) * (p - 1),
    4: lambda p, s, c1, c1p: (p * (s - 2) - 2) * (p - 1),
}


def staged_genus(g_x, r1, r2, boundaries, p):
    """Run the degree-p formula through both stages of the tower."""
    mid = rh_degree_p(g_x, r1 * (p - 1), [b.c1 for b in boundaries], p)
    return rh_degree_p(mid, r2 * p * (p - 1),
                       [b.c1p for b in boundaries], p)


class TestGenusPoint:
    def test_smooth_point(self):
        assert genus_point(0, 1) == 0

    def test_ordinary_multiple_point(self):
        assert genus_point(2, 3) == 0

    def test_unibranch_singularity(self):
        assert genus_point(3, 1) == 3

    def test_negative_genus_rejected(self):
        with pytest.raises(ValueError, match="invalid germ data"):
            genus_point(1, 3)

    def test_bad_normalization_data(self):
        with pytest.raises(ValueError, match="invalid germ data"):
            genus_point(-1, 1)
        with pytest.raises(ValueError, match="invalid germ data"):
            genus_point(0, 0)


class TestGermData:
    def test_raw_pair_resolves(self):
        assert GermData(delta_x=2, r_x=3).g_x == 0

    def test_direct_genus(self):
        assert GermData(g_x=2).g_x == 2

    def test_agreeing_pair_passes(self):
        assert GermData(g_x=3, delta_x=3, r_x=1).g_x == 3

    def test_contradiction_rejected(self):
        with pytest.raises(ValueError, match="contradicts"):
            GermData(g_x=1, delta_x=3, r_x=1)

    def test_half_a_pair_rejected(self):
        with pytest.raises(ValueError, match="as a pair"):
            GermData(delta_x=2)
        with pytest.raises(ValueError, match="as a pair"):
            GermData(r_x=1)

    def test_no_data_rejected(self):
        with pytest.raises(ValueError, match="invalid germ data"):
            GermData()

    def test_negative_genus_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            GermData(g_x=-1)

    def test_boundaries_become_a_tuple(self):
        b = BoundaryBranchData("UU", 2, 2)
        germ = GermData(g_x=0, boundaries=[b])
        assert germ.boundaries == (b,)
        assert isinstance(germ.boundaries, tuple)


class TestBoundaryBranchData:
    def test_unknown_pattern_rejected(self):
        for bad in ("XU", "uu", "", "UUU"):
            with pytest.raises(ValueError, match="branching pattern"):
                BoundaryBranchData(bad)

    def test_split_first_stage_pins_conductor(self):
        with pytest.raises(ValueError, match="conductor must be 1"):
            BoundaryBranchData("PU", c1=2)
        with pytest.raises(ValueError, match="conductor must be 1"):
            BoundaryBranchData("P", c1=2)

    def test_split_or_absent_second_stage_pins_conductor(self):
        with pytest.raises(ValueError, match="conductor must be 1"):
            BoundaryBranchData("UP", c1p=2)
        with pytest.raises(ValueError, match="conductor must be 1"):
            BoundaryBranchData("U", c1p=2)

    def test_two_stage_terms(self):
        assert BoundaryBranchData("UU", 2, 3).ds_term(3) == 6 + 4
        assert BoundaryBranchData("UP", c1=2).ds_term(3) == 6
        assert BoundaryBranchData("PU", c1p=3).ds_term(3) == 4
        assert BoundaryBranchData("PP").ds_term(3) == 0

    def test_single_stage_terms(self):
        assert BoundaryBranchData("U", c1=4).ds_term(3) == 6
        assert BoundaryBranchData("P").ds_term(3) == 0

    def test_uu_term_is_the_special_different(self):
        for p in (2, 3, 5, 7):
            for c1 in range(-3, 5):
                for c1p in range(-3, 5):
                    b = BoundaryBranchData("UU", c1, c1p)
                    assert b.ds_term(p) == special_different(c1, c1p, p)


class TestDegreeP:
    def test_disc_with_one_conductor(self):
        assert rh_degree_p(0, 6, [2], 3) == 0

    def test_trivial_cover_keeps_genus_one(self):
        assert rh_degree_p(1, 0, [1, 1, 1], 3) == 1

    def test_unramified_rational_base_impossible(self):
        with pytest.raises(ValueError, match="negative"):
            rh_degree_p(0, 0, [1], 3)

    def test_odd_total_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            rh_degree_p(0, 1, [1], 3)

    def test_signed_conductor_enters_linearly(self):
        # inseparable-reduction boundaries carry c = -m < 0
        assert rh_degree_p(0, 0, [-2], 3) == 1

    def test_bad_inputs_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            rh_degree_p(-1, 0, [1], 3)
        with pytest.raises(ValueError, match="nonnegative"):
            rh_degree_p(0, -6, [1], 3)
        with pytest.raises(ValueError, match="at least 2"):
            rh_degree_p(0, 6, [2], 1)

    def test_unibranched_disc_closed_form(self):
        # single boundary over genus zero: the answer collapses to
        # (r1 - c1 - 1)(p - 1)/2, which doubles as an oracle here
        for p in (3, 5):
            for r1 in range(8):
                for c1 in range(-2, 7):
                    doubled = (r1 - c1 - 1) * (p - 1)
                    d_eta = r1 * (p - 1)
                    if doubled < 0:
                        with pytest.raises(ValueError, match="negative"):
                            rh_degree_p(0, d_eta, [c1], p)
                    else:
                        assert rh_degree_p(0, d_eta, [c1], p) == doubled // 2


class TestTypePP:
    def test_uu_disc(self):
        boundary = BoundaryBranchData("UU", 2, 2)
        assert rh_type_pp(0, RamificationData(3, 1), [boundary], 3) == 0

    def test_uu_disc_short_one_point(self):
        boundary = BoundaryBranchData("UU", 2, 2)
        with pytest.raises(ValueError, match="negative"):
            rh_type_pp(0, RamificationData(2, 1), [boundary], 3)

    def test_fully_split_boundary(self):
        boundary = BoundaryBranchData("PP")
        assert rh_type_pp(0, RamificationData(2, 1), [boundary], 3) == 1

    def test_trivial_cover_keeps_genus_one(self):
        assert rh_type_pp(1, RamificationData(0, 0), [], 3) == 1

    def test_single_stage_boundary_rejected(self):
        with pytest.raises(ValueError, match="need two"):
            rh_type_pp(0, RamificationData(3, 1),
                       [BoundaryBranchData("U", c1=2)], 3)

    def test_bad_inputs_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            rh_type_pp(-1, RamificationData(0, 0), [], 3)
        with pytest.raises(ValueError, match="at least 2"):
            rh_type_pp(0, RamificationData(3, 1), [], 1)
        with pytest.raises(ValueError, match="nonnegative"):
            RamificationData(-1, 0)


class TestStagedComposition:
    def test_two_passes_match_the_joint_formula(self):
        boundary_sets = (
            (),
            (BoundaryBranchData("UU", 2, 2),),
            (BoundaryBranchData("UU", -2, 3),),
            (BoundaryBranchData("UP", c1=2),),
            (BoundaryBranchData("PU", c1p=4),),
            (BoundaryBranchData("PP"),),
            (BoundaryBranchData("UU"), BoundaryBranchData("PU", c1p=-1)),
            (BoundaryBranchData("UP", c1=3), BoundaryBranchData("UU", 2, -2),
             BoundaryBranchData("PP")),
        )
        hits = 0
        for p in (2, 3, 5):
            for g_x in (0, 1, 2):
                for r1 in range(4):
                    for r2 in range(4):
                        for bs in boundary_sets:
                            try:
                                want = staged_genus(g_x, r1, r2, bs, p)
                            except ValueError:
                                continue
                            ram = RamificationData(r1, r2)
                            assert rh_type_pp(g_x, ram, bs, p) == want
                            hits += 1
        assert hits > 300

    @settings(max_examples=200, deadline=None)
    @given(
        p=st.sampled_from((2, 3, 5, 7)),
        g_x=st.integers(min_value=0, max_value=4),
        r1=st.integers(min_value=0, max_value=6),
        r2=st.integers(min_value=0, max_value=6),
        raw=st.lists(
            st.tuples(st.sampled_from(PATTERNS),
                      st.integers(min_value=-4, max_value=5),
                      st.integers(min_value=-4, max_value=5)),
            max_size=4),
    )
    def test_two_passes_match_the_joint_formula_fuzz(self, p, g_x, r1, r2,
                                                     raw):
        boundaries = tuple(
            BoundaryBranchData(pat,
                               c1 if pat[0] == "U" else 1,
                               c1p if pat[1] == "U" else 1)
            for pat, c1, c1p in raw)
        try:
            want = staged_genus(g_x, r1, r2, boundaries, p)
        except ValueError:
            # no intermediate curve exists for this draw
            assume(False)
        ram = RamificationData(r1, r2)
        assert rh_type_pp(g_x, ram, boundaries, p) == want


class TestSmoothDisc:
    def test_case_one(self):
        assert smooth_disc_genus(1, 3, 1, 3, c1=2, c1p=2) == 0

    def test_case_one_short_one_point(self):
        with pytest.raises(ValueError, match="negative"):
            smooth_disc_genus(1, 2, 1, 3, c1=2, c1p=2)

    def test_case_two(self):
        assert smooth_disc_genus(2, 2, 1, 3, c1=1) == 1

    def test_case_three(self):
        assert smooth_disc_genus(3, 2, 1, 3, c1p=2) == 0

    def test_case_four(self):
        assert smooth_disc_genus(4, 2, 1, 3) == 1

    def test_unknown_case_rejected(self):
        for bad in (0, 5, -1):
            with pytest.raises(ValueError, match="cases are 1..4"):
                smooth_disc_genus(bad, 2, 1, 3)

    def test_unread_conductors_must_stay_trivial(self):
        with pytest.raises(ValueError, match="conductor must be 1"):
            smooth_disc_genus(3, 2, 1, 3, c1=2)
        with pytest.raises(ValueError, match="conductor must be 1"):
            smooth_disc_genus(2, 2, 1, 3, c1p=2)

    def test_closed_forms_track_the_staged_formula(self):
        conductors = (-2, 1, 2, 3)
        hits = 0
        for p in (2, 3, 5):
            for case, pat in CASES.items():
                first = conductors if pat[0] == "U" else (1,)
                second = conductors if pat[1] == "U" else (1,)
                for r1 in range(4):
                    for r2 in range(4):
                        for c1 in first:
                            for c1p in second:
                                doubled = CLOSED[case](p, r1 + r2, c1, c1p)
                                if doubled < 0 or doubled % 2:
                                    with pytest.raises(ValueError):
                                        smooth_disc_genus(case, r1, r2, p,
                                                          c1=c1, c1p=c1p)
                                    continue
                                got = smooth_disc_genus(case, r1, r2, p,
                                                        c1=c1, c1p=c1p)
                                assert got == doubled // 2
                                b = BoundaryBranchData(pat, c1, c1p)
                                ram = RamificationData(r1, r2)
                                assert got == rh_type_pp(0, ram, (b,), p)
                                hits += 1
        assert hits > 200


class TestSmoothness:
    def test_saturated_identity(self):
        assert smoothness_test(2, 1, 1, 2, 3, "UU") is True

    def test_non_uu_is_never_smooth(self):
        for pat in ("UP", "PU", "PP", "U", "P"):
            assert smoothness_test(2, 1, 1, 2, 3, pat) is False

    def test_perturbed_identity(self):
        assert smoothness_test(2, 1, 1, 3, 3, "UU") is False

    def test_matches_genus_zero_on_the_uu_grid(self):
        for p in (2, 3, 5):
            for r1 in range(4):
                for r2 in range(4):
                    for c1 in (-1, 1, 2, 3):
                        for c1p in (-1, 1, 2, 4):
                            try:
                                zero = smooth_disc_genus(
                                    1, r1, r2, p, c1=c1, c1p=c1p) == 0
                            except ValueError:
                                zero = False
                            smooth = smoothness_test(r1, r2, c1, c1p, p, "UU")
                            assert smooth == zero
