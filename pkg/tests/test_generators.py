"""Profile family constructors and grid discretization."""

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cardvote.core import Preference, Profile, ratio, rv_winner, welfare, welfare_vector
from cardvote.errors import PreconditionError
from cardvote.generators import (
    DkParams,
    discretize,
    gen_Dk,
    gen_cyclic,
    gen_negative,
    negative_params,
    rand_grid_profile,
    two_block_preference,
)
from cardvote.bounds import classify, gbar_value
from cardvote.mechanisms import integer_cbrt, j_star
from cardvote.properties import ordinal_equivalent

F = Fraction


class TestNegativeParams:
    @pytest.mark.parametrize(
        "m,k,g", [(8, 2, 4), (27, 3, 9), (64, 4, 16), (125, 5, 25), (216, 6, 36)]
    )
    def test_derived_sizes(self, m, k, g):
        params = negative_params(m)
        assert params.favorite_block_size == k
        assert params.block_count == g
        assert params.base_n == m - 1 + g

    def test_m_too_small(self):
        with pytest.raises(PreconditionError):
            negative_params(7)

    def test_bad_repeat(self):
        with pytest.raises(PreconditionError):
            negative_params(27, repeat=0)


class TestGenNegative:
    def test_m27_structure(self):
        u = gen_negative(27)
        assert (u.m, u.n) == (27, 35)
        assert u.is_tie_free() and u.is_normalized()
        totals = welfare_vector(u)
        # Only the 9 block voters value candidate 27, each at exactly 1-1/729.
        assert totals[26] == 9 * F(728, 729)
        cap = F(2) + F(1, 27)
        assert all(totals[j] < cap for j in range(26))
        assert rv_winner(u) == 27

    def test_m27_welfare_gap_factor(self):
        u = gen_negative(27)
        totals = welfare_vector(u)
        g = negative_params(27).block_count
        floor_factor = g * F(728, 729) / (F(2) + F(1, 27))
        for j in range(26):
            assert totals[26] / totals[j] >= floor_factor

    def test_repeat_doubles_welfare(self):
        single = gen_negative(64)
        doubled = gen_negative(64, repeat=2)
        assert doubled.n == 2 * single.n == 158
        assert welfare(doubled, 64) == 2 * welfare(single, 64)

    def test_block_sizes_bounded(self):
        for m in (8, 10, 27, 30):
            params = negative_params(m)
            u = gen_negative(m)
            # Block voters are the last block_count voters; their favorite
            # sets partition {1..min(k*g, m-1)}.
            covered = []
            threshold = 1 - F(1, m * m)
            for p in u.prefs[m - 1:]:
                block = [j + 1 for j, v in enumerate(p.values) if v > threshold]
                assert 1 <= len(block) <= params.favorite_block_size
                covered.extend(block)
            expected = list(range(1, min(
                params.favorite_block_size * params.block_count, m - 1) + 1))
            assert sorted(covered) == expected

    def test_pivot_is_every_block_voters_next_choice(self):
        u = gen_negative(27)
        for p in u.prefs[26:]:
            block_size = sum(1 for v in p.values if v > F(1, 2) and v != F(728, 729))
            from cardvote.core import rank

            assert rank(p, 27) == block_size + 1


class TestGenDk:
    def test_class_membership_matches_declared_counts(self):
        params = DkParams(m=8, k=64, a=3, b=4, c=2)
        for seed in range(5):
            u = gen_Dk(params, seed)
            classes = [classify(p, 64).dk_class for p in u.prefs]
            assert classes[:3] == ["a"] * 3
            assert classes[3:7] == ["b"] * 4
            assert classes[7:] == ["c"] * 2

    def test_all_voters_two_block(self):
        u = gen_Dk(DkParams(m=27, k=27 * 64, a=5, b=5, c=5), seed=9)
        for p in u.prefs:
            info = classify(p, 27 * 64)
            assert info.switches == 2

    def test_block_geometry(self):
        k = 64
        u = gen_Dk(DkParams(m=8, k=k, a=2, b=2, c=2), seed=4)
        for p in u.prefs:
            info = classify(p, k)
            for v, bit in zip(p.values, info.ubar):
                assert abs(v - bit) <= F(8 - 1, k)

    def test_gbar_when_everyone_tops_candidate_one(self):
        # All voters share the top block {1}: the favorite branch always
        # elects 1 and the top-width branch includes it with chance 1/width,
        # so the rounded benchmark is 1/2 + 1/(2*width).
        for m in (8, 27):
            k = 4 * m
            width = integer_cbrt(m)
            order = list(range(1, m + 1))
            u = Profile.of([two_block_preference(order, 1, k)] * 3)
            assert gbar_value(u) == F(1, 2) + F(1, 2 * width)

    def test_m8_two_voter_example(self):
        u = Profile.of([two_block_preference(list(range(1, 9)), 1, 32)] * 2)
        assert gbar_value(u) == F(3, 4)

    def test_param_validation(self):
        with pytest.raises(PreconditionError):
            DkParams(m=4, k=64, a=1, b=0, c=0)
        with pytest.raises(PreconditionError):
            DkParams(m=8, k=16, a=1, b=0, c=0)
        with pytest.raises(PreconditionError):
            DkParams(m=8, k=64, a=0, b=8, c=0)
        with pytest.raises(PreconditionError):
            DkParams(m=8, k=64, a=-1, b=8, c=1)

    def test_seed_reproducible(self):
        params = DkParams(m=8, k=64, a=2, b=3, c=1)
        assert gen_Dk(params, 11) == gen_Dk(params, 11)
        assert gen_Dk(params, 11) != gen_Dk(params, 12)


class TestGenCyclic:
    def test_welfare_window(self):
        eps = F(1, 1000)
        u = gen_cyclic(3, 2, eps)
        totals = welfare_vector(u)
        assert F(1) < totals[1] < 1 + 3 * eps
        assert totals[0] < 3 * eps and totals[2] < 3 * eps

    def test_tie_free_and_relaxed(self):
        u = gen_cyclic(5, 1, F(1, 26))
        assert u.is_tie_free()
        assert not u.is_normalized()

    def test_orderings_are_cyclic_shifts(self):
        from cardvote.core import descending_order

        u = gen_cyclic(4, 3, F(1, 17))
        for i, p in enumerate(u.prefs, start=1):
            expected = [((i - 1 + t) % 4) + 1 for t in range(4)]
            assert list(descending_order(p)) == expected

    def test_star_choices_are_ordinally_equivalent(self):
        eps = F(1, 126)
        profiles = [gen_cyclic(5, star, eps) for star in range(1, 6)]
        for a, b in itertools.combinations(profiles, 2):
            for i in range(5):
                assert ordinal_equivalent(a.prefs[i], b.prefs[i])

    def test_m5_star4_ratio_bound(self):
        eps = F(1, 26)
        u = gen_cyclic(5, 4, eps)
        # Cyclic symmetry puts chance exactly 1/5 on every candidate.
        dist = j_star(5).evaluate(u)
        assert set(dist.probs) == {F(1, 5)}
        assert ratio(j_star(5), u) < F(1, 5) + 25 * eps

    def test_eps_range_enforced(self):
        with pytest.raises(PreconditionError):
            gen_cyclic(5, 1, F(1, 25))
        with pytest.raises(PreconditionError):
            gen_cyclic(5, 1, F(0))
        with pytest.raises(PreconditionError):
            gen_cyclic(5, 9, F(1, 26))


class TestRandGridProfile:
    @given(st.integers(0, 50))
    @settings(max_examples=20, deadline=None)
    def test_tie_free_samples_valid(self, seed):
        u = rand_grid_profile(4, 3, 12, seed)
        assert u.is_tie_free() and u.is_normalized()
        for p in u.prefs:
            assert all((v * 12).denominator == 1 for v in p.values)

    def test_ties_allowed_samples_normalized(self):
        u = rand_grid_profile(4, 3, 5, seed=0, tie_free=False)
        assert u.is_normalized()

    def test_k_too_small(self):
        with pytest.raises(PreconditionError):
            rand_grid_profile(5, 2, 3, seed=0)


class TestDiscretize:
    def test_identity_on_grid_input(self):
        u = rand_grid_profile(4, 2, 40, seed=5)
        assert discretize(u, 40) == u

    def test_pinned_tie_break_example(self):
        u = Profile.of([Preference.normalized([1, F(1, 2), F(1, 2), 0])])
        got = discretize(u, 100).prefs[0].values
        assert got == (F(1), F(1, 2), F(49, 100), F(0))

    def test_windowed_oracle_at_k100(self):
        u = Preference.normalized([F(1), F(1, 2), F(1, 2), F(0)])
        got = discretize(Profile.of([u]), 100).prefs[0].values
        assert got == _l1_oracle(u, 100, window=6)

    @pytest.mark.parametrize("values", [
        ("1", "1/2", "1/2", "0"),
        ("1", "2/3", "1/3", "0"),
        ("0", "1", "1", "1/5"),
        ("1/2", "1/2", "0", "1"),
        ("1", "1", "0", "0"),
    ])
    def test_full_brute_force_oracle_k40(self, values):
        u = Preference.normalized([F(v) for v in values])
        got = discretize(Profile.of([u]), 40).prefs[0].values
        assert got == _l1_oracle(u, 40, window=None)

    def test_realizes_strict_order(self):
        from cardvote.core import descending_order

        u = Profile.of([Preference.normalized([1, "1/3", "1/3", 0, "2/3"])])
        d = discretize(u, 50)
        assert d.prefs[0].is_tie_free()
        assert descending_order(u.prefs[0]) == descending_order(d.prefs[0])

    def test_idempotent(self):
        u = Profile.of([Preference.normalized([1, "1/3", "1/3", 0])])
        once = discretize(u, 60)
        assert discretize(once, 60) == once

    def test_scheme_agreement(self):
        for seed in range(6):
            u = rand_grid_profile(6, 3, 97, seed)
            k = 10 * 6
            mech = j_star(6)
            assert mech.evaluate(discretize(u, k)) == mech.evaluate(u)

    def test_k_too_coarse(self):
        with pytest.raises(PreconditionError):
            discretize(rand_grid_profile(4, 2, 12, 0), 12)


def _l1_oracle(u: Preference, k: int, window: int | None) -> tuple[Fraction, ...]:
    """Exhaustive minimizer over strictly-decreasing grid assignments that
    realize the strict order of u; ties resolved by the lexicographically
    smallest candidate-indexed value tuple.

    With ``window`` set, each candidate only scans grid steps near its target
    (sound here because an optimal assignment never strays further than a few
    steps at these sizes); with None every strictly-decreasing assignment is
    enumerated via combinations of distinct grid steps.
    """
    m = u.m
    desc = sorted(range(m), key=lambda c: (-u.values[c], c))
    best = None

    def consider(assignment: tuple[int, ...]):
        nonlocal best
        cost = sum(abs(F(assignment[c], k) - u.values[c]) for c in range(m))
        key = (cost, assignment)
        if best is None or key < best:
            best = key

    if window is None:
        for combo in itertools.combinations(range(k + 1), m):
            assignment = [0] * m
            for position, cand in enumerate(desc):
                assignment[cand] = combo[m - 1 - position]
            consider(tuple(assignment))
    else:
        choices = []
        for c in range(m):
            target = int(u.values[c] * k)
            choices.append(range(max(0, target - window), min(k, target + window) + 1))
        for assignment in itertools.product(*choices):
            ordered = [assignment[c] for c in desc]
            if any(a <= b for a, b in zip(ordered, ordered[1:])):
                continue
            consider(assignment)
    assert best is not None
    return tuple(F(s, k) for s in best[1])
