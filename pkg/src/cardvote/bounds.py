"""Analytical machinery for the welfare-ratio bounds.

This module classifies grid preferences by their image structure, evaluates
the two benchmark functionals (expected welfare of the stacked-lottery
scheme divided by candidate 1's welfare, in raw and in 0/1-rounded form),
performs the two constructive reductions (interior-block sliding onto the
two-block class, then per-voter projection onto the three structured
classes), computes the closed-form lower bound, and runs the worst-case
experiments.

Everything is exact; every reduction step is logged so monotonicity can be
re-checked step by step.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .core import (
    ZERO,
    CandidateDistribution,
    Preference,
    Profile,
    descending_order,
    ratio as ratio_of,
    welfare_vector,
)
from .errors import (
    DegenerateProjectionError,
    GridError,
    PreconditionError,
    UndefinedRatioError,
)
from .generators import gen_Dk, gen_negative, DkParams, two_block_preference
from .mechanisms import integer_cbrt, j2q_quota_range, j_star

HALF = Fraction(1, 2)


def _grid_steps(pref: Preference, k: int) -> list[int]:
    steps = []
    for v in pref.values:
        scaled = v * k
        if scaled.denominator != 1:
            raise GridError(f"value {v} is not a multiple of 1/{k}")
        steps.append(int(scaled))
    return steps


def _image_runs(step_set: set[int]) -> list[tuple[int, int]]:
    """Maximal runs of consecutive grid steps present in the image."""
    runs = []
    for step in sorted(step_set):
        if runs and step == runs[-1][1] + 1:
            runs[-1] = (runs[-1][0], step)
        else:
            runs.append((step, step))
    return runs


def switch_count(pref: Preference, k: int) -> int:
    """Number of in/out switches of the image indicator along the grid."""
    present = set(_grid_steps(pref, k))
    return sum(1 for j in range(k) if (j in present) != (j + 1 in present))


def rounded(pref: Preference) -> tuple[int, ...]:
    """0/1 rounding at threshold 1/2 (strictly above 1/2 rounds to 1)."""
    return tuple(1 if v > HALF else 0 for v in pref.values)


def choice_sets(pref: Preference, width: int) -> tuple[frozenset, frozenset]:
    """(favorite set, candidates ranked 2..width): the only voter data the
    stacked-lottery scheme reads."""
    order = descending_order(pref)
    return frozenset(order[:1]), frozenset(order[1:width])


@dataclass(frozen=True)
class ClassifiedPref:
    """A grid preference together with its derived structure.

    ``switches`` counts image-membership switches along the grid; it is even
    and at least 2 for every normalized grid preference with k >= m.  A value
    of exactly 2 means the image is one bottom run starting at 0 plus one
    top run ending at 1 (the two-block class).  ``dk_class`` is "a", "b" or
    "c" when the preference falls into one of the structured worst-case
    classes, else None.
    """

    pref: Preference
    k: int
    image: tuple[int, ...]
    switches: int
    ubar: tuple[int, ...]
    count: int
    ranks: tuple[int, ...]
    favorite_set: frozenset
    near_favorite_set: frozenset

    @property
    def in_Ck(self) -> bool:
        return self.switches == 2

    @property
    def dk_class(self) -> str | None:
        if not self.in_Ck:
            return None
        width = integer_cbrt(self.pref.m)
        rank1 = self.ranks[0]
        if self.count <= 2 and self.ubar[0] == 1:
            return "a"
        if self.count == 1 and rank1 > width:
            return "b"
        if self.count == width + 1 and rank1 == width + 1:
            return "c"
        return None

    @property
    def in_Dk(self) -> bool:
        return self.dk_class is not None


def classify(pref: Preference, k: int) -> ClassifiedPref:
    """Compute all derived structure for a tie-free grid preference."""
    if k < pref.m:
        raise GridError(f"need k >= m, got k={k}, m={pref.m}")
    steps = _grid_steps(pref, k)
    if 0 not in steps or k not in steps:
        raise GridError("grid preference must attain both 0 and 1")
    if not pref.is_tie_free():
        raise PreconditionError("classification needs a tie-free preference")
    order = descending_order(pref)
    ranks = [0] * pref.m
    for position, cand in enumerate(order, start=1):
        ranks[cand - 1] = position
    width = integer_cbrt(pref.m)
    fav, near = choice_sets(pref, width)
    ub = rounded(pref)
    return ClassifiedPref(
        pref=pref,
        k=k,
        image=tuple(sorted(set(steps))),
        switches=switch_count(pref, k),
        ubar=ub,
        count=sum(ub),
        ranks=tuple(ranks),
        favorite_set=fav,
        near_favorite_set=near,
    )


# ---------------------------------------------------------------------------
# Benchmark functionals.  Candidate 1 plays the role of the welfare
# benchmark; on tie-free profiles whose score maximizer is candidate 1 the
# raw functional coincides with the welfare ratio of the stacked-lottery
# scheme.

def _jstar_dist(profile: Profile) -> CandidateDistribution:
    return j_star(profile.m).evaluate(profile)


def g_value(profile: Profile) -> Fraction:
    dist = _jstar_dist(profile)
    totals = welfare_vector(profile)
    denom = totals[0]
    if denom <= ZERO:
        raise UndefinedRatioError("candidate 1 has zero welfare")
    numer = sum((p * w for p, w in zip(dist.probs, totals)), ZERO)
    return numer / denom


def gbar_value(profile: Profile) -> Fraction:
    dist = _jstar_dist(profile)
    counts = [0] * profile.m
    denom = 0
    for pref in profile.prefs:
        ub = rounded(pref)
        denom += ub[0]
        for idx, bit in enumerate(ub):
            counts[idx] += bit
    if denom <= 0:
        raise UndefinedRatioError("no voter rounds candidate 1 up to 1")
    numer = sum((p * c for p, c in zip(dist.probs, counts)), ZERO)
    return numer / denom


# ---------------------------------------------------------------------------
# Reduction 1: slide interior image blocks until every voter is two-block.

@dataclass(frozen=True)
class SlideStep:
    voter: int
    run: tuple[int, int]
    direction: str
    g_before: Fraction
    g_after: Fraction


@dataclass(frozen=True)
class ReductionTrace:
    result: Profile
    steps: tuple[SlideStep, ...]
    g_initial: Fraction
    g_final: Fraction

    @property
    def anomalies(self) -> tuple[int, ...]:
        """Indices of steps where the benchmark functional increased; the
        sliding argument predicts there are none."""
        return tuple(
            i for i, s in enumerate(self.steps) if s.g_after > s.g_before
        )


def reduce_to_Ck_trace(profile: Profile, k: int) -> ReductionTrace:
    """Slide one maximal interior image run of one voter by one grid step at a
    time, always in a direction that does not increase the benchmark
    functional (ties move left), until every voter's image is two runs.

    Each voter's strict order is untouched by every slide, so the
    stacked-lottery distribution is invariant across the whole reduction;
    the functional is tracked incrementally (a slide moves every affected
    candidate's welfare by exactly 1/k).
    """
    steps_by_voter = [_grid_steps(p, k) for p in profile.prefs]
    for pref in profile.prefs:
        classify(pref, k)  # validates grid membership, 0/1, tie-freeness
    totals = welfare_vector(profile)
    if totals[0] <= ZERO:
        raise UndefinedRatioError("candidate 1 has zero welfare")
    dist = _jstar_dist(profile)
    one_step = Fraction(1, k)

    numer = sum((p * w for p, w in zip(dist.probs, totals)), ZERO)
    denom = totals[0]
    g_initial = numer / denom
    g_current = g_initial

    steps: list[SlideStep] = []
    cap = 4 * profile.n * profile.m * k + 16
    while True:
        target = None
        for idx, voter_steps in enumerate(steps_by_voter):
            runs = _image_runs(set(voter_steps))
            if len(runs) > 2:
                target = (idx, runs[1])  # first interior run
                break
        if target is None:
            break
        if len(steps) > cap:
            raise RuntimeError("interior-block sliding failed to terminate")
        idx, (lo, hi) = target
        voter_steps = steps_by_voter[idx]
        affected = [c for c, s in enumerate(voter_steps) if lo <= s <= hi]
        d_numer = one_step * sum((dist.probs[c] for c in affected), ZERO)
        d_denom = one_step if 0 in affected else ZERO
        g_left = (numer - d_numer) / (denom - d_denom)
        g_right = (numer + d_numer) / (denom + d_denom)
        if g_left <= g_right:
            delta, g_next, direction = -1, g_left, "left"
        else:
            delta, g_next, direction = +1, g_right, "right"
        for c in affected:
            voter_steps[c] += delta
        numer += delta * d_numer
        denom += delta * d_denom
        steps.append(SlideStep(idx + 1, (lo, hi), direction, g_current, g_next))
        g_current = g_next
    result = Profile(
        tuple(
            Preference(tuple(Fraction(s, k) for s in voter_steps))
            for voter_steps in steps_by_voter
        )
    )
    assert _jstar_dist(result) == dist
    assert g_of_dist(result, dist) == g_current
    return ReductionTrace(result, tuple(steps), g_initial, g_current)


def g_of_dist(profile: Profile, dist: CandidateDistribution) -> Fraction:
    """Benchmark functional with an externally supplied distribution."""
    totals = welfare_vector(profile)
    if totals[0] <= ZERO:
        raise UndefinedRatioError("candidate 1 has zero welfare")
    return sum((p * w for p, w in zip(dist.probs, totals)), ZERO) / totals[0]


def reduce_to_Ck(profile: Profile, k: int) -> Profile:
    return reduce_to_Ck_trace(profile, k).result


# ---------------------------------------------------------------------------
# Reduction 2: project each two-block voter onto a structured class.

@dataclass(frozen=True)
class ProjectionMove:
    voter: int
    kept: bool
    target_class: str | None
    before: Preference
    after: Preference


@dataclass(frozen=True)
class ProjectionTrace:
    result: Profile
    moves: tuple[ProjectionMove, ...]


def project_to_Dk_trace(profile: Profile, k: int) -> ProjectionTrace:
    """Replace every two-block voter outside the structured classes by a
    same-grid voter inside one of them.

    The replacement keeps the voter's favorite set and near-favorite set
    (so the stacked-lottery distribution on the profile is unchanged), never
    lowers the voter's rounded value of candidate 1, and never raises any
    other rounded value; consequently the rounded benchmark functional never
    increases when defined on both sides.
    """
    if k < 4 * profile.m:
        raise PreconditionError(f"need k >= 4m, got k={k}, m={profile.m}")
    width = integer_cbrt(profile.m)
    moves: list[ProjectionMove] = []
    out: list[Preference] = []
    for voter, pref in enumerate(profile.prefs, start=1):
        info = classify(pref, k)
        if not info.in_Ck:
            raise PreconditionError(
                f"voter {voter} is not two-block (switch count {info.switches})"
            )
        if info.in_Dk:
            out.append(pref)
            moves.append(ProjectionMove(voter, True, info.dk_class, pref, pref))
            continue
        desc = list(descending_order(pref))
        rank1 = info.ranks[0]
        if rank1 == 1:
            order, top, target = desc, 1, "a"
        elif rank1 <= width:
            fav = desc[0]
            order = [fav, 1] + [c for c in desc if c not in (fav, 1)]
            top, target = 2, "a"
        elif info.ubar[0] == 1:
            order = desc[:width] + [1] + [c for c in desc[width:] if c != 1]
            top, target = width + 1, "c"
        else:
            order, top, target = desc, 1, "b"
        replacement = two_block_preference(order, top, k)
        assert classify(replacement, k).dk_class == target
        out.append(replacement)
        moves.append(ProjectionMove(voter, False, target, pref, replacement))
    if not any(rounded(p)[0] for p in out):
        raise DegenerateProjectionError(
            "projection left no voter rounding candidate 1 up to 1"
        )
    return ProjectionTrace(Profile(tuple(out)), tuple(moves))


def project_to_Dk(profile: Profile, k: int) -> Profile:
    return project_to_Dk_trace(profile, k).result


# ---------------------------------------------------------------------------
# Closed-form lower bound and worst-case searches.

def lower_bound_formula(a: int, b: int, c: int, n: int, m: int) -> Fraction:
    """Exact pre-asymptotic lower bound on the rounded benchmark functional
    for a profile with the given class counts.  Uses floor(m^(1/3))
    throughout; only the floored form is provable exactly at finite m."""
    if a + b + c != n:
        raise PreconditionError(f"a+b+c = {a + b + c} must equal n = {n}")
    if min(a, b, c) < 0:
        raise PreconditionError("class counts must be nonnegative")
    if a + c < 1:
        raise PreconditionError("need a + c >= 1")
    if m < 8:
        raise PreconditionError(f"need m >= 8, got {m}")
    width = integer_cbrt(m)
    return (
        Fraction(a, 2 * n * width)
        + Fraction(b * b, 2 * n * (m - 1) * (a + c))
        + Fraction(c * c * width, 2 * n * (m - 1) * (a + c))
    )


@dataclass(frozen=True)
class MinRatioResult:
    profile: Profile
    ratio: Fraction
    visited: int


def min_ratio_search(
    mech, family: Iterable[Profile], budget: int = 1_000_000
) -> MinRatioResult:
    """Smallest exact welfare ratio among the visited family members, with
    lexicographic tie-break on the profile's value table."""
    best = None
    visited = 0
    for profile in itertools.islice(family, budget):
        visited += 1
        r = ratio_of(mech, profile)
        key = tuple(p.values for p in profile.prefs)
        if best is None or (r, key) < best[:2]:
            best = (r, key, profile)
    if best is None:
        raise PreconditionError("empty profile family")
    return MinRatioResult(best[2], best[0], visited)


# ---------------------------------------------------------------------------
# Experiments.

@dataclass(frozen=True)
class NegativeRow:
    m: int
    scheme: str
    q: int
    ratio: Fraction


def _positions(profile: Profile) -> list[list[int]]:
    """positions[i][j-1] = place of candidate j in voter i's strict order
    (value descending, index ascending), 1-based."""
    out = []
    for pref in profile.prefs:
        pos = [0] * profile.m
        for place, cand in enumerate(descending_order(pref), start=1):
            pos[cand - 1] = place
        out.append(pos)
    return out


def all_q_ratios(profile: Profile) -> tuple[dict[int, Fraction], dict[int, Fraction]]:
    """Exact welfare ratios of every top-q lottery (q = 1..m) and every
    in-range pairwise-quota scheme on one profile.

    Integer vote counting plus a single exact assembly per q; agrees with the
    generic evaluators entry for entry.
    """
    m, n = profile.m, profile.n
    totals = welfare_vector(profile)
    best = max(totals)
    if best <= ZERO:
        raise UndefinedRatioError("maximal welfare is zero")
    pos = _positions(profile)

    at_place = [[0] * (m + 1) for _ in range(m)]  # candidate -> place histogram
    for row in pos:
        for cand_idx, place in enumerate(row):
            at_place[cand_idx][place] += 1
    j1: dict[int, Fraction] = {}
    for q in range(1, m + 1):
        numer = ZERO
        for cand_idx in range(m):
            in_top = sum(at_place[cand_idx][1 : q + 1])
            if in_top:
                numer += in_top * totals[cand_idx]
        j1[q] = numer / (n * q * best)

    beats = [[0] * m for _ in range(m)]
    for row in pos:
        for j0, j1_idx in itertools.combinations(range(m), 2):
            if row[j0] < row[j1_idx]:
                beats[j0][j1_idx] += 1
            else:
                beats[j1_idx][j0] += 1
    npairs = m * (m - 1) // 2
    j2: dict[int, Fraction] = {}
    for q in j2q_quota_range(n):
        units = [0] * m
        for j0, j1_idx in itertools.combinations(range(m), 2):
            v0 = beats[j0][j1_idx]
            v1 = n - v0
            if v0 >= q and v1 < q:
                units[j0] += 2
            elif v1 >= q and v0 < q:
                units[j1_idx] += 2
            else:
                units[j0] += 1
                units[j1_idx] += 1
        numer = sum((u * w for u, w in zip(units, totals) if u), ZERO)
        j2[q] = numer / (2 * npairs * best)
    return j1, j2


def upper_bound_experiment(ms: Sequence[int], repeat: int = 1) -> list[NegativeRow]:
    """Evaluate every top-q lottery and every in-range pairwise-quota scheme
    on the adversarial profile for each m."""
    rows: list[NegativeRow] = []
    for m in ms:
        profile = gen_negative(m, repeat)
        j1, j2 = all_q_ratios(profile)
        rows.extend(NegativeRow(m, "j1", q, j1[q]) for q in sorted(j1))
        rows.extend(NegativeRow(m, "j2", q, j2[q]) for q in sorted(j2))
    return rows


@dataclass(frozen=True)
class LowerRow:
    m: int
    n: int
    k: int
    seed: int
    a: int
    b: int
    c: int
    gbar: Fraction
    bound: Fraction

    @property
    def slack(self) -> Fraction:
        return self.gbar - self.bound


def lower_bound_experiment(
    m: int, n: int, k: int, step: int, seeds: Sequence[int]
) -> list[LowerRow]:
    """Sweep class counts (a, c) over multiples of ``step`` and compare the
    exact rounded benchmark value of seeded structured profiles against the
    closed-form bound."""
    if step < 1:
        raise PreconditionError(f"step must be >= 1, got {step}")
    rows = []
    for a in range(0, n + 1, step):
        for c in range(0, n + 1 - a, step):
            if a + c < 1:
                continue
            b = n - a - c
            bound = lower_bound_formula(a, b, c, n, m)
            for seed in seeds:
                profile = gen_Dk(DkParams(m=m, k=k, a=a, b=b, c=c), seed)
                rows.append(LowerRow(m, n, k, seed, a, b, c, gbar_value(profile), bound))
    return rows
