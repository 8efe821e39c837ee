"""Constructors for the structured profile families the analysis machinery
consumes: the adversarial upper-bound profiles, the class-constrained grid
profiles, the cyclic profiles showing why per-voter normalization matters,
strict-order grid discretization, and a plain random grid sampler.

All constructors are pure; randomness enters only through explicit seeds.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Preference, Profile, exact
from .errors import PreconditionError
from .mechanisms import integer_cbrt


@dataclass(frozen=True)
class NegativeConstructionParams:
    """Shape of the adversarial profile that caps every top-q lottery and
    pairwise-quota scheme at O(m^(-2/3)).

    ``favorite_block_size`` is floor(m^(1/3)) and ``block_count`` is
    floor(m^(2/3)); the base profile has m-1+block_count voters and is
    duplicated ``repeat`` times.  Tiny filler utilities live on a ladder with
    denominator m^4, well below the 1/m^2 cap, so that no filler mass can
    push a non-special candidate's welfare past 2 + 1/m.
    """

    m: int
    repeat: int
    favorite_block_size: int
    block_count: int
    base_n: int

    @property
    def n(self) -> int:
        return self.base_n * self.repeat

    @property
    def ladder_denominator(self) -> int:
        return self.m ** 4


def negative_params(m: int, repeat: int = 1) -> NegativeConstructionParams:
    if m < 8:
        raise PreconditionError(f"construction needs m >= 8, got {m}")
    if repeat < 1:
        raise PreconditionError(f"repeat must be >= 1, got {repeat}")
    k = integer_cbrt(m)
    g = integer_cbrt(m * m)
    assert k * g <= m
    return NegativeConstructionParams(m, repeat, k, g, m - 1 + g)


def _nearly_equal_blocks(last: int, parts: int) -> list[list[int]]:
    """Partition {1..last} into ``parts`` contiguous blocks whose sizes differ
    by at most one."""
    base, extra = divmod(last, parts)
    blocks, start = [], 1
    for i in range(parts):
        size = base + (1 if i < extra else 0)
        blocks.append(list(range(start, start + size)))
        start += size
    return blocks


def gen_negative(m: int, repeat: int = 1) -> Profile:
    """Adversarial profile: candidate m carries almost all welfare but sits
    just below every block voter's favorites.

    Voters 1..m-1 rate their own index 1, candidate m exactly 0, and all
    other candidates with distinct values far below 1/m^2.  The remaining
    block_count voters each rate one block of favorites just below 1, rate
    candidate m exactly 1 - 1/m^2, and everything else far below 1/m^2.  The
    blocks partition {1, ..., min(k*g, m-1)} into block_count nearly-equal
    parts of size at most k, so each non-special candidate is a favorite of
    at most one block voter.
    """
    params = negative_params(m, repeat)
    den = params.ladder_denominator
    blocks = _nearly_equal_blocks(
        min(params.favorite_block_size * params.block_count, m - 1),
        params.block_count,
    )
    prefs: list[Preference] = []
    for i in range(1, m):
        values: list[Fraction] = [Fraction(0)] * m
        values[i - 1] = Fraction(1)
        step = m - 2
        for j in range(1, m + 1):
            if j in (i, m):
                continue
            values[j - 1] = Fraction(step, den)
            step -= 1
        prefs.append(Preference.normalized(values))
    pivot = Fraction(m * m - 1, m * m)  # exactly 1 - 1/m^2
    for block in blocks:
        values = [Fraction(0)] * m
        for s, j in enumerate(block):
            values[j - 1] = Fraction(den - s, den)
        values[m - 1] = pivot
        step = 0
        for j in range(1, m):
            if j in block:
                continue
            values[j - 1] = Fraction(step, den)
            step += 1
        prefs.append(Preference.normalized(values))
    return Profile(tuple(prefs * repeat))


@dataclass(frozen=True)
class DkParams:
    """Voter counts for the three structured two-block classes.

    The first ``a`` voters put candidate 1 in a top block of size at most 2;
    the next ``b`` voters have a single top candidate other than 1 and rank
    candidate 1 below floor(m^(1/3)); the last ``c`` voters have a top block
    of size floor(m^(1/3)) + 1 with candidate 1 ranked exactly last inside
    it.  Which candidates fill the blocks is drawn from the generator seed.
    """

    m: int
    k: int
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.m < 8:
            raise PreconditionError(f"need m >= 8, got {self.m}")
        if self.k < 4 * self.m:
            raise PreconditionError(
                f"need k >= 4m so block values clear 1/2, got k={self.k}, m={self.m}"
            )
        if min(self.a, self.b, self.c) < 0:
            raise PreconditionError("voter counts must be nonnegative")
        if self.a + self.c < 1:
            raise PreconditionError(
                "need a + c >= 1 so the rounded-welfare denominator is positive"
            )

    @property
    def n(self) -> int:
        return self.a + self.b + self.c


def two_block_preference(order: Sequence[int], top_size: int, k: int) -> Preference:
    """Tie-free grid preference whose image is a top run of grid values ending
    at 1 (the first ``top_size`` of ``order``) plus a bottom run starting at 0."""
    m = len(order)
    values = [Fraction(0)] * m
    for pos, cand in enumerate(order):
        if pos < top_size:
            values[cand - 1] = Fraction(k - pos, k)
        else:
            values[cand - 1] = Fraction(m - 1 - pos, k)
    return Preference.normalized(values)


def gen_Dk(params: DkParams, seed: int) -> Profile:
    """Seeded profile with a/b/c voters in the three structured classes."""
    rng = random.Random(seed)
    m, k = params.m, params.k
    v = integer_cbrt(m)
    others = list(range(2, m + 1))
    prefs: list[Preference] = []
    for _ in range(params.a):
        if rng.random() < 0.5:
            top = [1]
        else:
            partner = rng.choice(others)
            top = [1, partner] if rng.random() < 0.5 else [partner, 1]
        rest = [c for c in range(1, m + 1) if c not in top]
        rng.shuffle(rest)
        prefs.append(two_block_preference(top + rest, len(top), k))
    for _ in range(params.b):
        favorite = rng.choice(others)
        rank_of_one = rng.randint(v + 1, m)
        rest = [c for c in range(2, m + 1) if c != favorite]
        rng.shuffle(rest)
        order = [favorite] + rest[: rank_of_one - 2] + [1] + rest[rank_of_one - 2:]
        prefs.append(two_block_preference(order, 1, k))
    for _ in range(params.c):
        tops = rng.sample(others, v)
        rest = [c for c in range(2, m + 1) if c not in tops]
        rng.shuffle(rest)
        prefs.append(two_block_preference(tops + [1] + rest, v + 1, k))
    return Profile(tuple(prefs))


def gen_cyclic(m: int, star: int, eps) -> Profile:
    """Profile of m voters whose orderings are the m cyclic shifts.

    Voter ``star`` rates their own candidate exactly 1; every other utility
    in the profile is a distinct positive value below eps.  The output is
    deliberately not normalized (no per-voter 0/1 rescaling): the point of
    the family is that all m star choices are ordinally identical, so any
    ordinal scheme treats them alike while their welfare differs wildly.
    """
    if m < 2:
        raise PreconditionError(f"need m >= 2, got {m}")
    if not 1 <= star <= m:
        raise PreconditionError(f"star={star} out of range 1..{m}")
    eps = exact(eps)
    if not 0 < eps < Fraction(1, m * m):
        raise PreconditionError(f"eps must lie in (0, 1/m^2), got {eps}")
    n = m
    scale = eps / ((m + 2) * (n + 1))
    prefs = []
    for i in range(1, n + 1):
        cycle = [((i - 1 + t) % m) + 1 for t in range(m)]
        values = [Fraction(0)] * m
        for t, cand in enumerate(cycle, start=1):
            values[cand - 1] = scale * ((m - t + 1) * (n + 1) + i)
        if i == star:
            values[star - 1] = Fraction(1)
        prefs.append(Preference.relaxed(values))
    return Profile(tuple(prefs))


def rand_grid_profile(
    m: int, n: int, k: int, seed: int, tie_free: bool = True
) -> Profile:
    """Basic uniform sampler of normalized grid profiles for property tests."""
    if tie_free and k < m - 1:
        raise PreconditionError(f"k={k} cannot host {m} distinct grid values")
    rng = random.Random(seed)
    prefs = []
    for _ in range(n):
        if tie_free:
            steps = rng.sample(range(1, k), m - 2) + [0, k]
            rng.shuffle(steps)
        else:
            steps = [rng.randint(0, k) for _ in range(m)]
            lo, hi = rng.sample(range(m), 2)
            steps[lo], steps[hi] = 0, k
        prefs.append(Preference.normalized(Fraction(s, k) for s in steps))
    return Profile(tuple(prefs))


# ---------------------------------------------------------------------------
# Strict-order grid discretization.

def discretize(profile: Profile, k: int) -> Profile:
    """Snap every voter onto the 1/k grid, tie-free, realizing the strict
    order "value descending, index ascending" of the input and minimizing the
    L1 distance to it.

    Ties between minimizers are broken toward smaller values, considering
    candidates in index order.  Because the mechanisms here break value ties
    by candidate index as well, their output on the discretized profile
    matches the original exactly.
    """
    if k < 10 * profile.m:
        raise PreconditionError(
            f"k={k} too coarse; need k >= 10*m = {10 * profile.m}"
        )
    return Profile(tuple(_discretize_pref(p, k) for p in profile.prefs))


def _discretize_pref(pref: Preference, k: int) -> Preference:
    m = pref.m
    desc = sorted(range(m), key=lambda c: (-pref.values[c], c))
    asc = list(reversed(desc))  # position p holds the p-th weakest candidate
    targets = [pref.values[c] for c in asc]
    pins: dict[int, int] = {}

    def cost(p: int, v: int) -> Fraction | None:
        if p in pins and pins[p] != v:
            return None
        return abs(Fraction(v, k) - targets[p])

    def forward(upto: int) -> list[Fraction | None]:
        """Prefix minima over positions 0..upto: entry v is the cheapest way
        to place those positions strictly below grid value v+1 ... returned
        as running minima of f_upto."""
        prev: list[Fraction | None] = None
        for p in range(upto + 1):
            cur: list[Fraction | None] = [None] * (k + 1)
            for v in range(p, k + 1):
                c = cost(p, v)
                if c is None:
                    continue
                if p == 0:
                    cur[v] = c
                elif prev[v - 1] is not None:
                    cur[v] = c + prev[v - 1]
            prev = _running_min(cur)
        return prev

    def backward(downto: int) -> list[Fraction | None]:
        prev: list[Fraction | None] = None
        for p in range(m - 1, downto - 1, -1):
            cur: list[Fraction | None] = [None] * (k + 1)
            for v in range(0, k + 1):
                c = cost(p, v)
                if c is None:
                    continue
                if p == m - 1:
                    cur[v] = c
                elif v + 1 <= k and prev[v + 1] is not None:
                    cur[v] = c + prev[v + 1]
            prev = _running_min(cur, reverse=True)
        return prev

    full = forward(m - 1)
    best_total = full[k]
    if best_total is None:
        raise PreconditionError(f"k={k} cannot realize a strict order on {m} values")

    for cand in range(m):  # candidate index order = tie-break priority
        p = asc.index(cand)
        left = forward(p - 1) if p > 0 else None
        right = backward(p + 1) if p < m - 1 else None
        for v in range(k + 1):
            c = cost(p, v)
            if c is None:
                continue
            total = c
            if left is not None:
                if v == 0 or left[v - 1] is None:
                    continue
                total += left[v - 1]
            if right is not None:
                if v == k or right[v + 1] is None:
                    continue
                total += right[v + 1]
            if total == best_total:
                pins[p] = v
                break
        assert p in pins, "minimizer search failed"

    values = [Fraction(0)] * m
    for p, v in pins.items():
        values[asc[p]] = Fraction(v, k)
    return Preference.relaxed(values)


def _running_min(
    arr: list[Fraction | None], reverse: bool = False
) -> list[Fraction | None]:
    out: list[Fraction | None] = [None] * len(arr)
    best: Fraction | None = None
    indices = range(len(arr) - 1, -1, -1) if reverse else range(len(arr))
    for i in indices:
        v = arr[i]
        if v is not None and (best is None or v < best):
            best = v
        out[i] = best
    return out
