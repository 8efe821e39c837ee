"""Exact-arithmetic domain types for cardinal voting.

A voter scores every candidate with a rational utility in [0, 1]; a profile
collects one preference per voter.  Everything downstream (welfares, winning
probabilities, welfare ratios) is computed with `fractions.Fraction`, so
comparisons and tie detection are exact.  Floats are rejected at the
boundary: pass ints, Fractions, or strings such as "3/4" or "0.25".

Candidates and voters are 1-indexed in the public API.

All types are immutable after construction and all operations are pure, so
concurrent evaluation needs no synchronization.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import NormalizationError, PreconditionError, UndefinedRatioError

ZERO = Fraction(0)
ONE = Fraction(1)


def exact(value) -> Fraction:
    """Coerce to Fraction, rejecting floats (they are rarely the rational the
    caller had in mind)."""
    if isinstance(value, float):
        raise TypeError(
            f"refusing float {value!r}; pass a Fraction, int, or decimal string"
        )
    return Fraction(value)


@dataclass(frozen=True)
class Preference:
    """One voter's utility vector over m candidates.

    Use :meth:`normalized` for the standard setting (minimum utility exactly
    0, maximum exactly 1) and :meth:`relaxed` when only the [0, 1] bounds are
    required.  Both constructors validate; instances compare by value.
    """

    values: tuple[Fraction, ...]

    @classmethod
    def normalized(cls, values: Iterable) -> "Preference":
        pref = cls.relaxed(values)
        if not pref.is_normalized():
            raise NormalizationError(
                f"normalized preference needs min 0 and max 1, got {pref.values}"
            )
        return pref

    @classmethod
    def relaxed(cls, values: Iterable) -> "Preference":
        vals = tuple(exact(v) for v in values)
        if len(vals) < 2:
            raise PreconditionError("need at least 2 candidates")
        for v in vals:
            if v < ZERO or v > ONE:
                raise PreconditionError(f"utility {v} outside [0, 1]")
        return cls(vals)

    @property
    def m(self) -> int:
        return len(self.values)

    def value(self, j: int) -> Fraction:
        """Utility of candidate j (1-indexed)."""
        if not 1 <= j <= self.m:
            raise IndexError(f"candidate {j} out of range 1..{self.m}")
        return self.values[j - 1]

    def is_normalized(self) -> bool:
        return min(self.values) == ZERO and max(self.values) == ONE

    def is_tie_free(self) -> bool:
        return len(set(self.values)) == self.m


@dataclass(frozen=True)
class Profile:
    """An ordered tuple of preferences sharing the same candidate count."""

    prefs: tuple[Preference, ...]

    def __post_init__(self):
        if not self.prefs:
            raise PreconditionError("profile needs at least one voter")
        m = self.prefs[0].m
        for p in self.prefs:
            if p.m != m:
                raise PreconditionError("all voters must rate the same candidates")

    @classmethod
    def of(cls, prefs: Iterable[Preference]) -> "Profile":
        return cls(tuple(prefs))

    @property
    def n(self) -> int:
        return len(self.prefs)

    @property
    def m(self) -> int:
        return self.prefs[0].m

    def pref(self, i: int) -> Preference:
        """Preference of voter i (1-indexed)."""
        if not 1 <= i <= self.n:
            raise IndexError(f"voter {i} out of range 1..{self.n}")
        return self.prefs[i - 1]

    def replace(self, i: int, pref: Preference) -> "Profile":
        """New profile with voter i's preference swapped out."""
        if not 1 <= i <= self.n:
            raise IndexError(f"voter {i} out of range 1..{self.n}")
        prefs = list(self.prefs)
        prefs[i - 1] = pref
        return Profile(tuple(prefs))

    def is_tie_free(self) -> bool:
        return all(p.is_tie_free() for p in self.prefs)

    def is_normalized(self) -> bool:
        return all(p.is_normalized() for p in self.prefs)


@dataclass(frozen=True)
class CandidateDistribution:
    """Exact probability vector over candidates: entries >= 0, sum exactly 1."""

    probs: tuple[Fraction, ...]

    def __post_init__(self):
        total = ZERO
        for p in self.probs:
            if p < ZERO:
                raise PreconditionError(f"negative probability {p}")
            total += p
        if total != ONE:
            raise PreconditionError(f"probabilities sum to {total}, not 1")

    @classmethod
    def of(cls, probs: Iterable) -> "CandidateDistribution":
        return cls(tuple(exact(p) for p in probs))

    @classmethod
    def point(cls, j: int, m: int) -> "CandidateDistribution":
        """Degenerate distribution on candidate j (1-indexed)."""
        return cls(tuple(ONE if c == j else ZERO for c in range(1, m + 1)))

    @property
    def m(self) -> int:
        return len(self.probs)

    def prob(self, j: int) -> Fraction:
        if not 1 <= j <= self.m:
            raise IndexError(f"candidate {j} out of range 1..{self.m}")
        return self.probs[j - 1]

    def support(self) -> tuple[int, ...]:
        return tuple(j for j in range(1, self.m + 1) if self.probs[j - 1] > ZERO)


def normalize(raw: Sequence) -> Preference:
    """Affinely rescale a utility vector so its minimum is 0 and maximum 1.

    The candidate ordering (ties included) is preserved exactly.  Raises
    NormalizationError for constant input, where no affine map can reach both
    endpoints.
    """
    vals = [exact(v) for v in raw]
    if len(vals) < 2:
        raise PreconditionError("need at least 2 candidates")
    lo, hi = min(vals), max(vals)
    if lo == hi:
        raise NormalizationError("constant utility vector cannot be normalized")
    span = hi - lo
    return Preference.normalized((v - lo) / span for v in vals)


def welfare(profile: Profile, j: int) -> Fraction:
    """Total utility of candidate j across all voters."""
    if not 1 <= j <= profile.m:
        raise IndexError(f"candidate {j} out of range 1..{profile.m}")
    return sum((p.values[j - 1] for p in profile.prefs), ZERO)


def welfare_vector(profile: Profile) -> tuple[Fraction, ...]:
    totals = [ZERO] * profile.m
    for p in profile.prefs:
        for idx, v in enumerate(p.values):
            totals[idx] += v
    return tuple(totals)


def rv_winner(profile: Profile) -> int:
    """Candidate with maximal total utility; welfare ties go to the lowest
    candidate index."""
    totals = welfare_vector(profile)
    best = max(totals)
    return totals.index(best) + 1


def expected_welfare(profile: Profile, dist: CandidateDistribution) -> Fraction:
    if dist.m != profile.m:
        raise PreconditionError("distribution and profile disagree on m")
    totals = welfare_vector(profile)
    return sum((p * w for p, w in zip(dist.probs, totals)), ZERO)


@dataclass(frozen=True)
class WelfareReport:
    """Welfare bookkeeping for one mechanism evaluation: the per-candidate
    welfare vector, the score-maximizing winner, the mechanism's expected
    welfare and the ratio of the two."""

    welfares: tuple[Fraction, ...]
    rv_winner: int
    expected: Fraction
    ratio: Fraction


def welfare_report(profile: Profile, dist: CandidateDistribution) -> WelfareReport:
    totals = welfare_vector(profile)
    winner = rv_winner(profile)
    best = totals[winner - 1]
    if best <= ZERO:
        raise UndefinedRatioError(
            "welfare ratio undefined: maximal welfare is zero"
        )
    expected = sum((p * w for p, w in zip(dist.probs, totals)), ZERO)
    return WelfareReport(totals, winner, expected, expected / best)


def ratio(mechanism, profile: Profile) -> Fraction:
    """Expected welfare of the mechanism's winner divided by the maximal
    welfare.  Accepts anything with an ``evaluate(profile)`` method, or a
    bare callable."""
    evaluate = getattr(mechanism, "evaluate", mechanism)
    return welfare_report(profile, evaluate(profile)).ratio


def rank(pref: Preference, j: int) -> int:
    """Position of candidate j in the voter's descending order: the number of
    candidates valued at least as much.  Requires a tie-free preference."""
    if not 1 <= j <= pref.m:
        raise IndexError(f"candidate {j} out of range 1..{pref.m}")
    if not pref.is_tie_free():
        raise PreconditionError("rank is only defined for tie-free preferences")
    v = pref.values[j - 1]
    return sum(1 for w in pref.values if w >= v)


def top_q_set(pref: Preference, q: int) -> tuple[int, ...]:
    """The q best candidates under the strict order "value descending, ties to
    the lower candidate index", returned in that order."""
    if not 1 <= q <= pref.m:
        raise IndexError(f"q={q} out of range 1..{pref.m}")
    order = sorted(range(1, pref.m + 1), key=lambda j: (-pref.values[j - 1], j))
    return tuple(order[:q])


def descending_order(pref: Preference) -> tuple[int, ...]:
    """All candidates under the same strict order top_q_set uses."""
    return top_q_set(pref, pref.m)


# ---------------------------------------------------------------------------
# Serialization.  JSON carries exact numerator/denominator pairs; the CSV
# form (one voter per row, "p/q" strings) is meant for hand editing.

def profile_to_json_dict(profile: Profile) -> dict:
    return {
        "m": profile.m,
        "n": profile.n,
        "prefs": [
            [[v.numerator, v.denominator] for v in p.values]
            for p in profile.prefs
        ],
    }


def profile_from_json_dict(data: dict) -> Profile:
    try:
        m, n, prefs = data["m"], data["n"], data["prefs"]
    except (KeyError, TypeError) as e:
        raise PreconditionError(f"profile JSON missing field: {e}") from e
    if len(prefs) != n:
        raise PreconditionError(f"profile declares n={n} but has {len(prefs)} voters")
    out = []
    for row in prefs:
        if len(row) != m:
            raise PreconditionError(f"voter row has {len(row)} values, expected m={m}")
        out.append(Preference.relaxed(Fraction(num, den) for num, den in row))
    return Profile.of(out)


def profile_to_csv_text(profile: Profile) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    for p in profile.prefs:
        writer.writerow([str(v) for v in p.values])
    return buf.getvalue()


def profile_from_csv_text(text: str) -> Profile:
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows:
        raise PreconditionError("empty profile CSV")
    return Profile.of(Preference.relaxed(Fraction(cell) for cell in row) for row in rows)
