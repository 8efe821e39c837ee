"""Exact evaluators for the voting schemes and combinators over them.

Every mechanism maps a Profile to a CandidateDistribution with Fraction
probabilities; evaluation is deterministic and side-effect free, so
mechanisms can be shared freely across threads.  Randomness only enters
through :func:`sample`, behind an explicit seed.
"""

from __future__ import annotations

import itertools
import math
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import (
    ZERO,
    ONE,
    CandidateDistribution,
    Preference,
    Profile,
    exact,
    rv_winner,
    top_q_set,
)
from .errors import (
    BudgetError,
    MechanismSpecError,
    PreconditionError,
    WeightError,
)


def integer_cbrt(x: int) -> int:
    """Largest t with t**3 <= x, computed without floating point."""
    if x < 0:
        raise PreconditionError("cube root of negative value")
    if x == 0:
        return 0
    t = max(1, round(x ** (1.0 / 3.0)))
    while t ** 3 > x:
        t -= 1
    while (t + 1) ** 3 <= x:
        t += 1
    return t


@dataclass(frozen=True)
class Mechanism:
    """A named voting scheme.

    ``evaluate`` maps a profile to an exact distribution over candidates.
    The claimed_* flags are metadata used for test selection only; nothing
    in the evaluator depends on them.  ``q`` is set for the two built-in
    parameterized families so reports can flag out-of-range quotas.
    """

    name: str
    evaluate: Callable[[Profile], CandidateDistribution]
    claimed_truthful: bool = False
    claimed_ordinal: bool = False
    q: int | None = field(default=None, compare=False)


def range_voting() -> Mechanism:
    """Deterministic welfare maximizer; welfare ties go to the lowest index."""

    def evaluate(profile: Profile) -> CandidateDistribution:
        return CandidateDistribution.point(rv_winner(profile), profile.m)

    return Mechanism("rv", evaluate, claimed_truthful=False, claimed_ordinal=False)


def constant_winner(j: int) -> Mechanism:
    """Always elects candidate j, ignoring the profile."""

    def evaluate(profile: Profile) -> CandidateDistribution:
        if not 1 <= j <= profile.m:
            raise IndexError(f"candidate {j} out of range 1..{profile.m}")
        return CandidateDistribution.point(j, profile.m)

    return Mechanism(f"const:{j}", evaluate, claimed_truthful=True, claimed_ordinal=True)


def j1q(q: int) -> Mechanism:
    """Pick a voter uniformly at random, then a winner uniformly among that
    voter's q most preferred candidates (value ties broken toward the lower
    candidate index)."""
    if q < 1:
        raise PreconditionError(f"q must be >= 1, got {q}")

    def evaluate(profile: Profile) -> CandidateDistribution:
        if q > profile.m:
            raise IndexError(f"q={q} exceeds candidate count {profile.m}")
        n, m = profile.n, profile.m
        share = Fraction(1, n * q)
        probs = [ZERO] * m
        for p in profile.prefs:
            for j in top_q_set(p, q):
                probs[j - 1] += share
        return CandidateDistribution(tuple(probs))

    return Mechanism(f"j1:{q}", evaluate, claimed_truthful=True, claimed_ordinal=True, q=q)


def j2q_quota_range(n: int) -> range:
    """Quotas for which at most one candidate of a pair can reach the quota."""
    return range(n // 2 + 1, n + 2)


def j2q(q: int) -> Mechanism:
    """Pick an unordered candidate pair uniformly at random and hold a
    pairwise vote; a candidate wins the pair if it alone reaches q votes,
    otherwise the pair is decided by a fair coin.

    A voter indifferent between the two drawn candidates votes for the lower
    index.  Quotas outside j2q_quota_range(n) are accepted; requiring the
    quota-reacher to be unique keeps the scheme well-defined (and truthful,
    since each voter's pairwise outcome stays monotone in the votes for the
    candidate they prefer)."""
    if q < 1:
        raise PreconditionError(f"q must be >= 1, got {q}")

    def evaluate(profile: Profile) -> CandidateDistribution:
        m, n = profile.m, profile.n
        if m < 2:
            raise IndexError("pairwise voting needs at least 2 candidates")
        npairs = m * (m - 1) // 2
        half = Fraction(1, 2 * npairs)
        probs = [ZERO] * m
        for j0, j1 in itertools.combinations(range(1, m + 1), 2):
            votes0 = sum(
                1 for p in profile.prefs if p.values[j0 - 1] >= p.values[j1 - 1]
            )
            votes1 = n - votes0
            meets0, meets1 = votes0 >= q, votes1 >= q
            if meets0 and not meets1:
                probs[j0 - 1] += 2 * half
            elif meets1 and not meets0:
                probs[j1 - 1] += 2 * half
            else:
                probs[j0 - 1] += half
                probs[j1 - 1] += half
        return CandidateDistribution(tuple(probs))

    return Mechanism(f"j2:{q}", evaluate, claimed_truthful=True, claimed_ordinal=True, q=q)


def mix(parts: Sequence[tuple]) -> Mechanism:
    """Convex combination of mechanisms: weights must be exact, nonnegative,
    and sum to 1."""
    if not parts:
        raise WeightError("mixture needs at least one component")
    weighted = [(exact(w), mech) for w, mech in parts]
    total = sum((w for w, _ in weighted), ZERO)
    if total != ONE:
        raise WeightError(f"weights sum to {total}, not 1")
    for w, _ in weighted:
        if w < ZERO:
            raise WeightError(f"negative weight {w}")

    def evaluate(profile: Profile) -> CandidateDistribution:
        probs = [ZERO] * profile.m
        for w, mech in weighted:
            if w == ZERO:
                continue
            for idx, p in enumerate(mech.evaluate(profile).probs):
                probs[idx] += w * p
        return CandidateDistribution(tuple(probs))

    name = "mix:" + "+".join(f"{w}*{mech.name}" for w, mech in weighted)
    return Mechanism(
        name,
        evaluate,
        claimed_truthful=all(mech.claimed_truthful for _, mech in weighted),
        claimed_ordinal=all(mech.claimed_ordinal for _, mech in weighted),
    )


def j_star(m: int) -> Mechanism:
    """Equal mixture of the random-favorite scheme and the top-floor(m^(1/3))
    lottery; the cube root is exact integer arithmetic (m=27 gives 3, never 2)."""
    if m < 2:
        raise PreconditionError("need at least 2 candidates")
    t = max(1, integer_cbrt(m))
    mech = mix([(Fraction(1, 2), j1q(1)), (Fraction(1, 2), j1q(t))])
    return Mechanism("jstar", mech.evaluate, claimed_truthful=True, claimed_ordinal=True)


def _compose(pref: Preference, tau: tuple[int, ...]) -> Preference:
    # Candidate j of the relabeled preference takes the value candidate
    # tau[j-1] had originally; value multiset is unchanged, so validation holds.
    return Preference(tuple(pref.values[tau[j] - 1] for j in range(len(tau))))


def symmetrize(mech: Mechanism, m: int, n: int, budget: int = 10_000_000) -> Mechanism:
    """Average the mechanism over all voter and candidate relabelings.

    The output treats voters interchangeably and candidate names as
    meaningless by construction.  All n!*m! relabelings are enumerated
    exactly (no sampling), so the construction is guarded by a budget.
    """
    total = math.factorial(n) * math.factorial(m)
    if total > budget:
        raise BudgetError(total, budget, "relabeling enumeration")
    voter_perms = list(itertools.permutations(range(n)))
    cand_perms = list(itertools.permutations(range(1, m + 1)))
    weight = Fraction(1, total)

    def evaluate(profile: Profile) -> CandidateDistribution:
        if profile.m != m or profile.n != n:
            raise PreconditionError(
                f"symmetrized mechanism fixed at m={m}, n={n}; "
                f"got m={profile.m}, n={profile.n}"
            )
        probs = [ZERO] * m
        for sigma in voter_perms:
            for tau in cand_perms:
                relabeled = Profile(
                    tuple(_compose(profile.prefs[sigma[i]], tau) for i in range(n))
                )
                inner = mech.evaluate(relabeled).probs
                # Winner w of the relabeled election is candidate tau(w) in
                # the original labeling.
                for w in range(m):
                    if inner[w] != ZERO:
                        probs[tau[w] - 1] += weight * inner[w]
        return CandidateDistribution(tuple(probs))

    return Mechanism(
        f"sym:{mech.name}",
        evaluate,
        claimed_truthful=mech.claimed_truthful,
        claimed_ordinal=mech.claimed_ordinal,
    )


def sample(mech: Mechanism, profile: Profile, seed: int) -> int:
    """Draw one winner from the mechanism's distribution; the same seed always
    yields the same candidate."""
    return sample_stream(mech, profile, 1, seed)[0]


def sample_stream(
    mech: Mechanism, profile: Profile, count: int, seed: int
) -> list[int]:
    """Draw ``count`` winners from one seeded generator, evaluating the
    distribution once."""
    dist = mech.evaluate(profile)
    cumulative: list[tuple[Fraction, int]] = []
    acc = ZERO
    for j in range(1, dist.m + 1):
        acc += dist.probs[j - 1]
        cumulative.append((acc, j))
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        x = rng.random()
        for acc, j in cumulative:
            if acc > x:
                out.append(j)
                break
    return out


# ---------------------------------------------------------------------------
# Mechanism specification mini-language used by the CLI:
#
#   rv | j1:<q> | j2:<q> | jstar | const:<j>
#   mix:<w1>*<spec1>+<w2>*<spec2>+...      (weights are exact rationals)
#   sym:<spec>
#
# A sub-spec containing '+' must be parenthesized, e.g.
# mix:1/2*(mix:1/2*j1:1+1/2*j1:2)+1/2*rv.  "jstar" and "sym:" resolve m (and
# n) from the profile at evaluation time.

_SIMPLE = re.compile(r"^(rv|jstar|j1:\d+|j2:\d+|const:\d+)$")


def _split_mix_parts(body: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise MechanismSpecError(f"unbalanced ')' in {body!r}")
        elif ch == "+" and depth == 0:
            parts.append(body[start:i])
            start = i + 1
    if depth != 0:
        raise MechanismSpecError(f"unbalanced '(' in {body!r}")
    parts.append(body[start:])
    return parts


def _deferred(name: str, build: Callable[[Profile], Mechanism], **flags) -> Mechanism:
    def evaluate(profile: Profile) -> CandidateDistribution:
        return build(profile).evaluate(profile)

    return Mechanism(name, evaluate, **flags)


def _is_parenthesized(spec: str) -> bool:
    if not (spec.startswith("(") and spec.endswith(")")):
        return False
    depth = 0
    for i, ch in enumerate(spec):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return i == len(spec) - 1
    return False


def parse_mechanism(spec: str) -> Mechanism:
    """Parse the CLI mini-language; errors name the offending token."""
    spec = spec.strip()
    if _is_parenthesized(spec):
        return parse_mechanism(spec[1:-1])
    if _SIMPLE.match(spec):
        if spec == "rv":
            return range_voting()
        if spec == "jstar":
            return _deferred(
                "jstar",
                lambda profile: j_star(profile.m),
                claimed_truthful=True,
                claimed_ordinal=True,
            )
        head, arg = spec.split(":")
        value = int(arg)
        if head == "j1":
            return j1q(value)
        if head == "j2":
            return j2q(value)
        return constant_winner(value)
    if spec.startswith("mix:"):
        parts = []
        for token in _split_mix_parts(spec[len("mix:"):]):
            if "*" not in token:
                raise MechanismSpecError(
                    f"mixture component {token!r} must look like <weight>*<spec>"
                )
            w_text, sub = token.split("*", 1)
            try:
                w = Fraction(w_text)
            except (ValueError, ZeroDivisionError) as e:
                raise MechanismSpecError(f"bad mixture weight {w_text!r}") from e
            parts.append((w, parse_mechanism(sub)))
        return mix(parts)
    if spec.startswith("sym:"):
        inner = parse_mechanism(spec[len("sym:"):])
        return _deferred(
            f"sym:{inner.name}",
            lambda profile: symmetrize(inner, profile.m, profile.n),
            claimed_truthful=inner.claimed_truthful,
            claimed_ordinal=inner.claimed_ordinal,
        )
    raise MechanismSpecError(f"unrecognized mechanism token {spec!r}")
