"""Closed-form separability bounds for ``<B>^2 + <B'>^2`` and ``|<B>|``.

A state that is k-separable with respect to a partition with ``k`` blocks,
``m`` of them singletons, obeys

    <B>^2 + <B'>^2 <= 2^(n + m - 2k + 1)

for arbitrary dichotomic observables, and ``<= 2^(n - 2k + 1)`` when every
site's pair anticommutes.  All bounds are powers of two (or sqrt(2) times
one) and are returned as exact floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

from .errors import ValidationError
from .states import PartitionProfile

# Exceedance floor for exact (se = 0) comparisons.
EXACT_MARGIN = 1e-9


def is_valid_profile(n: int, k: int, m: int) -> bool:
    """True when some partition of ``n`` sites has ``k`` blocks, ``m`` singletons."""
    if n < 1 or not 1 <= k <= n or not 0 <= m <= k:
        return False
    if m == k:
        return k == n
    return n - m >= 2 * (k - m)


def check_profile(n: int, k: int, m: int) -> None:
    if not is_valid_profile(n, k, m):
        raise ValidationError(f"no partition of {n} sites has k={k} blocks with m={m} singletons",
                              field="profile")


def valid_profiles(n: int) -> Iterator[PartitionProfile]:
    for k in range(1, n + 1):
        for m in range(0, k + 1):
            if is_valid_profile(n, k, m):
                yield PartitionProfile(k, m)


def quadratic_exponent(n: int, k: int, m: int, anticommute: bool = False) -> int:
    check_profile(n, k, m)
    return n - 2 * k + 1 if anticommute else n + m - 2 * k + 1


def quadratic_bound(n: int, k: int, m: int, anticommute: bool = False) -> float:
    """Maximum of ``<B>^2 + <B'>^2`` over states k-separable with profile (k, m)."""
    return math.ldexp(1.0, quadratic_exponent(n, k, m, anticommute))


def _sqrt_pow2(e: int) -> float:
    if e % 2 == 0:
        return math.ldexp(1.0, e // 2)
    return math.ldexp(math.sqrt(2.0), (e - 1) // 2)


def linear_bound(n: int, k: int, m: int) -> float:
    """Maximum of ``|<B>|`` for profile (k, m); 1 for fully separable states."""
    check_profile(n, k, m)
    if k == n:
        return 1.0
    return _sqrt_pow2(n + m - 2 * k + 1)


def full_entanglement_threshold(n: int, anticommute: bool = False) -> float:
    """Largest quadratic bound over all profiles with at least two blocks.

    Exceeding it certifies full n-partite entanglement.  General mode needs
    n >= 3; anticommute mode is accepted from n = 2 and returns 2^(n-3).
    """
    if anticommute:
        if n < 2:
            raise ValidationError("anticommute threshold needs n >= 2", field="n")
        return math.ldexp(1.0, n - 3)
    if n < 3:
        raise ValidationError("general threshold needs n >= 3", field="n")
    return math.ldexp(1.0, n - 2)


def gisin_bound(n: int, m: int) -> float:
    """``2^((n-m-1)/2)`` for partitions ``{1},...,{m},{m+1..n}``."""
    if not 0 <= m <= n - 1:
        raise ValidationError(f"m={m} outside 0..{n - 1}", field="m")
    return _sqrt_pow2(n - m - 1)


def werner_wolf_bound(n: int, k: int) -> float:
    """``2^((n-k)/2)`` for any partition into ``k`` blocks."""
    if not 1 <= k <= n:
        raise ValidationError(f"k={k} outside 1..{n}", field="k")
    return _sqrt_pow2(n - k)


def special_case_bounds(n: int, form: str, value: int) -> float:
    """Named bounds, cross-checked against :func:`linear_bound`.

    ``form`` is ``"gisin"`` (``value`` = m) or ``"werner_wolf"`` (``value`` = k).
    """
    if form == "gisin":
        m = value
        bound = gisin_bound(n, m)
        # {1},...,{m},{rest}: the rest block is a singleton when m = n - 1
        k, singles = (n, n) if m == n - 1 else (m + 1, m)
        reference = linear_bound(n, k, singles)
    elif form == "werner_wolf":
        k = value
        bound = werner_wolf_bound(n, k)
        reference = max(linear_bound(n, k, m) for m in range(k + 1) if is_valid_profile(n, k, m))
    else:
        raise ValidationError(f"unknown form {form!r}", field="form")
    if bound != reference:
        raise AssertionError(f"{form} bound {bound} disagrees with linear bound {reference}")
    return bound


@dataclass
class WitnessInput:
    n: int
    b: float
    bp: float
    b_se: float = 0.0
    bp_se: float = 0.0
    anticommute_assumed: bool = False
    hypothesis: PartitionProfile | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be >= 1", field="n")
        if self.b_se < 0 or self.bp_se < 0:
            raise ValidationError("standard errors must be nonnegative", field="se")
        if self.hypothesis is not None:
            self.hypothesis = PartitionProfile(*self.hypothesis)
            check_profile(self.n, *self.hypothesis)


@dataclass
class WitnessVerdict:
    n: int
    lhs_quadratic: float
    lhs_se: float
    z: float
    anticommute: bool
    thresholds: dict = field(default_factory=dict)
    excluded: list = field(default_factory=list)
    full_entanglement_detected: bool = False
    hypothesis_excluded: bool | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "lhs_quadratic": self.lhs_quadratic,
            "lhs_se": self.lhs_se,
            "z": self.z,
            "anticommute": self.anticommute,
            "thresholds": self.thresholds,
            "excluded": [{"k": k, "m": m} for k, m in self.excluded],
            "full_entanglement_detected": self.full_entanglement_detected,
            "hypothesis_excluded": self.hypothesis_excluded,
        }


def evaluate_witness(inp: WitnessInput, z: float = 3.0) -> WitnessVerdict:
    """Compare ``<B>^2 + <B'>^2`` against every separability bound.

    A bound counts as violated when ``lhs - z * se`` exceeds it by more than
    ``EXACT_MARGIN``.
    """
    if z < 0:
        raise ValidationError("z must be nonnegative", field="z")
    n, ac = inp.n, inp.anticommute_assumed
    lhs = inp.b ** 2 + inp.bp ** 2
    se = 2 * math.sqrt(inp.b ** 2 * inp.b_se ** 2 + inp.bp ** 2 * inp.bp_se ** 2)
    low = lhs - z * se

    def beats(bound):
        return low > bound + EXACT_MARGIN

    verdict = WitnessVerdict(n=n, lhs_quadratic=lhs, lhs_se=se, z=z, anticommute=ac)
    verdict.excluded = [p for p in valid_profiles(n) if beats(quadratic_bound(n, p.k, p.m, ac))]
    if n >= (2 if ac else 3):
        thr = full_entanglement_threshold(n, ac)
        verdict.thresholds["full_entanglement"] = thr
        verdict.full_entanglement_detected = beats(thr)
    if inp.hypothesis is not None:
        hb = quadratic_bound(n, inp.hypothesis.k, inp.hypothesis.m, ac)
        verdict.thresholds[f"hypothesis_k{inp.hypothesis.k}_m{inp.hypothesis.m}"] = hb
        verdict.hypothesis_excluded = beats(hb)
    return verdict
