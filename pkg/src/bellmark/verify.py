"""Randomized brute-force checks of the inequalities and their tightness."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bell import MeasurementSetup, bloch_observable, build_direct, combine_pairs
from .bounds import linear_bound, quadratic_bound
from .errors import ConstructionError, UnsupportedDimensionError, ValidationError
from .linalg import PAULIS, expectation, operator_norm
from .states import (
    Partition,
    enumerate_partitions,
    ghz,
    partition_profile,
    product_over_partition,
    random_density,
    random_k_separable,
)

VIOLATION_TOL = 1e-8
IDENTITY_TOL = 1e-9
NEAR_EXTREMAL_FRACTION = 0.25


@dataclass
class TrialReport:
    check: str
    trials: int
    max_lhs: float
    bound: float
    violations: list = field(default_factory=list)
    wall_time: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.bound - self.max_lhs

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self, include_time: bool = False) -> dict:
        out = {
            "check": self.check,
            "trials": self.trials,
            "max_lhs": self.max_lhs,
            "bound": self.bound,
            "margin": self.margin,
            "violations": self.violations,
            "details": self.details,
        }
        if include_time:
            out["wall_time"] = self.wall_time
        return out


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_observable(d: int, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian operator with spectrum inside [-1, 1].

    A GUE matrix's spectrum is mapped affinely onto ``[-1, 1]`` or, half of
    the time, onto a random subinterval so non-projective cases appear for
    qubits too.
    """
    h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(h)
    lo, hi = (-1.0, 1.0) if rng.random() < 0.5 else tuple(np.sort(rng.uniform(-1, 1, 2)))
    span = w[-1] - w[0]
    w = np.full(d, (lo + hi) / 2) if span < 1e-12 else lo + (w - w[0]) * (hi - lo) / span
    return (v * w) @ v.conj().T


def random_involution(d: int, rng: np.random.Generator) -> np.ndarray:
    """``U diag(±1) U^†`` with at least one eigenvalue of each sign when d > 1."""
    signs = rng.choice([-1.0, 1.0], size=d)
    if d > 1:
        signs[0], signs[1] = 1.0, -1.0
    u = haar_unitary(d, rng)
    return (u * signs) @ u.conj().T


def random_orthogonal_bloch_pair(rng: np.random.Generator):
    a = rng.standard_normal(3)
    a /= np.linalg.norm(a)
    b = rng.standard_normal(3)
    b -= (b @ a) * a
    b /= np.linalg.norm(b)
    return a, b


def _random_state(d: int, rng) -> np.ndarray:
    return random_density(d, rng, rank=int(rng.integers(1, d + 1)))


def verify_lemma(trials: int, dims=(2, 2), seed: int = 0) -> TrialReport:
    """Random check of ``<Y>^2 + <Y'>^2 <= 2`` for two-site glued pairs."""
    d1, d2 = dims
    if d1 < 2 or d2 < 2:
        raise ValidationError("lemma dims must be >= 2", field="dims")
    t0 = time.perf_counter()
    worst = -math.inf
    violations = []
    for i in range(trials):
        rng = trial_rng(seed, i)
        x1, x1p = random_observable(d1, rng), random_observable(d1, rng)
        x2, x2p = random_observable(d2, rng), random_observable(d2, rng)
        rho = _random_state(d1 * d2, rng)
        y, yp = combine_pairs([(x1, x1p), (x2, x2p)])
        lhs = expectation(rho, y) ** 2 + expectation(rho, yp) ** 2
        worst = max(worst, lhs)
        if lhs > 2 + VIOLATION_TOL:
            violations.append({"seed": [seed, i], "value": lhs})
    return TrialReport("lemma", trials, worst, 2.0, violations, time.perf_counter() - t0,
                       {"dims": [d1, d2]})


def lemma_terms(x1, x1p, x2, x2p):
    """Pieces of the lemma's argument for involutions ``X^2 = 1``."""
    a_minus = [0.5j * (x @ xp - xp @ x) for x, xp in ((x1, x1p), (x2, x2p))]
    a_plus = [0.5 * (x @ xp + xp @ x) for x, xp in ((x1, x1p), (x2, x2p))]
    mm = np.kron(a_minus[0], a_minus[1])
    pp = np.kron(a_plus[0], a_plus[1])
    return a_plus, a_minus, pp, mm


def verify_lemma_internals(trials: int, seed: int = 0, dims=(2, 2)) -> TrialReport:
    """Check the identities and norm bounds inside the lemma's argument.

    For involutions the squares ``Y^2``, ``Y'^2``, the anticommutator
    ``{Y, Y'}`` and ``B_θ^2`` have closed forms in ``A^± ⊗ A^±``, and
    ``||A+⊗A+ ± A-⊗A-|| <= 1``.
    """
    d1, d2 = dims
    t0 = time.perf_counter()
    worst_norm = -math.inf
    worst_resid = 0.0
    violations = []
    for i in range(trials):
        rng = trial_rng(seed, i)
        x1, x1p = random_involution(d1, rng), random_involution(d1, rng)
        x2, x2p = random_involution(d2, rng), random_involution(d2, rng)
        y, yp = combine_pairs([(x1, x1p), (x2, x2p)])
        _, _, pp, mm = lemma_terms(x1, x1p, x2, x2p)
        eye = np.eye(d1 * d2)
        theta = rng.uniform(0, 2 * np.pi)
        b_theta = math.cos(theta) * y + math.sin(theta) * yp
        resid = max(
            np.max(np.abs(y @ y - (eye + mm))),
            np.max(np.abs(yp @ yp - (eye + mm))),
            np.max(np.abs(y @ yp + yp @ y - 2 * pp)),
            np.max(np.abs(b_theta @ b_theta - (eye + mm + math.sin(2 * theta) * pp))),
        )
        norm = max(operator_norm(pp + mm), operator_norm(pp - mm))
        worst_norm = max(worst_norm, norm)
        worst_resid = max(worst_resid, float(resid))
        if norm > 1 + VIOLATION_TOL or resid > IDENTITY_TOL:
            violations.append({"seed": [seed, i], "norm": norm, "identity_residual": float(resid)})
    return TrialReport("lemma-internals", trials, worst_norm, 1.0, violations,
                       time.perf_counter() - t0, {"max_identity_residual": worst_resid})


def random_setup(site_dims, rng, anticommute: bool = False) -> MeasurementSetup:
    if anticommute:
        if any(d != 2 for d in site_dims):
            raise UnsupportedDimensionError("anticommuting setups are drawn on qubits", field="dims")
        return MeasurementSetup.from_bloch(
            [random_orthogonal_bloch_pair(rng) for _ in site_dims], anticommute=True
        )
    return MeasurementSetup([(random_observable(d, rng), random_observable(d, rng))
                             for d in site_dims])


def verify_separability_bound(
    n: int,
    partition: Partition,
    trials: int,
    mixture_terms: int = 2,
    anticommute: bool = False,
    seed: int = 0,
    site_dims=None,
) -> TrialReport:
    """Random k-separable states against the quadratic (and linear) bound.

    On qubits a quarter of the trials perturb the extremal configuration so
    the search also probes the neighbourhood where the bound is attained.
    """
    if partition.n != n:
        raise ValidationError(f"partition covers {partition.n} sites, n={n}", field="partition")
    if n > 8:
        raise ValidationError("separable-bound trials limited to n <= 8", field="n")
    site_dims = tuple(site_dims) if site_dims is not None else (2,) * n
    k, m = partition_profile(partition)
    bound = quadratic_bound(n, k, m, anticommute)
    lin = linear_bound(n, k, m)
    qubits = all(d == 2 for d in site_dims)
    t0 = time.perf_counter()
    worst = worst_lin = -math.inf
    violations = []
    for i in range(trials):
        rng = trial_rng(seed, i)
        terms = int(rng.integers(1, mixture_terms + 1))
        rank = 1 if rng.random() < 0.5 else None
        if qubits and rng.random() < NEAR_EXTREMAL_FRACTION:
            rho, setup = near_extremal(partition, anticommute, rng)
        else:
            rho = random_k_separable(partition, terms, rng, site_dims=site_dims, rank=rank)
            setup = random_setup(site_dims, rng, anticommute)
        pair = build_direct(setup)
        b, bp = expectation(rho, pair.B), expectation(rho, pair.Bp)
        lhs = b * b + bp * bp
        worst = max(worst, lhs)
        worst_lin = max(worst_lin, abs(b))
        bad_quad = lhs > bound + VIOLATION_TOL
        bad_lin = not anticommute and abs(b) > lin + VIOLATION_TOL
        if bad_quad or bad_lin:
            violations.append({"seed": [seed, i], "value": lhs, "b": b})
    details = {"partition": partition.one_based(), "k": k, "m": m,
               "anticommute": anticommute, "mixture_terms": mixture_terms}
    if not anticommute:
        details.update(max_abs_b=worst_lin, linear_bound=lin)
    return TrialReport("separable-bound", trials, worst, bound, violations,
                       time.perf_counter() - t0, details)


def _planar(phi: float):
    return (np.array([math.cos(phi), math.sin(phi), 0.0]),
            np.array([-math.sin(phi), math.cos(phi), 0.0]))


def _extremal_blocks(partition: Partition, anticommute: bool):
    """Block states and per-site Bloch pairs for :func:`construct_extremal`."""
    multi = [b for b in partition.blocks if len(b) > 1]
    states, bloch = [], [None] * partition.n
    for block in partition.blocks:
        size = len(block)
        if size == 1:
            if anticommute:
                # <A> = <A'> = 1/sqrt(2): modulus 1, phase π/4
                plus = np.array([1, 1, 0]) / math.sqrt(2)
                states.append((np.eye(2) + np.tensordot(plus, PAULIS, axes=1)) / 2)
                bloch[block[0]] = (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
            else:
                states.append(np.diag([1.0, 0.0]).astype(complex))
                bloch[block[0]] = (np.array([0, 0, 1.0]), np.array([0, 0, 1.0]))
            continue
        target_phase = 0.0 if block is multi[-1] else math.pi / 4
        lead = -target_phase - math.pi * (size - 1) / 4
        states.append(ghz(size).matrix)
        for pos, j in enumerate(block):
            bloch[j] = _planar(lead if pos == 0 else 0.0)
    return states, bloch


def construct_extremal(n: int, partition: Partition, anticommute: bool = False):
    """Qubit state and settings saturating the bounds for ``partition``.

    Singleton blocks sit in ``|0>`` with ``A = A' = σ_z`` (``<B> = <B'> = 1``);
    with ``anticommute`` they use ``σ_x, σ_y`` and the state ``(1+(σ_x+σ_y)/√2)/2``.
    Each multi-site block holds a GHZ state measured with in-plane settings
    rotated by 90°; its ``<B> + i<B'>`` then has modulus ``2^((L-1)/2)`` and
    phase ``-(π(L-1)/4 + Σφ)``, tuned through the first site's angle: phase
    π/4 for every block but the last multi-site one, phase 0 for that one.
    """
    if partition.n != n:
        raise ValidationError(f"partition covers {partition.n} sites, n={n}", field="partition")
    states, bloch = _extremal_blocks(partition, anticommute)
    rho = product_over_partition(partition, states, (2,) * n)
    return rho, MeasurementSetup.from_bloch(bloch, anticommute=anticommute)


def _small_rotation(rng, scale):
    w = rng.normal(scale=scale, size=3)
    k = np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])
    u, _, vt = np.linalg.svd(np.eye(3) + k)
    return u @ vt


def near_extremal(partition: Partition, anticommute: bool, rng):
    """Random perturbation of the extremal configuration; still k-separable."""
    states, bloch = _extremal_blocks(partition, anticommute)
    eps = rng.uniform(0, 0.1)
    states = [(1 - eps) * s + eps * random_density(s.shape[0], rng) for s in states]
    rotated = []
    for a, ap in bloch:
        r = _small_rotation(rng, rng.uniform(0, 0.2))
        rotated.append((r @ a, r @ ap))
    rho = product_over_partition(partition, states, (2,) * partition.n)
    return rho, MeasurementSetup.from_bloch(rotated, anticommute=anticommute)


def extremal_values(n: int, partition: Partition, anticommute: bool = False) -> dict:
    rho, setup = construct_extremal(n, partition, anticommute)
    pair = build_direct(setup)
    b, bp = expectation(rho, pair.B), expectation(rho, pair.Bp)
    k, m = partition_profile(partition)
    return {
        "partition": partition.one_based(),
        "k": k,
        "m": m,
        "b": b,
        "bprime": bp,
        "lhs": b * b + bp * bp,
        "quadratic_bound": quadratic_bound(n, k, m, anticommute),
        "linear_bound": None if anticommute else linear_bound(n, k, m),
    }


def verify_tightness(n: int, partitions=None, anticommute: bool = False) -> TrialReport:
    """Saturation gap of :func:`construct_extremal` over partitions of ``n``.

    ``max_lhs`` holds the largest gap between achieved and claimed values
    (quadratic and linear); ``bound`` is 0.  With ``anticommute`` only the
    anticommuting quadratic bound is checked.
    """
    if n > 8:
        raise ValidationError("tightness checks limited to n <= 8", field="n")
    partitions = list(enumerate_partitions(n)) if partitions is None else list(partitions)
    t0 = time.perf_counter()
    worst = 0.0
    violations, rows = [], []
    for p in partitions:
        row = extremal_values(n, p, anticommute)
        gap = abs(row["lhs"] - row["quadratic_bound"])
        if row["linear_bound"] is not None:
            gap = max(gap, abs(abs(row["b"]) - row["linear_bound"]))
        row["gap"] = gap
        rows.append(row)
        worst = max(worst, gap)
        if gap > VIOLATION_TOL:
            violations.append({"partition": row["partition"], "gap": gap})
    return TrialReport("tightness", len(partitions), worst, 0.0, violations,
                       time.perf_counter() - t0, {"rows": rows})


def require_saturation(n: int, partition: Partition, tol: float = VIOLATION_TOL) -> dict:
    row = extremal_values(n, partition)
    if abs(row["lhs"] - row["quadratic_bound"]) > tol:
        raise ConstructionError(f"construction reaches {row['lhs']} not {row['quadratic_bound']}")
    return row


def single_site_anticommuting(trials: int, seed: int = 0) -> TrialReport:
    """``<A>^2 + <A'>^2 <= 1`` for orthogonal unit Bloch pairs."""
    t0 = time.perf_counter()
    worst = -math.inf
    violations = []
    for i in range(trials):
        rng = trial_rng(seed, i)
        a, ap = random_orthogonal_bloch_pair(rng)
        rho = _random_state(2, rng)
        lhs = expectation(rho, bloch_observable(a)) ** 2 + expectation(rho, bloch_observable(ap)) ** 2
        worst = max(worst, lhs)
        if lhs > 1 + 1e-10:
            violations.append({"seed": [seed, i], "value": lhs})
    return TrialReport("single-site-anticommute", trials, worst, 1.0, violations,
                       time.perf_counter() - t0)


__all__ = [
    "TrialReport",
    "construct_extremal",
    "near_extremal",
    "extremal_values",
    "random_observable",
    "random_setup",
    "single_site_anticommuting",
    "verify_lemma",
    "verify_lemma_internals",
    "verify_separability_bound",
    "verify_tightness",
]
