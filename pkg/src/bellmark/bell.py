"""Bell-Mermin operator pairs.

The pair ``(B, B')`` on a set of sites is defined through the complex map
``f(x, y) = e^{-i pi/4} (x + i y) / sqrt(2)``: ``f(B, B')`` is the tensor
product of ``f(A_j, A'_j)`` over the sites.  Three constructions are given
and they must agree:

* ``build_direct``: form the product, undo ``f`` via Hermitian and
  anti-Hermitian parts;
* ``build_recursive``: glue pairs on disjoint site sets;
* ``build_expanded``: sum of full correlator operators weighted by
  ``correlator_coefficients``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import ContractViolation, IncompleteDataError, ValidationError
from .linalg import (
    PAULIS,
    as_matrix,
    check_dim,
    is_hermitian,
    permute_sites,
    tensor_all,
)

SPECTRUM_TOL = 1e-9
ANTICOMMUTE_TOL = 1e-9
_PHASE = np.exp(-1j * np.pi / 4) / np.sqrt(2)


def f_combine(x, y) -> np.ndarray:
    """``e^{-i pi/4} (x + i y) / sqrt(2)`` for equally shaped operands."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape:
        raise ContractViolation(f"shape mismatch {x.shape} vs {y.shape}")
    return _PHASE * (x + 1j * y)


def f_split(c) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`f_combine` for operator arguments.

    ``D = sqrt(2) e^{i pi/4} c`` equals ``B + iB'``; ``B`` and ``B'`` are its
    Hermitian and anti-Hermitian parts.
    """
    c = np.asarray(c, dtype=complex)
    d = np.sqrt(2) * np.exp(1j * np.pi / 4) * c
    if d.ndim < 2:
        return d.real.copy(), d.imag.copy()
    dh = d.conj().T
    return (d + dh) / 2, (d - dh) / 2j


def check_observable(m, name: str = "observable") -> np.ndarray:
    """Validate a dichotomic observable: Hermitian, spectrum in [-1, 1]."""
    m = as_matrix(m, name)
    if not is_hermitian(m):
        raise ValidationError("observable is not Hermitian", field=name)
    w = np.linalg.eigvalsh(m)
    if w[0] < -1 - SPECTRUM_TOL or w[-1] > 1 + SPECTRUM_TOL:
        raise ValidationError(
            f"spectrum [{w[0]:.6g}, {w[-1]:.6g}] leaves [-1, 1]", field=name
        )
    return m


def bloch_observable(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=float)
    if v.shape != (3,):
        raise ValidationError(f"Bloch vector needs 3 components, got {v.shape}", field="bloch")
    if np.linalg.norm(v) > 1 + SPECTRUM_TOL:
        raise ValidationError("Bloch vector longer than 1", field="bloch")
    return np.tensordot(v, PAULIS, axes=1)


class MeasurementSetup:
    """Per-site pairs ``(A_j, A'_j)`` of dichotomic observables."""

    def __init__(self, sites: Sequence[tuple], anticommute: bool = False):
        if not sites:
            raise ValidationError("setup needs at least one site", field="sites")
        pairs = []
        for j, (a, ap) in enumerate(sites):
            a = check_observable(a, f"sites[{j}].A")
            ap = check_observable(ap, f"sites[{j}].Aprime")
            if a.shape != ap.shape:
                raise ValidationError("A and A' differ in dimension", field=f"sites[{j}]")
            a.setflags(write=False)
            ap.setflags(write=False)
            pairs.append((a, ap))
        self.sites = tuple(pairs)
        check_dim(self.dim)
        self.anticommute = anticommute
        if anticommute:
            norms = self.anticommutator_norms()
            bad = [j for j, v in enumerate(norms) if v > ANTICOMMUTE_TOL]
            if bad:
                raise ValidationError(
                    f"observables do not anticommute at sites {bad}", field="sites"
                )

    @classmethod
    def from_bloch(cls, vectors, anticommute: bool = False) -> "MeasurementSetup":
        """Qubit setup from pairs of Bloch vectors ``(a_j, a'_j)``."""
        return cls(
            [(bloch_observable(a), bloch_observable(ap)) for a, ap in vectors],
            anticommute=anticommute,
        )

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def site_dims(self) -> tuple[int, ...]:
        return tuple(a.shape[0] for a, _ in self.sites)

    @property
    def dim(self) -> int:
        return int(np.prod(self.site_dims))

    def observable(self, site: int, primed: bool) -> np.ndarray:
        return self.sites[site][1 if primed else 0]

    def anticommutator_norms(self) -> list[float]:
        """``||{A_j, A'_j}||`` per site; a diagnostic, not a bound."""
        return [float(np.linalg.norm(a @ ap + ap @ a, 2)) for a, ap in self.sites]


@dataclass(frozen=True, eq=False)
class BellPair:
    sites: tuple[int, ...]
    site_dims: tuple[int, ...]
    B: np.ndarray
    Bp: np.ndarray


def combine_pairs(pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    """``(Y, Y')`` with ``f(Y, Y') = ⊗_i f(X_i, X'_i)``."""
    check_dim(int(np.prod([x.shape[0] for x, _ in pairs])))
    c = tensor_all([f_combine(x, xp) for x, xp in pairs])
    return f_split(c)


def _normalize_subset(setup: MeasurementSetup, subset) -> tuple[int, ...]:
    if subset is None:
        return tuple(range(setup.n))
    subset = [int(j) for j in subset]
    if not subset:
        raise ValidationError("subset is empty", field="subset")
    if len(set(subset)) != len(subset):
        raise ValidationError(f"repeated indices in {subset}", field="subset")
    bad = [j for j in subset if not 0 <= j < setup.n]
    if bad:
        raise ValidationError(f"indices {bad} outside 0..{setup.n - 1}", field="subset")
    return tuple(sorted(subset))


def build_direct(setup: MeasurementSetup, subset=None) -> BellPair:
    """Bell-Mermin pair on ``subset`` (0-based, default all sites)."""
    sites = _normalize_subset(setup, subset)
    b, bp = combine_pairs([setup.sites[j] for j in sites])
    return BellPair(sites, tuple(setup.site_dims[j] for j in sites), b, bp)


def build_recursive(left: BellPair, right: BellPair) -> BellPair:
    """Pair on the union of two disjoint site sets."""
    overlap = set(left.sites) & set(right.sites)
    if overlap:
        raise ValidationError(f"subsets overlap on {sorted(overlap)}", field="subset")
    check_dim(left.B.shape[0] * right.B.shape[0])
    bb = np.kron(left.B, right.B)
    pp = np.kron(left.Bp, right.Bp)
    bp = np.kron(left.B, right.Bp)
    pb = np.kron(left.Bp, right.B)
    plus = (bp + pb) / 2
    minus = (bb - pp) / 2
    order = left.sites + right.sites
    dims = left.site_dims + right.site_dims
    new_b = permute_sites(plus + minus, dims, order)
    new_bp = permute_sites(plus - minus, dims, order)
    ranked = sorted(range(len(order)), key=order.__getitem__)
    return BellPair(
        tuple(order[i] for i in ranked), tuple(dims[i] for i in ranked), new_b, new_bp
    )


def build_by_sites(setup: MeasurementSetup, subset=None) -> BellPair:
    """Left-to-right recursive assembly from single-site pairs."""
    sites = _normalize_subset(setup, subset)
    pair = build_direct(setup, [sites[0]])
    for j in sites[1:]:
        pair = build_recursive(pair, build_direct(setup, [j]))
    return pair


# cos/sin of multiples of pi/4, exact where the value is 0 or ±1
_R = 1 / math.sqrt(2)
_COS8 = (1.0, _R, 0.0, -_R, -1.0, -_R, 0.0, _R)
_SIN8 = (0.0, _R, 1.0, _R, 0.0, -_R, -1.0, -_R)


class CorrelatorCoefficients:
    """Expansion ``B = Σ_s c_s ⊗_j A_j^{(s_j)}`` and likewise ``B'``.

    Setting strings ``s`` are ``'0'``/``'1'`` strings, ``'1'`` meaning the
    primed observable.  Coefficients depend only on the number of primes
    ``p``: ``c + i c' = 2^{(1-n)/2} exp(i pi (2p - n + 1) / 4)``.
    """

    def __init__(self, n: int):
        if not 1 <= n <= 30:
            raise ValidationError("n must be between 1 and 30", field="n")
        self.n = n
        scale = 2.0 ** ((1 - n) / 2)
        q = [(2 * p - n + 1) % 8 for p in range(n + 1)]
        self.by_primes = np.array([scale * _COS8[k] for k in q])
        self.by_primes_prime = np.array([scale * _SIN8[k] for k in q])

    def coefficient(self, s: str) -> tuple[float, float]:
        if len(s) != self.n or set(s) - {"0", "1"}:
            raise ValidationError(f"bad setting string {s!r}", field="s")
        p = s.count("1")
        return float(self.by_primes[p]), float(self.by_primes_prime[p])

    def items(self) -> Iterator[tuple[str, float, float]]:
        for s in setting_strings(self.n):
            c, cp = self.coefficient(s)
            yield s, c, cp

    def to_table(self) -> list[dict]:
        return [{"primes": p, "c": float(c), "cprime": float(cp)}
                for p, (c, cp) in enumerate(zip(self.by_primes, self.by_primes_prime))]


def correlator_coefficients(n: int) -> CorrelatorCoefficients:
    return CorrelatorCoefficients(n)


def setting_strings(n: int) -> Iterator[str]:
    for bits in itertools.product("01", repeat=n):
        yield "".join(bits)


def correlator_operator(setup: MeasurementSetup, s: str) -> np.ndarray:
    return tensor_all([setup.observable(j, ch == "1") for j, ch in enumerate(s)])


def build_expanded(setup: MeasurementSetup, coeffs: CorrelatorCoefficients | None = None) -> BellPair:
    """Pair on all sites as a weighted sum of full correlator operators."""
    coeffs = coeffs or CorrelatorCoefficients(setup.n)
    if coeffs.n != setup.n:
        raise ValidationError("coefficient table size differs from setup", field="n")
    b = np.zeros((setup.dim, setup.dim), dtype=complex)
    bp = np.zeros_like(b)
    for s, c, cp in coeffs.items():
        if c == 0 and cp == 0:
            continue
        t = correlator_operator(setup, s)
        b += c * t
        bp += cp * t
    return BellPair(tuple(range(setup.n)), setup.site_dims, b, bp)


class BellEstimate(NamedTuple):
    b: float
    b_se: float
    bp: float
    bp_se: float


def evaluate_from_correlations(coeffs: CorrelatorCoefficients, data) -> BellEstimate:
    """``<B>``, ``<B'>`` from full correlators with propagated standard errors.

    ``data`` must provide ``entries`` mapping each setting string to an
    object with ``E`` and ``se`` attributes.
    """
    if data.n != coeffs.n:
        raise ValidationError(f"record has n={data.n}, coefficients n={coeffs.n}", field="n")
    b = bp = var_b = var_bp = 0.0
    for s, c, cp in coeffs.items():
        entry = data.entries.get(s)
        if entry is None:
            raise IncompleteDataError(f"missing setting string {s!r}", field="records")
        b += c * entry.E
        bp += cp * entry.E
        var_b += c * c * entry.se ** 2
        var_bp += cp * cp * entry.se ** 2
    return BellEstimate(b, math.sqrt(var_b), bp, math.sqrt(var_bp))
