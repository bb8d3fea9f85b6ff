"""Maximize ``<B>^2 + <B'>^2`` over qubit measurement settings.

With ``A_j = a_j·σ``, ``A'_j = a'_j·σ`` and ``z_j = a_j + i a'_j`` the
objective is ``2^(1-n) |T(z_1, ..., z_n)|^2`` where ``T`` is the real
three-index-per-site Pauli correlation tensor of the state.  Holding all
sites but one fixed, ``T(...) = w · z_j`` for a complex 3-vector
``w = p + i q`` and the single-site problem has a closed-form optimum:

* unconstrained unit vectors: ``2 |w|^2``, reached by rotating ``(p, -q)``
  so the two real parts have equal length;
* orthogonal unit vectors: ``(s_1 + s_2)^2`` with ``s_i`` the singular values
  of ``[p, -q]``, reached by its polar factor.

Block-coordinate ascent over sites therefore never decreases the objective.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bell import MeasurementSetup, build_direct
from .bounds import EXACT_MARGIN, full_entanglement_threshold
from .errors import UnsupportedDimensionError, ValidationError
from .linalg import PAULIS, DensityOperator, contract_local, expectation
from .states import ghz_noise

DEFAULT_RESTARTS = 32
DEFAULT_TOL = 1e-10
SWEEP_CAP = 500
DEGENERATE_NORM = 1e-14
PERTURBATION = 1e-3


@dataclass
class QubitSettings:
    a: np.ndarray  # (n, 3)
    ap: np.ndarray  # (n, 3)

    def check(self, anticommute: bool = False) -> None:
        if not np.allclose(np.linalg.norm(self.a, axis=1), 1, atol=1e-10, rtol=0):
            raise ValidationError("a_j not normalized", field="settings")
        if not np.allclose(np.linalg.norm(self.ap, axis=1), 1, atol=1e-10, rtol=0):
            raise ValidationError("a'_j not normalized", field="settings")
        if anticommute and np.max(np.abs(np.sum(self.a * self.ap, axis=1))) > 1e-10:
            raise ValidationError("a_j and a'_j not orthogonal", field="settings")

    def to_setup(self, anticommute: bool = False) -> MeasurementSetup:
        return MeasurementSetup.from_bloch(list(zip(self.a, self.ap)), anticommute=anticommute)

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "aprime": self.ap.tolist()}


@dataclass
class OptimizationResult:
    best_value: float
    settings: QubitSettings
    restarts_used: int
    converged: bool
    restart_values: list = field(default_factory=list)
    constrained: bool = False

    def to_dict(self) -> dict:
        return {
            "best_value": self.best_value,
            "settings": self.settings.to_dict(),
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "anticommute": self.constrained,
            "restart_values": self.restart_values,
        }


def pauli_tensor(rho: DensityOperator) -> np.ndarray:
    """``T[μ_1..μ_n] = tr(ρ σ_μ1 ⊗ ... ⊗ σ_μn)`` for μ in (x, y, z)."""
    if any(d != 2 for d in rho.site_dims):
        raise UnsupportedDimensionError(
            f"settings search needs qubit sites, got dims {rho.site_dims}", field="state"
        )
    return contract_local(rho.matrix, rho.site_dims, [PAULIS] * rho.n).real


def _contract_except(t: np.ndarray, z: np.ndarray, skip: int) -> np.ndarray:
    out = t.astype(complex)
    # contract from the last axis down so earlier axis numbers stay valid
    for j in range(t.ndim - 1, -1, -1):
        if j != skip:
            out = np.tensordot(out, z[j], axes=([j], [0]))
    return out


def _objective(t: np.ndarray, z: np.ndarray) -> float:
    w = _contract_except(t, z, 0)
    val = w @ z[0]
    return float(abs(val) ** 2 * 2.0 ** (1 - t.ndim))


def _best_site(w: np.ndarray, constrained: bool):
    # Re(e^{-iθ} w·z) = a·(cos θ p + sin θ q) + a'·(sin θ p - cos θ q)
    p, q = w.real, w.imag
    if constrained:
        q = -q
        u, _, vt = np.linalg.svd(np.stack([p, q], axis=1), full_matrices=False)
        frame = u @ vt
        return frame[:, 0], frame[:, 1]
    # pick theta so that |w_a| = |w_a'|; cross term vanishes there
    phi = math.atan2(2 * (p @ q), p @ p - q @ q)
    theta = (phi + math.pi / 2) / 2
    c, s = math.cos(theta), math.sin(theta)
    wa = c * p + s * q
    wb = s * p - c * q
    return wa / np.linalg.norm(wa), wb / np.linalg.norm(wb)


def _random_unit(rng, size):
    v = rng.standard_normal((size, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _orthonormalize(a, ap):
    ap = ap - np.sum(a * ap, axis=1, keepdims=True) * a
    ap /= np.linalg.norm(ap, axis=1, keepdims=True)
    return a, ap


def _ascend(t, a, ap, constrained, tol, rng):
    n = t.ndim
    z = a + 1j * ap
    value = _objective(t, z)
    for _ in range(SWEEP_CAP):
        start = value
        for j in range(n):
            w = _contract_except(t, z, j)
            if np.linalg.norm(w) < DEGENERATE_NORM:
                a_j = a[j] + PERTURBATION * rng.standard_normal(3)
                ap_j = ap[j] + PERTURBATION * rng.standard_normal(3)
                a_j /= np.linalg.norm(a_j)
                if constrained:
                    ap_j -= (ap_j @ a_j) * a_j
                ap_j /= np.linalg.norm(ap_j)
            else:
                a_j, ap_j = _best_site(w, constrained)
            a[j], ap[j] = a_j, ap_j
            z[j] = a_j + 1j * ap_j
        value = _objective(t, z)
        if value - start < tol:
            return value, True
    return value, False


def maximize_witness(
    rho: DensityOperator,
    constrain_anticommute: bool = False,
    restarts: int = DEFAULT_RESTARTS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> OptimizationResult:
    """Best ``<B>^2 + <B'>^2`` over unit Bloch settings, with random restarts."""
    if restarts < 1:
        raise ValidationError("restarts must be >= 1", field="restarts")
    if tol <= 0:
        raise ValidationError("tol must be positive", field="tol")
    t = pauli_tensor(rho)
    n = rho.n
    best = None
    values = []
    all_converged = True
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), r]))
        a, ap = _random_unit(rng, n), _random_unit(rng, n)
        if constrain_anticommute:
            a, ap = _orthonormalize(a, ap)
        value, converged = _ascend(t, a, ap, constrain_anticommute, tol, rng)
        all_converged &= converged
        values.append(value)
        if best is None or value > best[0]:
            best = (value, a.copy(), ap.copy())
    settings = QubitSettings(best[1], best[2])
    settings.check(constrain_anticommute)
    # report the value recomputed through the operator route
    pair = build_direct(settings.to_setup())
    b, bp = expectation(rho, pair.B), expectation(rho, pair.Bp)
    return OptimizationResult(
        best_value=b * b + bp * bp,
        settings=settings,
        restarts_used=restarts,
        converged=all_converged,
        restart_values=values,
        constrained=constrain_anticommute,
    )


@dataclass
class ScanRow:
    x: float
    max_lhs: float
    detected: bool


def scan_threshold_window(
    n: int,
    anticommute: bool,
    x_grid: Sequence[float],
    restarts: int = 8,
    seed: int = 0,
) -> list[ScanRow]:
    """Optimized witness value on the GHZ+white-noise family across ``x_grid``."""
    if n < 3:
        raise ValidationError("scan needs n >= 3", field="n")
    thr = full_entanglement_threshold(n, anticommute)
    rows = []
    for x in x_grid:
        if not 0 <= x <= 1:
            raise ValidationError(f"x={x} outside [0, 1]", field="x")
        res = maximize_witness(ghz_noise(n, x), anticommute, restarts=restarts, seed=seed)
        rows.append(ScanRow(float(x), res.best_value, res.best_value > thr + EXACT_MARGIN))
    return rows
