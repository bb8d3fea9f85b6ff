"""Finite-shot simulation of two-outcome measurements and full correlators."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bell import MeasurementSetup, check_observable, setting_strings
from .errors import ContractViolation, NumericalHealthError, ValidationError
from .linalg import DensityOperator, contract_local

NORMALIZATION_TOL = 1e-8
NEGATIVE_PROB_TOL = 1e-12


@dataclass(frozen=True)
class CorrelationEntry:
    E: float
    shots: int
    se: float


class CorrelationRecord:
    """Full-correlator estimates keyed by setting string (``'0'`` = unprimed)."""

    def __init__(self, n: int, entries: dict[str, CorrelationEntry]):
        self.n = n
        for s, e in entries.items():
            if len(s) != n or set(s) - {"0", "1"}:
                raise ValidationError(f"bad setting string {s!r}", field="s")
            if not abs(e.E) <= 1 + 1e-12:
                raise ValidationError(f"|E| > 1 for {s!r}", field="E")
            if e.se < 0:
                raise ValidationError(f"negative se for {s!r}", field="se")
        self.entries = dict(sorted(entries.items()))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "records": [
                {"s": s, "E": e.E, "shots": e.shots, "se": e.se} for s, e in self.entries.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorrelationRecord":
        try:
            n = int(data["n"])
            rows = data["records"]
        except (KeyError, TypeError, ValueError):
            raise ValidationError("correlation JSON needs 'n' and 'records'", field="records") from None
        entries = {}
        for i, row in enumerate(rows):
            try:
                entries[str(row["s"])] = CorrelationEntry(
                    float(row["E"]), int(row.get("shots", 0)), float(row.get("se", 0.0))
                )
            except (KeyError, TypeError, ValueError):
                raise ValidationError(f"malformed record {i}", field="records") from None
        return cls(n, entries)


def povm_from_observable(a) -> tuple[np.ndarray, np.ndarray]:
    """The two-outcome POVM ``F± = (1 ± A) / 2``."""
    a = check_observable(a)
    eye = np.eye(a.shape[0], dtype=complex)
    return (eye + a) / 2, (eye - a) / 2


def _check_dims(rho: DensityOperator, setup: MeasurementSetup):
    if rho.dim != setup.dim:
        raise ContractViolation(f"state dim {rho.dim} vs setup dim {setup.dim}")


def exact_correlator(rho: DensityOperator, setup: MeasurementSetup, s: str) -> float:
    """``tr[rho ⊗_j A_j^{(s_j)}]``."""
    _check_dims(rho, setup)
    stacks = [setup.observable(j, ch == "1")[None] for j, ch in enumerate(s)]
    return float(contract_local(rho.matrix, setup.site_dims, stacks).real.reshape(()))


def correlator_table(rho: DensityOperator, setup: MeasurementSetup) -> np.ndarray:
    """All ``2^n`` full correlators; axis j indexes primed (1) or not (0) at site j."""
    _check_dims(rho, setup)
    stacks = [np.stack(pair) for pair in setup.sites]
    return contract_local(rho.matrix, setup.site_dims, stacks).real


def exact_record(rho: DensityOperator, setup: MeasurementSetup) -> CorrelationRecord:
    table = correlator_table(rho, setup)
    entries = {}
    for s in setting_strings(setup.n):
        e = float(np.clip(table[tuple(int(c) for c in s)], -1.0, 1.0))
        entries[s] = CorrelationEntry(e, 0, 0.0)
    return CorrelationRecord(setup.n, entries)


def outcome_distribution(rho: DensityOperator, setup: MeasurementSetup, s: str) -> np.ndarray:
    """Joint probabilities ``p(r|s)``, shape ``(2,)*n``; index 0 is outcome +1."""
    _check_dims(rho, setup)
    stacks = [np.stack(povm_from_observable(setup.observable(j, ch == "1")))
              for j, ch in enumerate(s)]
    p = contract_local(rho.matrix, setup.site_dims, stacks).real
    if p.min() < -NEGATIVE_PROB_TOL:
        raise NumericalHealthError(f"probability {p.min():.3g} below zero for setting {s}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1) > NORMALIZATION_TOL:
        raise NumericalHealthError(f"probabilities sum to {total:.12g} for setting {s}")
    return p / total


def _parity_signs(n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    ones = np.array([bin(i).count("1") for i in idx])
    return np.where(ones % 2 == 0, 1, -1)


def setting_rng(seed: int, setting_index: int) -> np.random.Generator:
    """Independent counter-based stream per setting."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), setting_index])))


def sample_experiment(
    rho: DensityOperator,
    setup: MeasurementSetup,
    shots_per_setting: int,
    seed: int,
    settings: Iterable[str] | None = None,
) -> CorrelationRecord:
    """Sample ``shots_per_setting`` outcome strings for every setting."""
    if shots_per_setting < 1:
        raise ValidationError("shots must be >= 1", field="shots")
    n = setup.n
    signs = _parity_signs(n)
    entries = {}
    for idx, s in enumerate(setting_strings(n)):
        if settings is not None and s not in settings:
            continue
        p = outcome_distribution(rho, setup, s).reshape(-1)
        counts = setting_rng(seed, idx).multinomial(shots_per_setting, p)
        e = float(counts @ signs) / shots_per_setting
        se = math.sqrt(max(0.0, 1.0 - e * e) / shots_per_setting)
        entries[s] = CorrelationEntry(e, shots_per_setting, se)
    return CorrelationRecord(n, entries)
