import itertools

import numpy as np
import pytest

from bellmark.bell import MeasurementSetup, build_direct
from bellmark.errors import UnsupportedDimensionError, ValidationError
from bellmark.linalg import DensityOperator, expectation
from bellmark.optimize import maximize_witness, pauli_tensor, scan_threshold_window
from bellmark.states import ghz, ghz_noise, random_density


def planar(phi):
    return np.array([np.cos(phi), np.sin(phi), 0.0])


def ghz3_planar_value(th, thp):
    setup = MeasurementSetup.from_bloch([(planar(a), planar(b)) for a, b in zip(th, thp)])
    pair = build_direct(setup)
    rho = ghz(3)
    return expectation(rho, pair.B) ** 2 + expectation(rho, pair.Bp) ** 2


def test_planar_correlator_formula(rng):
    # <GHZ| ⊗ (cos φ_j X + sin φ_j Y) |GHZ> = cos(Σ φ_j)
    from bellmark.measurement import exact_correlator

    for _ in range(5):
        th, thp = rng.uniform(0, 2 * np.pi, (2, 3))
        setup = MeasurementSetup.from_bloch([(planar(a), planar(b)) for a, b in zip(th, thp)])
        for s in itertools.product((0, 1), repeat=3):
            phis = [thp[j] if s[j] else th[j] for j in range(3)]
            got = exact_correlator(ghz(3), setup, "".join(map(str, s)))
            assert got == pytest.approx(np.cos(sum(phis)), abs=1e-12)


def test_grid_oracle_ghz3():
    # θ_j = 0, δ_j = θ'_j on a 2° grid; B and B' written out for three sites
    d = np.deg2rad(np.arange(0, 360, 2.0))
    d1, d2, d3 = np.meshgrid(d, d, d, indexing="ij", sparse=True)
    e = lambda *ds: np.cos(sum(ds))
    b = 0.5 * (e(d3) + e(d2) + e(d1) - e(d1, d2, d3))
    bp = 0.5 * (-e() + e(d2, d3) + e(d1, d3) + e(d1, d2))
    grid_max = float(np.max(b ** 2 + bp ** 2))
    i = np.unravel_index(np.argmax(b ** 2 + bp ** 2), (d.size,) * 3)
    assert ghz3_planar_value([0, 0, 0], d[list(i)]) == pytest.approx(grid_max, abs=1e-12)
    res = maximize_witness(ghz(3), restarts=8, seed=0)
    assert grid_max == pytest.approx(4.0, abs=1e-12)
    assert res.best_value == pytest.approx(grid_max, abs=1e-9)


def test_ghz3_optimum_and_its_settings():
    res = maximize_witness(ghz(3), restarts=8, seed=1)
    assert res.best_value == pytest.approx(4.0, abs=1e-9)
    assert res.converged
    pair = build_direct(res.settings.to_setup())
    b, bp = expectation(ghz(3), pair.B), expectation(ghz(3), pair.Bp)
    assert b * b + bp * bp == pytest.approx(res.best_value, abs=1e-12)


@pytest.mark.parametrize("n,x", [(3, 0.5), (4, 0.8), (5, 1.0)])
def test_ghz_noise_closed_form(n, x):
    res = maximize_witness(ghz_noise(n, x), restarts=8, seed=0)
    assert res.best_value == pytest.approx(2 ** (n - 1) * x * x, abs=1e-6)
    res = maximize_witness(ghz_noise(n, x), True, restarts=8, seed=0)
    assert res.best_value == pytest.approx(2 ** (n - 1) * x * x, abs=1e-6)
    res.settings.check(anticommute=True)


def test_optimum_beats_random_settings(rng):
    m = random_density(8, rng)
    rho = DensityOperator(m, (2, 2, 2))
    res = maximize_witness(rho, restarts=16, seed=0)
    for _ in range(300):
        a = rng.standard_normal((3, 3))
        ap = rng.standard_normal((3, 3))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        ap /= np.linalg.norm(ap, axis=1, keepdims=True)
        pair = build_direct(MeasurementSetup.from_bloch(list(zip(a, ap))))
        val = expectation(rho, pair.B) ** 2 + expectation(rho, pair.Bp) ** 2
        assert val <= res.best_value + 1e-9


def test_constrained_never_above_unconstrained(rng):
    for _ in range(3):
        rho = DensityOperator(random_density(8, rng), (2, 2, 2))
        free = maximize_witness(rho, restarts=8, seed=0).best_value
        tied = maximize_witness(rho, True, restarts=8, seed=0).best_value
        assert tied <= free + 1e-9
        assert free <= 4 + 1e-9


def test_deterministic_for_equal_seed():
    rho = ghz_noise(3, 0.6)
    a = maximize_witness(rho, restarts=4, seed=9).to_dict()
    b = maximize_witness(rho, restarts=4, seed=9).to_dict()
    assert a == b


def test_non_qubit_sites_rejected():
    rho = DensityOperator(np.eye(6) / 6, (2, 3))
    with pytest.raises(UnsupportedDimensionError):
        pauli_tensor(rho)
    with pytest.raises(ValidationError):
        maximize_witness(ghz(3), restarts=0)


def test_scan_examples():
    rows = scan_threshold_window(3, True, [0.5, 0.51, 0.75], restarts=4, seed=0)
    assert [r.detected for r in rows] == [False, True, True]
    rows = scan_threshold_window(3, False, [0.5, 0.51, 0.75], restarts=4, seed=0)
    assert [r.detected for r in rows] == [False, False, True]
    assert rows[2].max_lhs == pytest.approx(4 * 0.75 ** 2, abs=1e-9)
