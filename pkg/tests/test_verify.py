import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellmark.bell import MeasurementSetup, build_direct, combine_pairs
from bellmark.bounds import quadratic_bound
from bellmark.errors import ConstructionError, ValidationError
from bellmark.linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, expectation, operator_norm
from bellmark.states import Partition, enumerate_partitions
from bellmark.verify import (
    TrialReport,
    construct_extremal,
    extremal_values,
    lemma_terms,
    near_extremal,
    random_observable,
    require_saturation,
    single_site_anticommuting,
    verify_lemma,
    verify_lemma_internals,
    verify_separability_bound,
    verify_tightness,
)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_random_observable_spectrum(seed, d):
    w = np.linalg.eigvalsh(random_observable(d, np.random.default_rng(seed)))
    assert w[0] >= -1 - 1e-12 and w[-1] <= 1 + 1e-12


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 4)])
def test_lemma_small_runs(dims):
    rep = verify_lemma(200, dims=dims, seed=1)
    assert rep.ok and rep.max_lhs <= 2 + 1e-8 and rep.trials == 200


def test_lemma_with_trivial_second_site(rng):
    # X2 = X2' = I reduces to <X1>^2 + <X1'>^2 <= 2
    x1, x1p = random_observable(2, rng), random_observable(2, rng)
    eye = np.eye(2)
    y, yp = combine_pairs([(x1, x1p), (eye, eye)])
    np.testing.assert_allclose(y, np.kron(x1, eye), atol=1e-14)
    np.testing.assert_allclose(yp, np.kron(x1p, eye), atol=1e-14)


def test_lemma_saturated_by_pauli_pairs():
    y, yp = combine_pairs([(SIGMA_X, SIGMA_Y), (SIGMA_X, SIGMA_Y)])
    top = np.linalg.eigh(y)[1][:, -1]
    rho = np.outer(top, top.conj())
    assert expectation(rho, y) ** 2 + expectation(rho, yp) ** 2 == pytest.approx(2.0, abs=1e-12)


def test_lemma_terms_for_paulis():
    a_plus, a_minus, pp, mm = lemma_terms(SIGMA_X, SIGMA_Y, SIGMA_X, SIGMA_Y)
    np.testing.assert_allclose(a_minus[0], -SIGMA_Z, atol=1e-15)
    np.testing.assert_allclose(a_plus[0], np.zeros((2, 2)), atol=1e-15)
    assert operator_norm(pp + mm) == pytest.approx(1.0)


def test_lemma_theta_zero_reduces_to_y_squared(rng):
    rep = verify_lemma_internals(100, seed=4)
    assert rep.ok
    assert rep.details["max_identity_residual"] <= 1e-9
    assert rep.max_lhs <= 1 + 1e-8


def test_lemma_internals_mixed_dims():
    assert verify_lemma_internals(50, seed=0, dims=(2, 3)).ok


@pytest.mark.parametrize("blocks", [[[0], [1], [2]], [[0], [1, 2]], [[0, 1, 2]]])
def test_separable_small_runs(blocks):
    p = Partition(3, blocks)
    for ac in (False, True):
        rep = verify_separability_bound(3, p, 300, anticommute=ac, seed=2)
        assert rep.ok and rep.max_lhs <= rep.bound + 1e-8


def test_separable_qutrit_sites():
    rep = verify_separability_bound(3, Partition(3, [[0, 2], [1]]), 100, seed=0, site_dims=(3, 2, 3))
    assert rep.ok


def test_separable_partition_mismatch():
    with pytest.raises(ValidationError):
        verify_separability_bound(4, Partition(3, [[0, 1, 2]]), 1)


def test_checker_flags_entangled_input():
    # the verifier's comparison must trip on a state outside the class
    rho, setup = construct_extremal(3, Partition(3, [[0, 1, 2]]))
    pair = build_direct(setup)
    lhs = expectation(rho, pair.B) ** 2 + expectation(rho, pair.Bp) ** 2
    assert lhs > quadratic_bound(3, 2, 1) + 1


def test_extremal_examples():
    row = extremal_values(3, Partition(3, [[0], [1, 2]]))
    assert row["lhs"] == pytest.approx(2.0, abs=1e-12)
    row = extremal_values(3, Partition(3, [[0, 1, 2]]))
    assert abs(row["b"]) == pytest.approx(2.0, abs=1e-12)
    row = extremal_values(4, Partition(4, [[0], [1], [2, 3]]))
    assert abs(row["b"]) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert row["lhs"] == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_tightness_small_n(n):
    for ac in (False, True):
        rep = verify_tightness(n, anticommute=ac)
        assert rep.ok and rep.max_lhs <= 1e-8


def test_require_saturation():
    row = require_saturation(3, Partition(3, [[0], [1], [2]]))
    assert row["lhs"] == pytest.approx(2.0)


def test_near_extremal_stays_in_class(rng):
    p = Partition(4, [[0, 2], [1], [3]])
    for ac in (False, True):
        rho, setup = near_extremal(p, ac, rng)
        pair = build_direct(setup)
        lhs = expectation(rho, pair.B) ** 2 + expectation(rho, pair.Bp) ** 2
        assert lhs <= quadratic_bound(4, 3, 2, ac) + 1e-8


def test_single_site_anticommuting():
    rep = single_site_anticommuting(500, seed=0)
    assert rep.ok and rep.max_lhs <= 1 + 1e-10


def test_report_serialization_excludes_time():
    rep = TrialReport("x", 1, 0.5, 1.0, [], wall_time=3.0)
    assert rep.margin == 0.5 and "wall_time" not in rep.to_dict()
    assert rep.to_dict(include_time=True)["wall_time"] == 3.0


def test_reports_are_deterministic():
    p = Partition(3, [[0], [1, 2]])
    a = verify_separability_bound(3, p, 50, seed=7).to_dict()
    b = verify_separability_bound(3, p, 50, seed=7).to_dict()
    assert a == b
