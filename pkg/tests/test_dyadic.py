import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from translab.dyadic import (
    block_cost,
    bound_terms,
    build_dyadic,
    lemma_cvg_series,
    repair_closed_form,
    repair_cost,
    run_dyadic,
    theorem_i_classifier,
)
from translab.transport import single_atom_cost
from translab.transport.oracle import lp_transport


def _lp_repair(zl, zr, half, p, delta):
    # both configurations as point cells of mass delta, common mass included
    def cells(a, b):
        return a + delta * (np.arange(int(round((b - a) / delta))) + 0.5)

    x = cells(0.0, zl + zr)
    y = np.concatenate([cells(0.0, zl), cells(half, half + zr)])
    C = np.abs(x[:, None] - y[None, :]) ** p
    return lp_transport(C, np.ones(len(x)), np.ones(len(y)), balanced=True) * delta


@pytest.mark.parametrize("zl,zr,half", [(2, 1, 1), (0, 1, 1), (0, 3, 2), (1, 1, 2), (5, 0, 2), (3, 2, 2),
                                        (0, 2, 4), (6, 1, 4)])
@pytest.mark.parametrize("p", [0.3, 0.8])
def test_repair_solver_matches_lp(zl, zr, half, p):
    delta = 1 / 4
    assert repair_cost(zl, zr, half, p, delta) == pytest.approx(_lp_repair(zl, zr, half, p, delta), rel=1e-8,
                                                                abs=1e-12)


@pytest.mark.parametrize("zl,zr,half", [(2, 1, 1), (0, 1, 1), (0, 3, 2), (1, 1, 2), (3, 2, 2), (6, 1, 4)])
def test_repair_closed_form_is_continuum_limit(zl, zr, half):
    p = 0.5
    exact = repair_closed_form(zl, zr, half, p)
    fine = repair_cost(zl, zr, half, p, delta=1 / 64)
    assert fine == pytest.approx(exact, rel=0.02)


def test_repair_closed_form_hand_example():
    # [1, 2) moves onto [2, 3) in reverse order: int_1^2 (4 - 2x)^p dx
    p = 0.4
    assert repair_closed_form(2, 1, 1, p) == pytest.approx(2 ** (p + 1) / (2 * (p + 1)))
    assert repair_closed_form(1, 2, 1, p) == 0.0
    assert repair_closed_form(3, 0, 1, p) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 12), st.integers(0, 12), st.sampled_from([1, 2, 4, 8]), st.floats(0.05, 0.95))
def test_repair_closed_form_nonnegative_and_zero_when_balanced(zl, zr, half, p):
    c = repair_closed_form(zl, zr, half, p)
    assert c >= 0
    if zl == half or zr == 0:
        assert c == 0


def test_block_cost_single_centred_atom():
    assert block_cost(np.array([3.5]), 3.0, 0.5) == pytest.approx(single_atom_cost(0.5), rel=1e-12)
    assert block_cost(np.array([]), 3.0, 0.5) == 0.0


def test_lattice_path_is_flat():
    p = 0.5
    path = build_dyadic(np.arange(8) + 0.5, 3, p)
    assert np.allclose(path.cbar, single_atom_cost(p))
    assert np.allclose(path.cbar_mean, single_atom_cost(p))
    assert all(np.all(r == 0) for r in path.repairs)
    assert path.Z.tolist() == [1, 2, 4, 8]
    assert path.Z_prime.tolist() == [1, 2, 4]


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0, 15.999, allow_nan=False), min_size=0, max_size=30), st.floats(0.1, 0.9))
def test_path_additivity_and_telescoping(raw, p):
    pts = np.unique(np.round(np.array(raw), 3))
    path = build_dyadic(pts, 4, p, delta=1 / 8, exact_repair=True)
    assert path.check()
    assert path.Z[-1] == len(pts)
    total = sum(path.costs[0]) + sum(r.sum() for r in path.repairs)
    assert path.costs[-1][0] == pytest.approx(total, rel=1e-10, abs=1e-12)


def test_build_dyadic_rejects():
    with pytest.raises(ValueError):
        build_dyadic([0.5], 0, 0.5)
    with pytest.raises(ValueError):
        build_dyadic([0.5], 2, 1.0)
    with pytest.raises(ValueError):
        build_dyadic([4.5], 2, 0.5)


def test_bound_terms_values():
    t = bound_terms(np.array([1.0, 2.0, 4.0]), 0.5)
    k = np.arange(3)
    v = np.array([1.0, 2.0, 4.0])
    assert np.allclose(t, 2.0 ** -k * v**0.75 + 0.5 * v**0.5 * 2.0 ** (-0.5 * k))
    with pytest.raises(ValueError):
        bound_terms(np.array([-1.0]), 0.5)


# series and classifier


def test_series_bounded_variance_summable():
    rep = lemma_cvg_series(np.ones(12), 0.5)
    assert rep.verdict == "summable"
    assert rep.ratio == pytest.approx(2 ** -0.5, rel=0.05)


def test_series_quadratic_variance_diverges():
    k = np.arange(12)
    rep = lemma_cvg_series(4.0**k, 0.5)
    assert rep.verdict.startswith("not summable")
    assert rep.ratio > 1


def test_series_poisson_variance():
    # f(n) = n: terms ~ 2^{k(p-1)/2} + 2^{k(p-1/2)}, summable exactly for p < 1/2
    k = np.arange(14)
    assert lemma_cvg_series(2.0**k, 0.3).verdict == "summable"
    assert lemma_cvg_series(2.0**k, 0.7).verdict.startswith("not summable")


def test_classifier_poisson():
    n = 2.0 ** np.arange(4, 11)
    assert theorem_i_classifier(n, n, 0.3, growth_model="power").verdict == "finite for all q<p"
    assert theorem_i_classifier(n, n, 0.7, growth_model="power").verdict == "not established"
    assert theorem_i_classifier(n, n, 0.5, growth_model="power").verdict == "finite for all q<p (boundary)"


def test_classifier_log_growth():
    n = 2.0 ** np.arange(4, 11)
    rep = theorem_i_classifier(n, 0.1 * np.log(n) + 0.3, 0.9)
    assert rep.growth_model in ("log", "bounded")
    assert rep.gamma == 0.0 and rep.exponent == pytest.approx(-0.1)
    assert rep.finite_below_p


# Monte Carlo ledger


def test_ledger_poisson_small():
    led = run_dyadic("poisson", 4, 0.5, 40, seed=3, delta=1 / 8, exact_repair=True)
    assert led.mean_cbar.shape == (5,) and led.mean_increment.shape == (4,)
    assert np.allclose(led.var_Z / 2.0 ** np.arange(5), 1.0, atol=0.5)
    assert len(led.rows()) == 5 and math.isnan(led.rows()[-1][3])
    assert np.allclose(led.mean_Z, 2.0 ** np.arange(5), rtol=0.5)


def test_ledger_needs_two_replicas():
    with pytest.raises(ValueError):
        run_dyadic("poisson", 3, 0.5, 1, seed=1)


@pytest.mark.slow
def test_ledger_increments_below_bound():
    led = run_dyadic("poisson", 6, 0.5, 200, seed=5, delta=1 / 16, exact_repair=True)
    assert np.all(led.bound_holds())


def test_ledger_lattice_increments_vanish():
    led = run_dyadic("lattice:sigma=0", 4, 0.5, 20, seed=2, delta=1 / 16, exact_repair=True)
    assert np.allclose(led.mean_increment, 0.0, atol=1e-12)
