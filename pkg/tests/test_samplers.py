import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from translab.samplers import (
    DiscretizationError,
    InterarrivalLaw,
    PointConfiguration,
    ProcessModel,
    WindowSpec,
    make_rng,
    sample,
    sample_counts,
    separate_ties,
    sine_count_moments,
)
from translab.samplers.cbe import eigenangles_dense, eigenangles_prufer, sample_cbe_points, verblunsky
from translab.samplers.poisson import sample_count
from translab.samplers.sine_dpp import SineKernelSpectrum, hkpv_sample, spectrum

INTERVAL_MODELS = ["poisson", "lattice:sigma=0.5", "renewal:law=gamma,shape=4", "pareto:alpha=1.5", "sine:m=32"]
TORUS_MODELS = ["cpoisson", "cbe:beta=2", "lattice:sigma=0.3", "poisson"]


# window and configuration types


def test_window_invariants():
    with pytest.raises(ValueError):
        WindowSpec(-1.0)
    with pytest.raises(ValueError):
        WindowSpec(4.0, "interval", padding=-1)
    with pytest.raises(ValueError):
        WindowSpec(4.0, "torus", padding=1.0)
    assert WindowSpec(4.0, "torus").is_torus


def test_torus_count_wraps():
    cfg = PointConfiguration(np.array([0.5, 3.5, 9.5]), WindowSpec(10.0, "torus"))
    assert cfg.count(9.0, 11.0) == 2
    assert cfg.count(3.0, 13.0) == 3
    assert cfg.count(0.0, 20.0) == 6


@given(st.lists(st.integers(-5, 5), min_size=0, max_size=40))
def test_separate_ties_strictly_increasing(vals):
    x = np.array(vals, dtype=float)
    y = separate_ties(x)
    assert np.all(np.diff(y) > 0)
    assert np.max(np.abs(y - np.sort(x)), initial=0.0) <= len(x) * 1e-12


def test_separate_ties_rule():
    y = separate_ties(np.array([2.0, 1.0, 2.0, 2.0]))
    assert y.tolist() == [1.0, 2.0, 2.0 + 1e-12, 2.0 + 2e-12]


# reproducibility


@pytest.mark.parametrize("spec", INTERVAL_MODELS)
def test_interval_models_bit_identical(spec):
    a = sample(spec, 32.0, seed=11, replica=3)
    b = sample(spec, 32.0, seed=11, replica=3)
    c = sample(spec, 32.0, seed=11, replica=4)
    assert a.points.tobytes() == b.points.tobytes()
    assert a.seed_record == (11, 3)
    assert a.points.tobytes() != c.points.tobytes() or len(a) == 0


@pytest.mark.parametrize("spec", TORUS_MODELS)
def test_torus_models_bit_identical(spec):
    w = WindowSpec(64.0, "torus")
    a = sample(spec, w, seed=5, replica=1)
    b = sample(spec, w, seed=5, replica=1)
    assert a.points.tobytes() == b.points.tobytes()
    assert np.all((a.points >= 0) & (a.points < 64))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(INTERVAL_MODELS[:4]), st.integers(0, 2**64 - 1), st.integers(0, 10**6))
def test_reproducible_for_any_seed(spec, seed, replica):
    a = sample(spec, 16.0, seed, replica)
    b = sample(spec, 16.0, seed, replica)
    assert np.array_equal(a.points, b.points)
    assert np.all(np.diff(a.points) > 0)
    assert np.all((a.points >= 0) & (a.points < 16))


def test_seed_required():
    with pytest.raises(ValueError, match="seed required"):
        sample("poisson", 4.0, None)


def test_empty_window():
    assert len(sample("poisson", 0.0, 1)) == 0


# model catalogue


def test_model_parse_roundtrip():
    for spec in ["poisson", "poisson:min_count=320", "lattice:sigma=0.25", "renewal:law=exponential",
                 "pareto:alpha=1.2", "sine:m=16", "cbe:beta=4", "cpoisson"]:
        m = ProcessModel.parse(spec)
        assert ProcessModel.parse(m.spec) == m


@pytest.mark.parametrize("spec", ["pareto:alpha=2.5", "pareto:alpha=1", "lattice:sigma=-1", "sine:m=4",
                                  "cbe:beta=0", "nope", "poisson:bogus=1", "renewal:law=weibull"])
def test_model_validation_rejects(spec):
    with pytest.raises(ValueError):
        ProcessModel.parse(spec)


def test_topology_restrictions():
    with pytest.raises(ValueError, match="torus"):
        sample("sine:m=32", WindowSpec(8.0, "torus"), 1)
    with pytest.raises(ValueError, match="interval"):
        sample("cbe:beta=2", WindowSpec(8.0, "interval"), 1)


# Poisson


def test_poisson_count_moments():
    c = sample_counts("poisson", [64.0], 100_000, seed=1)[:, 0]
    assert abs(c.mean() - 64) <= 3 * math.sqrt(64 / 1e5)
    assert abs(c.var(ddof=1) / 64 - 1) <= 0.05


def test_conditioned_poisson_count_law():
    rng = make_rng(3)
    k = np.array([sample_count(16.0, rng, min_count=22) for _ in range(20000)])
    assert k.min() >= 22
    support = np.arange(22, 40)
    pmf = stats.poisson.pmf(support, 16.0) / stats.poisson.sf(21, 16.0)
    emp = np.array([(k == s).mean() for s in support])
    assert 0.5 * np.abs(emp - pmf).sum() < 0.02


# perturbed lattice


def test_unperturbed_lattice_counts():
    c = sample_counts("lattice:sigma=0", [10.5, 37.25], 500, seed=2)
    assert set(np.unique(c[:, 0])) <= {10, 11}
    assert set(np.unique(c[:, 1])) <= {37, 38}


def test_lattice_variance_bounded():
    c = sample_counts("lattice:sigma=0.5", [64.0, 256.0], 10_000, seed=4)
    v64, v256 = c.var(0, ddof=1)
    assert v256 <= 2 * v64


def test_torus_lattice_has_exactly_n_points():
    cfg = sample("lattice:sigma=0.7", WindowSpec(50.0, "torus"), 9)
    assert len(cfg) == 50


# renewal


def test_renewal_rejects_non_unit_mean():
    with pytest.raises(ValueError, match="unit mean"):
        InterarrivalLaw.gamma(4.0, scale=0.3).validate()
    with pytest.raises(ValueError):
        InterarrivalLaw.exponential(2.0).validate()
    InterarrivalLaw.gamma(4.0).validate()
    InterarrivalLaw.pareto(1.5).validate()


def test_deterministic_renewal_variance():
    c = sample_counts("renewal:law=deterministic", [3.3, 10.0, 17.7], 4000, seed=8)
    assert np.all(c.var(0) <= 0.25 + 1e-12)


def test_gamma_renewal_variance_ratio():
    # Var(count)/n -> Var(T)/E[T]^3 = 1/4 for Gamma(4, 1/4)
    c = sample_counts("renewal:law=gamma,shape=4", [256.0, 512.0], 10_000, seed=6)
    ratio = c.var(0, ddof=1) / np.array([256.0, 512.0])
    assert np.all(np.abs(ratio / 0.25 - 1) < 0.10)


def test_gamma_delay_mean():
    # stationary forward recurrence time has mean E[T^2] / (2 E[T])
    law = InterarrivalLaw.gamma(4.0)
    d = law.sample_delay(make_rng(1), 200_000)
    assert abs(d.mean() - (law.variance + 1.0) / 2) < 0.01


def test_pareto_delay_matches_integrated_tail():
    from scipy.integrate import quad

    law = InterarrivalLaw.pareto(1.5)
    xm, a = law.b, law.a

    def surv(t):
        return 1.0 if t < xm else (xm / t) ** a

    d = law.sample_delay(make_rng(2), 200_000)
    for x in [0.1, 0.3, 0.8, 2.0, 5.0]:
        cdf = quad(surv, 0, x, points=[xm])[0] / law.mean
        assert abs((d <= x).mean() - cdf) < 0.005


@pytest.mark.slow
def test_pareto_variance_exponent():
    from translab.estimators import fit_power_law

    g = 2.0 ** np.arange(6, 13)
    c = sample_counts("pareto:alpha=1.5", g, 10_000, seed=12)
    fit = fit_power_law(g, c.var(0, ddof=1))
    assert abs(fit.slope - 1.5) <= 0.15


# sine kernel


def test_sine_mean_count_unit_window():
    counts = np.array([len(sample("sine:m=32", 1.0, 3, r)) for r in range(10_000)])
    assert abs(counts.mean() - 1.0) <= 0.02


def _dpp_count_law(K):
    # E[z^N] = det(I + (z - 1) K); coefficients by evaluation on roots of unity
    G = K.shape[0]
    z = np.exp(2j * np.pi * np.arange(G + 1) / (G + 1))
    vals = np.array([np.linalg.det(np.eye(G) + (zz - 1) * K) for zz in z])
    coef = np.fft.fft(vals) / (G + 1)
    return np.real(coef)


def test_sine_count_law_matches_determinant_oracle():
    n, m = 4.0, 16
    x = (np.arange(int(n * m)) + 0.5) / m
    K = np.sinc(x[:, None] - x[None, :]) / m
    law = _dpp_count_law(K)
    counts = np.array([len(sample(f"sine:m={m}", n, 21, r)) for r in range(10_000)])
    emp = np.bincount(counts, minlength=len(law))[: len(law)] / len(counts)
    assert 0.5 * np.abs(emp - law).sum() < 0.02


def test_hkpv_inclusion_probabilities():
    # one-point marginals of a projection DPP are the diagonal of its kernel
    rng = make_rng(5)
    V = np.linalg.qr(rng.standard_normal((12, 4)))[0]
    hits = np.zeros(12)
    R = 20_000
    for _ in range(R):
        hits[hkpv_sample(V, rng)] += 1
    diag = np.einsum("ij,ij->i", V, V)
    assert np.max(np.abs(hits / R - diag)) < 0.015


def test_sine_spectrum_dense_and_factored_agree():
    dense = SineKernelSpectrum(32.0, 32)
    import translab.samplers.sine_dpp as sd

    old = sd.DENSE_LIMIT
    sd.DENSE_LIMIT = 0
    try:
        fact = SineKernelSpectrum(32.0, 32)
    finally:
        sd.DENSE_LIMIT = old
    top_d = np.sort(dense.eigenvalues)[::-1][:60]
    top_f = np.sort(fact.eigenvalues)[::-1][:60]
    assert np.max(np.abs(top_d - top_f)) < 1e-9
    # eigenvalues near 1 are nearly degenerate; compare vectors in the separated transition band
    i = np.argsort(fact.eigenvalues)[::-1][28:36]
    j = np.argsort(dense.eigenvalues)[::-1][28:36]
    Vf = fact.eigenvectors(i)
    Vd = dense.eigenvectors(j)
    assert np.allclose(np.abs(np.sum(Vf * Vd, axis=0)), 1.0, atol=1e-6)


def test_sine_discretization_error(monkeypatch):
    import translab.samplers.sine_dpp as sd

    monkeypatch.setattr(sd, "_dense_spectrum", lambda G, m: (np.array([-0.1, 0.5]), np.eye(2)))
    with pytest.raises(DiscretizationError, match="increase the grid resolution"):
        sd.SineKernelSpectrum(2.0 / 32, 32)


def test_sine_exact_count_moments():
    mean, var = sine_count_moments(64.0)
    assert abs(mean - 64) < 1e-6
    # asymptotic number variance (log(2 pi n) + gamma + 1) / pi^2
    asym = (math.log(2 * math.pi * 64) + np.euler_gamma + 1) / math.pi**2
    assert abs(var / asym - 1) < 0.02


def test_sine_variance_logarithmic():
    from translab.estimators import fit_log_law, fit_power_law, variance_curve

    g = 2.0 ** np.arange(4, 9)
    c = variance_curve("sine:m=32", g, 10_000, seed=3)
    assert fit_power_law(g, c.mean).slope < 0.15
    assert fit_log_law(g, c.mean).r > 0.99


def test_sine_repulsion():
    close_dpp = close_poi = 0
    for r in range(300):
        x = sample("sine:m=32", 16.0, 7, r).points
        y = sample("poisson", 16.0, 7, r).points
        close_dpp += np.count_nonzero(np.diff(x) < 0.05)
        close_poi += np.count_nonzero(np.diff(y) < 0.05)
    assert close_dpp < close_poi


# circular beta ensemble


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 40), st.floats(0.2, 8.0), st.integers(0, 10**6))
def test_cbe_prufer_matches_dense_cmv(N, beta, seed):
    a = verblunsky(N, beta, make_rng(seed))
    assert np.max(np.abs(eigenangles_prufer(a) - eigenangles_dense(a))) < 1e-9


@pytest.mark.parametrize("N,beta", [(2, 2.0), (17, 1.0), (128, 4.0)])
def test_cbe_exact_point_count(N, beta):
    cfg = sample(f"cbe:beta={beta}", WindowSpec(float(N), "torus"), 3)
    assert len(cfg) == N
    assert np.all(np.diff(cfg.points) > 0)
    assert cfg.points[0] >= 0 and cfg.points[-1] < N


def test_cbe_rejects_small_n():
    with pytest.raises(ValueError):
        sample_cbe_points(1, 2.0, make_rng(0))


def _arc_counts(spec, N, t, R, seed):
    w = WindowSpec(float(N), "torus")
    out = []
    for r in range(R):
        cfg = sample(spec, w, seed, r)
        starts = np.arange(0, N, N // 8)
        out += [cfg.count(s, s + t) for s in starts]
    return np.array(out)


@pytest.mark.slow
def test_cbe2_arc_variance_matches_sine_kernel():
    # arcs of length 64 in a CUE of size 512 against the exact sine-kernel count variance
    c = _arc_counts("cbe:beta=2", 512, 64.0, 500, 13)
    _, v_sine = sine_count_moments(64.0)
    assert abs(c.var(ddof=1) / v_sine - 1) < 0.15


@pytest.mark.slow
def test_cbe_log_coefficient_decreases_with_beta():
    from translab.estimators import fit_log_law

    t = np.array([4.0, 8.0, 16.0, 32.0, 64.0])
    coef = {}
    for beta in (1.0, 4.0):
        v = [(_arc_counts(f"cbe:beta={beta}", 256, tt, 150, 17)).var(ddof=1) for tt in t]
        coef[beta] = fit_log_law(t, v).slope
    assert coef[1.0] > coef[4.0] > 0


# invariants


@pytest.mark.parametrize("spec", ["poisson", "lattice:sigma=0.5", "renewal:law=gamma,shape=4",
                                  "renewal:law=exponential", "sine:m=32"])
def test_unit_intensity(spec):
    c = sample_counts(spec, [128.0], 10_000, seed=31)[:, 0]
    se = c.std(ddof=1) / math.sqrt(len(c))
    assert abs(c.mean() - 128) <= 4 * max(se, 1e-3)


def test_unit_intensity_pareto():
    c = sample_counts("pareto:alpha=1.5", [128.0], 10_000, seed=31)[:, 0]
    se = c.std(ddof=1) / math.sqrt(len(c))
    assert abs(c.mean() - 128) <= 4 * se


@pytest.mark.parametrize("spec", ["poisson", "renewal:law=gamma,shape=4", "lattice:sigma=0.5"])
def test_stationarity_halves(spec):
    n = 64.0
    c = sample_counts(spec, [n / 2, n], 10_000, seed=41)
    left, right = c[:, 0], c[:, 1] - c[:, 0]
    assert stats.ks_2samp(left, right).pvalue > 0.001


def test_nested_counts_monotone():
    g = [8.0, 16.0, 32.0, 64.0]
    for spec in ["poisson", "renewal:law=gamma,shape=4", "pareto:alpha=1.5", "lattice:sigma=1"]:
        c = sample_counts(spec, g, 200, seed=2)
        assert np.all(np.diff(c, axis=1) >= 0)
