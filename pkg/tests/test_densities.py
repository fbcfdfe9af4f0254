import numpy as np
import pytest

from polyatree.simharness.densities import (
    DEFAULT_1D_DENSITY,
    CategoricalGaussianMixture,
    LogisticStripDensity,
    LogitNormalRegression,
    PiecewiseLinearDensity,
    chi_square_gof,
)


class TestPiecewiseLinear:
    def test_default_integrates_to_one(self):
        assert DEFAULT_1D_DENSITY.cdf(1.0) == pytest.approx(1.0)
        assert DEFAULT_1D_DENSITY.cdf(0.0) == 0.0

    def test_default_shape(self):
        # low shelf, rising ramp, high shelf
        assert DEFAULT_1D_DENSITY.pdf(0.1) == pytest.approx(0.5)
        assert DEFAULT_1D_DENSITY.pdf(0.9) == pytest.approx(1.5)
        assert DEFAULT_1D_DENSITY.pdf(0.5) == pytest.approx(1.0)

    def test_normalizes_arbitrary_knots(self):
        d = PiecewiseLinearDensity((0.0, 0.5, 1.0), (2.0, 6.0, 2.0))
        assert d.cdf(1.0) == pytest.approx(1.0)

    def test_ppf_inverts_cdf(self, rng):
        t = rng.uniform(size=200)
        assert np.allclose(DEFAULT_1D_DENSITY.cdf(DEFAULT_1D_DENSITY.ppf(t)), t, atol=1e-12)

    def test_samples_in_unit_interval(self, rng):
        draws = DEFAULT_1D_DENSITY.sample(1000, rng)
        assert draws.min() >= 0.0 and draws.max() <= 1.0

    def test_bin_masses_sum_to_one(self):
        assert DEFAULT_1D_DENSITY.bin_masses(32).sum() == pytest.approx(1.0)

    def test_constant_region_has_zero_approximation_error(self):
        # bins inside a constant shelf have bin-average equal to the density
        masses = DEFAULT_1D_DENSITY.bin_masses(8)
        assert masses[0] * 8 == pytest.approx(0.5)
        assert masses[1] * 8 == pytest.approx(0.5)
        assert masses[7] * 8 == pytest.approx(1.5)

    def test_gof(self):
        _, p = DEFAULT_1D_DENSITY.gof_check(100_000, np.random.default_rng(42))
        assert p > 0.001

    def test_validation(self):
        with pytest.raises(ValueError):
            PiecewiseLinearDensity((0.0, 1.0), (0.0, 0.0))
        with pytest.raises(ValueError):
            PiecewiseLinearDensity((0.1, 1.0), (1.0, 1.0))
        with pytest.raises(ValueError):
            PiecewiseLinearDensity((0.0, 1.0), (1.0, -1.0))


class TestLogisticStrip:
    def test_cdf_endpoints_exact(self):
        d = LogisticStripDensity()
        assert d.x_cdf(0.0) == 0.0
        assert d.x_cdf(1.0) == pytest.approx(1.0, abs=1e-15)

    def test_pdf_at_center(self):
        d = LogisticStripDensity()
        assert d.pdf([[0.5, 0.3]])[0] == pytest.approx(1.0)
        assert d.pdf([[1.0, 0.9]])[0] == pytest.approx(2.0, abs=1e-3)

    def test_ppf_inverts(self):
        d = LogisticStripDensity()
        t = np.linspace(0.01, 0.99, 50)
        assert np.allclose(d.x_cdf(d.x_ppf(t)), t, atol=1e-10)

    def test_box_masses_tile(self):
        d = LogisticStripDensity()
        total = sum(
            d.box_mass(i / 4, (i + 1) / 4, j / 4, (j + 1) / 4)
            for i in range(4)
            for j in range(4)
        )
        assert total == pytest.approx(1.0)

    def test_gof(self):
        _, p = LogisticStripDensity().gof_check(100_000, np.random.default_rng(42))
        assert p > 0.001


class TestLogitNormalRegression:
    def test_conditional_quantiles_monotone_in_q(self):
        d = LogitNormalRegression()
        for ux in (0.2, 0.5, 0.8):
            qs = [d.conditional_quantile(ux, q) for q in (0.05, 0.5, 0.95)]
            assert qs[0] < qs[1] < qs[2]

    def test_median_follows_regression_line(self):
        d = LogitNormalRegression()
        # at the x where logit(u)=0 the median response is sigmoid(0) = 1/2
        assert d.conditional_quantile(0.5, 0.5) == pytest.approx(0.5)
        # deep in the left branch the median is sigmoid(-0.9)
        left = d.conditional_quantile(0.05, 0.5)
        assert left == pytest.approx(1 / (1 + np.exp(0.9)), abs=1e-12)

    def test_cell_probs_sum_to_one(self):
        # midpoint quadrature; the logit-normal edge spikes dominate the error
        d = LogitNormalRegression()
        assert d.cell_probs(8, 4).sum() == pytest.approx(1.0, abs=1e-4)
        assert d.cell_probs(8, 4, n_sub=2048).sum() == pytest.approx(1.0, abs=1e-6)

    def test_gof(self):
        _, p = LogitNormalRegression().gof_check(100_000, np.random.default_rng(42))
        assert p > 0.001


class TestCategoricalGaussianMixture:
    def test_level_proportions(self):
        d = CategoricalGaussianMixture()
        labels, _ = d.sample(50_000, np.random.default_rng(0))
        props = [np.mean(labels == lvl) for lvl in d.levels]
        for p_hat, p in zip(props, d.level_probs):
            assert abs(p_hat - p) <= 3 * np.sqrt(p * (1 - p) / 50_000)

    def test_pair_correlation_only_under_first_level(self):
        d = CategoricalGaussianMixture()
        labels, y = d.sample(80_000, np.random.default_rng(1))
        mask = labels == "a"
        corr_a = np.corrcoef(y[mask, 0], y[mask, 1])[0, 1]
        corr_rest = np.corrcoef(y[~mask, 0], y[~mask, 1])[0, 1]
        assert corr_a == pytest.approx(0.8, abs=0.02)
        assert corr_rest == pytest.approx(0.0, abs=0.02)

    def test_other_coordinates_standard_normal(self):
        d = CategoricalGaussianMixture()
        _, y = d.sample(50_000, np.random.default_rng(2))
        assert np.abs(y[:, 2:].mean(axis=0)).max() < 0.03
        assert np.abs(y[:, 2:].std(axis=0) - 1.0).max() < 0.03

    def test_pdf_positive_and_level_weighted(self):
        d = CategoricalGaussianMixture()
        y = np.zeros((3, 8))
        labels = np.array(["a", "b", "c"], dtype=object)
        vals = d.pdf(labels, y)
        assert np.all(vals > 0)
        # at the common mode the density ranks by level probability
        assert vals[1] / vals[2] == pytest.approx(0.3 / 0.2)

    def test_gof(self):
        _, p = CategoricalGaussianMixture().gof_check(100_000, np.random.default_rng(42))
        assert p > 0.001


def test_chi_square_gof_calibration(rng):
    counts = rng.multinomial(10_000, np.full(20, 0.05))
    _, p = chi_square_gof(counts, np.full(20, 0.05))
    assert p > 0.001
