"""Tests for the demand distributions and the two-moment Mixed-Erlang fit."""

import math

import numpy as np
import pytest

from lostsales.demand import (
    Deterministic,
    Exponential,
    MixedErlang,
    MomentTarget,
    convolve_lead_time,
    fit_mixed_erlang,
    make_geometric,
    make_poisson,
    parse_demand_spec,
)
from lostsales.errors import ParameterError

CV_GRID = [0.15, 0.25, 0.4, 0.5, 0.6, 0.8, 1.0, 1.2, 1.4, 1.5, 2.0]


class TestPoisson:
    def test_pmf_at_zero(self):
        d = make_poisson(5.0)
        assert d.pmf_array()[0] == pytest.approx(math.exp(-5.0), rel=1e-12)

    def test_moments(self):
        d = make_poisson(5.0)
        assert d.mean == 5.0
        assert d.var == 5.0

    def test_cdf_partial_sum_oracle(self):
        # oracle: direct partial sum of e^-5 5^k / k!
        expected = sum(math.exp(-5.0) * 5.0**k / math.factorial(k) for k in range(5))
        assert make_poisson(5.0).cdf(4.0) == pytest.approx(expected, abs=1e-10)
        assert expected == pytest.approx(0.440493, abs=1e-6)

    def test_rejects_nonpositive_mean(self):
        with pytest.raises(ParameterError):
            make_poisson(0.0)
        with pytest.raises(ParameterError):
            make_poisson(-2.0)


class TestGeometric:
    def test_mean_five(self):
        g = make_geometric(5.0)
        assert g.beta == pytest.approx(5.0 / 6.0, rel=1e-14)
        assert g.pmf_array()[0] == pytest.approx(1.0 / 6.0, rel=1e-10)
        assert g.var == pytest.approx(30.0, rel=1e-12)

    def test_mean_half(self):
        assert make_geometric(0.5).beta == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_rejects_nonpositive_mean(self):
        with pytest.raises(ParameterError):
            make_geometric(-1.0)


class TestMixedErlangFit:
    def test_cv_one_is_exponential(self):
        m = fit_mixed_erlang(MomentTarget(100.0, 1.0))
        assert m.k_max == 1
        assert m.lam == pytest.approx(0.01, rel=1e-12)
        assert m.theta_arr[1] == pytest.approx(1.0)

    @pytest.mark.parametrize("cv", CV_GRID)
    def test_moment_recomputation(self, cv):
        # oracle: recompute mean and cv from (lam, theta) via E[K]/lam and
        # (E[K] + Var K) / E[K]^2, independent of the fitting equations
        m = fit_mixed_erlang(MomentTarget(100.0, cv))
        k = np.arange(m.theta_arr.size)
        ek = float(k @ m.theta_arr)
        vark = float((k * k) @ m.theta_arr) - ek**2
        assert ek / m.lam == pytest.approx(100.0, rel=1e-9)
        assert math.sqrt((ek + vark)) / ek == pytest.approx(cv, rel=1e-9)

    def test_high_cv_two_point_support(self):
        m = fit_mixed_erlang(MomentTarget(5.0, 2.0))
        support = np.flatnonzero(m.theta_arr)
        assert support[0] == 1 and len(support) == 2
        assert m.mean == pytest.approx(5.0, rel=1e-9)
        assert m.cv == pytest.approx(2.0, rel=1e-9)

    def test_low_cv_adjacent_phases(self):
        m = fit_mixed_erlang(MomentTarget(100.0, 0.3))
        support = np.flatnonzero(m.theta_arr)
        assert list(support) in ([3, 4], [4]) or support[-1] - support[0] == 1

    def test_theta_validation(self):
        with pytest.raises(ParameterError):
            MixedErlang(1.0, (0.5, 0.4))  # does not sum to one
        with pytest.raises(ParameterError):
            MixedErlang(-1.0, (0.0, 1.0))


class TestConvolution:
    def test_poisson_additivity(self):
        c = convolve_lead_time(make_poisson(5.0), 2)
        assert c.kind == "poisson"
        assert c.mean == 10.0

    def test_exponential_becomes_erlang(self):
        c = convolve_lead_time(Exponential(100.0), 3)
        assert c.k_max == 3
        assert c.theta_arr[3] == pytest.approx(1.0)
        assert c.lam == pytest.approx(0.01, rel=1e-12)
        assert c.mean == pytest.approx(300.0, rel=1e-12)

    def test_geometric_sum_oracle(self):
        c = convolve_lead_time(make_geometric(5.0), 2)
        # oracle: explicit numeric convolution of the one-period pmf
        base = make_geometric(5.0).pmf_array()
        conv = np.convolve(base, base)
        assert c.pmf_array()[0] == pytest.approx((1.0 / 6.0) ** 2, rel=1e-9)
        np.testing.assert_allclose(c.pmf_array()[:50], conv[:50], atol=1e-11)

    def test_deterministic(self):
        c = convolve_lead_time(Deterministic(5.0), 3)
        assert c.value == 15.0

    def test_me_two_point(self):
        m = fit_mixed_erlang(MomentTarget(100.0, 0.5))
        c = convolve_lead_time(m, 2)
        assert c.mean == pytest.approx(200.0, rel=1e-12)
        assert c.var == pytest.approx(2.0 * m.var, rel=1e-12)


class TestSampling:
    @pytest.mark.parametrize("spec", [
        "poisson:mean=5", "geometric:mean=5", "exp:mean=100", "me:mean=100,cv=0.5",
        "me:mean=5,cv=2", "det:value=5",
    ])
    def test_sample_mean_within_4se(self, spec):
        model = parse_demand_spec(spec)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(99)))
        draws = model.sample(rng, 1_000_000)
        se = max(draws.std(ddof=1) / 1000.0, 1e-12)
        assert abs(draws.mean() - model.mean) < 4.0 * se + 1e-12

    @pytest.mark.parametrize("spec", ["poisson:mean=5", "geometric:mean=5", "exp:mean=100",
                                      "me:mean=100,cv=0.5"])
    def test_quantile_cdf_consistency(self, spec):
        model = parse_demand_spec(spec)
        for u in np.linspace(0.01, 0.99, 25):
            assert model.cdf(model.quantile(u)) >= u - 1e-12


class TestLossFunction:
    def test_poisson_loss_oracle(self):
        d = make_poisson(5.0)
        pmf = d.pmf_array()
        ks = np.arange(pmf.size)
        for x in [0.0, 2.5, 5.0, 7.3]:
            oracle = float(np.maximum(ks - x, 0.0) @ pmf)
            assert d.loss(x) == pytest.approx(oracle, abs=1e-12)

    def test_exponential_loss_closed_form(self):
        e = Exponential(100.0)
        for x in [0.0, 50.0, 100.0, 400.0]:
            assert e.loss(x) == pytest.approx(100.0 * math.exp(-x / 100.0), rel=1e-10)

    def test_geometric_loss_closed_form(self):
        g = make_geometric(5.0)
        b = g.beta
        for x in [0, 3, 10]:
            assert g.loss(float(x)) == pytest.approx(b ** (x + 1) / (1 - b), rel=1e-9)


class TestSpecStrings:
    def test_roundtrip(self):
        for spec in ["poisson:mean=5", "geometric:mean=5", "exp:mean=100"]:
            model = parse_demand_spec(spec)
            assert parse_demand_spec(model.spec_string()).mean == model.mean

    def test_malformed(self):
        with pytest.raises(ParameterError):
            parse_demand_spec("nope:mean=5")
        with pytest.raises(ParameterError):
            parse_demand_spec("poisson:mean")

    def test_integer_flags(self):
        assert parse_demand_spec("poisson:mean=5").integer_valued
        assert parse_demand_spec("geometric:mean=5").integer_valued
        assert not parse_demand_spec("exp:mean=100").integer_valued
        assert parse_demand_spec("det:value=5").integer_valued
        assert not Deterministic(2.5).integer_valued
