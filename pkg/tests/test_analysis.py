import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirkiter.analysis import (
    AnalysisError,
    estimate_rate,
    lemma1_oracle,
    ostrowski_bound,
    sigma,
    sup_sigma,
    verify_sigma_bound,
)
from kirkiter.corpus import get_operator
from kirkiter.schemes import (
    Family,
    SchemeConfig,
    StopMode,
    WeightSchedule,
    random_config,
    run,
    specialize,
)
from kirkiter.stability import PerturbationModel, perturbed_run

HALF = get_operator("halving-1d")


def _picard():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return specialize("picard")


class TestSigma:
    def test_kirk_mann(self):
        b = sigma(specialize("kirk_mann", alpha=(0.4, 0.3, 0.3)), 0.5)
        assert math.isclose(b.sigma, 0.625, rel_tol=1e-15)
        assert math.isclose(sum(b.terms), b.sigma, rel_tol=1e-12)

    def test_two_level(self):
        c = specialize("kirk_ishikawa", alpha=(0.5, 0.5), betas=[(0.5, 0.5)])
        assert sigma(c, 0.5).sigma == 0.6875

    def test_degenerate_sp(self):
        rows = [WeightSchedule.constant((1.0,))] * 3
        c = SchemeConfig(Family.KIRK_SP, (0, 0, 0), rows[0], tuple(rows[1:]))
        b = sigma(c, 0.3)
        assert b.sigma == 1.0 and not b.contracts
        assert not verify_sigma_bound(c, 0.3)

    def test_sp_is_product(self):
        c = specialize("sp", alpha=0.5, beta=0.5, gamma=0.5)
        b = sigma(c, 0.5)
        assert b.sigma == 0.421875 == math.prod(b.inner_sums)

    def test_krasnoselskij_embedding(self):
        c = specialize("krasnoselskij", lam=1.0 - 1e-12, enforce_alpha0_nonzero=True)
        assert verify_sigma_bound(c, 0.999)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            c = specialize("krasnoselskij", lam=1.0, enforce_alpha0_nonzero=False)
        assert math.isclose(sigma(c, 0.999).sigma, 0.999, rel_tol=1e-15)

    def test_a_zero_collapses_to_anchor(self):
        c = specialize("kirk_mann", alpha=(0.4, 0.3, 0.3))
        assert sigma(c, 0.0).sigma == 0.4

    def test_a_out_of_range(self):
        with pytest.raises(AnalysisError):
            sigma(specialize("mann", alpha=0.5), 1.0)

    def test_sup_over_schedule(self):
        alpha = WeightSchedule.tabulated([(0.9, 0.1), (0.1, 0.9)])
        c = specialize("mann", alpha=alpha)
        assert sup_sigma(c, 0.5, 5) == sigma(c, 0.5, 0).sigma

    @settings(max_examples=200)
    @given(seed=st.integers(0, 2**32 - 1), fam=st.sampled_from([Family.KIRK_MULTISTEP, Family.KIRK_SP]),
           a1=st.floats(0.0, 0.999), a2=st.floats(0.0, 0.999))
    def test_monotone_in_a_and_below_one(self, seed, fam, a1, a2):
        c = random_config(np.random.default_rng(seed), fam)
        lo, hi = sorted((a1, a2))
        s_lo, s_hi = sigma(c, lo).sigma, sigma(c, hi).sigma
        assert 0.0 <= s_lo <= s_hi + 1e-15
        assert s_hi < 1.0

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), op_id=st.sampled_from(["halving-1d", "rotation-2d", "scaled-3d"]))
    def test_bounds_observed_ratio_on_linear_maps(self, seed, op_id):
        T = get_operator(op_id)
        c = random_config(np.random.default_rng(seed))
        sig = sigma(c, T.contract_a).sigma
        e = run(T, c, T.fixed_point + 3.0, max_iter=40, stop=StopMode.NONE).errors
        assert all(e[n + 1] <= sig * e[n] + 1e-12 for n in range(len(e) - 1))


class TestRecursionOracle:
    def test_geometric(self):
        u = lemma1_oracle(0.5, 1.0, np.zeros(20))
        assert np.array_equal(u, 0.5 ** np.arange(21))

    def test_against_closed_form(self):
        n = 100
        eps = 0.9 ** np.arange(n)
        u = lemma1_oracle(0.5, 0.0, eps)
        closed = math.fsum(0.5 ** (n - 1 - i) * 0.9**i for i in range(n))
        assert math.isclose(u[n], closed, rel_tol=1e-12)
        assert math.isclose(u[n], (0.9**n - 0.5**n) / 0.4, rel_tol=1e-12)
        assert u[n] < 1e-4

    def test_nonvanishing_eps(self):
        u = lemma1_oracle(0.5, 1.0, np.full(200, 0.1))
        assert math.isclose(u[-1], 0.2, rel_tol=1e-12)

    @pytest.mark.parametrize("s,eps", [(1.0, [0.0]), (0.5, [-1.0])])
    def test_rejects(self, s, eps):
        with pytest.raises(AnalysisError):
            lemma1_oracle(s, 1.0, eps)

    @given(s=st.floats(0.0, 0.999), u0=st.floats(0.0, 100.0),
           data=st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 5)), min_size=1, max_size=60))
    def test_dominates(self, s, u0, data):
        eps = [e for _, _, e in data]
        oracle = lemma1_oracle(s, u0, eps)
        u = u0
        for n, (r1, r2, e) in enumerate(data):
            u = s * u * r1 + e * r2
            assert u <= oracle[n + 1]


class TestOstrowski:
    def test_unperturbed_equality(self):
        x = run(HALF, _picard(), [1.0], max_iter=50, stop=StopMode.NONE)
        b = ostrowski_bound(HALF, x, x.points, 0.5)
        assert np.array_equal(b, [abs(p[0]) for p in x.points[1:]])

    def test_shifted_start_equality(self):
        x = run(HALF, _picard(), [1.0], max_iter=30, stop=StopMode.NONE)
        y = run(HALF, _picard(), [2.0], max_iter=30, stop=StopMode.NONE).points
        b = ostrowski_bound(HALF, x, y, 0.5)
        assert np.allclose(b, [abs(p[0]) for p in y[1:]], rtol=1e-15, atol=0)

    def test_decaying_perturbation_strict(self):
        # reference run from the other side of q, so no term of the bound is tight
        x = run(HALF, _picard(), [-1.0], max_iter=200, stop=StopMode.NONE)
        y = perturbed_run(HALF, _picard(), [1.0], PerturbationModel.decaying(1.0, 0.9), 200).points
        b = ostrowski_bound(HALF, x, y, 0.5)
        actual = np.array([abs(p[0]) for p in y[1:]])
        assert np.all(actual <= b * (1 + 1e-12))
        assert np.all(actual[:40] < b[:40])

    def test_lambda_range(self):
        x = run(HALF, _picard(), [1.0], max_iter=3, stop=StopMode.NONE)
        with pytest.raises(AnalysisError):
            ostrowski_bound(HALF, x, x.points, 1.0)


class TestRate:
    def test_exact_geometric(self):
        r = estimate_rate(0.75 ** np.arange(60))
        assert math.isclose(r.fitted_rate, 0.75, rel_tol=1e-12)
        assert math.isclose(r.r_squared, 1.0, rel_tol=1e-12)

    def test_constant_errors(self):
        r = estimate_rate(np.full(30, 0.2))
        assert math.isclose(r.fitted_rate, 1.0, rel_tol=1e-12) and r.r_squared == 1.0

    def test_kirk_mann_run(self):
        trace = run(HALF, specialize("kirk_mann", alpha=(0.5, 0.5)), [1.0])
        assert estimate_rate(trace).fitted_rate <= 0.76

    def test_zero_truncates_window(self):
        errs = [1.0, 0.5, 0.25, 0.125, 0.0, 0.0]
        r = estimate_rate(errs, window=(0, 6))
        assert r.window == (0, 4) and math.isclose(r.fitted_rate, 0.5, rel_tol=1e-12)

    def test_empty(self):
        with pytest.raises(AnalysisError):
            estimate_rate([0.0, 0.0, 0.0], window=(0, 3))
