import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirkiter.corpus import get_operator
from kirkiter.schemes import StopMode, random_config, run, specialize
from kirkiter.stability import (
    PerturbationModel,
    StabilityError,
    Verdict,
    envelope_horizon,
    measure_residuals,
    perturbed_run,
    stability_verdict,
    tail_mean,
)
from kirkiter.operators import Operator, PhiFunction

HALF = get_operator("halving-1d")
KIRK_MANN = specialize("kirk_mann", alpha=(0.5, 0.5))


class TestModel:
    @pytest.mark.parametrize("kwargs", [dict(kind="decaying", c=1.0, r=1.0),
                                        dict(kind="persistent", c=-0.1),
                                        dict(kind="random_decaying", c=1.0, r=1.5)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            PerturbationModel(**kwargs)

    def test_random_is_seeded(self):
        a = PerturbationModel.random_decaying(1.0, 0.9, seed=4).deltas(50, 3)
        b = PerturbationModel.random_decaying(1.0, 0.9, seed=4).deltas(50, 3)
        c = PerturbationModel.random_decaying(1.0, 0.9, seed=5).deltas(50, 3)
        assert np.array_equal(a, b) and not np.array_equal(a, c)
        assert np.all(a >= 0) and np.all(a <= 0.9 ** np.arange(50)[:, None])


class TestPerturbedRun:
    def test_none_matches_unperturbed(self):
        pr = perturbed_run(HALF, KIRK_MANN, [1.0], PerturbationModel.none(), 40)
        trace = run(HALF, KIRK_MANN, [1.0], max_iter=40, stop=StopMode.NONE)
        assert all(np.array_equal(p, q) for p, q in zip(pr.points, trace.points))

    def test_decaying_goes_to_q(self):
        pr = perturbed_run(HALF, KIRK_MANN, [1.0], PerturbationModel.decaying(0.1, 0.9), 500)
        assert abs(pr.points[-1][0]) < 1e-20

    def test_persistent_stays_away(self):
        pr = perturbed_run(HALF, KIRK_MANN, [1.0], PerturbationModel.persistent(0.1), 300)
        # limit of y = 0.75 y + 0.1
        assert pr.points[-1][0] == pytest.approx(0.4, rel=1e-12)

    def test_diverging_flagged(self):
        pr = perturbed_run(HALF, KIRK_MANN, [1.0], PerturbationModel.persistent(1e300), 10)
        assert pr.diverged and len(pr.points) < 11


class TestResiduals:
    @pytest.mark.parametrize("op_id", ["halving-1d", "rotation-2d", "trig-2d", "maxshift-3d"])
    def test_recovers_deterministic_deltas(self, op_id):
        T = get_operator(op_id)
        cfg = random_config(np.random.default_rng(3))
        model = PerturbationModel.decaying(0.7, 0.8)
        pr = perturbed_run(T, cfg, T.fixed_point + 1.0, model, 60)
        eps = measure_residuals(T, cfg, pr)
        expected = [model.bound(n, T) for n in range(60)]
        np.testing.assert_allclose(eps, expected, rtol=0, atol=1e-12)

    def test_constant_at_q(self):
        eps = measure_residuals(HALF, KIRK_MANN, [np.zeros(1)] * 10)
        assert np.all(eps == 0)

    def test_persistent_one_dim(self):
        pr = perturbed_run(HALF, KIRK_MANN, [1.0], PerturbationModel.persistent(0.1), 30)
        np.testing.assert_allclose(measure_residuals(HALF, KIRK_MANN, pr), 0.1, rtol=0, atol=1e-15)

    def test_needs_two_points(self):
        with pytest.raises(StabilityError):
            measure_residuals(HALF, KIRK_MANN, [np.zeros(1)])


class TestVerdict:
    def test_decaying_consistent(self):
        rep = stability_verdict(HALF, KIRK_MANN, [1.0], PerturbationModel.decaying(0.1, 0.9), 500)
        assert rep.verdict is Verdict.STABLE_CONSISTENT
        assert not rep.converse_violation and not rep.conditional
        assert rep.sigma == 0.75

    def test_persistent_vacuous(self):
        rep = stability_verdict(HALF, KIRK_MANN, [1.0], PerturbationModel.persistent(0.1), 500)
        assert rep.verdict is Verdict.HYPOTHESIS_FAILED

    def test_unperturbed(self):
        rep = stability_verdict(HALF, KIRK_MANN, [1.0], PerturbationModel.none(), 200)
        assert rep.verdict is Verdict.STABLE_CONSISTENT
        assert np.all(rep.eps == 0) and rep.y_tail <= 1e-6

    def test_violation_detected_for_wrong_q(self):
        # the declared q is fixed, but a second fixed point attracts the run
        T = Operator(lambda x: np.where(x > 0.5, 1.0 + 0.5 * (x - 1.0), 0.5 * x), 1, 0.5,
                     fixed_point=[0.0], contract_class=None, name="two-basins")
        rep = stability_verdict(T, KIRK_MANN, [2.0], PerturbationModel.decaying(0.01, 0.5), 300)
        assert rep.verdict is Verdict.VIOLATION
        assert rep.conditional

    def test_unknown_q(self):
        T = Operator(lambda x: x / 2, 1, 0.5, phi=PhiFunction.zero(), fixed_point=None)
        with pytest.raises(StabilityError):
            stability_verdict(T, KIRK_MANN, [1.0], PerturbationModel.none(), 10)

    def test_tail_mean(self):
        assert tail_mean(np.arange(100.0)) == np.mean(np.arange(90.0, 100.0))
        assert tail_mean([]) == float("inf")

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.floats(0, 2), r=st.floats(0.0, 0.8),
           op_id=st.sampled_from(["trig-2d", "jump-1d", "jump-1d-sat", "maxshift-3d"]))
    def test_envelope_and_converse(self, seed, c, r, op_id):
        from kirkiter.analysis import lemma1_oracle, sigma

        T = get_operator(op_id)
        cfg = random_config(np.random.default_rng(seed))
        sig = sigma(cfg, T.contract_a).sigma
        model = PerturbationModel.random_decaying(c, r, seed=seed)
        y0 = T.fixed_point + 2.0
        n_steps = max(100, envelope_horizon(sig, T.dist(y0, T.fixed_point), model, T, 1e-6))
        rep = stability_verdict(T, cfg, y0, model, n_steps)
        env = lemma1_oracle(sig, rep.y_errors[0], rep.eps)
        assert np.all(rep.y_errors <= env + 1e-8)
        assert np.all(rep.eps <= rep.y_errors[1:] + sig * rep.y_errors[:-1] + 1e-8)
        assert rep.verdict is not Verdict.VIOLATION
