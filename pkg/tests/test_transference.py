import math

import numpy as np
import pytest

from dense_goldbach.errors import HypothesisError, TransferenceFailure
from dense_goldbach.spectral import CyclicFunction, convolve_direct, dft, lp_spectral_norm
from dense_goldbach.transference import (
    TransferenceParams,
    check_hypotheses,
    decompose,
    default_eps,
    exceptional_set,
    fourier_decay,
    lower_bound_check,
    run_transference,
)


def interval(N, start, length):
    n = np.arange(N)
    return CyclicFunction((((n - start) % N) < length).astype(float))


def one(N):
    return CyclicFunction.constant(N)


class TestParams:
    def test_default_eps(self):
        p = TransferenceParams(delta=0.5, eta=0.1)
        assert p.eps == pytest.approx((1e-2 * 0.5**6 * 0.1) ** 2)
        assert p.eps == default_eps(0.5, 0.1, 3.0)

    def test_thresholds(self):
        p = TransferenceParams(delta=0.6, eta=0.1)
        assert p.conclusion_threshold == pytest.approx(0.216 / 1000)
        assert p.lower_bound_threshold == pytest.approx(0.216 / 200)
        assert p.sup_bound == pytest.approx(1.06)

    @pytest.mark.parametrize(
        "kw", [dict(p=2.0), dict(p=4.0), dict(delta=0), dict(delta=1), dict(eta=0), dict(M=0.5), dict(c=0), dict(eps=-1)]
    )
    def test_invalid(self, kw):
        base = dict(delta=0.5, eta=0.1)
        base.update(kw)
        with pytest.raises(ValueError):
            TransferenceParams(**base)


class TestCheckHypotheses:
    def test_constants_pass(self):
        N = 50
        r = check_hypotheses(one(N), one(N), one(N), one(N), TransferenceParams(delta=0.9, eta=0.1))
        assert r.delta1 + r.delta2 == pytest.approx(2)
        assert r.decay1 == pytest.approx(0, abs=1e-15)
        assert r.passed

    def test_majorization_failure(self):
        N = 12
        half = CyclicFunction.constant(N, 0.5)
        r = check_hypotheses(one(N), one(N), half, one(N), TransferenceParams(delta=0.5, eta=0.1))
        assert r.majorization_violations[1] == list(range(N))
        assert not r.passed

    def test_interval_mean(self):
        N = 1000
        f = interval(N, 0, 800)
        r = check_hypotheses(f, f, one(N), one(N), TransferenceParams(delta=0.6, eta=0.1))
        assert abs(r.delta1 - 0.8) <= 1 / N
        assert r.mean_ok and r.passed

    def test_decay_failure(self):
        N = 100
        nu = CyclicFunction(2.0 * (np.arange(N) % 2 == 0))
        assert fourier_decay(nu) == pytest.approx(1)
        r = check_hypotheses(nu, nu, nu, nu, TransferenceParams(delta=0.5, eta=0.1))
        assert not r.decay_ok and r.mean_ok

    def test_errors(self):
        with pytest.raises(HypothesisError):
            check_hypotheses(one(3), one(4), one(3), one(3), TransferenceParams(delta=0.5, eta=0.1))
        neg = CyclicFunction(np.array([1.0, -1.0, 1.0]))
        with pytest.raises(HypothesisError):
            check_hypotheses(neg, one(3), one(3), one(3), TransferenceParams(delta=0.5, eta=0.1))


class TestDecompose:
    def test_constant(self):
        f = CyclicFunction.constant(31, 0.7)
        g, h = decompose(f, TransferenceParams(delta=0.5, eta=0.1, eps=0.05))
        np.testing.assert_allclose(g.values, 0.7, atol=1e-15)
        assert np.abs(h.values).max() < 1e-15

    def test_three_frequency_support(self):
        N = 401
        n = np.arange(N)
        f = CyclicFunction(1 + 0.6 * np.cos(2 * np.pi * 3 * n / N))
        eps = 0.1  # below the smallest nonzero coefficient 0.3
        d = decompose(f, TransferenceParams(delta=0.5, eta=0.1, eps=eps))
        assert d.spectrum_size == 3
        assert lp_spectral_norm(dft(d.h), math.inf) <= 4 * eps
        assert d.spectral_gap_ok and d.norm_ok

    def test_cosine_mean(self):
        N = 1000
        f = CyclicFunction(1 + np.cos(2 * np.pi * np.arange(N) / N))
        d = decompose(f, TransferenceParams(delta=0.5, eta=0.1, eps=0.1))
        assert abs(d.g.mean() - 1) <= 1e-12
        assert 1 < len(d.bohr) < N
        np.testing.assert_allclose(d.g.values + d.h.values, f.values, atol=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_random_sparse(self, seed):
        rng = np.random.default_rng(seed)
        N = 2003
        f = CyclicFunction(rng.random(N) * (rng.random(N) < 0.3) * 3)
        for eps in (0.2, 0.05, 0.02):
            d = decompose(f, TransferenceParams(delta=0.5, eta=0.1, eps=eps))
            assert d.mean_gap <= 1e-12
            assert d.spectral_gap <= 4 * eps
            assert d.norm_ok


class TestLowerBound:
    def test_constants(self):
        g = CyclicFunction.constant(40, 0.9)
        r = lower_bound_check(g, g, TransferenceParams(delta=0.6, eta=0.1))
        assert r.min_convolution == pytest.approx(0.81)
        assert r.bound == pytest.approx(0.6**3 / 200)
        assert r.holds and r.preconditions_ok

    def test_intervals(self):
        N = 1000
        g = interval(N, 0, 800)
        r = lower_bound_check(g, g, TransferenceParams(delta=0.5, eta=0.1))
        # overlap of [0, 0.8N) with n - [0, 0.8N) is at least 0.6 N
        assert r.min_convolution >= 0.6 - 2 / N
        assert r.holds and r.preconditions_ok
        assert all(s >= b for s, b in zip(r.support_densities, r.support_bounds))

    def test_precondition_failure_reported(self):
        N = 1000
        r = lower_bound_check(interval(N, 0, 400), interval(N, 500, 400), TransferenceParams(delta=0.5, eta=0.1))
        assert not r.preconditions_ok
        assert any("delta1 + delta2" in msg for msg in r.precondition_failures)

    def test_sup_bound_reported(self):
        g = CyclicFunction.constant(10, 1.5)
        r = lower_bound_check(g, g, TransferenceParams(delta=0.5, eta=0.1))
        assert any("exceeds" in msg for msg in r.precondition_failures)


class TestRunTransference:
    def test_constants(self):
        N = 64
        r = run_transference(one(N), one(N), one(N), one(N), TransferenceParams(delta=0.9, eta=0.01))
        np.testing.assert_allclose(r.convolution.values, 1)
        assert r.exceptional.size == 0 and r.alpha == 0

    def test_intervals(self):
        N = 10007
        f = interval(N, 0, round(0.8 * N))
        r = run_transference(f, f, one(N), one(N), TransferenceParams(delta=0.5, eta=0.1))
        assert r.alpha == 0
        assert r.min_outside >= 0.6 - 2 / N > 0.5**3 / 1000

    @pytest.mark.parametrize("seed", range(4))
    def test_exceptional_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        N = 499
        f1 = CyclicFunction((rng.random(N) < 0.05).astype(float) * 3)
        f2 = CyclicFunction((rng.random(N) < 0.05).astype(float) * 3)
        nu = CyclicFunction.constant(N, 3)
        params = TransferenceParams(delta=0.5, eta=0.1)
        r = run_transference(f1, f2, nu, nu, params, force=True)
        brute = np.flatnonzero(convolve_direct(f1, f2).values <= 0.5**3 / 1000)
        assert r.forced
        assert r.exceptional.tolist() == brute.tolist()
        assert 0 < r.alpha < 1

    def test_unforced_failure_raises(self):
        N = 50
        with pytest.raises(HypothesisError):
            run_transference(interval(N, 0, 10), one(N), one(N), one(N), TransferenceParams(delta=0.5, eta=0.1))

    def test_alpha_above_eta_is_hard_error(self):
        # a generous decay budget lets a parity-biased majorant through
        N = 200
        nu = CyclicFunction(2.0 * (np.arange(N) % 2 == 0))
        params = TransferenceParams(delta=0.5, eta=0.1, c=2.0)
        with pytest.raises(TransferenceFailure):
            run_transference(nu, nu, nu, nu, params)

    def test_eta_monotonicity(self):
        rng = np.random.default_rng(3)
        N = 300
        f = CyclicFunction((rng.random(N) < 0.1).astype(float))
        sets = []
        for eta in (0.05, 0.2, 0.5):
            r = run_transference(f, f, one(N), one(N), TransferenceParams(delta=0.5, eta=eta), force=True)
            sets.append(set(r.exceptional.tolist()))
        assert sets[0] == sets[1] == sets[2]

    @pytest.mark.parametrize("eps", [0.2, 0.05, 0.01])
    def test_product_bound_and_alpha_chain(self, eps):
        rng = np.random.default_rng(11)
        N = 1009
        f1 = CyclicFunction((rng.random(N) < 0.6).astype(float))
        f2 = CyclicFunction((rng.random(N) < 0.7).astype(float))
        ones = one(N)
        params = TransferenceParams(delta=0.2, eta=0.1, eps=eps)
        r = run_transference(f1, f2, ones, ones, params, force=True)
        assert r.product_gap <= r.product_gap_bound
        if r.alpha_bound is not None:
            assert r.alpha <= r.alpha_bound
        for d in r.decompositions:
            assert d.spectral_gap <= 4 * eps

    def test_report_serializes(self):
        N = 101
        f = interval(N, 0, 90)
        d = run_transference(f, f, one(N), one(N), TransferenceParams(delta=0.5, eta=0.1)).to_dict()
        assert d["exceptional"] == {"count": 0, "values": []}
        assert d["alpha"] == 0 and d["threshold"] == pytest.approx(0.125 / 1000)

    def test_exceptional_set_is_sublevel(self):
        conv = CyclicFunction(np.array([0.0, 1e-4, 2e-4, 1.0]))
        assert exceptional_set(conv, 0.5).tolist() == [0, 1]
