"""Newton fitting: closed forms, derivative checks, and oracle agreement."""

import numpy as np
import pytest

from conftest import make_frame
from instances import ALL_PAIRS, fittable_instance, random_instance
from oracles import irls_fit
from svyglm.errors import DomainError, RankDeficientError
from svyglm.families import Link, family, link
from svyglm.fit import (
    FitConfig,
    fit_pseudo_mle,
    hessian_matrix,
    score_vector,
    weighted_loglik,
)


def make_family(kind, k=0.5):
    return family(kind, ancillary=k if kind == "negative_binomial" else None)


class TestClosedForms:
    def test_saturated_interpolation(self):
        frame = make_frame([[1, 0], [1, 1]], [1.0, 3.0])
        res = fit_pseudo_mle(frame, family("normal"), link("identity"))
        assert np.allclose(res.beta, [1.0, 2.0], atol=1e-12)
        assert res.converged
        assert len(res.loglik_trace) <= 2

    def test_weighted_mean(self):
        frame = make_frame([[1], [1]], [1.0, 3.0], w=[1.0, 3.0])
        res = fit_pseudo_mle(frame, family("normal"), link("identity"))
        assert abs(res.beta[0] - 2.5) <= 1e-10
        assert res.phi == pytest.approx(0.75)

    def test_poisson_intercept_log_mean(self):
        frame = make_frame([[1], [1], [1]], [1.0, 2.0, 3.0])
        res = fit_pseudo_mle(frame, family("poisson"), link("log"))
        assert abs(res.beta[0] - np.log(2.0)) <= 1e-10
        assert res.converged

    def test_zero_residual_floors_dispersion(self):
        frame = make_frame([[1], [1]], [2.0, 2.0])
        res = fit_pseudo_mle(frame, family("normal"), link("identity"))
        assert res.phi == 1e-10
        assert res.converged


class TestScoreAndHessian:
    def test_intercept_score_cancels(self):
        frame = make_frame([[1], [1]], [0.0, 2.0])
        s = score_vector(frame, family("normal"), link("identity"), [1.0], 1.0)
        assert s == pytest.approx([0.0], abs=1e-14)

    def test_poisson_score_hand_value(self):
        frame = make_frame([[1], [1]], [1.0, 3.0])
        s = score_vector(frame, family("poisson"), link("log"), [0.0], 1.0)
        assert s == pytest.approx([2.0], abs=1e-12)

    def test_normal_identity_w0_equals_weights(self):
        w = np.array([1.0, 2.5, 0.3])
        frame = make_frame([[1], [1], [1]], [0.0, 1.0, 2.0], w=w)
        H, w0 = hessian_matrix(frame, family("normal"), link("identity"),
                               [0.5], 1.0)
        assert np.allclose(w0, w, atol=0)
        assert H[0, 0] == pytest.approx(-w.sum())

    def test_poisson_w0_at_exact_fit(self):
        # with y = mu the observed weight reduces to w * mu
        y = np.array([2.0, 2.0])
        frame = make_frame([[1], [1]], y, w=[1.0, 3.0])
        beta = [np.log(2.0)]
        _, w0 = hessian_matrix(frame, family("poisson"), link("log"), beta, 1.0)
        assert np.allclose(w0, frame.weights * 2.0, rtol=1e-14)

    def test_loglik_weight_doubling(self, rng):
        X, y, w, beta = random_instance(rng, "gamma", "log")
        frame1 = make_frame(X, y, w=w)
        frame2 = make_frame(X, y, w=2 * w)
        fam, lnk = family("gamma"), link("log")
        assert weighted_loglik(frame2, fam, lnk, beta, 1.2) == pytest.approx(
            2 * weighted_loglik(frame1, fam, lnk, beta, 1.2), rel=1e-12)

    @pytest.mark.parametrize("fam_kind,link_kind", ALL_PAIRS)
    def test_score_matches_finite_differences(self, rng, fam_kind, link_kind):
        fam = make_family(fam_kind)
        lnk = Link(link_kind)
        for _ in range(3):
            X, y, w, beta = random_instance(rng, fam_kind, link_kind)
            frame = make_frame(X, y, w=w)
            phi = 1.3 if fam_kind in ("normal", "gamma", "inverse_gaussian") else 1.0
            s = score_vector(frame, fam, lnk, beta, phi)
            fd = np.empty_like(s)
            for j in range(len(beta)):
                h = 1e-6 * (1.0 + abs(beta[j]))
                bp, bm = beta.copy(), beta.copy()
                bp[j] += h
                bm[j] -= h
                fd[j] = (weighted_loglik(frame, fam, lnk, bp, phi)
                         - weighted_loglik(frame, fam, lnk, bm, phi)) / (2 * h)
            scale = max(1.0, np.max(np.abs(s)))
            assert np.max(np.abs(fd - s)) / scale < 1e-6

    @pytest.mark.parametrize("fam_kind,link_kind", ALL_PAIRS)
    def test_hessian_matches_finite_differences(self, rng, fam_kind, link_kind):
        fam = make_family(fam_kind)
        lnk = Link(link_kind)
        X, y, w, beta = random_instance(rng, fam_kind, link_kind)
        frame = make_frame(X, y, w=w)
        H, _ = hessian_matrix(frame, fam, lnk, beta, 1.0)
        p = len(beta)
        fd = np.empty((p, p))
        for j in range(p):
            h = 1e-6 * (1.0 + abs(beta[j]))
            bp, bm = beta.copy(), beta.copy()
            bp[j] += h
            bm[j] -= h
            fd[:, j] = (score_vector(frame, fam, lnk, bp, 1.0)
                        - score_vector(frame, fam, lnk, bm, 1.0)) / (2 * h)
        scale = max(1.0, np.max(np.abs(H)))
        assert np.max(np.abs(fd - H)) / scale < 1e-5


class TestFitBehavior:
    @pytest.mark.parametrize("fam_kind,link_kind", [
        ("normal", "identity"), ("poisson", "log"), ("binomial", "logit")])
    def test_unit_weights_match_irls_oracle(self, rng, fam_kind, link_kind):
        def fit_unit(X, y, w):
            return fit_pseudo_mle(make_frame(X, y),
                                  make_family(fam_kind), Link(link_kind))

        for _ in range(5):
            X, y, _, res = fittable_instance(rng, fam_kind, link_kind, fit_unit)
            beta_oracle, _ = irls_fit(X, y, np.ones(len(y)), fam_kind, link_kind)
            assert np.max(np.abs(res.beta - beta_oracle)) < 1e-8

    def test_weight_scaling_leaves_beta(self, rng):
        X, y, w, _ = random_instance(rng, "poisson", "log")
        frame1 = make_frame(X, y, w=w)
        frame5 = make_frame(X, y, w=5.0 * w)
        fam, lnk = family("poisson"), link("log")
        r1 = fit_pseudo_mle(frame1, fam, lnk)
        r5 = fit_pseudo_mle(frame5, fam, lnk)
        assert np.max(np.abs(r1.beta - r5.beta)) < 1e-9
        assert r5.loglik == pytest.approx(5.0 * r1.loglik, rel=1e-9)

    @pytest.mark.parametrize("fam_kind,link_kind", ALL_PAIRS)
    def test_trace_is_monotone(self, rng, fam_kind, link_kind):
        X, y, w, _ = random_instance(rng, fam_kind, link_kind)
        frame = make_frame(X, y, w=w)
        res = fit_pseudo_mle(frame, make_family(fam_kind), Link(link_kind))
        trace = np.asarray(res.loglik_trace)
        slack = 1e-10 * (1.0 + np.abs(trace).max())
        assert np.all(np.diff(trace) >= -slack)

    def test_restart_from_solution_is_idempotent(self, rng):
        X, y, w, _ = random_instance(rng, "binomial", "logit")
        frame = make_frame(X, y, w=w)
        fam, lnk = family("binomial"), link("logit")
        res = fit_pseudo_mle(frame, fam, lnk)
        again = fit_pseudo_mle(frame, fam, lnk, start=res.beta)
        assert again.converged
        assert again.iterations <= 2
        assert np.max(np.abs(again.beta - res.beta)) < 1e-10

    def test_converged_implies_small_score(self, rng):
        X, y, w, _ = random_instance(rng, "gamma", "log")
        frame = make_frame(X, y, w=w)
        fam, lnk = family("gamma"), link("log")
        res = fit_pseudo_mle(frame, fam, lnk)
        assert res.converged
        s = score_vector(frame, fam, lnk, res.beta, res.phi)
        assert np.max(np.abs(s)) <= 1e-6 * (1.0 + abs(res.loglik))

    def test_neg_hessian_symmetric_and_we_positive(self, rng):
        X, y, w, _ = random_instance(rng, "poisson", "log")
        frame = make_frame(X, y, w=w)
        res = fit_pseudo_mle(frame, family("poisson"), link("log"))
        assert np.array_equal(res.neg_hessian, res.neg_hessian.T)
        assert np.all(res.we_diag > 0)


class TestFitErrors:
    def test_rank_deficient_names_aliased(self):
        X = np.column_stack([np.ones(4), [1, 2, 3, 4], [2, 4, 6, 8]])
        frame = make_frame(X, [1.0, 2.0, 3.0, 4.0], labels=("a", "b", "c"))
        with pytest.raises(RankDeficientError) as exc:
            fit_pseudo_mle(frame, family("normal"), link("identity"))
        assert len(exc.value.aliased) == 1
        assert exc.value.aliased[0] in ("b", "c")

    def test_more_columns_than_rows(self):
        frame = make_frame(np.ones((1, 2)), [1.0])
        with pytest.raises(RankDeficientError):
            fit_pseudo_mle(frame, family("normal"), link("identity"))

    def test_response_outside_family_support(self):
        frame = make_frame([[1], [1]], [-1.0, 2.0])
        with pytest.raises(DomainError):
            fit_pseudo_mle(frame, family("gamma"), link("log"))

    def test_invalid_pair_rejected(self):
        frame = make_frame([[1], [1]], [0.2, 0.4])
        with pytest.raises(DomainError):
            fit_pseudo_mle(frame, family("poisson"), link("logit"))

    def test_not_converged_flag(self, rng):
        X, y, w, _ = random_instance(rng, "poisson", "log", n_max=20, p_max=3)
        frame = make_frame(X, y, w=w)
        res = fit_pseudo_mle(frame, family("poisson"), link("log"),
                             FitConfig(max_iter=1))
        assert not res.converged
        assert res.iterations == 1

    def test_config_validation(self):
        with pytest.raises(DomainError):
            FitConfig(max_iter=0)
        with pytest.raises(DomainError):
            FitConfig(tol=-1.0)


class TestNegativeBinomialAncillary:
    def test_moments_update_finds_overdispersion(self, rng):
        n = 400
        X = np.column_stack([np.ones(n), rng.normal(0, 0.3, n)])
        beta_true = np.array([1.0, 0.4])
        mu = np.exp(X @ beta_true)
        k_true = 0.6
        lam = rng.gamma(1.0 / k_true, k_true * mu)
        y = rng.poisson(lam).astype(float)
        frame = make_frame(X, y)
        fam = family("negative_binomial", ancillary=1.0)
        res = fit_pseudo_mle(frame, fam, link("log"),
                             FitConfig(update_ancillary=True))
        assert res.converged
        assert 0.2 < res.family.ancillary < 1.5
        # at the fitted shape the Pearson ratio is calibrated to one
        V = res.mu + res.family.ancillary * res.mu ** 2
        ratio = np.sum((y - res.mu) ** 2 / V) / (n - 2)
        assert ratio == pytest.approx(1.0, abs=1e-6)
